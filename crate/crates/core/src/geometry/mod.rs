//! Reference paths, projection onto them, preview points, and procedural
//! test tracks.

mod spline;
pub mod track;

use std::f64::consts::PI;

use crate::error::{Error, Result};
use spline::{CubicSpline, PlanarSpline};

pub use track::{generate_track, TrackSpec};

/// Default arc-length resampling step in meters.
pub const DEFAULT_DS: f64 = 0.1;

/// Arc-length integration tolerance over a whole path, meters.
const LENGTH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
}

impl Waypoint {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// One resampled point of a [`ReferencePath`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    pub x: f64,
    pub y: f64,
    /// Arc length from the path start.
    pub s: f64,
    /// Tangent heading, unwrapped along the path.
    pub psi: f64,
    pub kappa: f64,
}

/// Curve resampled at uniform arc-length spacing `ds`.
#[derive(Debug, Clone)]
pub struct ReferencePath {
    points: Vec<PathPoint>,
    ds: f64,
    kappa_max: f64,
}

/// Planar pose; heading normalized to (-pi, pi].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

impl Pose2D {
    pub fn new(x: f64, y: f64, psi: f64) -> Self {
        Self {
            x,
            y,
            psi: normalize_angle(psi),
        }
    }
}

/// Preview point in the vehicle body frame (x forward, y left).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreviewPoint {
    pub x_ref: f64,
    pub y_ref: f64,
}

impl PreviewPoint {
    pub fn distance(&self) -> f64 {
        self.x_ref.hypot(self.y_ref)
    }

    /// Global coordinates of this body-frame point seen from `pose`.
    pub fn to_global(&self, pose: &Pose2D) -> (f64, f64) {
        let (s, c) = pose.psi.sin_cos();
        (
            pose.x + c * self.x_ref - s * self.y_ref,
            pose.y + s * self.x_ref + c * self.y_ref,
        )
    }
}

/// Result of projecting a point onto a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Arc length of the foot point.
    pub s: f64,
    /// Signed lateral offset, positive left of the path tangent.
    pub e_lat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseProjection {
    pub s: f64,
    pub e_lat: f64,
    /// Pose heading minus path heading, in (-pi, pi].
    pub e_psi: f64,
}

/// Wrap an angle into (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Natural cubic spline through `waypoints` (chord-length parametrized),
/// resampled at uniform arc length `ds`.
pub fn build_path(waypoints: &[Waypoint], ds: f64) -> Result<ReferencePath> {
    if waypoints.len() < 4 {
        return Err(Error::TooFewWaypoints(waypoints.len()));
    }
    if !(ds > 0.0 && ds.is_finite()) {
        return Err(Error::InvalidSpec(format!("resample spacing must be positive, got {ds}")));
    }
    if let Some(w) = waypoints.iter().find(|w| !(w.x.is_finite() && w.y.is_finite())) {
        return Err(Error::InvalidSpec(format!("non-finite waypoint ({}, {})", w.x, w.y)));
    }
    let mut knots = Vec::with_capacity(waypoints.len());
    knots.push(0.0);
    for (i, pair) in waypoints.windows(2).enumerate() {
        let chord = (pair[1].x - pair[0].x).hypot(pair[1].y - pair[0].y);
        if chord < 1e-9 {
            return Err(Error::DegenerateSegment(i));
        }
        knots.push(knots[i] + chord);
    }
    let xs: Vec<f64> = waypoints.iter().map(|w| w.x).collect();
    let ys: Vec<f64> = waypoints.iter().map(|w| w.y).collect();
    let curve = PlanarSpline {
        x: CubicSpline::natural(&knots, &xs),
        y: CubicSpline::natural(&knots, &ys),
    };

    let nseg = curve.x.segments();
    let seg_tol = (LENGTH_TOL / nseg as f64).max(1e-12);
    let mut seg_len = Vec::with_capacity(nseg);
    let mut seg_n = Vec::with_capacity(nseg);
    let mut cumulative = Vec::with_capacity(nseg + 1);
    cumulative.push(0.0);
    for seg in 0..nseg {
        let (len, n) = curve.segment_length(seg, seg_tol);
        seg_len.push(len);
        seg_n.push(n);
        cumulative.push(cumulative[seg] + len);
    }
    let total = cumulative[nseg];
    let count = (total / ds + 1e-9).floor() as usize;

    let mut points = Vec::with_capacity(count + 1);
    let mut seg = 0;
    let mut prev_psi: Option<f64> = None;
    let mut kappa_max: f64 = 0.0;
    for i in 0..=count {
        let s = i as f64 * ds;
        while seg + 1 < nseg && s > cumulative[seg + 1] {
            seg += 1;
        }
        let t = curve.invert_length(seg, s - cumulative[seg], seg_len[seg], seg_n[seg]);
        let p = curve.point(seg, t);
        let psi = match prev_psi {
            None => p.psi,
            Some(prev) => prev + normalize_angle(p.psi - prev),
        };
        prev_psi = Some(psi);
        kappa_max = kappa_max.max(p.kappa.abs());
        points.push(PathPoint {
            x: p.x,
            y: p.y,
            s,
            psi,
            kappa: p.kappa,
        });
    }
    Ok(ReferencePath {
        points,
        ds,
        kappa_max,
    })
}

impl ReferencePath {
    pub fn points(&self) -> &[PathPoint] {
        &self.points
    }

    pub fn ds(&self) -> f64 {
        self.ds
    }

    /// Largest |kappa| over the resampled points.
    pub fn kappa_max(&self) -> f64 {
        self.kappa_max
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Arc length of the final sample.
    pub fn length(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.s)
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        let last = self.points.len() - 1;
        if s <= 0.0 || last == 0 {
            return (0, 0.0);
        }
        if s >= self.length() {
            return (last.saturating_sub(1), 1.0);
        }
        let i = ((s / self.ds).floor() as usize).min(last - 1);
        (i, ((s - self.points[i].s) / self.ds).clamp(0.0, 1.0))
    }

    /// Linearly interpolated position at arc length `s` (clamped to the path).
    pub fn position_at(&self, s: f64) -> (f64, f64) {
        if self.points.len() == 1 {
            return (self.points[0].x, self.points[0].y);
        }
        let (i, u) = self.locate(s);
        let (a, b) = (&self.points[i], &self.points[i + 1]);
        (a.x + u * (b.x - a.x), a.y + u * (b.y - a.y))
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        if self.points.len() == 1 {
            return self.points[0].psi;
        }
        let (i, u) = self.locate(s);
        let (a, b) = (&self.points[i], &self.points[i + 1]);
        a.psi + u * (b.psi - a.psi)
    }

    pub fn curvature_at(&self, s: f64) -> f64 {
        if self.points.len() == 1 {
            return self.points[0].kappa;
        }
        let (i, u) = self.locate(s);
        let (a, b) = (&self.points[i], &self.points[i + 1]);
        a.kappa + u * (b.kappa - a.kappa)
    }

    /// Foot point on the segments adjacent to sample `i`.
    fn refine(&self, p: (f64, f64), i: usize) -> Projection {
        let n = self.points.len();
        if n == 1 {
            let a = &self.points[0];
            return Projection {
                s: 0.0,
                e_lat: ((p.0 - a.x).powi(2) + (p.1 - a.y).powi(2)).sqrt(),
            };
        }
        let mut best: Option<(f64, Projection)> = None;
        for j in [i.wrapping_sub(1), i] {
            if j >= n - 1 {
                continue;
            }
            let (a, b) = (&self.points[j], &self.points[j + 1]);
            let (dx, dy) = (b.x - a.x, b.y - a.y);
            let len2 = dx * dx + dy * dy;
            let t = (((p.0 - a.x) * dx + (p.1 - a.y) * dy) / len2).clamp(0.0, 1.0);
            let (fx, fy) = (a.x + t * dx, a.y + t * dy);
            let dist2 = (p.0 - fx).powi(2) + (p.1 - fy).powi(2);
            let e_lat = (dx * (p.1 - fy) - dy * (p.0 - fx)) / len2.sqrt();
            let proj = Projection {
                s: a.s + t * (b.s - a.s),
                e_lat,
            };
            if best.as_ref().is_none_or(|(d, _)| dist2 < *d) {
                best = Some((dist2, proj));
            }
        }
        best.expect("path has at least one segment").1
    }

    fn nearest_in(&self, p: (f64, f64), lo: usize, hi: usize) -> usize {
        let mut best = lo;
        let mut best_d = f64::INFINITY;
        for (i, q) in self.points[lo..=hi].iter().enumerate() {
            let d = (q.x - p.0).powi(2) + (q.y - p.1).powi(2);
            if d < best_d {
                best_d = d;
                best = lo + i;
            }
        }
        best
    }

    /// Project onto the whole path.
    pub fn project(&self, p: (f64, f64)) -> Projection {
        let i = self.nearest_in(p, 0, self.points.len() - 1);
        self.refine(p, i)
    }

    /// Project, searching only samples within `window` meters of `s_hint`.
    pub fn project_near(&self, p: (f64, f64), s_hint: f64, window: f64) -> Projection {
        let last = self.points.len() - 1;
        let lo = ((s_hint - window) / self.ds).floor().max(0.0) as usize;
        let hi = (((s_hint + window) / self.ds).ceil().max(0.0) as usize).min(last);
        let lo = lo.min(hi);
        let i = self.nearest_in(p, lo, hi);
        self.refine(p, i)
    }

    pub fn project_pose(&self, pose: &Pose2D) -> PoseProjection {
        let proj = self.project((pose.x, pose.y));
        self.pose_error(pose, proj)
    }

    pub fn pose_error(&self, pose: &Pose2D, proj: Projection) -> PoseProjection {
        PoseProjection {
            s: proj.s,
            e_lat: proj.e_lat,
            e_psi: normalize_angle(pose.psi - self.heading_at(proj.s)),
        }
    }

    /// Preview point `lookahead` meters of arc ahead of `s_star`, expressed in
    /// the body frame of `pose`. Clamps to the path end.
    pub fn preview_from(&self, pose: &Pose2D, s_star: f64, lookahead: f64) -> Result<PreviewPoint> {
        if s_star >= self.length() - 1e-9 {
            return Err(Error::PathExhausted);
        }
        let (gx, gy) = self.position_at((s_star + lookahead).min(self.length()));
        let (dx, dy) = (gx - pose.x, gy - pose.y);
        let (s, c) = pose.psi.sin_cos();
        Ok(PreviewPoint {
            x_ref: c * dx + s * dy,
            y_ref: -s * dx + c * dy,
        })
    }
}

/// Nearest point on the path: arc length and signed lateral offset.
pub fn project_to_path(path: &ReferencePath, p: (f64, f64)) -> Projection {
    path.project(p)
}

/// Preview point at `lookahead` of arc past the projection of `pose`.
pub fn preview_point(path: &ReferencePath, pose: &Pose2D, lookahead: f64) -> Result<PreviewPoint> {
    if !(lookahead > 0.0) {
        return Err(Error::InvalidSpec(format!("lookahead must be positive, got {lookahead}")));
    }
    let s_star = path.project((pose.x, pose.y)).s;
    path.preview_from(pose, s_star, lookahead)
}
