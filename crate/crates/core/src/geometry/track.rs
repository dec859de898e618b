//! Procedural test tracks built by integrating a curvature profile.

use std::f64::consts::PI;

use rand::Rng;

use super::Waypoint;
use crate::config::KvConfig;
use crate::error::{Error, Result};

/// Spacing of emitted waypoints, meters.
const WAYPOINT_SPACING: f64 = 1.0;
/// Integration step, meters.
const STEP: f64 = 0.05;
/// Width of the moving average applied to the curvature steps, meters.
const BLEND: f64 = 6.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TrackSpec {
    pub section_id: String,
    pub seed: u64,
    /// Total track length, meters. Past the end of the profile the track is straight.
    pub length: f64,
    /// `(segment length m, target curvature 1/m)` pieces, in order.
    pub curvature_profile: Vec<(f64, f64)>,
    pub kappa_max: f64,
}

impl TrackSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::InvalidSpec(format!("length must be positive, got {}", self.length)));
        }
        if !(self.kappa_max > 0.0 && self.kappa_max.is_finite()) {
            return Err(Error::InvalidSpec(format!("kappa_max must be positive, got {}", self.kappa_max)));
        }
        for &(len, kappa) in &self.curvature_profile {
            if !(len > 0.0 && len.is_finite()) {
                return Err(Error::InvalidSpec(format!("segment length must be positive, got {len}")));
            }
            if !(kappa.abs() <= self.kappa_max) {
                return Err(Error::InvalidSpec(format!(
                    "segment curvature {kappa} exceeds kappa_max {}",
                    self.kappa_max
                )));
            }
        }
        if self.section_id.is_empty() || self.section_id.contains([',', '=', '#', '/']) {
            return Err(Error::InvalidSpec(format!("bad section id `{}`", self.section_id)));
        }
        Ok(())
    }

    pub fn to_config(&self) -> KvConfig {
        let mut cfg = KvConfig::new();
        cfg.set("section_id", &self.section_id);
        cfg.set("seed", self.seed);
        cfg.set("length", self.length);
        cfg.set("kappa_max", self.kappa_max);
        let profile: Vec<String> = self
            .curvature_profile
            .iter()
            .map(|(l, k)| format!("{l}:{k}"))
            .collect();
        cfg.set("profile", profile.join(", "));
        cfg
    }

    pub fn from_config(cfg: &KvConfig) -> Result<Self> {
        cfg.reject_unknown(&["section_id", "seed", "length", "kappa_max", "profile"])?;
        let section_id = cfg
            .get("section_id")
            .ok_or_else(|| Error::Config("track spec needs `section_id`".into()))?
            .to_string();
        let mut curvature_profile = Vec::new();
        for piece in cfg.get_list::<String>("profile")?.unwrap_or_default() {
            let (l, k) = piece
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("profile piece `{piece}` is not `len:kappa`")))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad number in profile piece `{piece}`")))
            };
            curvature_profile.push((parse(l)?, parse(k)?));
        }
        let spec = TrackSpec {
            section_id,
            seed: cfg.get_or("seed", 0)?,
            length: cfg
                .parse_value("length")?
                .ok_or_else(|| Error::Config("track spec needs `length`".into()))?,
            curvature_profile,
            kappa_max: cfg.get_or("kappa_max", 0.2)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Built-in sections. `S1` is the hardest (densest, sharpest curvature);
    /// `S2` and `S3` are progressively easier.
    pub fn preset(name: &str) -> Option<TrackSpec> {
        let (seed, length, profile): (u64, f64, &[(f64, f64)]) = match name {
            "S1" => (
                101,
                250.0,
                &[
                    (20.0, 0.0),
                    (22.0, 0.06),
                    (12.0, 0.0),
                    (25.0, -0.075),
                    (15.0, 0.035),
                    (22.0, 0.085),
                    (12.0, 0.0),
                    (28.0, -0.06),
                    (22.0, 0.07),
                    (16.0, -0.04),
                    (56.0, 0.0),
                ],
            ),
            "S2" => (
                202,
                230.0,
                &[
                    (25.0, 0.0),
                    (35.0, 0.05),
                    (25.0, 0.0),
                    (35.0, -0.08),
                    (25.0, 0.0),
                    (30.0, 0.065),
                    (55.0, 0.0),
                ],
            ),
            "S3" => (
                303,
                210.0,
                &[
                    (30.0, 0.0),
                    (40.0, 0.03),
                    (25.0, -0.045),
                    (35.0, 0.0),
                    (35.0, 0.07),
                    (45.0, 0.0),
                ],
            ),
            _ => return None,
        };
        Some(TrackSpec {
            section_id: name.to_string(),
            seed,
            length,
            curvature_profile: profile.to_vec(),
            kappa_max: 0.1,
        })
    }

    pub fn presets() -> Vec<TrackSpec> {
        ["S1", "S2", "S3"]
            .iter()
            .map(|n| Self::preset(n).expect("built-in preset"))
            .collect()
    }

    /// Integral of the raw piecewise-constant profile from 0 to `s`
    /// (zero curvature outside the profile).
    fn integral(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        let mut start = 0.0;
        for &(len, kappa) in &self.curvature_profile {
            if s <= start + len {
                return acc + kappa * (s - start);
            }
            acc += kappa * len;
            start += len;
        }
        acc
    }

    fn blended_curvature(&self, s: f64) -> f64 {
        (self.integral(s + BLEND / 2.0) - self.integral(s - BLEND / 2.0)) / BLEND
    }
}

/// Integrate the spec's curvature profile (blended, with a seeded smooth
/// multiplicative modulation) into waypoints starting at the origin heading +x.
pub fn generate_track(spec: &TrackSpec) -> Result<Vec<Waypoint>> {
    spec.validate()?;
    let mut rng = crate::rng::rng_from(spec.seed);
    let amp: f64 = rng.random_range(0.0..0.15);
    let wavelength: f64 = rng.random_range(30.0..60.0);
    let phase: f64 = rng.random_range(0.0..2.0 * PI);
    let kappa = |s: f64| {
        let k = spec.blended_curvature(s) * (1.0 + amp * (2.0 * PI * s / wavelength + phase).sin());
        k.clamp(-spec.kappa_max, spec.kappa_max)
    };

    let steps = (spec.length / STEP).round().max(1.0) as usize;
    let h = spec.length / steps as f64;
    let per_waypoint = ((WAYPOINT_SPACING / h).round() as usize).max(1);
    let (mut x, mut y, mut psi) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut out = vec![Waypoint::new(0.0, 0.0)];
    for i in 0..steps {
        let s = i as f64 * h;
        let k0 = kappa(s);
        let km = kappa(s + 0.5 * h);
        let k1 = kappa(s + h);
        // heading at the midpoint and end of the step (trapezoid on kappa)
        let psi_mid = psi + 0.25 * h * (k0 + km);
        let psi_end = psi + h * (k0 + 4.0 * km + k1) / 6.0;
        // Simpson on the unit tangent
        x += h * (psi.cos() + 4.0 * psi_mid.cos() + psi_end.cos()) / 6.0;
        y += h * (psi.sin() + 4.0 * psi_mid.sin() + psi_end.sin()) / 6.0;
        psi = psi_end;
        if (i + 1) % per_waypoint == 0 || i + 1 == steps {
            out.push(Waypoint::new(x, y));
        }
    }
    // avoid a tiny final segment when the length is not a multiple of the spacing
    let n = out.len();
    if n >= 3 {
        let (a, b) = (out[n - 2], out[n - 1]);
        if (b.x - a.x).hypot(b.y - a.y) < 0.25 * WAYPOINT_SPACING {
            out.remove(n - 2);
        }
    }
    Ok(out)
}

pub fn waypoints_to_csv(waypoints: &[Waypoint]) -> String {
    let mut out = String::from("x,y\n");
    for w in waypoints {
        out.push_str(&format!("{},{}\n", w.x, w.y));
    }
    out
}

pub fn waypoints_from_csv(text: &str) -> Result<Vec<Waypoint>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == "x,y" => {}
        other => return Err(Error::parse("waypoint csv", format!("bad header {other:?}"))),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (x, y) = l
                .split_once(',')
                .ok_or_else(|| Error::parse("waypoint csv", format!("bad row `{l}`")))?;
            let p = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::parse("waypoint csv", format!("bad number `{v}`")))
            };
            Ok(Waypoint::new(p(x)?, p(y)?))
        })
        .collect()
}
