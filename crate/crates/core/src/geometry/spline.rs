//! Natural cubic splines and arc-length reparametrization.

/// Natural cubic spline through `(knots[i], values[i])`.
#[derive(Debug, Clone)]
pub(crate) struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl CubicSpline {
    /// Knots must be strictly increasing and at least two.
    pub(crate) fn natural(knots: &[f64], values: &[f64]) -> Self {
        let n = knots.len();
        debug_assert!(n >= 2 && values.len() == n);
        let mut second = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior unknowns M_1..M_{n-2}
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut upper = vec![0.0; m];
            let mut rhs = vec![0.0; m];
            for i in 1..n - 1 {
                let h0 = knots[i] - knots[i - 1];
                let h1 = knots[i + 1] - knots[i];
                diag[i - 1] = 2.0 * (h0 + h1);
                upper[i - 1] = h1;
                rhs[i - 1] =
                    6.0 * ((values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0);
            }
            for i in 1..m {
                let lower = knots[i + 1] - knots[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] -= w * rhs[i - 1];
            }
            second[m] = rhs[m - 1] / diag[m - 1];
            for i in (0..m - 1).rev() {
                second[i + 1] = (rhs[i] - upper[i] * second[i + 2]) / diag[i];
            }
        }
        Self {
            knots: knots.to_vec(),
            values: values.to_vec(),
            second,
        }
    }

    pub(crate) fn segments(&self) -> usize {
        self.knots.len() - 1
    }

    pub(crate) fn knot(&self, i: usize) -> f64 {
        self.knots[i]
    }

    /// Value, first and second derivative on segment `seg` at parameter `t`.
    pub(crate) fn eval(&self, seg: usize, t: f64) -> (f64, f64, f64) {
        let (t0, t1) = (self.knots[seg], self.knots[seg + 1]);
        let (y0, y1) = (self.values[seg], self.values[seg + 1]);
        let (m0, m1) = (self.second[seg], self.second[seg + 1]);
        let h = t1 - t0;
        let a = (t1 - t) / h;
        let b = (t - t0) / h;
        let value = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (y1 - y0) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0 + (3.0 * b * b - 1.0) / 6.0 * h * m1;
        let d2 = a * m0 + b * m1;
        (value, d1, d2)
    }
}

/// Planar curve `t -> (x(t), y(t))` built from two splines over shared knots.
#[derive(Debug, Clone)]
pub(crate) struct PlanarSpline {
    pub(crate) x: CubicSpline,
    pub(crate) y: CubicSpline,
}

pub(crate) struct CurvePoint {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub kappa: f64,
}

impl PlanarSpline {
    pub(crate) fn speed(&self, seg: usize, t: f64) -> f64 {
        let (_, dx, _) = self.x.eval(seg, t);
        let (_, dy, _) = self.y.eval(seg, t);
        dx.hypot(dy)
    }

    pub(crate) fn point(&self, seg: usize, t: f64) -> CurvePoint {
        let (x, dx, ddx) = self.x.eval(seg, t);
        let (y, dy, ddy) = self.y.eval(seg, t);
        let speed2 = dx * dx + dy * dy;
        CurvePoint {
            x,
            y,
            psi: dy.atan2(dx),
            kappa: (dx * ddy - dy * ddx) / (speed2 * speed2.sqrt()),
        }
    }

    /// Arc length of segment `seg` from its start knot to `t`, composite
    /// Simpson with `n` (even) intervals.
    pub(crate) fn partial_length(&self, seg: usize, t: f64, n: usize) -> f64 {
        let t0 = self.x.knot(seg);
        let h = (t - t0) / n as f64;
        if h == 0.0 {
            return 0.0;
        }
        let mut acc = self.speed(seg, t0) + self.speed(seg, t);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * self.speed(seg, t0 + i as f64 * h);
        }
        acc * h / 3.0
    }

    /// Full segment length, refining Simpson until successive estimates
    /// agree to `tol`. Returns the length and the interval count used.
    pub(crate) fn segment_length(&self, seg: usize, tol: f64) -> (f64, usize) {
        let t1 = self.x.knot(seg + 1);
        let mut n = 8;
        let mut prev = self.partial_length(seg, t1, n);
        loop {
            n *= 2;
            let next = self.partial_length(seg, t1, n);
            if (next - prev).abs() < tol || n >= 4096 {
                return (next, n);
            }
            prev = next;
        }
    }

    /// Parameter `t` in segment `seg` whose arc length from the segment start
    /// is `target`. Newton iteration safeguarded by bisection.
    pub(crate) fn invert_length(&self, seg: usize, target: f64, seg_len: f64, n: usize) -> f64 {
        let (t0, t1) = (self.x.knot(seg), self.x.knot(seg + 1));
        if target <= 0.0 {
            return t0;
        }
        if target >= seg_len {
            return t1;
        }
        let (mut lo, mut hi) = (t0, t1);
        let mut t = t0 + (t1 - t0) * target / seg_len;
        for _ in 0..60 {
            let f = self.partial_length(seg, t, n) - target;
            if f.abs() < 1e-12 {
                break;
            }
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let step = f / self.speed(seg, t);
            let mut next = t - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() < 1e-15 * (1.0 + t.abs()) {
                t = next;
                break;
            }
            t = next;
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_linear_data_exactly() {
        let knots = [0.0, 1.0, 2.5, 4.0];
        let values = [1.0, 3.0, 6.0, 9.0];
        let s = CubicSpline::natural(&knots, &values);
        for seg in 0..3 {
            let (_, d1, d2) = s.eval(seg, knots[seg] + 0.3);
            assert!((d1 - 2.0).abs() < 1e-12);
            assert!(d2.abs() < 1e-12);
        }
    }

    #[test]
    fn interpolates_knots_with_continuous_slope() {
        let knots: Vec<f64> = (0..7).map(|i| i as f64 * 0.7).collect();
        let values: Vec<f64> = knots.iter().map(|t| t.sin()).collect();
        let s = CubicSpline::natural(&knots, &values);
        for i in 0..6 {
            assert!((s.eval(i, knots[i]).0 - values[i]).abs() < 1e-12);
            assert!((s.eval(i, knots[i + 1]).0 - values[i + 1]).abs() < 1e-12);
        }
        for i in 1..6 {
            let left = s.eval(i - 1, knots[i]);
            let right = s.eval(i, knots[i]);
            assert!((left.1 - right.1).abs() < 1e-10);
            assert!((left.2 - right.2).abs() < 1e-10);
        }
        // natural end conditions
        assert!(s.eval(0, 0.0).2.abs() < 1e-12);
        assert!(s.eval(5, knots[6]).2.abs() < 1e-12);
    }
}
