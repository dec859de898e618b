//! Dense box-constrained convex QP: min 1/2 x'Hx + f'x  s.t.  lower <= x <= upper.
//!
//! Projected Newton on the free variables with an Armijo search along the
//! projection arc. Falls back to a projected-gradient step when the reduced
//! Hessian is not positive definite or the Newton arc fails to descend.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub h: DMatrix<f64>,
    pub f: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl QpProblem {
    pub fn dim(&self) -> usize {
        self.f.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.h.nrows() != n || self.h.ncols() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: self.h.nrows(),
            });
        }
        let scale = self.h.amax().max(1.0);
        if (&self.h - self.h.transpose()).amax() > 1e-8 * scale {
            return Err(Error::Config("QP Hessian is not symmetric".into()));
        }
        if self.lower.iter().zip(self.upper.iter()).any(|(l, u)| !(l <= u)) {
            return Err(Error::Config("QP bounds have lower > upper".into()));
        }
        Ok(())
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.h * x)) + self.f.dot(x)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.h * x + &self.f
    }

    fn project(&self, x: &mut DVector<f64>) {
        for i in 0..x.len() {
            x[i] = x[i].clamp(self.lower[i], self.upper[i]);
        }
    }

    /// Infinity norm of `x - clamp(x - grad)`; zero exactly at KKT points.
    pub fn kkt_residual(&self, x: &DVector<f64>) -> f64 {
        let g = self.gradient(x);
        (0..x.len())
            .map(|i| (x[i] - (x[i] - g[i]).clamp(self.lower[i], self.upper[i])).abs())
            .fold(0.0, f64::max)
    }
}

/// Searches `x + alpha d` projected onto the box for an Armijo decrease.
fn arc_search(p: &QpProblem, x: &DVector<f64>, g: &DVector<f64>, d: &DVector<f64>) -> Option<DVector<f64>> {
    let q0 = p.objective(x);
    let mut alpha = 1.0;
    while alpha > 1e-12 {
        let mut trial = x + d * alpha;
        p.project(&mut trial);
        let step = &trial - x;
        let decrease = g.dot(&step);
        if decrease < 0.0 && p.objective(&trial) <= q0 + 1e-4 * decrease {
            return Some(trial);
        }
        alpha *= 0.5;
    }
    None
}

pub fn solve_box_qp(p: &QpProblem, tol: f64, max_iter: usize) -> Result<DVector<f64>> {
    p.validate()?;
    let n = p.dim();
    let mut x = DVector::zeros(n);
    p.project(&mut x);
    let mut residual = p.kkt_residual(&x);
    for _ in 0..max_iter {
        if residual <= tol {
            return Ok(x);
        }
        let g = p.gradient(&x);
        // bounds that are active and pushed against by the gradient stay fixed
        let eps = (1e-12 * (1.0 + x.amax())).max(1e-15);
        let free: Vec<usize> = (0..n)
            .filter(|&i| {
                let at_lower = x[i] <= p.lower[i] + eps && g[i] > 0.0;
                let at_upper = x[i] >= p.upper[i] - eps && g[i] < 0.0;
                !(at_lower || at_upper)
            })
            .collect();

        let mut next = None;
        if !free.is_empty() {
            let hff = DMatrix::from_fn(free.len(), free.len(), |a, b| p.h[(free[a], free[b])]);
            let gf = DVector::from_fn(free.len(), |a, _| g[free[a]]);
            if let Some(chol) = hff.cholesky() {
                let df = chol.solve(&(-gf));
                let mut d = DVector::zeros(n);
                for (a, &i) in free.iter().enumerate() {
                    d[i] = df[a];
                }
                next = arc_search(p, &x, &g, &d);
            }
        }
        let candidate = match next {
            Some(v) => v,
            None => {
                // projected gradient with the exact line-minimizing step length
                let hg = g.dot(&(&p.h * &g));
                let scale = if hg > 0.0 { g.dot(&g) / hg } else { 1.0 };
                match arc_search(p, &x, &g, &(-&g * scale)) {
                    Some(v) => v,
                    None => break,
                }
            }
        };
        x = candidate;
        residual = p.kkt_residual(&x);
    }
    if residual <= tol {
        Ok(x)
    } else {
        Err(Error::QpFailure {
            iterations: max_iter,
            residual,
        })
    }
}
