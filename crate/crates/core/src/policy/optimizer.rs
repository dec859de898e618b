use super::{GradientVector, PolicyNet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Sgd,
    Adam,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(Method::Sgd),
            "adam" => Ok(Method::Adam),
            other => Err(Error::Config(format!("unknown optimizer `{other}`"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Sgd => "sgd",
            Method::Adam => "adam",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub method: Method,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl OptimizerState {
    pub fn new(method: Method, lr: f64, param_count: usize) -> Self {
        Self {
            method,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn moments(&self) -> (&[f64], &[f64]) {
        (&self.m, &self.v)
    }
}

/// One descent step of `net` along `g`.
pub fn apply_gradient(net: &mut PolicyNet, opt: &mut OptimizerState, g: &GradientVector) -> Result<()> {
    let n = net.param_count();
    if g.len() != n || opt.m.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: g.len(),
        });
    }
    let g = g.as_slice();
    match opt.method {
        Method::Sgd => {
            for (p, gi) in net.params_mut().zip(g) {
                *p -= opt.lr * gi;
            }
            opt.step += 1;
        }
        Method::Adam => {
            opt.step += 1;
            let t = opt.step as i32;
            let c1 = 1.0 - opt.beta1.powi(t);
            let c2 = 1.0 - opt.beta2.powi(t);
            let (b1, b2, lr, eps) = (opt.beta1, opt.beta2, opt.lr, opt.eps);
            for (((p, gi), m), v) in net.params_mut().zip(g).zip(opt.m.iter_mut()).zip(opt.v.iter_mut()) {
                *m = b1 * *m + (1.0 - b1) * gi;
                *v = b2 * *v + (1.0 - b2) * gi * gi;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::LAYER_DIMS;

    #[test]
    fn sgd_unit_step() {
        let mut net = PolicyNet::standard(1);
        let before = net.flatten();
        let mut g = vec![0.0; before.len()];
        g[17] = 1.0;
        let mut opt = OptimizerState::new(Method::Sgd, 0.1, before.len());
        apply_gradient(&mut net, &mut opt, &GradientVector::from_vec(g)).unwrap();
        let after = net.flatten();
        for i in 0..before.len() {
            if i == 17 {
                assert_eq!(after[i], before[i] - 0.1);
            } else {
                assert_eq!(after[i], before[i]);
            }
        }
    }

    #[test]
    fn zero_gradient_leaves_net_unchanged() {
        let mut net = PolicyNet::standard(2);
        let before = net.clone();
        let zero = GradientVector::zeros(net.param_count());
        let mut sgd = OptimizerState::new(Method::Sgd, 0.1, net.param_count());
        apply_gradient(&mut net, &mut sgd, &zero).unwrap();
        assert_eq!(net, before);
        let mut adam = OptimizerState::new(Method::Adam, 0.1, net.param_count());
        apply_gradient(&mut net, &mut adam, &zero).unwrap();
        assert_eq!(net, before);
        assert_eq!(adam.step_count(), 1);
        assert!(adam.moments().0.iter().chain(adam.moments().1).all(|v| *v == 0.0));
    }

    #[test]
    fn sgd_steps_compose_linearly() {
        let n = PolicyNet::standard(3).param_count();
        let g1: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        let g2: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).cos()).collect();
        let mut a = PolicyNet::standard(3);
        let mut opt = OptimizerState::new(Method::Sgd, 0.01, n);
        apply_gradient(&mut a, &mut opt, &GradientVector::from_vec(g1.clone())).unwrap();
        apply_gradient(&mut a, &mut opt, &GradientVector::from_vec(g2.clone())).unwrap();
        let mut b = PolicyNet::standard(3);
        let sum: Vec<f64> = g1.iter().zip(&g2).map(|(x, y)| x + y).collect();
        apply_gradient(&mut b, &mut opt, &GradientVector::from_vec(sum)).unwrap();
        for (x, y) in a.flatten().iter().zip(b.flatten()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn adam_first_step_is_lr_times_sign() {
        let mut net = PolicyNet::zeros(&LAYER_DIMS).unwrap();
        let n = net.param_count();
        let g: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 3.0 } else { -0.5 }).collect();
        let mut opt = OptimizerState::new(Method::Adam, 1e-3, n);
        apply_gradient(&mut net, &mut opt, &GradientVector::from_vec(g)).unwrap();
        for (i, p) in net.flatten().iter().enumerate() {
            let expected = if i % 2 == 0 { -1e-3 } else { 1e-3 };
            assert!((p - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        let mut net = PolicyNet::standard(1);
        let mut opt = OptimizerState::new(Method::Sgd, 0.1, net.param_count());
        assert!(matches!(
            apply_gradient(&mut net, &mut opt, &GradientVector::zeros(3)),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
