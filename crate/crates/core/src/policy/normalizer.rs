use super::{Sample, State, STATE_DIM};
use crate::error::{Error, Result};
use crate::experience::TaskDataset;

/// Smallest per-feature scale; constant features are divided by this.
pub const SCALE_FLOOR: f64 = 1e-8;

/// Per-feature affine input normalization `(s - shift) / scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizer {
    shift: State,
    scale: State,
}

impl Normalizer {
    pub fn new(shift: State, scale: State) -> Result<Self> {
        if scale.iter().any(|s| !(*s >= SCALE_FLOOR && s.is_finite())) || shift.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config(format!("normalizer scale must be >= {SCALE_FLOOR}")));
        }
        Ok(Self { shift, scale })
    }

    pub fn identity() -> Self {
        Self {
            shift: [0.0; STATE_DIM],
            scale: [1.0; STATE_DIM],
        }
    }

    pub fn shift(&self) -> &State {
        &self.shift
    }

    pub fn scale(&self) -> &State {
        &self.scale
    }

    pub fn apply(&self, s: &State) -> State {
        let mut out = [0.0; STATE_DIM];
        for i in 0..STATE_DIM {
            out[i] = (s[i] - self.shift[i]) / self.scale[i];
        }
        out
    }

    /// Per-feature mean and population standard deviation of `samples`.
    pub fn fit<'a>(samples: impl IntoIterator<Item = &'a Sample>) -> Result<Self> {
        let states: Vec<&State> = samples.into_iter().map(|s| &s.s).collect();
        if states.is_empty() {
            return Err(Error::EmptyData);
        }
        let n = states.len() as f64;
        let mut shift = [0.0; STATE_DIM];
        let mut scale = [0.0; STATE_DIM];
        for i in 0..STATE_DIM {
            let mean = states.iter().map(|s| s[i]).sum::<f64>() / n;
            // second pass with compensation for the residual mean error
            let (mut ss, mut sc) = (0.0, 0.0);
            for s in &states {
                let d = s[i] - mean;
                ss += d * d;
                sc += d;
            }
            let var = (ss - sc * sc / n) / n;
            shift[i] = mean + sc / n;
            scale[i] = var.max(0.0).sqrt().max(SCALE_FLOOR);
        }
        Ok(Self { shift, scale })
    }
}

/// Fits on the training split of every dataset.
pub fn fit_normalizer(datasets: &[TaskDataset]) -> Result<Normalizer> {
    Normalizer::fit(datasets.iter().flat_map(|d| d.train_samples()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn constant_feature_uses_floor() {
        let samples: Vec<Sample> = (0..10).map(|i| Sample::new([1.0, i as f64, 2.0, 3.0, 4.0], 0.0)).collect();
        let n = Normalizer::fit(&samples).unwrap();
        assert_eq!(n.scale()[0], SCALE_FLOOR);
        let out = n.apply(&samples[3].s);
        assert!(out.iter().all(|v| v.is_finite()));
        assert_eq!(out[0], 0.0);
    }

    #[test]
    fn standard_normal_data_gives_unit_statistics() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let samples: Vec<Sample> = (0..10_000)
            .map(|_| {
                let mut s = [0.0; STATE_DIM];
                for v in &mut s {
                    *v = StandardNormal.sample(&mut rng);
                }
                Sample::new(s, 0.0)
            })
            .collect();
        let n = Normalizer::fit(&samples).unwrap();
        for i in 0..STATE_DIM {
            assert!(n.shift()[i].abs() < 0.05);
            assert!((n.scale()[i] - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn fitted_data_is_centered() {
        let samples: Vec<Sample> = (0..333)
            .map(|i| {
                let t = i as f64;
                Sample::new([1.7 + 0.01 * t, (t * 0.3).sin(), 3.0 + t * 0.036, 0.1 * t.cos(), 1e-3 * t], 0.0)
            })
            .collect();
        let n = Normalizer::fit(&samples).unwrap();
        for i in 0..STATE_DIM {
            let mean = samples.iter().map(|s| n.apply(&s.s)[i]).sum::<f64>() / samples.len() as f64;
            assert!(mean.abs() < 1e-9, "feature {i}: {mean}");
        }
        assert!(matches!(Normalizer::fit(&[]), Err(Error::EmptyData)));
    }
}
