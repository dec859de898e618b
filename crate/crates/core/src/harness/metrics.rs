use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::policy::{mse_loss, Normalizer, PolicyNet, Sample};

/// Lower-triangular matrix of test losses: `b[k][j]` is the mean squared error
/// on the test set of task `j` after training through task `k` (both 0-based),
/// and `big_b[k]` is the mean of row `k`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalMatrix {
    pub b: Vec<Vec<f64>>,
    pub big_b: Vec<f64>,
}

impl EvalMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of completed rows.
    pub fn rows(&self) -> usize {
        self.b.len()
    }

    /// Mean of row `k`, recomputed from the stored entries.
    pub fn row_mean(&self, k: usize) -> f64 {
        let row = &self.b[k];
        row.iter().sum::<f64>() / row.len() as f64
    }

    /// Triangular shape and stored means agree with the entries.
    pub fn is_consistent(&self, tol: f64) -> bool {
        self.b.len() == self.big_b.len()
            && self
                .b
                .iter()
                .enumerate()
                .all(|(k, row)| row.len() == k + 1 && (self.row_mean(k) - self.big_b[k]).abs() <= tol)
    }

    pub fn push_row(&mut self, row: Vec<f64>) {
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        self.b.push(row);
        self.big_b.push(mean);
    }

    /// Long-format CSV `k,j,b,B_k` with 1-based task indices.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,j,b,B_k\n");
        for (k, row) in self.b.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                out.push_str(&format!("{},{},{},{}\n", k + 1, j + 1, v, self.big_b[k]));
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("k,j,b,B_k") {
            return Err(Error::parse("eval matrix csv", "bad header"));
        }
        let mut m = EvalMatrix::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let bad = || Error::parse("eval matrix csv", format!("bad row `{line}`"));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad());
            }
            let k: usize = f[0].parse().map_err(|_| bad())?;
            let j: usize = f[1].parse().map_err(|_| bad())?;
            let b: f64 = f[2].parse().map_err(|_| bad())?;
            let big: f64 = f[3].parse().map_err(|_| bad())?;
            if k == 0 || j == 0 || j > k {
                return Err(bad());
            }
            if m.b.len() < k {
                if k != m.b.len() + 1 {
                    return Err(bad());
                }
                m.b.push(Vec::new());
                m.big_b.push(big);
            }
            if j != m.b[k - 1].len() + 1 {
                return Err(bad());
            }
            m.b[k - 1].push(b);
        }
        Ok(m)
    }
}

/// Append row `k` (0-based): the loss of `net` on the test sets of tasks
/// `0..=k`, evaluated under `exec`.
pub fn eval_matrix_update(
    matrix: &mut EvalMatrix,
    net: &PolicyNet,
    norm: &Normalizer,
    test_sets: &[Vec<Sample>],
    k: usize,
    exec: Exec,
) -> Result<()> {
    if matrix.rows() != k {
        return Err(Error::Config(format!(
            "eval matrix has {} rows, cannot add row {}",
            matrix.rows(),
            k + 1
        )));
    }
    if let Some(j) = (0..=k).find(|&j| test_sets.get(j).is_none_or(|t| t.is_empty())) {
        return Err(Error::MissingTestSet(j));
    }
    let row = par::map(exec, &test_sets[..=k], |t| mse_loss(net, norm, t))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    matrix.push_row(row);
    Ok(())
}
