use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Per-dimension mean and standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Moments {
    /// Zero mean, unit deviation: normalization is the identity.
    pub fn identity(dim: usize) -> Self {
        Moments {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    /// Statistics over a set of equally wide rows. A dimension with zero
    /// variance (up to round-off) gets `std = 1`.
    pub fn from_rows<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let mut sum: Vec<f64> = Vec::new();
        let mut sq: Vec<f64> = Vec::new();
        let mut n = 0usize;
        let rows: Vec<&[f64]> = rows.into_iter().collect();
        // Two passes: mean first, then centered squares.
        for r in &rows {
            if sum.is_empty() {
                sum = vec![0.0; r.len()];
            } else if r.len() != sum.len() {
                return Err(Error::shape("rows of different widths"));
            }
            for (s, v) in sum.iter_mut().zip(r.iter()) {
                *s += v;
            }
            n += 1;
        }
        if n == 0 {
            return Err(Error::arg("cannot compute statistics of an empty set"));
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        sq.resize(mean.len(), 0.0);
        for r in &rows {
            for ((q, v), m) in sq.iter_mut().zip(r.iter()).zip(&mean) {
                *q += (v - m) * (v - m);
            }
        }
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| {
                let s = (q / n as f64).sqrt();
                // Round-off in the mean leaves a tiny spread on constant columns.
                if s > 1e-12 * m.abs().max(1.0) && s.is_finite() {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Moments { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// The leading `dim` dimensions.
    pub fn prefix(&self, dim: usize) -> Moments {
        Moments {
            mean: self.mean[..dim].to_vec(),
            std: self.std[..dim].to_vec(),
        }
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::shape(format!(
                "vector of length {len} against {}-dimensional statistics",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Input and target statistics of a trained policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub input: Moments,
    pub target: Moments,
}

impl NormStats {
    pub fn identity(input: usize, target: usize) -> Self {
        NormStats {
            input: Moments::identity(input),
            target: Moments::identity(target),
        }
    }
}

pub fn normalize(x: &[f64], stats: &Moments) -> Result<Vec<f64>> {
    stats.check(x.len())?;
    Ok(x.iter()
        .zip(stats.mean.iter().zip(&stats.std))
        .map(|(v, (m, s))| (v - m) / s)
        .collect())
}

pub fn denormalize(y: &[f64], stats: &Moments) -> Result<Vec<f64>> {
    stats.check(y.len())?;
    Ok(y.iter()
        .zip(stats.mean.iter().zip(&stats.std))
        .map(|(v, (m, s))| v * s + m)
        .collect())
}
