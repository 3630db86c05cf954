//! IoU, angular error and run aggregation.

use super::raster::InkImage;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// `|a ∧ b| / |a ∨ b|`; two blank images count as identical.
pub fn iou(a: &InkImage, b: &InkImage) -> Result<f64> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::shape(format!(
            "images of {}×{} and {}×{}",
            a.width, a.height, b.width, b.height
        )));
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (p, q) in a.pixels.iter().zip(&b.pixels) {
        inter += usize::from(*p && *q);
        union += usize::from(*p || *q);
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularError {
    /// `Σ_k Σ_j |θ^upper − θ^res|` in rad·steps.
    pub abs: f64,
    /// Mean over steps and joints of the squared difference.
    pub mse: f64,
}

/// Compare two joint-angle series sampled on the same grid. Series of
/// different lengths are compared over their overlap.
pub fn angular_error<A: AsRef<[f64]>, B: AsRef<[f64]>>(upper: &[A], res: &[B]) -> Result<AngularError> {
    if upper.len() != res.len() {
        log::warn!(
            "angle series of lengths {} and {}; comparing the overlap",
            upper.len(),
            res.len()
        );
    }
    let n = upper.len().min(res.len());
    if n == 0 {
        return Err(Error::arg("no overlapping samples"));
    }
    let (mut abs, mut sq, mut count) = (0.0, 0.0, 0usize);
    for (u, r) in upper[..n].iter().zip(&res[..n]) {
        let (u, r) = (u.as_ref(), r.as_ref());
        if u.len() != r.len() {
            return Err(Error::shape("angle rows of different widths"));
        }
        for (a, b) in u.iter().zip(r) {
            let d = a - b;
            abs += d.abs();
            sq += d * d;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::arg("angle rows are empty"));
    }
    Ok(AngularError {
        abs,
        mse: sq / count as f64,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub iou: f64,
    pub angular_error_abs: f64,
    pub angular_error_mse: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population form (denominator N).
    pub std: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub runs: usize,
    pub iou: MeanStd,
    pub angular_error_abs: MeanStd,
    pub angular_error_mse: MeanStd,
}

pub fn mean_std(values: &[f64]) -> Result<MeanStd> {
    if values.is_empty() {
        return Err(Error::arg("cannot aggregate zero runs"));
    }
    // Welford's single-pass update.
    let (mut mean, mut m2) = (0.0, 0.0);
    for (i, v) in values.iter().enumerate() {
        let d = v - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (v - mean);
    }
    Ok(MeanStd {
        mean,
        std: (m2 / values.len() as f64).sqrt(),
    })
}

pub fn aggregate_runs(runs: &[Metrics]) -> Result<RunStats> {
    let col = |f: fn(&Metrics) -> f64| mean_std(&runs.iter().map(f).collect::<Vec<_>>());
    Ok(RunStats {
        runs: runs.len(),
        iou: col(|m| m.iou)?,
        angular_error_abs: col(|m| m.angular_error_abs)?,
        angular_error_mse: col(|m| m.angular_error_mse)?,
    })
}
