//! Preprocessing steps from 2 ms episodes to 20 ms network sequences.

use crate::error::{Error, Result};
use crate::seed;
use rand_distr::{Distribution, Normal};

/// Pole of the exact first-order discretization.
pub fn lpf_alpha(cutoff: f64, dt: f64) -> f64 {
    (-cutoff * dt).exp()
}

/// First-order low-pass `y_k = α·y_{k−1} + (1−α)·x_k`, `y_0 = x_0`.
pub fn lowpass_filter(series: &[f64], cutoff: f64, dt: f64) -> Result<Vec<f64>> {
    let Some(&first) = series.first() else {
        return Err(Error::arg("cannot filter an empty series"));
    };
    let a = lpf_alpha(cutoff, dt);
    let mut y = first;
    Ok(series
        .iter()
        .map(|&x| {
            y = a * y + (1.0 - a) * x;
            y
        })
        .collect())
}

/// Low-pass every column of a row series.
pub fn lowpass_rows<const W: usize>(rows: &[[f64; W]], cutoff: f64, dt: f64) -> Result<Vec<[f64; W]>> {
    let Some(&first) = rows.first() else {
        return Err(Error::arg("cannot filter an empty series"));
    };
    let a = lpf_alpha(cutoff, dt);
    let mut y = first;
    Ok(rows
        .iter()
        .map(|x| {
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi = a * *yi + (1.0 - a) * xi;
            }
            y
        })
        .collect())
}

/// Split a series into `factor` decimated copies; copy `o` takes indices
/// `o, o + factor, o + 2·factor, …`.
pub fn downsample_shift<T: Clone>(series: &[T], factor: usize) -> Result<Vec<Vec<T>>> {
    if factor == 0 {
        return Err(Error::arg("downsampling factor must be positive"));
    }
    if series.len() < factor {
        return Err(Error::arg(format!(
            "series of length {} is shorter than the factor {factor}",
            series.len()
        )));
    }
    Ok((0..factor)
        .map(|o| series.iter().skip(o).step_by(factor).cloned().collect())
        .collect())
}

/// Add i.i.d. `N(0, variance)` noise drawn from a stream seeded by `seed`.
pub fn add_noise(inputs: &[f64], variance: f64, seed: u64) -> Result<Vec<f64>> {
    if !(variance >= 0.0 && variance.is_finite()) {
        return Err(Error::arg(format!("noise variance must be non-negative, got {variance}")));
    }
    if variance == 0.0 {
        return Ok(inputs.to_vec());
    }
    let normal = Normal::new(0.0, variance.sqrt()).map_err(|e| Error::arg(e.to_string()))?;
    let mut rng = seed::rng(seed);
    Ok(inputs.iter().map(|x| x + normal.sample(&mut rng)).collect())
}

/// Extend every sequence to the longest length by repeating its last sample.
pub fn pad_sequences<T: Clone>(seqs: &mut [Vec<T>]) -> Result<usize> {
    let max = seqs.iter().map(Vec::len).max().unwrap_or(0);
    for s in seqs.iter_mut() {
        let last = s.last().cloned().ok_or_else(|| Error::arg("cannot pad an empty sequence"))?;
        s.resize(max, last);
    }
    Ok(max)
}
