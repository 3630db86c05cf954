use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Dense row-major matrix of `f64`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{rows}×{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Borrowed row-major operand, optionally used transposed.
#[derive(Clone, Copy)]
pub(crate) struct Operand<'a> {
    pub data: &'a [f64],
    pub rows: usize,
    pub cols: usize,
    pub trans: bool,
}

impl<'a> Operand<'a> {
    pub fn new(data: &'a [f64], rows: usize, cols: usize) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Operand {
            data,
            rows,
            cols,
            trans: false,
        }
    }

    pub fn mat(m: &'a Mat) -> Self {
        Self::new(&m.data, m.rows, m.cols)
    }

    pub fn t(self) -> Self {
        Operand {
            trans: !self.trans,
            ..self
        }
    }

    /// Shape of `op(self)`.
    fn shape(&self) -> (usize, usize) {
        if self.trans {
            (self.cols, self.rows)
        } else {
            (self.rows, self.cols)
        }
    }

    /// Row and column strides of `op(self)`.
    fn strides(&self) -> (isize, isize) {
        if self.trans {
            (1, self.cols as isize)
        } else {
            (self.cols as isize, 1)
        }
    }
}

/// `c ← alpha·op(a)·op(b) + beta·c` with `c` row-major `m × n`.
///
/// Panics on inconsistent shapes; callers validate at the API boundary.
pub(crate) fn gemm(alpha: f64, a: Operand<'_>, b: Operand<'_>, beta: f64, c: &mut [f64]) {
    let (m, k) = a.shape();
    let (kb, n) = b.shape();
    assert_eq!(k, kb, "gemm inner dimensions differ");
    assert_eq!(c.len(), m * n, "gemm output has wrong size");
    assert!(a.data.len() >= a.rows * a.cols && b.data.len() >= b.rows * b.cols);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.iter_mut().for_each(|v| *v *= beta);
        return;
    }
    backend::dgemm(m, k, n, alpha, a, b, beta, c);
}

mod backend {
    use super::Operand;

    #[allow(clippy::too_many_arguments)]
    pub(super) fn dgemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: f64,
        a: Operand<'_>,
        b: Operand<'_>,
        beta: f64,
        c: &mut [f64],
    ) {
        let (rsa, csa) = a.strides();
        let (rsb, csb) = b.strides();
        // SAFETY: `gemm` checked shapes and buffer lengths; the strides
        // describe row-major (or transposed row-major) layouts inside those
        // buffers, and `c` is a distinct mutable borrow.
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                alpha,
                a.data.as_ptr(),
                rsa,
                csa,
                b.data.as_ptr(),
                rsb,
                csb,
                beta,
                c.as_mut_ptr(),
                n as isize,
                1,
            );
        }
    }
}
