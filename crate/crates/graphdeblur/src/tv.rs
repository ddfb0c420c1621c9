//! Periodic first-difference operators.
//!
//! The stacked operator L_TV = [L1 (x) I; I (x) L1] pairs two BCCB blocks:
//! differences along the first pixel index and along the second. Both blocks
//! share the one-dimensional difference stencil with -1 on the diagonal,
//! +1 on the superdiagonal, and +1 in the bottom-left corner, so each block
//! spectrum is a replication of the circle lambda_k = e^(-2 pi i k / n) - 1.

use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::image::{lex_index, Image};
use crate::sparse::SparseMatrix;
use crate::spectral::Spectrum;

/// Spectra of the two first-difference blocks on an n x n periodic grid.
///
/// `lambda_x` describes the block acting along the first (row) index,
/// `lambda_y` the block acting along the second. Both vanish exactly at the
/// zero frequency and nowhere else, and every eigenvalue has modulus at
/// most 2. Solvers consume only the squared moduli, which are insensitive
/// to the conjugation convention fixed here.
#[derive(Debug, Clone)]
pub struct TvOperator {
    n: usize,
    lambda_x: Spectrum,
    lambda_y: Spectrum,
}

impl TvOperator {
    #[inline]
    pub fn side(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn lambda_x(&self) -> &Spectrum {
        &self.lambda_x
    }

    #[inline]
    pub fn lambda_y(&self) -> &Spectrum {
        &self.lambda_y
    }

    /// Per-frequency penalty symbol |lambda_x|^2 + |lambda_y|^2.
    pub fn penalty_symbol(&self) -> Vec<f64> {
        self.lambda_x
            .values()
            .iter()
            .zip(self.lambda_y.values())
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .collect()
    }
}

/// One-dimensional difference spectrum lambda_k = e^(-2 pi i k / n) - 1.
fn lambda_1d(n: usize) -> Vec<Complex<f64>> {
    (0..n)
        .map(|k| {
            Complex::from_polar(1.0, -2.0 * std::f64::consts::PI * k as f64 / n as f64)
                - Complex::new(1.0, 0.0)
        })
        .collect()
}

/// Builds the two difference-block spectra for an n x n grid.
pub fn build_tv(n: usize) -> Result<TvOperator> {
    if n < 2 {
        return Err(Error::Config(format!(
            "difference operator needs side >= 2, got {n}"
        )));
    }
    let lambda = lambda_1d(n);
    let mut vx = vec![Complex::new(0.0, 0.0); n * n];
    let mut vy = vec![Complex::new(0.0, 0.0); n * n];
    for k1 in 0..n {
        for k2 in 0..n {
            let idx = lex_index(k1, k2, n);
            vx[idx] = lambda[k1];
            vy[idx] = lambda[k2];
        }
    }
    Ok(TvOperator {
        n,
        lambda_x: Spectrum::new(n, vx)?,
        lambda_y: Spectrum::new(n, vy)?,
    })
}

/// Applies the stacked difference operator explicitly in O(N).
///
/// The first N output entries hold the periodic forward differences along
/// the first pixel index, the last N those along the second, matching the
/// dense Kronecker construction of the stacked matrix.
pub fn tv_apply(op: &TvOperator, x: &Image) -> Result<Vec<f64>> {
    let n = op.side();
    if x.side() != n {
        return Err(Error::Config(format!(
            "tv_apply: operator side {n} does not match image side {}",
            x.side()
        )));
    }
    let big_n = n * n;
    let mut out = vec![0.0; 2 * big_n];
    for i1 in 0..n {
        let next1 = (i1 + 1) % n;
        for i2 in 0..n {
            let next2 = (i2 + 1) % n;
            let here = x.get(i1, i2);
            out[lex_index(i1, i2, n)] = x.get(next1, i2) - here;
            out[big_n + lex_index(i1, i2, n)] = x.get(i1, next2) - here;
        }
    }
    Ok(out)
}

/// The stacked difference operator as an explicit 2N x N sparse matrix,
/// rows ordered like `tv_apply` output.
pub fn tv_sparse_matrix(n: usize) -> Result<SparseMatrix> {
    if n < 2 {
        return Err(Error::Config(format!(
            "difference operator needs side >= 2, got {n}"
        )));
    }
    let big_n = n * n;
    let mut row_ptr = Vec::with_capacity(2 * big_n + 1);
    let mut col_idx = Vec::with_capacity(4 * big_n);
    let mut values = Vec::with_capacity(4 * big_n);
    row_ptr.push(0);
    let mut push_row = |a: usize, b: usize| {
        let (first, second) = if a < b { (a, b) } else { (b, a) };
        let (va, vb) = if first == a { (-1.0, 1.0) } else { (1.0, -1.0) };
        col_idx.push(first);
        values.push(va);
        col_idx.push(second);
        values.push(vb);
        row_ptr.push(col_idx.len());
    };
    for i1 in 0..n {
        for i2 in 0..n {
            push_row(lex_index(i1, i2, n), lex_index((i1 + 1) % n, i2, n));
        }
    }
    for i1 in 0..n {
        for i2 in 0..n {
            push_row(lex_index(i1, i2, n), lex_index(i1, (i2 + 1) % n, n));
        }
    }
    Ok(SparseMatrix::from_csr(
        2 * big_n,
        big_n,
        row_ptr,
        col_idx,
        values,
        false,
    ))
}
