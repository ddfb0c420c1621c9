//! Iterative least squares for the ADMM y-update.
//!
//! The y-subproblem solves (L^T L + I) y = L^T top + bottom, which is the
//! normal equation of the stacked least-squares problem
//! min_y ||[L; I] y - [top; bottom]||. The stacked matrix always has full
//! column rank and condition number sqrt(lambda_max(L^T L) + 1), tiny for
//! the normalized Laplacians built here, so a short Golub-Kahan
//! bidiagonalization recurrence suffices.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Default relative normal-equation tolerance for inner solves.
pub const LSQR_TOL: f64 = 1e-8;
/// Default inner iteration cap.
pub const LSQR_MAX_ITER: usize = 200;

/// Convergence report of one solve.
///
/// `relative_residual` is ||Lhat^T (Lhat y - v)|| / ||Lhat^T v|| for the
/// stacked system, recomputed from the returned iterate; `converged`
/// implies it is at or below the requested tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsqrReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

struct Stacked<'a> {
    l: &'a SparseMatrix,
}

impl Stacked<'_> {
    /// [L; I] v, the top block into `top`, the bottom block into `bottom`.
    fn apply(&self, v: &[f64], top: &mut [f64], bottom: &mut [f64]) {
        self.l.matvec_into(v, top);
        bottom.copy_from_slice(v);
    }

    /// [L; I]^T [top; bottom] = L^T top + bottom.
    fn apply_transpose(&self, top: &[f64], bottom: &[f64]) -> Vec<f64> {
        let mut out = bottom.to_vec();
        self.l.matvec_transpose_add(top, &mut out);
        out
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Solves min_y ||[L; I] y - [top_rhs; bottom_rhs]|| by LSQR.
///
/// With a warm start w the recurrence runs on the shifted problem for the
/// correction e = y - w and adds w back, so a warm start near the solution
/// converges in a handful of iterations. Hitting `max_iter` is not an
/// error: the best iterate is returned with `converged = false` and the
/// caller decides.
pub fn lsqr_solve(
    l: &SparseMatrix,
    top_rhs: &[f64],
    bottom_rhs: &[f64],
    tol: f64,
    max_iter: usize,
    warm_start: Option<&[f64]>,
) -> Result<(Vec<f64>, LsqrReport)> {
    let rows = l.n_rows();
    let cols = l.n_cols();
    if top_rhs.len() != rows || bottom_rhs.len() != cols {
        return Err(Error::Config(format!(
            "lsqr_solve: operator is {rows}x{cols} but rhs blocks have {} and {} entries",
            top_rhs.len(),
            bottom_rhs.len()
        )));
    }
    if let Some(w) = warm_start {
        if w.len() != cols {
            return Err(Error::Config(format!(
                "lsqr_solve: warm start has {} entries, expected {cols}",
                w.len()
            )));
        }
    }
    if !(tol > 0.0) {
        return Err(Error::Config(format!(
            "lsqr_solve: tolerance must be positive, got {tol}"
        )));
    }
    let op = Stacked { l };

    // Stopping is measured against the original system so a warm start
    // already at the solution is recognized instead of being chased to
    // full relative precision on its own tiny correction problem.
    let norm_atb = norm(&op.apply_transpose(top_rhs, bottom_rhs));

    // Shifted right-hand side for the correction problem.
    let mut u_top = top_rhs.to_vec();
    let mut u_bottom = bottom_rhs.to_vec();
    if let Some(w) = warm_start {
        let mut lw = vec![0.0; rows];
        l.matvec_into(w, &mut lw);
        for (t, lwi) in u_top.iter_mut().zip(&lw) {
            *t -= lwi;
        }
        for (b, wi) in u_bottom.iter_mut().zip(w) {
            *b -= wi;
        }
    }

    let mut x = vec![0.0; cols];
    let mut iterations = 0;

    let beta1 = (norm(&u_top).powi(2) + norm(&u_bottom).powi(2)).sqrt();
    if beta1 > 0.0 {
        let inv = 1.0 / beta1;
        u_top.iter_mut().for_each(|v| *v *= inv);
        u_bottom.iter_mut().for_each(|v| *v *= inv);

        let mut v = op.apply_transpose(&u_top, &u_bottom);
        let mut alpha = norm(&v);
        // alpha * beta1 is exactly ||A^T rhs_shifted||; when it is already
        // below the stopping threshold the zero correction is good enough.
        if alpha > 0.0 && alpha * beta1 > tol * norm_atb {
            let inv = 1.0 / alpha;
            v.iter_mut().for_each(|x| *x *= inv);

            let mut w_dir = v.clone();
            let mut phibar = beta1;
            let mut rhobar = alpha;
            let mut scratch_top = vec![0.0; rows];
            let mut scratch_bottom = vec![0.0; cols];

            for _ in 0..max_iter {
                iterations += 1;

                // u = A v - alpha u, beta = ||u||.
                op.apply(&v, &mut scratch_top, &mut scratch_bottom);
                for (ui, si) in u_top.iter_mut().zip(&scratch_top) {
                    *ui = si - alpha * *ui;
                }
                for (ui, si) in u_bottom.iter_mut().zip(&scratch_bottom) {
                    *ui = si - alpha * *ui;
                }
                let beta = (norm(&u_top).powi(2) + norm(&u_bottom).powi(2)).sqrt();
                if beta > 0.0 {
                    let inv = 1.0 / beta;
                    u_top.iter_mut().for_each(|x| *x *= inv);
                    u_bottom.iter_mut().for_each(|x| *x *= inv);
                }

                // v = A^T u - beta v, alpha = ||v||.
                let av = op.apply_transpose(&u_top, &u_bottom);
                for (vi, ai) in v.iter_mut().zip(&av) {
                    *vi = ai - beta * *vi;
                }
                alpha = norm(&v);
                if alpha > 0.0 {
                    let inv = 1.0 / alpha;
                    v.iter_mut().for_each(|x| *x *= inv);
                }

                // Givens rotation updating the QR factors of the bidiagonal
                // system.
                let rho = rhobar.hypot(beta);
                let c = rhobar / rho;
                let s = beta / rho;
                let theta = s * alpha;
                rhobar = -c * alpha;
                let phi = c * phibar;
                phibar *= s;

                axpy(phi / rho, &w_dir, &mut x);
                let scale = theta / rho;
                for (wi, vi) in w_dir.iter_mut().zip(&v) {
                    *wi = vi - scale * *wi;
                }

                // ||A^T r_k|| = phibar * alpha * |c| in exact arithmetic.
                let normal_residual = phibar * alpha * c.abs();
                if normal_residual <= tol * norm_atb || alpha == 0.0 || beta == 0.0 {
                    break;
                }
            }
        }
    }

    if let Some(w) = warm_start {
        for (xi, wi) in x.iter_mut().zip(w) {
            *xi += wi;
        }
    }

    // True normal-equation residual of the returned iterate, on the
    // original (unshifted) system.
    let mut top = vec![0.0; rows];
    l.matvec_into(&x, &mut top);
    for (t, r) in top.iter_mut().zip(top_rhs) {
        *t -= r;
    }
    let bottom: Vec<f64> = x.iter().zip(bottom_rhs).map(|(a, b)| a - b).collect();
    let normal = op.apply_transpose(&top, &bottom);
    let denom = norm(&op.apply_transpose(top_rhs, bottom_rhs));
    let relative_residual = if denom > 0.0 {
        norm(&normal) / denom
    } else if norm(&normal) == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let report = LsqrReport {
        iterations,
        relative_residual,
        converged: relative_residual <= tol,
    };
    Ok((x, report))
}
