//! ADMM solver for the constrained deblurring model
//! min_x 1/2 ||A x - b||^2 + mu ||L x||_1 subject to x >= 0.
//!
//! The splitting introduces y (coupled to x), z = L y, and w = x restricted
//! to the nonnegative cone. Every subproblem has a closed form except the
//! y-update, which is a well-conditioned stacked least-squares problem
//! handled by LSQR with warm starts.

use std::fmt;
use std::str::FromStr;

use rustfft::num_complex::Complex;

use crate::error::{Error, Result};
use crate::gcv::{compute_reference, GcvResult};
use crate::graph::{build_adjacency, build_laplacian, build_oracle_laplacian, GraphConfig};
use crate::image::{Image, Psf};
use crate::lsqr::{lsqr_solve, LSQR_MAX_ITER, LSQR_TOL};
use crate::sparse::SparseMatrix;
use crate::spectral::{fft2, fft2_inplace, ifft2_real, psf_to_spectrum, Spectrum};
use crate::tv::tv_sparse_matrix;

/// Iterate growth beyond this multiple of ||b|| aborts the run.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

/// Solver parameters. `rho`, `tau`, and `max_iter` default to the reference
/// setting (0.1, 1e-4, 3000); `mu` is problem-specific and always explicit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmConfig {
    pub rho: f64,
    pub tau: f64,
    pub max_iter: usize,
    pub mu: f64,
}

impl AdmmConfig {
    /// Default parameters with the given regularization weight.
    pub fn new(mu: f64) -> Self {
        AdmmConfig {
            rho: 0.1,
            tau: 1e-4,
            max_iter: 3000,
            mu,
        }
    }

    /// Validates rho > 0, tau >= 0, max_iter >= 1, mu > 0. A zero tau
    /// disables the relative-change stop so the run always reaches
    /// `max_iter`.
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::Config(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(Error::Config(format!(
                "tau must be nonnegative, got {}",
                self.tau
            )));
        }
        if self.max_iter < 1 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::Config(format!("mu must be positive, got {}", self.mu)));
        }
        Ok(())
    }
}

/// One solver's iterate vectors. `z` and `lambda2` live in the regularizer's
/// row space; everything else is pixel-sized.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
    pub z: Vec<f64>,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub lambda3: Vec<f64>,
    pub k: usize,
}

impl AdmmState {
    fn start(pixels: usize, reg_rows: usize) -> Self {
        AdmmState {
            x: vec![0.0; pixels],
            y: vec![0.0; pixels],
            w: vec![0.0; pixels],
            z: vec![0.0; reg_rows],
            lambda1: vec![0.0; pixels],
            lambda2: vec![0.0; reg_rows],
            lambda3: vec![0.0; pixels],
            k: 0,
        }
    }

    fn all_finite(&self) -> bool {
        [
            &self.x,
            &self.y,
            &self.w,
            &self.z,
            &self.lambda1,
            &self.lambda2,
            &self.lambda3,
        ]
        .iter()
        .all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Per-iteration diagnostics: coupling residuals, objective value, and the
/// relative change of x. All five series have one entry per completed
/// iteration; `inner_warnings` lists iterations whose LSQR solve stopped at
/// its iteration cap.
#[derive(Debug, Clone, Default)]
pub struct AdmmTrace {
    pub res_xy: Vec<f64>,
    pub res_zly: Vec<f64>,
    pub res_xw: Vec<f64>,
    pub objective: Vec<f64>,
    pub rel_change: Vec<f64>,
    pub inner_warnings: Vec<usize>,
}

impl AdmmTrace {
    pub fn len(&self) -> usize {
        self.objective.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objective.is_empty()
    }

    /// CSV rendering with header `k,res_xy,res_zLy,res_xw,objective,relchange`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,res_xy,res_zLy,res_xw,objective,relchange\n");
        for i in 0..self.len() {
            out.push_str(&format!(
                "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                i + 1,
                self.res_xy[i],
                self.res_zly[i],
                self.res_xw[i],
                self.objective[i],
                self.rel_change[i],
            ));
        }
        out
    }
}

/// Elementwise soft thresholding sign(v) max(|v| - theta, 0), the proximal
/// operator of theta ||.||_1.
pub fn soft_threshold(v: &[f64], theta: f64) -> Vec<f64> {
    debug_assert!(theta >= 0.0);
    v.iter()
        .map(|&x| x.signum() * (x.abs() - theta).max(0.0))
        .collect()
}

/// Metric projection onto the nonnegative cone.
pub fn project_nonneg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&x| x.max(0.0)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Closed-form x-update: solves (A^T A + 2 rho I) x = A^T b + pixel_rhs by
/// per-frequency division. Returns the new x and the fidelity
/// 1/2 ||A x - b||^2 evaluated in the frequency domain.
fn x_update(
    sigma: &Spectrum,
    denom: &[f64],
    atb_hat: &[Complex<f64>],
    b_hat: &[Complex<f64>],
    pixel_rhs: &[f64],
    n: usize,
) -> Result<(Vec<f64>, f64)> {
    let mut x_hat: Vec<Complex<f64>> =
        pixel_rhs.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft2_inplace(&mut x_hat, n, true);
    for (k, v) in x_hat.iter_mut().enumerate() {
        *v = (*v + atb_hat[k]) / denom[k];
    }
    let big_n = (n * n) as f64;
    let mut residual2 = 0.0;
    let mut x_hat_norm2 = 0.0;
    for (k, v) in x_hat.iter().enumerate() {
        residual2 += (sigma.values()[k] * v - b_hat[k]).norm_sqr();
        x_hat_norm2 += v.norm_sqr();
    }
    let fidelity = 0.5 * residual2 / big_n;
    let x = ifft2_real(x_hat, n, x_hat_norm2.sqrt() / n as f64, "admm x-update")?;
    Ok((x, fidelity))
}

/// Runs the full splitting iteration and returns the final image projected
/// onto the nonnegative cone, along with the per-iteration trace.
///
/// The update order per iteration is: x (spectral closed form), z (soft
/// thresholding at the previous y), y (warm-started LSQR on the stacked
/// system), w (cone projection), then the three multiplier steps. The loop
/// stops once at least two iterations have completed and
/// ||x_new - x_old|| <= tau ||x_old||, or at `max_iter`.
pub fn admm_deblur(
    sigma_a: &Spectrum,
    l: &SparseMatrix,
    b_delta: &Image,
    cfg: &AdmmConfig,
) -> Result<(Image, AdmmTrace)> {
    cfg.validate()?;
    let n = b_delta.side();
    let big_n = n * n;
    if sigma_a.side() != n {
        return Err(Error::Config(format!(
            "admm: spectrum side {} does not match image side {n}",
            sigma_a.side()
        )));
    }
    if l.n_cols() != big_n {
        return Err(Error::Config(format!(
            "admm: regularizer has {} columns but the image has {big_n} pixels",
            l.n_cols()
        )));
    }
    let rho = cfg.rho;
    let theta = cfg.mu / rho;
    let b_norm = b_delta.norm();

    let b_hat = fft2(b_delta.data(), n)?;
    let atb_hat: Vec<Complex<f64>> = sigma_a
        .values()
        .iter()
        .zip(&b_hat)
        .map(|(s, b)| s.conj() * b)
        .collect();
    let denom: Vec<f64> = sigma_a
        .values()
        .iter()
        .map(|s| s.norm_sqr() + 2.0 * rho)
        .collect();

    let mut state = AdmmState::start(big_n, l.n_rows());
    let mut trace = AdmmTrace::default();
    let mut ly = vec![0.0; l.n_rows()];
    let mut x_prev: Option<Vec<f64>> = None;

    for k in 1..=cfg.max_iter {
        state.k = k;

        let pixel_rhs: Vec<f64> = (0..big_n)
            .map(|i| {
                rho * state.y[i] - state.lambda1[i] + rho * state.w[i] - state.lambda3[i]
            })
            .collect();
        let (x, fidelity) = x_update(sigma_a, &denom, &atb_hat, &b_hat, &pixel_rhs, n)?;
        state.x = x;

        let v: Vec<f64> = ly
            .iter()
            .zip(&state.lambda2)
            .map(|(l, lam)| l - lam / rho)
            .collect();
        state.z = soft_threshold(&v, theta);

        let top_rhs: Vec<f64> = state
            .z
            .iter()
            .zip(&state.lambda2)
            .map(|(z, lam)| z + lam / rho)
            .collect();
        let bottom_rhs: Vec<f64> = state
            .x
            .iter()
            .zip(&state.lambda1)
            .map(|(x, lam)| x + lam / rho)
            .collect();
        let (y, inner) = lsqr_solve(
            l,
            &top_rhs,
            &bottom_rhs,
            LSQR_TOL,
            LSQR_MAX_ITER,
            Some(&state.y),
        )?;
        if !inner.converged {
            log::warn!(
                "inner LSQR stalled at iteration {k}: relative residual {:.3e} after {} steps",
                inner.relative_residual,
                inner.iterations
            );
            trace.inner_warnings.push(k);
        }
        state.y = y;
        l.matvec_into(&state.y, &mut ly);

        let w_arg: Vec<f64> = state
            .x
            .iter()
            .zip(&state.lambda3)
            .map(|(x, lam)| x + lam / rho)
            .collect();
        state.w = project_nonneg(&w_arg);

        for i in 0..big_n {
            state.lambda1[i] += rho * (state.x[i] - state.y[i]);
            state.lambda3[i] += rho * (state.x[i] - state.w[i]);
        }
        for (i, lam) in state.lambda2.iter_mut().enumerate() {
            *lam += rho * (state.z[i] - ly[i]);
        }

        let objective = fidelity + cfg.mu * state.z.iter().map(|v| v.abs()).sum::<f64>();
        trace.res_xy.push(diff_norm(&state.x, &state.y));
        trace
            .res_zly
            .push(diff_norm(&state.z, &ly));
        trace.res_xw.push(diff_norm(&state.x, &state.w));
        trace.objective.push(objective);

        let (rel_change, change, prev_norm) = match &x_prev {
            Some(prev) => {
                let change = diff_norm(&state.x, prev);
                let prev_norm = norm(prev);
                let rel = if prev_norm > 0.0 {
                    change / prev_norm
                } else if change == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                (rel, change, prev_norm)
            }
            None => (f64::INFINITY, f64::INFINITY, 0.0),
        };
        trace.rel_change.push(rel_change);

        if !state.all_finite() {
            return Err(Error::Divergence {
                iteration: k,
                detail: "non-finite value in an iterate or multiplier".into(),
            });
        }
        let x_norm = norm(&state.x);
        if x_norm > DIVERGENCE_FACTOR * b_norm {
            return Err(Error::Divergence {
                iteration: k,
                detail: format!(
                    "iterate norm {x_norm:.3e} exceeds {DIVERGENCE_FACTOR:.0e} x ||b|| = {:.3e}",
                    DIVERGENCE_FACTOR * b_norm
                ),
            });
        }

        let stop = x_prev.is_some() && change <= cfg.tau * prev_norm;
        x_prev = Some(state.x.clone());
        if stop {
            break;
        }
    }

    let image = Image::new(n, project_nonneg(&state.x))?;
    Ok((image, trace))
}

/// Deblurring method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Tikhonov reference reconstruction with GCV-selected weight.
    Tikhonov,
    /// ADMM with the stacked difference operator as regularizer.
    TvL1,
    /// ADMM with the graph Laplacian built from the Tikhonov reference.
    Graph,
    /// ADMM with the graph Laplacian built from the exact image.
    GraphOracle,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Tikhonov,
        Method::TvL1,
        Method::Graph,
        Method::GraphOracle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Tikhonov => "tikhonov",
            Method::TvL1 => "tv_l1",
            Method::Graph => "graph",
            Method::GraphOracle => "graph_oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tikhonov" => Ok(Method::Tikhonov),
            "tv_l1" => Ok(Method::TvL1),
            "graph" => Ok(Method::Graph),
            "graph_oracle" => Ok(Method::GraphOracle),
            other => Err(Error::Config(format!(
                "unknown method '{other}'; expected tikhonov, tv_l1, graph, or graph_oracle"
            ))),
        }
    }
}

/// Everything a method run produces: the reconstruction, the ADMM trace for
/// iterative methods, and the reference-solver outcome for methods that
/// compute one.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub image: Image,
    pub trace: Option<AdmmTrace>,
    pub reference: Option<GcvResult>,
}

/// Dispatches a full reconstruction.
///
/// `tikhonov` returns the unclamped reference image (the same vector the
/// graph pipeline consumes). The three ADMM methods differ only in the
/// regularizer: the explicit stacked difference matrix for `tv_l1`, the
/// graph Laplacian of the reference image for `graph`, and the graph
/// Laplacian of `x_true` for `graph_oracle`.
pub fn run_method(
    method: Method,
    psf: &Psf,
    b_delta: &Image,
    admm: Option<&AdmmConfig>,
    graph: Option<&GraphConfig>,
    x_true: Option<&Image>,
) -> Result<MethodRun> {
    let n = b_delta.side();
    let need_admm = || -> Result<&AdmmConfig> {
        admm.ok_or_else(|| {
            Error::Config(format!("method {method} needs ADMM parameters, including mu"))
        })
    };
    let need_graph = || -> Result<&GraphConfig> {
        graph.ok_or_else(|| Error::Config(format!("method {method} needs graph parameters")))
    };
    match method {
        Method::Tikhonov => {
            let reference = compute_reference(psf, b_delta)?;
            Ok(MethodRun {
                image: reference.x_star.clone(),
                trace: None,
                reference: Some(reference),
            })
        }
        Method::TvL1 => {
            let cfg = need_admm()?;
            let sigma = psf_to_spectrum(psf, n)?;
            let l = tv_sparse_matrix(n)?;
            let (image, trace) = admm_deblur(&sigma, &l, b_delta, cfg)?;
            Ok(MethodRun {
                image,
                trace: Some(trace),
                reference: None,
            })
        }
        Method::Graph => {
            let cfg = need_admm()?;
            let gcfg = need_graph()?;
            let reference = compute_reference(psf, b_delta)?;
            let l = build_laplacian(&build_adjacency(&reference.x_star, gcfg)?)?;
            let sigma = psf_to_spectrum(psf, n)?;
            let (image, trace) = admm_deblur(&sigma, &l, b_delta, cfg)?;
            Ok(MethodRun {
                image,
                trace: Some(trace),
                reference: Some(reference),
            })
        }
        Method::GraphOracle => {
            let cfg = need_admm()?;
            let gcfg = need_graph()?;
            let truth = x_true.ok_or_else(|| {
                Error::Config("method graph_oracle needs the ground-truth image".into())
            })?;
            if truth.side() != n {
                return Err(Error::Config(format!(
                    "ground truth side {} does not match data side {n}",
                    truth.side()
                )));
            }
            let l = build_oracle_laplacian(truth, gcfg)?;
            let sigma = psf_to_spectrum(psf, n)?;
            let (image, trace) = admm_deblur(&sigma, &l, b_delta, cfg)?;
            Ok(MethodRun {
                image,
                trace: Some(trace),
                reference: None,
            })
        }
    }
}
