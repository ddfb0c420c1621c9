//! Objective evaluation for the constrained deblurring model
//! min 1/2 ||A x - b||^2 + mu ||L x||_1 subject to x >= 0.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::sparse::SparseMatrix;
use crate::spectral::{bccb_apply, Spectrum};

/// Value of the deblurring objective split into its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    /// 1/2 ||A x - b||^2.
    pub fidelity: f64,
    /// mu ||L x||_1.
    pub penalty: f64,
    /// fidelity + penalty.
    pub total: f64,
    /// max(0, -min(x)): how far x sits outside the nonnegative cone.
    pub feasibility_gap: f64,
}

/// Evaluates the objective at `x` for blur spectrum `spectrum_a`,
/// regularizer `l` (square Laplacian or stacked difference operator), data
/// `b_delta`, and weight `mu`.
pub fn evaluate_objective(
    spectrum_a: &Spectrum,
    l: &SparseMatrix,
    x: &Image,
    b_delta: &Image,
    mu: f64,
) -> Result<Objective> {
    if x.side() != b_delta.side() {
        return Err(Error::Config(format!(
            "objective: image side {} does not match data side {}",
            x.side(),
            b_delta.side()
        )));
    }
    if l.n_cols() != x.len() {
        return Err(Error::Config(format!(
            "objective: regularizer has {} columns but image has {} pixels",
            l.n_cols(),
            x.len()
        )));
    }
    if !(mu > 0.0) {
        return Err(Error::Config(format!(
            "objective: mu must be positive, got {mu}"
        )));
    }
    let ax = bccb_apply(spectrum_a, x)?;
    let fidelity = 0.5
        * ax.data()
            .iter()
            .zip(b_delta.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    let lx = l.matvec(x.data());
    let penalty = mu * lx.iter().map(|v| v.abs()).sum::<f64>();
    let feasibility_gap = x.data().iter().fold(0.0f64, |acc, &v| acc.max(-v));
    Ok(Objective {
        fidelity,
        penalty,
        total: fidelity + penalty,
        feasibility_gap,
    })
}
