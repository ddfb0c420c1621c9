//! Image deblurring with an image-adaptive graph-Laplacian regularizer.
//!
//! The pipeline restores a blurred, noisy image `b` by solving the
//! nonnegativity-constrained problem
//!
//! ```text
//! min_x  1/2 ||A x - b||^2 + mu ||L x||_1   subject to  x >= 0,
//! ```
//!
//! where `A` is a periodic convolution operator ([`spectral`]) and `L` is a
//! graph Laplacian whose weights are learned from the image itself:
//!
//! 1. a cheap Tikhonov reconstruction with a total-variation-like penalty is
//!    computed, with the regularization weight picked automatically by
//!    generalized cross validation ([`gcv`]);
//! 2. pixel similarities of that reference image define a sparse weighted
//!    graph whose normalized Laplacian becomes the regularizer ([`graph`]);
//! 3. the constrained problem is solved by an alternating-direction method
//!    whose only inner iteration is a warm-started LSQR solve ([`admm`]).
//!
//! [`metrics`] implements the usual quality statistics (RRE, PSNR, SSIM),
//! [`noise`] provides deterministic seeded Gaussian noise, [`io`] the file
//! formats, and [`harness`] the batch experiment pipelines behind the
//! `graphdeblur` command-line tool.

pub mod admm;
pub mod error;
pub mod gcv;
pub mod graph;
pub mod harness;
pub mod image;
pub mod io;
pub mod lsqr;
pub mod metrics;
pub mod noise;
pub mod objective;
pub mod sparse;
pub mod spectral;
pub mod tv;

#[cfg(test)]
pub(crate) mod testutil;

pub use admm::{
    admm_deblur, project_nonneg, run_method, soft_threshold, AdmmConfig, AdmmState, AdmmTrace,
    Method, MethodRun,
};
pub use error::{Error, Result};
pub use gcv::{compute_reference, gcv_minimize, gcv_value, GcvResult};
pub use graph::{
    build_adjacency, build_laplacian, build_oracle_laplacian, laplacian_apply, GraphConfig,
};
pub use harness::{
    cmd_blur, cmd_deblur, cmd_graph, cmd_sweep_mu, read_image_auto, thread_cap, ExperimentConfig,
    PsfSpec, ResolvedParams,
};
pub use image::{lex_index, lex_unindex, Image, Psf};
pub use io::{read_glf, read_matrix_market, read_pgm, write_glf, write_matrix_market, write_pgm};
pub use lsqr::{lsqr_solve, LsqrReport, LSQR_MAX_ITER, LSQR_TOL};
pub use metrics::{psnr, rre, ssim, MetricsReport};
pub use noise::{add_noise, standard_normal_vec, GENERATOR_ID};
pub use objective::{evaluate_objective, Objective};
pub use sparse::SparseMatrix;
pub use spectral::{
    bccb_apply, bccb_apply_adjoint, bccb_solve_filtered, fft2, psf_to_spectrum, Spectrum,
};
pub use tv::{build_tv, tv_apply, tv_sparse_matrix, TvOperator};
