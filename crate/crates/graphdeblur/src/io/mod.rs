//! File formats: PGM images for interchange, the lossless GLF1 float image
//! format for pipeline intermediates, and Matrix Market for sparse
//! operators.

pub mod glf;
pub mod matrix_market;
pub mod pgm;

pub use glf::{read_glf, write_glf};
pub use matrix_market::{read_matrix_market, write_matrix_market};
pub use pgm::{read_pgm, write_pgm};
