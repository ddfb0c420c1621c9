//! Shared fixtures and independent dense oracles for the integration and
//! acceptance suites. Everything here is deliberately FFT-free and
//! solver-free so it cannot share a bug with the code under test.

#![allow(dead_code)]

use graphdeblur::{Image, Psf, SparseMatrix};
use nalgebra::{DMatrix, DVector};

/// SplitMix64 output function; the test suites' only randomness source.
pub fn splitmix64(i: u64) -> u64 {
    let mut z = i.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic uniforms in (0, 1).
pub fn uniform_vec(seed: u64, len: usize) -> Vec<f64> {
    (0..len as u64)
        .map(|i| {
            let bits = splitmix64(seed.wrapping_mul(0x1000_0000_1B3).wrapping_add(i));
            ((bits >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
        })
        .collect()
}

/// Deterministic values in (-1, 1).
pub fn signed_vec(seed: u64, len: usize) -> Vec<f64> {
    uniform_vec(seed, len).into_iter().map(|u| 2.0 * u - 1.0).collect()
}

/// Random image with intensities in (0, 1).
pub fn random_image(seed: u64, n: usize) -> Image {
    Image::new(n, uniform_vec(seed, n * n)).expect("length matches")
}

/// Random normalized PSF with a dominant center weight, so the blur
/// operator stays well-conditioned and dense oracles keep full precision.
pub fn random_psf(seed: u64, size: usize) -> Psf {
    let mut data = uniform_vec(seed, size * size);
    let total: f64 = data.iter().sum();
    for v in &mut data {
        *v *= 0.3 / total;
    }
    let center = (size / 2) * size + size / 2;
    data[center] += 0.7;
    Psf::centered(size, size, data).expect("valid kernel")
}

/// The piecewise-constant phantom used throughout the experiments, defined
/// in 64 x 64 reference coordinates and rescaled to any side length:
/// background 0.1, a 0.85 rectangle, a 0.55 disk, and a 1.0 square.
pub fn phantom(n: usize) -> Image {
    let s = 64.0 / n as f64;
    let mut img = Image::constant(n, 0.1);
    for i1 in 0..n {
        for i2 in 0..n {
            let (u, v) = (i1 as f64 * s, i2 as f64 * s);
            let value = if (8.0..28.0).contains(&u) && (10.0..30.0).contains(&v) {
                0.85
            } else if (u - 42.0) * (u - 42.0) + (v - 44.0) * (v - 44.0) <= 121.0 {
                0.55
            } else if (38.0..46.0).contains(&u) && (8.0..16.0).contains(&v) {
                1.0
            } else {
                continue;
            };
            img.set(i1, i2, value);
        }
    }
    img
}

/// Dense N x N matrix of the periodic blur operator, built directly from
/// the circulant-block structure without any Fourier transform.
pub fn dense_bccb(psf: &Psf, n: usize) -> DMatrix<f64> {
    let big_n = n * n;
    // Embed the kernel with its center at the origin, wrapping negatives.
    let mut embedded = vec![0.0; big_n];
    let (cr, cc) = psf.center();
    for r in 0..psf.rows() {
        for c in 0..psf.cols() {
            let i1 = (r + n - cr) % n;
            let i2 = (c + n - cc) % n;
            embedded[i1 * n + i2] += psf.get(r, c);
        }
    }
    DMatrix::from_fn(big_n, big_n, |row, col| {
        let (i1, i2) = (row / n, row % n);
        let (j1, j2) = (col / n, col % n);
        embedded[((i1 + n - j1) % n) * n + ((i2 + n - j2) % n)]
    })
}

/// Dense copy of a sparse operator.
pub fn to_dense(m: &SparseMatrix) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.n_rows(), m.n_cols());
    for (i, j, v) in m.iter() {
        out[(i, j)] = v;
    }
    out
}

pub fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let den = norm(b);
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Fresh per-test output directory under the system temp dir.
pub fn temp_dir(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "graphdeblur-it-{}-{name}",
        std::process::id()
    ));
    if dir.exists() {
        std::fs::remove_dir_all(&dir).ok();
    }
    std::fs::create_dir_all(&dir).expect("create temp dir");
    dir
}

/// Prints the acceptance line for one criterion and panics on failure so
/// the surrounding test is marked red.
pub fn report(id: usize, name: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {id} ({name}): {verdict} [{detail}]");
    assert!(ok, "acceptance criterion {id} ({name}) failed: {detail}");
}
