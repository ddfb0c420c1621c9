//! Deterministic helpers shared by unit tests.

use crate::image::{lex_index, lex_unindex, Image, Psf};

/// SplitMix64 step; the unit-test random source, independent of the noise
/// generator shipped in the library proper.
pub(crate) fn splitmix64(state: &mut u64) {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
}

pub(crate) fn splitmix64_output(state: u64) -> u64 {
    let mut z = state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform values in [0, 1), deterministic in `seed`.
pub(crate) fn uniform_vec(seed: u64, len: usize) -> Vec<f64> {
    let mut state = seed;
    (0..len)
        .map(|_| {
            splitmix64(&mut state);
            let bits = splitmix64_output(state);
            ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
        })
        .collect()
}

/// Uniform values in [-1, 1), deterministic in `seed`.
pub(crate) fn signed_vec(seed: u64, len: usize) -> Vec<f64> {
    uniform_vec(seed, len).into_iter().map(|u| 2.0 * u - 1.0).collect()
}

pub(crate) fn random_image(seed: u64, n: usize) -> Image {
    Image::new(n, uniform_vec(seed, n * n)).unwrap()
}

/// Dense row-major matrix of the blur operator generated by `psf` on an
/// n x n periodic grid: entry (r, c) is the embedded-kernel value at the
/// circular offset between pixels r and c. Built without any FFT so it can
/// audit the spectral route.
pub(crate) fn dense_bccb(psf: &Psf, n: usize) -> Vec<Vec<f64>> {
    let mut kernel = vec![0.0; n * n];
    let (cr, cc) = psf.center();
    for r in 0..psf.rows() {
        for c in 0..psf.cols() {
            let i1 = (r + n - cr % n) % n;
            let i2 = (c + n - cc % n) % n;
            kernel[lex_index(i1, i2, n)] += psf.get(r, c);
        }
    }
    let big_n = n * n;
    let mut a = vec![vec![0.0; big_n]; big_n];
    for row in 0..big_n {
        let (i1, i2) = lex_unindex(row, n);
        for col in 0..big_n {
            let (j1, j2) = lex_unindex(col, n);
            let o1 = (i1 + n - j1) % n;
            let o2 = (i2 + n - j2) % n;
            a[row][col] = kernel[lex_index(o1, o2, n)];
        }
    }
    a
}

pub(crate) fn dense_matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum())
        .collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let den = norm(b).max(f64::MIN_POSITIVE);
    num / den
}
