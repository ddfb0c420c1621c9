//! BCCB operator algebra under periodic boundary conditions.
//!
//! A blur operator built from a point spread function on a periodic n x n
//! grid is block circulant with circulant blocks, so the 2-D DFT
//! diagonalizes it. Everything here works on the length-N eigenvalue vector
//! (the spectrum): building it from a PSF, applying the operator or its
//! adjoint, and inverting Tikhonov-filtered normal equations frequency by
//! frequency.

use std::cell::RefCell;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::image::{lex_index, lex_unindex, Image, Psf};

/// Relative imaginary residue allowed when a spectral round trip claims a
/// real result. Anything above this signals a non-conjugate-symmetric
/// spectrum rather than rounding.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Eigenvalues of a BCCB operator in 2-D DFT ordering.
///
/// `values[lex_index(k1, k2, n)]` is the eigenvalue at frequency pair
/// (k1, k2). Spectra of real kernels are conjugate symmetric: the value at
/// (k1, k2) conjugates the value at (-k1 mod n, -k2 mod n).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    n: usize,
    values: Vec<Complex<f64>>,
}

impl Spectrum {
    /// Wraps an eigenvalue vector, checking the length.
    pub fn new(n: usize, values: Vec<Complex<f64>>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Config(format!(
                "spectrum for side {n} needs {} values, got {}",
                n * n,
                values.len()
            )));
        }
        Ok(Spectrum { n, values })
    }

    /// Identity-operator spectrum (all ones).
    pub fn ones(n: usize) -> Self {
        Spectrum {
            n,
            values: vec![Complex::new(1.0, 0.0); n * n],
        }
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn values(&self) -> &[Complex<f64>] {
        &self.values
    }

    /// Eigenvalue at frequency pair (k1, k2).
    #[inline]
    pub fn value(&self, k1: usize, k2: usize) -> Complex<f64> {
        self.values[lex_index(k1, k2, self.n)]
    }

    /// Spectrum of the adjoint operator.
    pub fn conj(&self) -> Spectrum {
        Spectrum {
            n: self.n,
            values: self.values.iter().map(Complex::conj).collect(),
        }
    }

    /// Largest elementwise deviation from conjugate symmetry,
    /// max_k |s(k) - conj(s(-k))|.
    pub fn max_conjugate_asymmetry(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for k1 in 0..n {
            for k2 in 0..n {
                let mirrored = self.value((n - k1) % n, (n - k2) % n);
                let dev = (self.value(k1, k2) - mirrored.conj()).norm();
                worst = worst.max(dev);
            }
        }
        worst
    }
}

fn transpose_square(buf: &mut [Complex<f64>], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// Unnormalized 2-D DFT over a row-major n x n complex buffer, in place.
/// Forward uses the negative-exponent kernel; inverse is its unnormalized
/// conjugate, so a forward/inverse round trip scales by N.
pub(crate) fn fft2_inplace(buf: &mut [Complex<f64>], n: usize, forward: bool) {
    debug_assert_eq!(buf.len(), n * n);
    let plan = PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        if forward {
            planner.plan_fft_forward(n)
        } else {
            planner.plan_fft_inverse(n)
        }
    });
    plan.process(buf);
    transpose_square(buf, n);
    plan.process(buf);
    transpose_square(buf, n);
}

/// Forward 2-D DFT of a real length-N vector in lexicographic order.
pub fn fft2(data: &[f64], n: usize) -> Result<Vec<Complex<f64>>> {
    if data.len() != n * n {
        return Err(Error::Config(format!(
            "fft2 expects {} samples for side {n}, got {}",
            n * n,
            data.len()
        )));
    }
    let mut buf: Vec<Complex<f64>> = data.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft2_inplace(&mut buf, n, true);
    Ok(buf)
}

/// Inverse 2-D DFT (including the 1/N normalization) that must land on a
/// real vector. `residue_scale` sets the magnitude against which the
/// leftover imaginary part is judged.
pub(crate) fn ifft2_real(
    mut buf: Vec<Complex<f64>>,
    n: usize,
    residue_scale: f64,
    context: &str,
) -> Result<Vec<f64>> {
    fft2_inplace(&mut buf, n, false);
    let scale = 1.0 / (n * n) as f64;
    let imag_norm = buf
        .iter()
        .map(|v| v.im * v.im)
        .sum::<f64>()
        .sqrt()
        * scale;
    if imag_norm > IMAG_RESIDUE_TOL * residue_scale {
        return Err(Error::Numeric(format!(
            "{context}: imaginary residue {imag_norm:.3e} exceeds {IMAG_RESIDUE_TOL:.0e} x {residue_scale:.3e}; spectrum is not conjugate symmetric"
        )));
    }
    Ok(buf.into_iter().map(|v| v.re * scale).collect())
}

/// Builds the spectrum of the blur operator generated by `psf` on an
/// n x n periodic grid.
///
/// The PSF is embedded into an n x n array with its center pixel circularly
/// shifted to index (0, 0); the spectrum is the 2-D DFT of that array. The
/// zero-frequency entry equals the PSF sum, which normalization fixes at 1.
pub fn psf_to_spectrum(psf: &Psf, n: usize) -> Result<Spectrum> {
    if psf.rows() > n || psf.cols() > n {
        return Err(Error::Config(format!(
            "PSF extent {}x{} exceeds image side {n}",
            psf.rows(),
            psf.cols()
        )));
    }
    let (cr, cc) = psf.center();
    let mut buf = vec![Complex::new(0.0, 0.0); n * n];
    for r in 0..psf.rows() {
        for c in 0..psf.cols() {
            let i1 = (r + n - cr) % n;
            let i2 = (c + n - cc) % n;
            buf[lex_index(i1, i2, n)] += Complex::new(psf.get(r, c), 0.0);
        }
    }
    fft2_inplace(&mut buf, n, true);
    Ok(Spectrum { n, values: buf })
}

fn check_side(s: &Spectrum, x: &Image, what: &str) -> Result<()> {
    if s.side() != x.side() {
        return Err(Error::Config(format!(
            "{what}: spectrum side {} does not match image side {}",
            s.side(),
            x.side()
        )));
    }
    Ok(())
}

/// Applies the BCCB operator with eigenvalues `s` to `x`.
///
/// Realized as F^-1 diag(s) F x; the imaginary residue of the round trip
/// must stay within `IMAG_RESIDUE_TOL` relative to the input norm.
pub fn bccb_apply(s: &Spectrum, x: &Image) -> Result<Image> {
    check_side(s, x, "bccb_apply")?;
    let n = x.side();
    let mut buf: Vec<Complex<f64>> =
        x.data().iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft2_inplace(&mut buf, n, true);
    for (v, s) in buf.iter_mut().zip(s.values()) {
        *v *= s;
    }
    let data = ifft2_real(buf, n, x.norm(), "bccb_apply")?;
    Image::new(n, data)
}

/// Applies the adjoint of the operator with eigenvalues `s`: multiplication
/// by the conjugate spectrum.
pub fn bccb_apply_adjoint(s: &Spectrum, x: &Image) -> Result<Image> {
    bccb_apply(&s.conj(), x)
}

/// Solves the Tikhonov-filtered normal equations
/// (A^T A + mu (Lx^T Lx + Ly^T Ly)) x = A^T b frequency by frequency, where
/// `rhs_hat` carries F b and the three spectra carry the eigenvalues of A,
/// Lx and Ly.
///
/// Each frequency divides conj(sigma_k) rhs_hat_k by
/// |sigma_k|^2 + mu (|lx_k|^2 + |ly_k|^2); a zero denominator names the
/// offending frequency instead of producing infinities.
pub fn bccb_solve_filtered(
    sigma: &Spectrum,
    lx: &Spectrum,
    ly: &Spectrum,
    mu: f64,
    rhs_hat: &[Complex<f64>],
) -> Result<Image> {
    let n = sigma.side();
    if lx.side() != n || ly.side() != n {
        return Err(Error::Config(format!(
            "bccb_solve_filtered: spectra sides {}, {}, {} disagree",
            n,
            lx.side(),
            ly.side()
        )));
    }
    if rhs_hat.len() != n * n {
        return Err(Error::Config(format!(
            "bccb_solve_filtered: rhs has {} entries, expected {}",
            rhs_hat.len(),
            n * n
        )));
    }
    if !(mu >= 0.0) {
        return Err(Error::Config(format!(
            "bccb_solve_filtered: mu must be nonnegative, got {mu}"
        )));
    }
    let mut buf = vec![Complex::new(0.0, 0.0); n * n];
    for (k, slot) in buf.iter_mut().enumerate() {
        let s = sigma.values()[k];
        let denom = s.norm_sqr() + mu * (lx.values()[k].norm_sqr() + ly.values()[k].norm_sqr());
        if denom == 0.0 {
            let (k1, k2) = lex_unindex(k, n);
            return Err(Error::SingularFilter { k1, k2 });
        }
        *slot = s.conj() * rhs_hat[k] / denom;
    }
    let rhs_norm = rhs_hat.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let data = ifft2_real(buf, n, rhs_norm / n as f64, "bccb_solve_filtered")?;
    Image::new(n, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{dense_bccb, dense_matvec, dot, random_image, rel_diff, signed_vec};
    use std::f64::consts::PI;

    #[test]
    fn delta_psf_gives_identity_spectrum() {
        let psf = Psf::delta();
        let s = psf_to_spectrum(&psf, 8).unwrap();
        for v in s.values() {
            assert!((v - Complex::new(1.0, 0.0)).norm() <= 1e-12);
        }
    }

    #[test]
    fn two_tap_psf_matches_closed_form() {
        // 1x2 averaging kernel centered on its first entry: the spectrum
        // depends only on the column frequency, (1 + e^(-2 pi i k2 / 4)) / 2.
        let psf = Psf::new(1, 2, vec![0.5, 0.5], (0, 0)).unwrap();
        let s = psf_to_spectrum(&psf, 4).unwrap();
        for k1 in 0..4 {
            for k2 in 0..4 {
                let expected =
                    (Complex::new(1.0, 0.0) + Complex::from_polar(1.0, -2.0 * PI * k2 as f64 / 4.0))
                        * 0.5;
                assert!((s.value(k1, k2) - expected).norm() <= 1e-14);
            }
        }
    }

    #[test]
    fn zero_frequency_is_psf_sum() {
        for psf in [Psf::gaussian(1.5, 9).unwrap(), Psf::average(5).unwrap(), Psf::motion(7).unwrap()] {
            let s = psf_to_spectrum(&psf, 16).unwrap();
            assert!((s.value(0, 0) - Complex::new(1.0, 0.0)).norm() <= 1e-14);
        }
    }

    #[test]
    fn oversized_psf_rejected() {
        let psf = Psf::average(9).unwrap();
        assert!(matches!(psf_to_spectrum(&psf, 8), Err(Error::Config(_))));
    }

    #[test]
    fn identity_spectrum_applies_as_identity() {
        let x = random_image(7, 8);
        let y = bccb_apply(&Spectrum::ones(8), &x).unwrap();
        assert!(rel_diff(y.data(), x.data()) <= 1e-14);
    }

    #[test]
    fn shifted_delta_moves_pixels() {
        // Single 1 one pixel right of the center: applying the operator to
        // the indicator of pixel (0,0) lands on pixel (0,1), matching the
        // dense circulant.
        let psf = Psf::new(1, 2, vec![0.0, 1.0], (0, 0)).unwrap();
        let s = psf_to_spectrum(&psf, 4).unwrap();
        let mut e0 = Image::zeros(4);
        e0.set(0, 0, 1.0);
        let shifted = bccb_apply(&s, &e0).unwrap();
        assert!((shifted.get(0, 1) - 1.0).abs() <= 1e-12);
        let dense = dense_bccb(&psf, 4);
        let expected = dense_matvec(&dense, e0.data());
        assert!(rel_diff(shifted.data(), &expected) <= 1e-12);
    }

    #[test]
    fn apply_matches_dense_circulant() {
        let psf = Psf::gaussian(1.0, 5).unwrap();
        for n in [5usize, 8, 16] {
            let s = psf_to_spectrum(&psf, n).unwrap();
            let dense = dense_bccb(&psf, n);
            let x = random_image(n as u64, n);
            let fast = bccb_apply(&s, &x).unwrap();
            let slow = dense_matvec(&dense, x.data());
            assert!(rel_diff(fast.data(), &slow) <= 1e-12);
        }
    }

    #[test]
    fn adjoint_consistency() {
        let psf = Psf::motion(5).unwrap();
        for n in [8usize, 16, 32] {
            let s = psf_to_spectrum(&psf, n).unwrap();
            let x = random_image(n as u64 + 1, n);
            let y = random_image(n as u64 + 2, n);
            let ax = bccb_apply(&s, &x).unwrap();
            let aty = bccb_apply_adjoint(&s, &y).unwrap();
            let lhs = dot(ax.data(), y.data());
            let rhs = dot(x.data(), aty.data());
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn real_psf_spectra_are_conjugate_symmetric() {
        for psf in [Psf::gaussian(2.0, 7).unwrap(), Psf::average(4).unwrap()] {
            let s = psf_to_spectrum(&psf, 12).unwrap();
            assert!(s.max_conjugate_asymmetry() <= 1e-14);
        }
    }

    #[test]
    fn asymmetric_spectrum_rejected_on_apply() {
        let mut values = vec![Complex::new(1.0, 0.0); 16];
        values[1] = Complex::new(0.0, 1.0);
        let s = Spectrum::new(4, values).unwrap();
        let x = random_image(3, 4);
        assert!(matches!(bccb_apply(&s, &x), Err(Error::Numeric(_))));
    }

    #[test]
    fn solve_with_identity_blur_and_no_penalty_returns_rhs() {
        let b = random_image(11, 8);
        let sigma = Spectrum::ones(8);
        let lx = Spectrum::new(8, vec![Complex::new(0.5, 0.0); 64]).unwrap();
        let ly = lx.clone();
        let rhs_hat = fft2(b.data(), 8).unwrap();
        let x = bccb_solve_filtered(&sigma, &lx, &ly, 0.0, &rhs_hat).unwrap();
        assert!(rel_diff(x.data(), b.data()) <= 1e-12);
    }

    #[test]
    fn solve_zero_rhs_gives_zero_image() {
        let sigma = Spectrum::ones(4);
        let lx = Spectrum::ones(4);
        let ly = Spectrum::ones(4);
        let rhs_hat = vec![Complex::new(0.0, 0.0); 16];
        let x = bccb_solve_filtered(&sigma, &lx, &ly, 0.1, &rhs_hat).unwrap();
        assert!(x.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn singular_filter_names_the_frequency() {
        let mut sigma_values = vec![Complex::new(1.0, 0.0); 16];
        sigma_values[lex_index(2, 3, 4)] = Complex::new(0.0, 0.0);
        let sigma = Spectrum::new(4, sigma_values).unwrap();
        let zeros = Spectrum::new(4, vec![Complex::new(0.0, 0.0); 16]).unwrap();
        let rhs_hat = vec![Complex::new(1.0, 0.0); 16];
        match bccb_solve_filtered(&sigma, &zeros, &zeros, 0.0, &rhs_hat) {
            Err(Error::SingularFilter { k1, k2 }) => {
                assert_eq!((k1, k2), (2, 3));
            }
            other => panic!("expected singular filter error, got {other:?}"),
        }
    }

    #[test]
    fn fft2_matches_direct_dft() {
        let n = 4;
        let data = signed_vec(5, n * n);
        let fast = fft2(&data, n).unwrap();
        for k1 in 0..n {
            for k2 in 0..n {
                let mut acc = Complex::new(0.0, 0.0);
                for j1 in 0..n {
                    for j2 in 0..n {
                        let phase =
                            -2.0 * PI * (k1 * j1 + k2 * j2) as f64 / n as f64;
                        acc += Complex::from_polar(data[lex_index(j1, j2, n)], phase);
                    }
                }
                assert!((fast[lex_index(k1, k2, n)] - acc).norm() <= 1e-12);
            }
        }
    }
}
