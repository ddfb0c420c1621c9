//! Reconstruction quality metrics: relative restoration error, peak
//! signal-to-noise ratio, and mean structural similarity.

use crate::error::{Error, Result};
use crate::image::Image;

/// Half-width of the SSIM window (11 x 11 pixels).
const SSIM_WINDOW_RADIUS: isize = 5;

/// Standard deviation of the SSIM Gaussian window.
const SSIM_SIGMA: f64 = 1.5;

/// The three statistics reported for every reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub rre: f64,
    pub psnr: f64,
    pub ssim: f64,
}

impl MetricsReport {
    /// Evaluates all three metrics with the peak value taken as the maximum
    /// of the reference image.
    pub fn compute(x: &Image, x_true: &Image) -> Result<MetricsReport> {
        let m = x_true.max();
        if !(m > 0.0) {
            return Err(Error::UndefinedMetric(format!(
                "peak value of the reference image is {m}, but PSNR and SSIM need a positive peak"
            )));
        }
        Ok(MetricsReport {
            rre: rre(x, x_true)?,
            psnr: psnr(x, x_true, m)?,
            ssim: ssim(x, x_true, m)?,
        })
    }
}

/// Relative restoration error ||x - x_true|| / ||x_true||.
pub fn rre(x: &Image, x_true: &Image) -> Result<f64> {
    x.check_same_shape(x_true, "rre")?;
    let denom = x_true.norm();
    if denom == 0.0 {
        return Err(Error::UndefinedMetric(
            "relative restoration error needs a nonzero reference image".into(),
        ));
    }
    let err = x
        .data()
        .iter()
        .zip(x_true.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(err / denom)
}

/// Peak signal-to-noise ratio 20 log10(n m / ||x - x_true||) in dB, i.e. the
/// standard 10 log10(m^2 / MSE) with the mean taken over all n^2 pixels.
/// Identical images return positive infinity.
pub fn psnr(x: &Image, x_true: &Image, m: f64) -> Result<f64> {
    x.check_same_shape(x_true, "psnr")?;
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::Config(format!("psnr peak must be positive, got {m}")));
    }
    let err = x
        .data()
        .iter()
        .zip(x_true.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (x.side() as f64 * m / err).log10())
}

/// Reflects an index into [0, n) with half-sample symmetry, so the sequence
/// continues as ..., x[1], x[0], x[0], x[1], ... across each border.
fn reflect(mut idx: isize, n: usize) -> usize {
    let n = n as isize;
    loop {
        if idx < 0 {
            idx = -1 - idx;
        } else if idx >= n {
            idx = 2 * n - 1 - idx;
        } else {
            return idx as usize;
        }
    }
}

fn gaussian_window() -> Vec<f64> {
    let mut w = Vec::with_capacity(121);
    for di in -SSIM_WINDOW_RADIUS..=SSIM_WINDOW_RADIUS {
        for dj in -SSIM_WINDOW_RADIUS..=SSIM_WINDOW_RADIUS {
            let d2 = (di * di + dj * dj) as f64;
            w.push((-d2 / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp());
        }
    }
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    w
}

/// Mean structural similarity over all pixels, using an 11 x 11 Gaussian
/// window with standard deviation 1.5, stability constants C1 = (0.01 m)^2
/// and C2 = (0.03 m)^2, and symmetric boundary padding.
pub fn ssim(x: &Image, x_true: &Image, m: f64) -> Result<f64> {
    x.check_same_shape(x_true, "ssim")?;
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::Config(format!("ssim peak must be positive, got {m}")));
    }
    let c1 = (0.01 * m) * (0.01 * m);
    let c2 = (0.03 * m) * (0.03 * m);
    let w = gaussian_window();
    let n = x.side();
    let mut acc = 0.0;
    for i1 in 0..n {
        for i2 in 0..n {
            let (mut mx, mut my, mut mxx, mut myy, mut mxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            let mut wi = 0;
            for di in -SSIM_WINDOW_RADIUS..=SSIM_WINDOW_RADIUS {
                for dj in -SSIM_WINDOW_RADIUS..=SSIM_WINDOW_RADIUS {
                    let p1 = reflect(i1 as isize + di, n);
                    let p2 = reflect(i2 as isize + dj, n);
                    let a = x.get(p1, p2);
                    let b = x_true.get(p1, p2);
                    let g = w[wi];
                    wi += 1;
                    mx += g * a;
                    my += g * b;
                    mxx += g * a * a;
                    myy += g * b * b;
                    mxy += g * a * b;
                }
            }
            let vx = mxx - mx * mx;
            let vy = myy - my * my;
            let cov = mxy - mx * my;
            acc += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
    }
    Ok(acc / (n * n) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_image, uniform_vec};

    #[test]
    fn rre_basic_identities() {
        let x = random_image(10, 8);
        assert_eq!(rre(&x, &x).unwrap(), 0.0);
        let doubled = Image::new(8, x.data().iter().map(|v| 2.0 * v).collect()).unwrap();
        assert!((rre(&doubled, &x).unwrap() - 1.0).abs() <= 1e-14);
        // Perturbing one coordinate by ||x_true|| gives error exactly 1.
        let mut bumped = x.clone();
        bumped.set(0, 0, bumped.get(0, 0) + x.norm());
        assert!((rre(&bumped, &x).unwrap() - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn rre_rejects_zero_reference() {
        let x = random_image(11, 4);
        assert!(matches!(
            rre(&x, &Image::zeros(4)),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn psnr_uniform_error_is_zero_db() {
        let n = 8;
        let x_true = random_image(12, n);
        let m = 0.37;
        let x = Image::new(n, x_true.data().iter().map(|v| v + m).collect()).unwrap();
        assert!(psnr(&x, &x_true, m).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn psnr_halving_error_gains_six_db() {
        let n = 8;
        let x_true = random_image(13, n);
        let e = uniform_vec(14, n * n);
        let full = Image::new(n, x_true.data().iter().zip(&e).map(|(v, d)| v + d).collect())
            .unwrap();
        let half = Image::new(
            n,
            x_true
                .data()
                .iter()
                .zip(&e)
                .map(|(v, d)| v + 0.5 * d)
                .collect(),
        )
        .unwrap();
        let gain = psnr(&half, &x_true, 1.0).unwrap() - psnr(&full, &x_true, 1.0).unwrap();
        assert!((gain - 20.0 * 2f64.log10()).abs() <= 1e-12);
    }

    #[test]
    fn psnr_small_example_value() {
        let x_true = Image::zeros(2);
        let x = Image::new(2, vec![0.1, 0.0, 0.0, 0.0]).unwrap();
        let expected = 20.0 * (2.0 / 0.1f64).log10();
        assert!((psnr(&x, &x_true, 1.0).unwrap() - expected).abs() <= 1e-12);
        assert!((expected - 26.0206).abs() < 1e-4);
    }

    #[test]
    fn psnr_identical_images_are_infinite() {
        let x = random_image(15, 4);
        assert!(psnr(&x, &x, 1.0).unwrap().is_infinite());
    }

    #[test]
    fn psnr_rre_identity_on_random_pairs() {
        for seed in 0..4u64 {
            let n = 8;
            let x_true = random_image(20 + seed, n);
            let x = random_image(40 + seed, n);
            let m = 0.8;
            let lhs = psnr(&x, &x_true, m).unwrap();
            let rhs = 20.0
                * (n as f64 * m / (rre(&x, &x_true).unwrap() * x_true.norm())).log10();
            assert!((lhs - rhs).abs() <= 1e-12);
        }
    }

    #[test]
    fn ssim_perfect_and_symmetric() {
        let x = random_image(16, 12);
        let y = random_image(17, 12);
        assert!((ssim(&x, &x, 1.0).unwrap() - 1.0).abs() <= 1e-12);
        let ab = ssim(&x, &y, 1.0).unwrap();
        let ba = ssim(&y, &x, 1.0).unwrap();
        assert!((ab - ba).abs() <= 1e-12);
    }

    #[test]
    fn ssim_constant_fields_closed_form() {
        let (c1_level, c2_level, m) = (0.4, 0.6, 1.0);
        let a = Image::constant(16, c1_level);
        let b = Image::constant(16, c2_level);
        let big_c1 = (0.01 * m) * (0.01 * m);
        let expected = (2.0 * c1_level * c2_level + big_c1)
            / (c1_level * c1_level + c2_level * c2_level + big_c1);
        assert!((ssim(&a, &b, m).unwrap() - expected).abs() <= 1e-12);
    }

    #[test]
    fn ssim_stays_in_range() {
        for seed in 0..4u64 {
            let x = random_image(60 + seed, 16);
            let y = random_image(80 + seed, 16);
            let s = ssim(&x, &y, 1.0).unwrap();
            assert!((-1.0..=1.0).contains(&s), "ssim {s} out of range");
        }
    }

    #[test]
    fn reflect_is_half_sample_symmetric() {
        assert_eq!(reflect(-1, 5), 0);
        assert_eq!(reflect(-2, 5), 1);
        assert_eq!(reflect(5, 5), 4);
        assert_eq!(reflect(6, 5), 3);
        // Deep reflection for windows wider than the image: the pattern has
        // period 2n, so index -4 with n=2 lands back on 0.
        assert_eq!(reflect(-4, 2), 0);
        assert_eq!(reflect(7, 3), 1);
    }

    #[test]
    fn compute_uses_reference_peak() {
        let n = 8;
        let x_true = random_image(21, n);
        let x = random_image(22, n);
        let report = MetricsReport::compute(&x, &x_true).unwrap();
        let m = x_true.max();
        assert_eq!(report.rre, rre(&x, &x_true).unwrap());
        assert_eq!(report.psnr, psnr(&x, &x_true, m).unwrap());
        assert_eq!(report.ssim, ssim(&x, &x_true, m).unwrap());
        assert!(MetricsReport::compute(&x, &Image::zeros(n)).is_err());
    }
}
