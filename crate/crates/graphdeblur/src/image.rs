//! Square grayscale images and point-spread functions.
//!
//! Images are stored as flat vectors of `f64` intensities in lexicographic
//! (row-major) order: pixel `(i1, i2)` of an `n`-by-`n` image lives at linear
//! index `i1 * n + i2`. Intensities are expected on the `[0, 1]` scale; file
//! readers divide 8-bit samples by their maxval at ingestion so that kernel
//! and regularization parameters keep a fixed meaning across inputs.

use crate::error::{Error, Result};

/// Linear index of pixel `(i1, i2)` in an `n`-by-`n` image.
///
/// Zero-based row-major order; the inverse is [`lex_unindex`].
#[inline]
pub fn lex_index(i1: usize, i2: usize, n: usize) -> usize {
    debug_assert!(i1 < n && i2 < n, "pixel ({i1},{i2}) out of range for n={n}");
    i1 * n + i2
}

/// Pixel coordinates `(i1, i2)` of linear index `i` in an `n`-by-`n` image.
#[inline]
pub fn lex_unindex(i: usize, n: usize) -> (usize, usize) {
    debug_assert!(i < n * n, "index {i} out of range for n={n}");
    (i / n, i % n)
}

/// A square grayscale image of side `n`, stored row-major.
///
/// Intermediate solver iterates may carry negative entries; images handed
/// back to users by the constrained solvers are non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    n: usize,
    data: Vec<f64>,
}

impl Image {
    /// Wraps a length-`n*n` vector as an image.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Config(format!(
                "image data length {} does not match n^2 = {} (n = {})",
                data.len(),
                n * n,
                n
            )));
        }
        Ok(Image { n, data })
    }

    /// All-zero image of side `n`.
    pub fn zeros(n: usize) -> Self {
        Image {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Constant image of side `n` with every pixel equal to `value`.
    pub fn constant(n: usize, value: f64) -> Self {
        Image {
            n,
            data: vec![value; n * n],
        }
    }

    /// Side length in pixels.
    #[inline]
    pub fn side(&self) -> usize {
        self.n
    }

    /// Number of pixels, `n * n`.
    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Flat pixel slice in lexicographic order.
    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Consumes the image, returning the flat pixel vector.
    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Pixel at `(i1, i2)`.
    #[inline]
    pub fn get(&self, i1: usize, i2: usize) -> f64 {
        self.data[lex_index(i1, i2, self.n)]
    }

    #[inline]
    pub fn set(&mut self, i1: usize, i2: usize, value: f64) {
        self.data[lex_index(i1, i2, self.n)] = value;
    }

    /// Euclidean norm of the pixel vector.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest pixel value (0 for an empty image).
    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest pixel value.
    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Checks that `other` has the same side length.
    pub fn check_same_shape(&self, other: &Image, what: &str) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Config(format!(
                "{what}: image sides differ ({} vs {})",
                self.n, other.n
            )));
        }
        Ok(())
    }
}

/// A point-spread function: a small `rows`-by-`cols` kernel with a designated
/// center pixel.
///
/// The kernel is normalized to sum 1 at construction, so the blur operator it
/// generates preserves constant images.
#[derive(Debug, Clone, PartialEq)]
pub struct Psf {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    center: (usize, usize),
}

impl Psf {
    /// Builds a PSF from row-major weights with an explicit center.
    ///
    /// The weights are rescaled so they sum to 1; a kernel whose entries sum
    /// to zero cannot be normalized and is rejected.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>, center: (usize, usize)) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Config(format!(
                "PSF data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        if center.0 >= rows || center.1 >= cols {
            return Err(Error::Config(format!(
                "PSF center {:?} outside {rows}x{cols} kernel",
                center
            )));
        }
        let sum: f64 = data.iter().sum();
        if sum == 0.0 || !sum.is_finite() {
            return Err(Error::Config(format!(
                "PSF weights sum to {sum}; cannot normalize to 1"
            )));
        }
        let data = data.into_iter().map(|v| v / sum).collect();
        Ok(Psf {
            rows,
            cols,
            data,
            center,
        })
    }

    /// Builds a PSF with the default center `(rows/2, cols/2)`.
    ///
    /// For odd extents this is the middle pixel; even extents use the
    /// floor convention.
    pub fn centered(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(rows, cols, data, (rows / 2, cols / 2))
    }

    /// The identity kernel: a single unit weight.
    pub fn delta() -> Self {
        Psf {
            rows: 1,
            cols: 1,
            data: vec![1.0],
            center: (0, 0),
        }
    }

    /// Isotropic Gaussian kernel `exp(-(d1^2 + d2^2) / (2 std^2))` on a
    /// `size`-by-`size` grid, normalized to sum 1.
    pub fn gaussian(std: f64, size: usize) -> Result<Self> {
        if std <= 0.0 || !std.is_finite() {
            return Err(Error::Config(format!("Gaussian PSF std must be positive, got {std}")));
        }
        if size == 0 {
            return Err(Error::Config("Gaussian PSF size must be at least 1".into()));
        }
        let c = (size / 2) as isize;
        let mut data = Vec::with_capacity(size * size);
        for r in 0..size as isize {
            for q in 0..size as isize {
                let d2 = ((r - c) * (r - c) + (q - c) * (q - c)) as f64;
                data.push((-d2 / (2.0 * std * std)).exp());
            }
        }
        Self::centered(size, size, data)
    }

    /// Uniform `size`-by-`size` averaging kernel.
    pub fn average(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::Config("average PSF size must be at least 1".into()));
        }
        Self::centered(size, size, vec![1.0; size * size])
    }

    /// Horizontal motion kernel: a single row of `len` equal weights.
    pub fn motion(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::Config("motion PSF length must be at least 1".into()));
        }
        Self::centered(1, len, vec![1.0; len])
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major normalized weights.
    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Center pixel `(row, col)` used as the convolution origin.
    #[inline]
    pub fn center(&self) -> (usize, usize) {
        self.center
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}
