//! PGM (portable graymap) reader and writer.
//!
//! The reader accepts binary `P5` (8-bit, or 16-bit big-endian for maxval
//! above 255) and ASCII `P2`, with `#` comments in the header, and scales
//! samples to [0, 1] by dividing by maxval. The writer emits an 8-bit `P5`
//! preview with intensities clamped to [0, 1] before quantization.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

/// Writes an 8-bit binary PGM preview of the image.
pub fn write_pgm(path: &Path, image: &Image) -> Result<()> {
    let n = image.side();
    let mut bytes = format!("P5\n{n} {n}\n255\n").into_bytes();
    bytes.reserve(image.len());
    for &v in image.data() {
        let q = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        bytes.push(q);
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

struct HeaderScanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderScanner<'a> {
    /// Next whitespace-delimited token, skipping `#` comments.
    fn token(&mut self) -> Option<&'a str> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        if self.pos >= self.bytes.len() {
            return None;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).ok()
    }
}

/// Reads a square `P5` or `P2` image, scaled to [0, 1].
pub fn read_pgm(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut scan = HeaderScanner { bytes: &bytes, pos: 0 };
    let bad = |detail: String| Error::format(path, detail);
    let magic = scan.token().ok_or_else(|| bad("empty file".into()))?;
    if magic != "P5" && magic != "P2" {
        return Err(bad(format!("unsupported PGM magic '{magic}'")));
    }
    let mut dims = [0usize; 3];
    for (i, what) in ["width", "height", "maxval"].iter().enumerate() {
        let tok = scan
            .token()
            .ok_or_else(|| bad(format!("missing {what} in header")))?;
        dims[i] = tok
            .parse()
            .map_err(|_| bad(format!("invalid {what} '{tok}'")))?;
    }
    let [width, height, maxval] = dims;
    if width != height {
        return Err(bad(format!(
            "image is {width}x{height}, but only square images are supported"
        )));
    }
    if maxval == 0 || maxval > 65_535 {
        return Err(bad(format!("maxval {maxval} outside [1, 65535]")));
    }
    let n = width;
    let count = n * n;
    let scale = 1.0 / maxval as f64;

    if magic == "P2" {
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            let tok = scan
                .token()
                .ok_or_else(|| bad(format!("expected {count} samples")))?;
            let v: u32 = tok
                .parse()
                .map_err(|_| bad(format!("invalid sample '{tok}'")))?;
            if v as usize > maxval {
                return Err(bad(format!("sample {v} exceeds maxval {maxval}")));
            }
            data.push(v as f64 * scale);
        }
        return Image::new(n, data);
    }

    // P5: exactly one whitespace byte follows maxval, then the raster.
    let raster = &bytes[scan.pos + 1..];
    let wide = maxval > 255;
    let need = count * if wide { 2 } else { 1 };
    if raster.len() < need {
        return Err(bad(format!(
            "raster holds {} bytes, expected {need}",
            raster.len()
        )));
    }
    let mut data = Vec::with_capacity(count);
    if wide {
        for chunk in raster[..need].chunks_exact(2) {
            let v = u16::from_be_bytes([chunk[0], chunk[1]]);
            if v as usize > maxval {
                return Err(bad(format!("sample {v} exceeds maxval {maxval}")));
            }
            data.push(v as f64 * scale);
        }
    } else {
        for &b in &raster[..need] {
            if b as usize > maxval {
                return Err(bad(format!("sample {b} exceeds maxval {maxval}")));
            }
            data.push(b as f64 * scale);
        }
    }
    Image::new(n, data)
}
