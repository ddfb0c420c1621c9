//! GLF1: a minimal lossless float image format.
//!
//! Layout: the 4-byte magic `GLF1`, two little-endian `u32` dimensions
//! (rows, then columns), then `rows * cols` little-endian `f64` samples in
//! row-major order. Used between pipeline stages where 8-bit quantization
//! would corrupt the numerics.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

const MAGIC: &[u8; 4] = b"GLF1";

/// Writes an image losslessly.
pub fn write_glf(path: &Path, image: &Image) -> Result<()> {
    let n = image.side();
    let mut bytes = Vec::with_capacity(12 + 8 * image.len());
    bytes.extend_from_slice(MAGIC);
    let side = u32::try_from(n)
        .map_err(|_| Error::Config(format!("image side {n} exceeds the u32 header field")))?;
    bytes.extend_from_slice(&side.to_le_bytes());
    bytes.extend_from_slice(&side.to_le_bytes());
    for v in image.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads a GLF1 file back into an image. The stored dimensions must be
/// square to fit the pipeline's image type.
pub fn read_glf(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 12 || &bytes[..4] != MAGIC {
        return Err(Error::format(path, "missing GLF1 magic header"));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if rows != cols {
        return Err(Error::format(
            path,
            format!("image is {rows}x{cols}, but only square images are supported"),
        ));
    }
    let expected = 12 + 8 * rows * cols;
    if bytes.len() != expected {
        return Err(Error::format(
            path,
            format!("expected {expected} bytes for {rows}x{cols}, found {}", bytes.len()),
        ));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for chunk in bytes[12..].chunks_exact(8) {
        data.push(f64::from_le_bytes(chunk.try_into().unwrap()));
    }
    Image::new(rows, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_image;

    fn temp_path(name: &str) -> std::path::PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("graphdeblur-glf-{}-{name}", std::process::id()));
        p
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let img = random_image(9, 16);
        let path = temp_path("roundtrip.glf");
        write_glf(&path, &img).unwrap();
        let back = read_glf(&path).unwrap();
        assert_eq!(back.side(), 16);
        assert_eq!(back.data(), img.data());
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn bad_magic_rejected() {
        let path = temp_path("badmagic.glf");
        std::fs::write(&path, b"NOPE\0\0\0\0\0\0\0\0").unwrap();
        assert!(matches!(read_glf(&path), Err(Error::Format { .. })));
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn truncated_payload_rejected() {
        let img = random_image(10, 4);
        let path = temp_path("truncated.glf");
        write_glf(&path, &img).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 3);
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(read_glf(&path), Err(Error::Format { .. })));
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn missing_file_is_io_error() {
        let path = temp_path("nonexistent.glf");
        assert!(matches!(read_glf(&path), Err(Error::Io { .. })));
    }
}
