//! Binary PGM (`P5`, maxval 255) reading and writing.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// 8-bit grayscale image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "{width}x{height} image needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn same_dimensions(&self, other: &GrayImage) -> bool {
        self.width == other.width && self.height == other.height
    }
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    decode_pgm(&fs::read(path)?)
}

pub fn save_pgm(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pgm(image))?;
    Ok(())
}

/// Canonical encoding: `P5\n<w> <h>\n255\n` followed by the samples.
pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.data);
    out
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::format(0, "bad magic, expected binary PGM \"P5\""));
    }
    let mut cursor = Header { bytes, pos: 2 };
    let width = cursor.number("width")?;
    let height = cursor.number("height")?;
    let maxval = cursor.number("maxval")?;
    if maxval != 255 {
        return Err(Error::format(
            cursor.pos,
            format!("unsupported maxval {maxval}, only 255 is accepted"),
        ));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(cursor.pos) {
        Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
        _ => return Err(Error::format(cursor.pos, "missing whitespace after maxval")),
    }
    if width == 0 || height == 0 {
        return Err(Error::format(cursor.pos, "zero-sized image"));
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| Error::format(cursor.pos, "image dimensions overflow"))?;
    let raster = &bytes[cursor.pos..];
    if raster.len() < expected {
        return Err(Error::format(
            cursor.pos + raster.len(),
            format!(
                "truncated pixel data: expected {expected} bytes, found {}",
                raster.len()
            ),
        ));
    }
    GrayImage::new(width, height, raster[..expected].to_vec())
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let before = self.pos;
        self.skip_space_and_comments();
        if self.pos == before {
            return Err(Error::format(
                self.pos,
                format!("expected whitespace before {what}"),
            ));
        }
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format(start, format!("expected decimal {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(start, format!("{what} out of range")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_pixel_image() {
        let img = GrayImage::new(1, 1, vec![0]).unwrap();
        let bytes = encode_pgm(&img);
        assert_eq!(bytes, b"P5\n1 1\n255\n\0");
        assert_eq!(decode_pgm(&bytes).unwrap(), img);
    }

    #[test]
    fn header_with_comments() {
        let bytes = b"P5 # made by hand\n2 # w\n1\n255\n\x07\x09";
        let img = decode_pgm(bytes).unwrap();
        assert_eq!((img.width(), img.height()), (2, 1));
        assert_eq!(img.data(), &[7, 9]);
    }

    #[test]
    fn error_paths() {
        let err = decode_pgm(b"P2\n1 1\n255\n0").unwrap_err();
        assert!(matches!(err, Error::Format { offset: 0, .. }), "{err}");

        let err = decode_pgm(b"P5\n2 2\n65535\n").unwrap_err();
        assert!(err.to_string().contains("maxval 65535"), "{err}");

        let err = decode_pgm(b"P5\n4 4\n255\n\x01\x02\x03").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("expected 16 bytes, found 3"), "{msg}");
        assert!(matches!(err, Error::Format { offset: 14, .. }));

        assert!(decode_pgm(b"P5\nx 1\n255\n").is_err());
        assert!(decode_pgm(b"P5\n0 1\n255\n").is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        let img = GrayImage::new(3, 2, vec![1, 2, 3, 250, 251, 252]).unwrap();
        save_pgm(&img, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(load_pgm(&path).unwrap(), img);
        save_pgm(&load_pgm(&path).unwrap(), &path).unwrap();
        assert_eq!(fs::read(&path).unwrap(), bytes);
    }

    proptest! {
        #[test]
        fn encode_decode_identity(w in 1usize..20, h in 1usize..20, seed in any::<u64>()) {
            let data: Vec<u8> = (0..w * h).map(|i| (seed.wrapping_mul(i as u64 + 1) >> 13) as u8).collect();
            let img = GrayImage::new(w, h, data).unwrap();
            prop_assert_eq!(decode_pgm(&encode_pgm(&img)).unwrap(), img);
        }
    }
}
