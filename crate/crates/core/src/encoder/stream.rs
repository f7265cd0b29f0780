//! `CSM1` measurement bitstream.
//!
//! All fields little-endian:
//!
//! | offset | size | field                        |
//! |--------|------|------------------------------|
//! | 0      | 4    | magic `CSM1`                 |
//! | 4      | 1    | version, currently 1         |
//! | 5      | 2    | measurements per block `m`   |
//! | 7      | 2    | block length `n` (64)        |
//! | 9      | 4    | image width                  |
//! | 13     | 4    | image height                 |
//! | 17     | 2·m·B| measurements, u16, block scan order |
//!
//! `B = ceil(width / 8) * ceil(height / 8)`; blocks are scanned row-major.

use std::fs;
use std::path::Path;

use crate::encoder::{block_grid, BLOCK_LEN};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CSM1";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 17;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasurementStream {
    m: usize,
    n: usize,
    width: usize,
    height: usize,
    data: Vec<u16>,
}

impl MeasurementStream {
    pub fn new(m: usize, width: usize, height: usize, data: Vec<u16>) -> Result<Self> {
        if m == 0 || m > BLOCK_LEN {
            return Err(Error::InvalidParameter(format!(
                "measurement count {m} must be in 1..={BLOCK_LEN}"
            )));
        }
        let (bx, by) = block_grid(width, height)?;
        if width > u32::MAX as usize || height > u32::MAX as usize {
            return Err(Error::InvalidInput("image dimensions exceed u32".into()));
        }
        let expected = bx * by * m;
        if data.len() != expected {
            return Err(Error::InvalidInput(format!(
                "stream payload has {} measurements, {width}x{height} at m={m} needs {expected}",
                data.len()
            )));
        }
        Ok(Self {
            m,
            n: BLOCK_LEN,
            width,
            height,
            data,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn block_count(&self) -> usize {
        self.data.len() / self.m
    }

    pub fn block(&self, index: usize) -> &[u16] {
        &self.data[index * self.m..(index + 1) * self.m]
    }

    pub fn blocks(&self) -> std::slice::ChunksExact<'_, u16> {
        self.data.chunks_exact(self.m)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 2 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&(self.m as u16).to_le_bytes());
        out.extend_from_slice(&(self.n as u16).to_le_bytes());
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(Error::format(0, "bad magic"));
        }
        if bytes.len() < HEADER_LEN {
            return Err(Error::format(
                bytes.len(),
                format!("truncated header: {} of {HEADER_LEN} bytes", bytes.len()),
            ));
        }
        if bytes[4] != VERSION {
            return Err(Error::format(
                4,
                format!("unsupported version {}", bytes[4]),
            ));
        }
        let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]) as usize;
        let u32_at = |o: usize| {
            u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]) as usize
        };
        let m = u16_at(5);
        let n = u16_at(7);
        let width = u32_at(9);
        let height = u32_at(13);
        if n != BLOCK_LEN {
            return Err(Error::format(7, format!("unsupported block length {n}")));
        }
        if m == 0 || m > n {
            return Err(Error::format(
                5,
                format!("measurement count {m} out of range"),
            ));
        }
        let (bx, by) =
            block_grid(width, height).map_err(|_| Error::format(9, "zero-sized image"))?;
        let expected = bx
            .checked_mul(by)
            .and_then(|b| b.checked_mul(2 * m))
            .ok_or_else(|| Error::format(9, "dimensions overflow"))?;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != expected {
            return Err(Error::format(
                HEADER_LEN + payload.len().min(expected),
                format!(
                    "length mismatch: payload is {} bytes, header implies {expected}",
                    payload.len()
                ),
            ));
        }
        let data = payload
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect();
        Self::new(m, width, height, data)
    }
}

pub fn write_stream(stream: &MeasurementStream, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, stream.to_bytes())?;
    Ok(())
}

pub fn read_stream(path: impl AsRef<Path>) -> Result<MeasurementStream> {
    MeasurementStream::from_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> MeasurementStream {
        MeasurementStream::new(16, 8, 8, (0..16).map(|i| i * 1000).collect()).unwrap()
    }

    #[test]
    fn single_block_size() {
        let bytes = sample().to_bytes();
        assert_eq!(bytes.len(), 17 + 32);
        assert_eq!(&bytes[..5], b"CSM1\x01");
        assert_eq!(&bytes[5..9], &[16, 0, 64, 0]);
        assert_eq!(MeasurementStream::from_bytes(&bytes).unwrap(), sample());
    }

    #[test]
    fn header_errors() {
        let mut bytes = sample().to_bytes();
        bytes[0] = b'X';
        assert_eq!(
            MeasurementStream::from_bytes(&bytes)
                .unwrap_err()
                .to_string(),
            "format error at byte 0: bad magic"
        );

        let mut bytes = sample().to_bytes();
        bytes[4] = 2;
        assert!(matches!(
            MeasurementStream::from_bytes(&bytes),
            Err(Error::Format { offset: 4, .. })
        ));

        let mut bytes = sample().to_bytes();
        bytes.pop();
        let err = MeasurementStream::from_bytes(&bytes)
            .unwrap_err()
            .to_string();
        assert!(err.contains("length mismatch"), "{err}");

        let bytes = sample().to_bytes();
        assert!(MeasurementStream::from_bytes(&bytes[..10]).is_err());

        let mut bytes = sample().to_bytes();
        bytes[7] = 32;
        assert!(MeasurementStream::from_bytes(&bytes).is_err());
    }

    #[test]
    fn payload_length_is_validated() {
        assert!(MeasurementStream::new(16, 9, 8, vec![0; 16]).is_err());
        assert!(MeasurementStream::new(16, 9, 8, vec![0; 32]).is_ok());
        assert!(MeasurementStream::new(0, 8, 8, vec![]).is_err());
    }

    proptest! {
        #[test]
        fn bytes_round_trip(m in 1usize..=64, w in 1usize..40, h in 1usize..40, seed in any::<u16>()) {
            let (bx, by) = block_grid(w, h).unwrap();
            let data = (0..bx * by * m).map(|i| (i as u16).wrapping_mul(seed | 1)).collect();
            let s = MeasurementStream::new(m, w, h, data).unwrap();
            prop_assert_eq!(MeasurementStream::from_bytes(&s.to_bytes()).unwrap(), s);
        }
    }
}
