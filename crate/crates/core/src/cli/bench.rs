use std::fmt;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{with_threads, RunConfig};
use crate::codec::Codec;
use crate::encoder::GrayImage;
use crate::error::{Error, Result};
use crate::fixedpoint::OpCounters;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchPreset {
    Hd1080,
    Uhd4k,
    Uhd8k,
    Custom { width: usize, height: usize },
}

impl BenchPreset {
    pub const ALL: [BenchPreset; 3] = [BenchPreset::Hd1080, BenchPreset::Uhd4k, BenchPreset::Uhd8k];

    pub fn dimensions(self) -> (usize, usize) {
        match self {
            BenchPreset::Hd1080 => (1920, 1080),
            BenchPreset::Uhd4k => (3840, 2160),
            BenchPreset::Uhd8k => (7680, 4320),
            BenchPreset::Custom { width, height } => (width, height),
        }
    }

    pub fn blocks(self) -> usize {
        let (w, h) = self.dimensions();
        w.div_ceil(8) * h.div_ceil(8)
    }

    /// Accepts `1080p`, `4k`, `8k`, `all` or `WIDTHxHEIGHT`.
    pub fn parse_list(s: &str) -> Result<Vec<BenchPreset>> {
        match s.to_ascii_lowercase().as_str() {
            "all" => Ok(Self::ALL.to_vec()),
            "1080p" => Ok(vec![BenchPreset::Hd1080]),
            "4k" => Ok(vec![BenchPreset::Uhd4k]),
            "8k" => Ok(vec![BenchPreset::Uhd8k]),
            other => {
                let parsed = other
                    .split_once('x')
                    .and_then(|(w, h)| Some((w.parse().ok()?, h.parse().ok()?)));
                match parsed {
                    Some((width, height)) if width > 0 && height > 0 => {
                        Ok(vec![BenchPreset::Custom { width, height }])
                    }
                    _ => Err(Error::InvalidParameter(format!(
                        "unknown bench preset {s:?}"
                    ))),
                }
            }
        }
    }
}

impl fmt::Display for BenchPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchPreset::Hd1080 => f.write_str("1080p"),
            BenchPreset::Uhd4k => f.write_str("4k"),
            BenchPreset::Uhd8k => f.write_str("8k"),
            BenchPreset::Custom { width, height } => write!(f, "{width}x{height}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub preset: BenchPreset,
    pub blocks: usize,
    pub threads: usize,
    pub encode_secs: f64,
    pub decode_secs: f64,
    pub counters: OpCounters,
    /// FNV-1a hash of the reconstructed pixels.
    pub digest: u64,
}

impl BenchReport {
    pub fn blocks_per_sec(&self) -> f64 {
        self.blocks as f64 / self.decode_secs.max(1e-9)
    }

    pub fn summary(&self) -> String {
        let (w, h) = self.preset.dimensions();
        format!(
            "{} ({w}x{h}): blocks={} threads={} encode={:.3}s decode={:.3}s {:.0} blocks/s divisions={} digest={:016x}",
            self.preset,
            self.blocks,
            self.threads,
            self.encode_secs,
            self.decode_secs,
            self.blocks_per_sec(),
            self.counters.divisions,
            self.digest
        )
    }

    pub fn write_csv(reports: &[BenchReport], path: impl AsRef<Path>) -> Result<()> {
        let to_io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        let mut w = csv::Writer::from_path(path).map_err(to_io)?;
        w.write_record([
            "preset",
            "width",
            "height",
            "blocks",
            "threads",
            "encode_s",
            "decode_s",
            "blocks_per_s",
            "digest",
        ])
        .map_err(to_io)?;
        for r in reports {
            let (width, height) = r.preset.dimensions();
            w.write_record([
                r.preset.to_string(),
                width.to_string(),
                height.to_string(),
                r.blocks.to_string(),
                r.threads.to_string(),
                format!("{:.6}", r.encode_secs),
                format!("{:.6}", r.decode_secs),
                format!("{:.1}", r.blocks_per_sec()),
                format!("{:016x}", r.digest),
            ])
            .map_err(to_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Uniformly random pixels from a seeded ChaCha8 stream. Noise keeps every
/// block busy until the sparsity cap.
pub fn synthetic_image(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = vec![0u8; width * height];
    rng.fill(&mut data[..]);
    GrayImage::new(width, height, data).expect("non-empty dimensions")
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Compresses and reconstructs one synthetic frame, returning timings and
/// the reconstructed image.
pub fn run_bench(preset: BenchPreset, config: &RunConfig) -> Result<(BenchReport, GrayImage)> {
    config.validate()?;
    let (w, h) = preset.dimensions();
    let image = synthetic_image(w, h, config.seed);
    let codec = Codec::new(config.decoder_config())?;
    let threads = config.threads.unwrap_or_else(rayon::current_num_threads);

    with_threads(Some(threads), || {
        let start = Instant::now();
        let stream = codec.compress(&image)?;
        let encode_secs = start.elapsed().as_secs_f64();
        let start = Instant::now();
        let (out, counters) = codec.reconstruct(&stream, None)?;
        let decode_secs = start.elapsed().as_secs_f64();
        let report = BenchReport {
            preset,
            blocks: stream.block_count(),
            threads,
            encode_secs,
            decode_secs,
            counters,
            digest: fnv1a(out.data()),
        };
        Ok((report, out))
    })
}
