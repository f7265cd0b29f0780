//! Command-line front end: argument parsing, run configuration and the
//! experiment drivers behind the `csomp` binary.

mod bench;
mod sweep;

use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::codec::Codec;
use crate::decoder::DecoderConfig;
use crate::encoder::{load_pgm, read_stream, save_pgm, write_stream, GrayImage, BLOCK_LEN};
use crate::error::{Error, Result};
use crate::fixedpoint::{OpCounters, DEFAULT_FRAC_BITS};
use crate::reference::{compare_baseline, load_corpus, psnr, ssim};

pub use bench::{run_bench, synthetic_image, BenchPreset, BenchReport};
pub use sweep::{fixed_sweep, SweepReport, SweepRow};

/// Measurement counts accepted by the command line, one per sampling rate.
pub const SUPPORTED_M: [usize; 3] = [16, 32, 48];
pub const FRAC_BITS_RANGE: std::ops::RangeInclusive<u32> = 8..=12;
pub const DEFAULT_SEED: u64 = 1;

/// Parameters shared by every subcommand.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub m: usize,
    pub k_max: usize,
    pub frac_bits: u32,
    pub threads: Option<usize>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            m: 16,
            k_max: 8,
            frac_bits: DEFAULT_FRAC_BITS,
            threads: None,
            seed: DEFAULT_SEED,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !SUPPORTED_M.contains(&self.m) {
            return Err(Error::InvalidParameter(format!(
                "unsupported measurement count {} (expected one of 16, 32, 48)",
                self.m
            )));
        }
        if !FRAC_BITS_RANGE.contains(&self.frac_bits) {
            return Err(Error::InvalidParameter(format!(
                "fraction bits {} outside 8..=12",
                self.frac_bits
            )));
        }
        if self.k_max == 0 || self.k_max > self.m {
            return Err(Error::InvalidParameter(format!(
                "k_max {} must lie in 1..={}",
                self.k_max, self.m
            )));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidParameter("threads must be at least 1".into()));
        }
        Ok(())
    }

    pub fn rate(&self) -> f64 {
        self.m as f64 / BLOCK_LEN as f64
    }

    pub fn decoder_config(&self) -> DecoderConfig {
        DecoderConfig::new(self.m)
            .with_frac_bits(self.frac_bits)
            .with_k_max(self.k_max)
    }
}

/// Maps a sampling rate to its measurement count.
pub fn rate_to_m(rate: f64) -> Result<usize> {
    SUPPORTED_M
        .iter()
        .copied()
        .find(|&m| (m as f64 / BLOCK_LEN as f64 - rate).abs() < 1e-9)
        .ok_or_else(|| {
            Error::InvalidParameter(format!(
                "unsupported measurement count for rate {rate} (expected 0.25, 0.5 or 0.75)"
            ))
        })
}

#[derive(Parser, Debug)]
#[command(
    name = "csomp",
    version,
    about = "Block compressed-sensing image codec"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Measurements per 8x8 block (16, 32 or 48).
    #[arg(short = 'm', long = "measurements", conflicts_with = "rate")]
    pub measurements: Option<usize>,
    /// Sampling rate m/64 (0.25, 0.5 or 0.75).
    #[arg(long)]
    pub rate: Option<f64>,
    /// Fraction bits of the fixed-point datapath.
    #[arg(long = "frac-bits", default_value_t = DEFAULT_FRAC_BITS)]
    pub frac_bits: u32,
    /// Sparsity cap; defaults to m/2.
    #[arg(long = "k-max")]
    pub k_max: Option<usize>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

impl CommonArgs {
    pub fn run_config(&self) -> Result<RunConfig> {
        let m = match (self.measurements, self.rate) {
            (Some(m), _) => m,
            (None, Some(rate)) => rate_to_m(rate)?,
            (None, None) => RunConfig::default().m,
        };
        let config = RunConfig {
            m,
            k_max: self.k_max.unwrap_or(m / 2),
            frac_bits: self.frac_bits,
            threads: self.threads,
            seed: self.seed,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Measure a PGM image and write a CSM1 stream.
    Compress {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Decode a CSM1 stream back to a PGM image.
    Reconstruct {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// PSNR and SSIM between two PGM images.
    Eval { reference: PathBuf, test: PathBuf },
    /// Structured codec against the Gaussian + DCT baseline on a corpus.
    CompareBaseline {
        corpus: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
        /// Evaluate every supported rate instead of a single one.
        #[arg(long = "all-rates")]
        all_rates: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Mean corpus PSNR for fraction bits 8 through 12.
    FixedSweep {
        corpus: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Throughput on seeded synthetic frames.
    Bench {
        /// Frame size: 1080p, 4k, 8k or all.
        #[arg(long, default_value = "all")]
        preset: String,
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

/// Parses `args` and runs the command, writing human-readable output to
/// `out`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}

fn open_input(path: &Path) -> Result<()> {
    if !path.exists() {
        return Err(Error::InvalidInput(format!(
            "{}: no such file",
            path.display()
        )));
    }
    Ok(())
}

fn load_image(path: &Path) -> Result<GrayImage> {
    open_input(path)?;
    load_pgm(path)
}

fn load_corpus_dir(path: &Path) -> Result<Vec<(String, GrayImage)>> {
    open_input(path)?;
    load_corpus(path)
}

pub fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Compress {
            input,
            output,
            common,
        } => {
            let config = common.run_config()?;
            let image = load_image(&input)?;
            let codec = Codec::new(config.decoder_config())?;
            let stream = with_threads(config.threads, || codec.compress(&image))?;
            write_stream(&stream, &output)?;
            writeln!(out, "blocks: {}", stream.block_count())?;
            writeln!(out, "measurements per block: {}", config.m)?;
            writeln!(out, "sampling rate: {}", config.rate())?;
            writeln!(out, "wrote {}", output.display())?;
        }
        Command::Reconstruct {
            input,
            output,
            common,
        } => {
            open_input(&input)?;
            let stream = read_stream(&input)?;
            let mut config = common.run_config()?;
            if common.measurements.is_none() && common.rate.is_none() {
                config.m = stream.m();
                config.k_max = common.k_max.unwrap_or(stream.m() / 2);
                config.validate()?;
            }
            let codec = Codec::new(config.decoder_config())?;
            let start = Instant::now();
            let (image, counters) = codec.reconstruct(&stream, config.threads)?;
            let secs = start.elapsed().as_secs_f64();
            save_pgm(&image, &output)?;
            writeln!(out, "blocks: {}", stream.block_count())?;
            writeln!(out, "wall time: {secs:.3} s")?;
            writeln!(
                out,
                "throughput: {:.0} blocks/s",
                stream.block_count() as f64 / secs.max(1e-9)
            )?;
            write_counters(out, &counters)?;
            writeln!(out, "wrote {}", output.display())?;
        }
        Command::Eval { reference, test } => {
            let a = load_image(&reference)?;
            let b = load_image(&test)?;
            writeln!(
                out,
                "PSNR: {:.2}, SSIM: {:.3}",
                psnr(&a, &b)?,
                ssim(&a, &b)?
            )?;
        }
        Command::CompareBaseline {
            corpus,
            common,
            all_rates,
            report,
        } => {
            let config = common.run_config()?;
            let images = load_corpus_dir(&corpus)?;
            let ms: Vec<usize> = if all_rates {
                SUPPORTED_M.to_vec()
            } else {
                vec![config.m]
            };
            let mut combined = None;
            for m in ms {
                let r = with_threads(config.threads, || compare_baseline(&images, m, config.seed))?;
                match combined.as_mut() {
                    None => combined = Some(r),
                    Some(c) => crate::reference::QualityReport::extend(c, r),
                }
            }
            let combined = combined.expect("at least one rate");
            write!(out, "{}", combined.to_text())?;
            if let Some(path) = report {
                combined.write_csv(&path)?;
                writeln!(out, "report: {}", path.display())?;
            }
        }
        Command::FixedSweep {
            corpus,
            common,
            report,
        } => {
            let config = common.run_config()?;
            let images = load_corpus_dir(&corpus)?;
            let sweep = with_threads(config.threads, || {
                fixed_sweep(&images, config.m, FRAC_BITS_RANGE)
            })?;
            write!(out, "{}", sweep.to_text())?;
            if let Some(path) = report {
                sweep.write_csv(&path)?;
                writeln!(out, "report: {}", path.display())?;
            }
        }
        Command::Bench {
            preset,
            common,
            report,
        } => {
            let config = common.run_config()?;
            let presets = BenchPreset::parse_list(&preset)?;
            let mut reports = Vec::new();
            for p in presets {
                let (r, _) = run_bench(p, &config)?;
                writeln!(out, "{}", r.summary())?;
                reports.push(r);
            }
            if let Some(path) = report {
                BenchReport::write_csv(&reports, &path)?;
                writeln!(out, "report: {}", path.display())?;
            }
        }
    }
    Ok(())
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T> + Send,
) -> Result<T> {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(f),
    }
}

fn write_counters(out: &mut dyn Write, c: &OpCounters) -> io::Result<()> {
    writeln!(
        out,
        "ops: adds: {}, subs: {}, shifts: {}, compares: {}, const_mults: {}, divisions: {}",
        c.adds, c.subs, c.shifts, c.compares, c.const_mults, c.divisions
    )
}
