use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::codec::Codec;
use crate::decoder::DecoderConfig;
use crate::encoder::{GrayImage, BLOCK_LEN};
use crate::error::{Error, Result};
use crate::reference::{psnr, ssim};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub frac_bits: u32,
    pub psnr: f64,
    pub ssim: f64,
    /// PSNR gain over the previous row.
    pub increment: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub m: usize,
    pub images: usize,
    pub rows: Vec<SweepRow>,
    /// Mean PSNR and SSIM of the default decoder configuration.
    pub production: (f64, f64),
    pub production_config: DecoderConfig,
}

impl SweepReport {
    pub fn increments(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.increment).collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "fixed-point sweep: m={} rate={} images={}",
            self.m,
            self.m as f64 / BLOCK_LEN as f64,
            self.images
        );
        let _ = writeln!(
            s,
            "word width: datapath and LUT constants at F bits, round-to-nearest"
        );
        for r in &self.rows {
            let inc = r
                .increment
                .map_or_else(|| "-".to_string(), |d| format!("{d:+.4}"));
            let _ = writeln!(
                s,
                "F={:2} psnr={:.4} ssim={:.4} increment={inc}",
                r.frac_bits, r.psnr, r.ssim
            );
        }
        let _ = writeln!(
            s,
            "default decoder (F={}, LUT {} bits): psnr={:.4} ssim={:.4}",
            self.production_config.frac_bits,
            self.production_config.lut_frac_bits,
            self.production.0,
            self.production.1
        );
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
        w.write_record(["frac_bits", "lut_frac_bits", "psnr", "ssim", "increment"])
            .map_err(csv_error)?;
        for r in &self.rows {
            w.write_record([
                r.frac_bits.to_string(),
                r.frac_bits.to_string(),
                format!("{:.6}", r.psnr),
                format!("{:.6}", r.ssim),
                r.increment.map_or_else(String::new, |d| format!("{d:.6}")),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn mean_quality(corpus: &[(String, GrayImage)], config: DecoderConfig) -> Result<(f64, f64)> {
    let codec = Codec::new(config)?;
    let scores: Vec<(f64, f64)> = corpus
        .par_iter()
        .map(|(_, image)| {
            let rec = codec.roundtrip(image, None)?;
            Ok((psnr(image, &rec)?, ssim(image, &rec)?))
        })
        .collect::<Result<_>>()?;
    let n = scores.len() as f64;
    let (p, s) = scores
        .iter()
        .fold((0.0, 0.0), |(p, s), (a, b)| (p + a, s + b));
    Ok((p / n, s / n))
}

/// Mean corpus quality at each fraction width in `bits`, with every
/// fixed-point word (LUT constants included) at that width.
pub fn fixed_sweep(
    corpus: &[(String, GrayImage)],
    m: usize,
    bits: impl IntoIterator<Item = u32>,
) -> Result<SweepReport> {
    if corpus.is_empty() {
        return Err(Error::InvalidInput("empty corpus".into()));
    }
    let mut rows: Vec<SweepRow> = Vec::new();
    for frac_bits in bits {
        let (p, s) = mean_quality(corpus, DecoderConfig::new(m).with_uniform_width(frac_bits))?;
        let increment = rows.last().map(|prev| p - prev.psnr);
        rows.push(SweepRow {
            frac_bits,
            psnr: p,
            ssim: s,
            increment,
        });
    }
    let production_config = DecoderConfig::new(m);
    let production = mean_quality(corpus, production_config.clone())?;
    Ok(SweepReport {
        m,
        images: corpus.len(),
        rows,
        production,
        production_config,
    })
}
