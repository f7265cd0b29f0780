//! Floating-point oracles, the Gaussian + DCT baseline and quality metrics.

mod metrics;
mod omp;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

pub use metrics::{mse, psnr, ssim};
pub use omp::{omp_reference, solve_pivoted, DenseSensingMatrix, OmpResult, OmpStep};

use crate::codec::Codec;
use crate::decoder::DecoderConfig;
use crate::encoder::{assemble_blocks, load_pgm, split_blocks, Block, GrayImage, BLOCK_LEN};
use crate::error::{Error, Result};

/// Generator used for every Gaussian draw; recorded in reports.
pub const GAUSSIAN_PRNG: &str = "ChaCha8Rng (rand_chacha 0.9) + rand_distr 0.5 Normal";

pub const STRUCTURED_LABEL: &str = "structured";
pub const GAUSSIAN_LABEL: &str = "gaussian-dct";

/// `m x n` matrix with i.i.d. `N(0, 1/m)` entries, reproducible from `seed`.
pub fn gaussian_matrix(m: usize, n: usize, seed: u64) -> Result<DenseSensingMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0 / (m.max(1) as f64).sqrt())
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    DenseSensingMatrix::new(m, n, (0..m * n).map(|_| normal.sample(&mut rng)).collect())
}

/// Orthonormal DCT-II matrix, row-major; row `k` is the `k`-th basis vector.
pub fn dct_matrix(n: usize) -> Vec<f64> {
    let nf = n as f64;
    let mut out = Vec::with_capacity(n * n);
    for k in 0..n {
        let alpha = if k == 0 {
            (1.0 / nf).sqrt()
        } else {
            (2.0 / nf).sqrt()
        };
        for i in 0..n {
            let angle = std::f64::consts::PI * (2 * i + 1) as f64 * k as f64 / (2.0 * nf);
            out.push(alpha * angle.cos());
        }
    }
    out
}

/// Block codec with Gaussian measurements and a 64-point DCT sparsifying
/// basis, decoded with [`omp_reference`].
#[derive(Clone, Debug)]
pub struct GaussianDctCodec {
    k_max: usize,
    phi: DenseSensingMatrix,
    sensing: DenseSensingMatrix,
    basis: Vec<f64>,
}

impl GaussianDctCodec {
    pub fn new(m: usize, k_max: usize, seed: u64) -> Result<Self> {
        let phi = gaussian_matrix(m, BLOCK_LEN, seed)?;
        let basis = dct_matrix(BLOCK_LEN);
        // x = C^T theta, so A = Phi C^T.
        let synthesis: Vec<f64> = (0..BLOCK_LEN)
            .flat_map(|i| (0..BLOCK_LEN).map(move |k| (i, k)))
            .map(|(i, k)| basis[k * BLOCK_LEN + i])
            .collect();
        let sensing = phi.matmul(&synthesis, BLOCK_LEN)?;
        Ok(Self {
            k_max,
            phi,
            sensing,
            basis,
        })
    }

    pub fn sensing(&self) -> &DenseSensingMatrix {
        &self.sensing
    }

    pub fn roundtrip_block(&self, block: &Block) -> Result<Block> {
        let x: Vec<f64> = block.iter().map(|&p| f64::from(p)).collect();
        let y = self.phi.mul_vec(&x);
        let tol = 1e-9 * omp::norm2(&y);
        let theta = omp_reference(&self.sensing, &y, self.k_max, tol)?.to_dense(BLOCK_LEN);
        let mut out = [0u8; BLOCK_LEN];
        for (i, px) in out.iter_mut().enumerate() {
            let v: f64 = (0..BLOCK_LEN)
                .map(|k| self.basis[k * BLOCK_LEN + i] * theta[k])
                .sum();
            *px = v.round().clamp(0.0, 255.0) as u8;
        }
        Ok(out)
    }

    pub fn roundtrip(&self, image: &GrayImage) -> Result<GrayImage> {
        let blocks = split_blocks(image)?;
        let decoded = blocks
            .par_iter()
            .enumerate()
            .map(|(i, b)| self.roundtrip_block(b).map_err(|e| e.in_block(i)))
            .collect::<Result<Vec<_>>>()?;
        assemble_blocks(&decoded, image.width(), image.height())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QualityRow {
    pub image: String,
    pub rate: f64,
    pub matrix: String,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QualityReport {
    pub rows: Vec<QualityRow>,
    pub metadata: Vec<(String, String)>,
}

impl QualityReport {
    /// Mean PSNR and SSIM over rows matching `matrix` and `rate`.
    pub fn mean(&self, matrix: &str, rate: f64) -> Option<(f64, f64)> {
        let rows: Vec<&QualityRow> = self
            .rows
            .iter()
            .filter(|r| r.matrix == matrix && (r.rate - rate).abs() < 1e-9)
            .collect();
        if rows.is_empty() {
            return None;
        }
        let n = rows.len() as f64;
        Some((
            rows.iter().map(|r| r.psnr).sum::<f64>() / n,
            rows.iter().map(|r| r.ssim).sum::<f64>() / n,
        ))
    }

    pub fn extend(&mut self, other: QualityReport) {
        self.rows.extend(other.rows);
        for kv in other.metadata {
            if !self.metadata.contains(&kv) {
                self.metadata.push(kv);
            }
        }
    }

    /// `key: value` lines: metadata, then one line per row, then means.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "{k}: {v}");
        }
        for r in &self.rows {
            let _ = writeln!(
                out,
                "row: image={} rate={:.2} matrix={} psnr={:.4} ssim={:.4}",
                r.image, r.rate, r.matrix, r.psnr, r.ssim
            );
        }
        let mut keys: Vec<(String, f64)> = Vec::new();
        for r in &self.rows {
            if !keys
                .iter()
                .any(|(m, rate)| *m == r.matrix && (*rate - r.rate).abs() < 1e-9)
            {
                keys.push((r.matrix.clone(), r.rate));
            }
        }
        for (matrix, rate) in keys {
            if let Some((p, s)) = self.mean(&matrix, rate) {
                let _ = writeln!(
                    out,
                    "mean: matrix={matrix} rate={rate:.2} psnr={p:.4} ssim={s:.4}"
                );
            }
        }
        out
    }

    /// Tabular form with columns `image,rate,matrix,psnr,ssim`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
        w.write_record(["image", "rate", "matrix", "psnr", "ssim"])
            .map_err(csv_error)?;
        for r in &self.rows {
            w.write_record([
                r.image.clone(),
                format!("{:.2}", r.rate),
                r.matrix.clone(),
                format!("{:.6}", r.psnr),
                format!("{:.6}", r.ssim),
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

/// Loads every `.pgm` in `dir`, sorted by file name.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Vec<(String, GrayImage)>> {
    let mut paths: Vec<_> = fs::read_dir(dir.as_ref())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no .pgm images in {}",
            dir.as_ref().display()
        )));
    }
    paths
        .into_iter()
        .map(|p| {
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok((name, load_pgm(&p)?))
        })
        .collect()
}

/// Runs the structured pipeline and the Gaussian + DCT baseline on every
/// image at `m` measurements per block, both with `k_max = m / 2`.
pub fn compare_baseline(
    corpus: &[(String, GrayImage)],
    m: usize,
    seed: u64,
) -> Result<QualityReport> {
    if corpus.is_empty() {
        return Err(Error::InvalidInput("empty corpus".into()));
    }
    let config = DecoderConfig::new(m);
    let k_max = config.k_max;
    let structured = Codec::new(config)?;
    let gaussian = GaussianDctCodec::new(m, k_max, seed)?;
    let rate = m as f64 / BLOCK_LEN as f64;

    let rows: Vec<Vec<QualityRow>> = corpus
        .par_iter()
        .map(|(name, image)| -> Result<Vec<QualityRow>> {
            let ours = structured.roundtrip(image, None)?;
            let base = gaussian.roundtrip(image)?;
            Ok(vec![
                QualityRow {
                    image: name.clone(),
                    rate,
                    matrix: STRUCTURED_LABEL.into(),
                    psnr: psnr(image, &ours)?,
                    ssim: ssim(image, &ours)?,
                },
                QualityRow {
                    image: name.clone(),
                    rate,
                    matrix: GAUSSIAN_LABEL.into(),
                    psnr: psnr(image, &base)?,
                    ssim: ssim(image, &base)?,
                },
            ])
        })
        .collect::<Result<_>>()?;

    Ok(QualityReport {
        rows: rows.into_iter().flatten().collect(),
        metadata: vec![
            ("seed".into(), seed.to_string()),
            ("prng".into(), GAUSSIAN_PRNG.into()),
            ("k_max".into(), k_max.to_string()),
            (
                "baseline_geometry".into(),
                "8x8 blocks, 64-point DCT-II on row-major block vector, same k_max".into(),
            ),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dct_is_orthonormal() {
        let c = dct_matrix(4);
        for v in &c[..4] {
            assert!((v - 0.5).abs() < 1e-15);
        }
        for n in [4, 8, 64] {
            let c = dct_matrix(n);
            for i in 0..n {
                for j in 0..n {
                    let dot: f64 = (0..n).map(|k| c[k * n + i] * c[k * n + j]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn gaussian_is_seeded_and_centred() {
        assert_eq!(
            gaussian_matrix(16, 64, 1).unwrap(),
            gaussian_matrix(16, 64, 1).unwrap()
        );
        assert_ne!(
            gaussian_matrix(16, 64, 1).unwrap(),
            gaussian_matrix(16, 64, 2).unwrap()
        );
        // 100_000 entries with variance 1/16: mean within 3 sigma of zero.
        let g = gaussian_matrix(16, 6250, 3).unwrap();
        let n = 16.0 * 6250.0;
        let mean: f64 = (0..16)
            .flat_map(|i| (0..6250).map(move |j| (i, j)))
            .map(|(i, j)| g.get(i, j))
            .sum::<f64>()
            / n;
        let sigma = (1.0 / 16.0f64).sqrt() / n.sqrt();
        assert!(mean.abs() < 3.0 * sigma, "{mean}");
    }

    #[test]
    fn baseline_report_single_image() {
        let img = GrayImage::new(
            24,
            16,
            (0..24 * 16)
                .map(|i: usize| ((i % 24) * 8 + (i / 24) * 3) as u8)
                .collect(),
        )
        .unwrap();
        let report = compare_baseline(&[("ramp".into(), img)], 16, 1).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(
            report
                .rows
                .iter()
                .filter(|r| r.matrix == STRUCTURED_LABEL)
                .count(),
            1
        );
        let text = report.to_text();
        assert!(text.contains("seed: 1"));
        assert!(text.contains("mean: matrix=structured rate=0.25"));
        assert!(compare_baseline(&[], 16, 1).is_err());
    }

    #[test]
    fn csv_report() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let report = QualityReport {
            rows: vec![QualityRow {
                image: "a".into(),
                rate: 0.25,
                matrix: STRUCTURED_LABEL.into(),
                psnr: 30.0,
                ssim: 0.9,
            }],
            metadata: vec![],
        };
        report.write_csv(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "image,rate,matrix,psnr,ssim\na,0.25,structured,30.000000,0.900000\n"
        );
    }
}
