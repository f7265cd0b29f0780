use std::path::{Path, PathBuf};

use csomp::encoder::load_pgm;
use csomp::reference::{psnr, ssim};

fn golden() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/golden")
}

// Values in metrics.csv were produced by scikit-image
// (peak_signal_noise_ratio, structural_similarity with gaussian_weights,
// sigma 1.5, population covariance, data_range 255).
#[test]
fn metrics_match_stored_scikit_image_values() {
    let mut reader = csv::Reader::from_path(golden().join("metrics.csv")).unwrap();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.unwrap();
        let a = load_pgm(golden().join(&record[0])).unwrap();
        let b = load_pgm(golden().join(&record[1])).unwrap();
        let want_psnr: f64 = record[2].parse().unwrap();
        let want_ssim: f64 = record[3].parse().unwrap();
        let got_psnr = psnr(&a, &b).unwrap();
        let got_ssim = ssim(&a, &b).unwrap();
        assert!(
            (got_psnr - want_psnr).abs() < 0.01,
            "{:?}: psnr {got_psnr} vs {want_psnr}",
            record
        );
        assert!(
            (got_ssim - want_ssim).abs() < 1e-4,
            "{:?}: ssim {got_ssim} vs {want_ssim}",
            record
        );
        rows += 1;
    }
    assert_eq!(rows, 3);
}
