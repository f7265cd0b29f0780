use std::path::Path;

use csomp::encoder::{decode_pgm, encode_pgm, load_pgm, MeasurementStream};
use csomp::reference::psnr;
use csomp::{Codec, DecoderConfig, GrayImage};

fn camera() -> GrayImage {
    load_pgm(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/corpus/camera.pgm")).unwrap()
}

#[test]
fn quality_improves_with_measurements() {
    let image = camera();
    let scores: Vec<f64> = [16, 32, 48]
        .into_iter()
        .map(|m| {
            let codec = Codec::new(DecoderConfig::new(m)).unwrap();
            psnr(&image, &codec.roundtrip(&image, None).unwrap()).unwrap()
        })
        .collect();
    assert!(scores[0] > 20.0, "{scores:?}");
    assert!(scores[0] < scores[1] && scores[1] < scores[2], "{scores:?}");
}

#[test]
fn stream_survives_serialization() {
    let codec = Codec::new(DecoderConfig::new(16)).unwrap();
    let image = camera();
    let stream = codec.compress(&image).unwrap();
    let reparsed = MeasurementStream::from_bytes(&stream.to_bytes()).unwrap();
    assert_eq!(reparsed, stream);
    let a = codec.reconstruct(&stream, Some(1)).unwrap();
    let b = codec.reconstruct(&reparsed, Some(3)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn non_multiple_of_eight_dimensions_are_preserved() {
    let data: Vec<u8> = (0..13 * 11).map(|i| (i * 37 % 251) as u8).collect();
    let image = GrayImage::new(13, 11, data).unwrap();
    let codec = Codec::new(DecoderConfig::new(48)).unwrap();
    let stream = codec.compress(&image).unwrap();
    assert_eq!(stream.block_count(), 4);
    let out = codec.reconstruct(&stream, None).unwrap().0;
    assert_eq!((out.width(), out.height()), (13, 11));
    assert_eq!(decode_pgm(&encode_pgm(&out)).unwrap(), out);
}
