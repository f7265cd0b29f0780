//! Block compressed-sensing image codec.
//!
//! 8x8 grayscale blocks are measured with binary Walsh-Hadamard rows and
//! reconstructed by an orthogonal matching pursuit that runs entirely on
//! add, shift, compare and LUT-constant multiply operations in fixed point.
//! A floating-point OMP, a Gaussian + DCT baseline and PSNR/SSIM metrics are
//! included for validation.

pub mod cli;
pub mod codec;
pub mod decoder;
pub mod encoder;
pub mod error;
pub mod fixedpoint;
pub mod reference;
pub mod sensing;
pub mod transform;

pub use codec::Codec;
pub use decoder::{Decoder, DecoderConfig, SparseSolution};
pub use encoder::{GrayImage, MeasurementStream};
pub use error::{Error, Result};
pub use fixedpoint::{Datapath, Fixed, OpCounters};
