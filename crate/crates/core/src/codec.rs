use crate::decoder::{Decoder, DecoderConfig};
use crate::encoder::{compress, GrayImage, MeasurementStream, BLOCK_LEN};
use crate::error::Result;
use crate::fixedpoint::OpCounters;
use crate::sensing::MeasurementMatrix;

/// Encoder and decoder sharing one configuration.
#[derive(Clone, Debug)]
pub struct Codec {
    phi: MeasurementMatrix,
    decoder: Decoder,
}

impl Codec {
    pub fn new(config: DecoderConfig) -> Result<Self> {
        let phi = MeasurementMatrix::new(config.m, BLOCK_LEN)?;
        let decoder = Decoder::new(config)?;
        Ok(Self { phi, decoder })
    }

    pub fn measurement_matrix(&self) -> &MeasurementMatrix {
        &self.phi
    }

    pub fn decoder(&self) -> &Decoder {
        &self.decoder
    }

    pub fn compress(&self, image: &GrayImage) -> Result<MeasurementStream> {
        compress(image, &self.phi)
    }

    pub fn reconstruct(
        &self,
        stream: &MeasurementStream,
        threads: Option<usize>,
    ) -> Result<(GrayImage, OpCounters)> {
        self.decoder.reconstruct_image(stream, threads)
    }

    pub fn roundtrip(&self, image: &GrayImage, threads: Option<usize>) -> Result<GrayImage> {
        let stream = self.compress(image)?;
        Ok(self.reconstruct(&stream, threads)?.0)
    }
}
