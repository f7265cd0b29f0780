//! Image ingestion, 8x8 blocking and measurement.

mod pgm;
mod stream;

use rayon::prelude::*;

pub use pgm::{decode_pgm, encode_pgm, load_pgm, save_pgm, GrayImage};
pub use stream::{read_stream, write_stream, MeasurementStream, HEADER_LEN, MAGIC, VERSION};

use crate::error::{Error, Result};
use crate::sensing::MeasurementMatrix;

pub const BLOCK_SIDE: usize = 8;
pub const BLOCK_LEN: usize = BLOCK_SIDE * BLOCK_SIDE;

/// One 8x8 block, pixels row-major.
pub type Block = [u8; BLOCK_LEN];

/// Number of blocks across and down.
pub fn block_grid(width: usize, height: usize) -> Result<(usize, usize)> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidInput(format!(
            "zero-sized image {width}x{height}"
        )));
    }
    Ok((width.div_ceil(BLOCK_SIDE), height.div_ceil(BLOCK_SIDE)))
}

/// Splits an image into blocks in row-major block order. Partial blocks at
/// the right and bottom edges are filled by replicating the last column/row.
pub fn split_blocks(image: &GrayImage) -> Result<Vec<Block>> {
    let (bx, by) = block_grid(image.width(), image.height())?;
    let (w, h) = (image.width(), image.height());
    Ok((0..bx * by)
        .map(|b| {
            let (ox, oy) = ((b % bx) * BLOCK_SIDE, (b / bx) * BLOCK_SIDE);
            let mut block = [0u8; BLOCK_LEN];
            for (i, px) in block.iter_mut().enumerate() {
                let x = (ox + i % BLOCK_SIDE).min(w - 1);
                let y = (oy + i / BLOCK_SIDE).min(h - 1);
                *px = image.get(x, y);
            }
            block
        })
        .collect())
}

/// Inverse of [`split_blocks`]: places blocks and crops the padding.
pub fn assemble_blocks(blocks: &[Block], width: usize, height: usize) -> Result<GrayImage> {
    let (bx, by) = block_grid(width, height)?;
    if blocks.len() != bx * by {
        return Err(Error::InvalidInput(format!(
            "{width}x{height} image needs {} blocks, got {}",
            bx * by,
            blocks.len()
        )));
    }
    let mut data = vec![0u8; width * height];
    for (y, row) in data.chunks_exact_mut(width).enumerate() {
        let (brow, yy) = (y / BLOCK_SIDE, y % BLOCK_SIDE);
        for (x, px) in row.iter_mut().enumerate() {
            *px = blocks[brow * bx + x / BLOCK_SIDE][yy * BLOCK_SIDE + x % BLOCK_SIDE];
        }
    }
    GrayImage::new(width, height, data)
}

/// Measurement vector `y = Phi * x` of one block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockMeasurements {
    pub y: Vec<u16>,
}

/// `y_i` is the sum of the pixels selected by row `i` of the binary matrix;
/// additions only.
pub fn measure_block(x: &[u8], phi: &MeasurementMatrix) -> BlockMeasurements {
    debug_assert_eq!(x.len(), phi.n());
    let y = (0..phi.m())
        .map(|i| {
            phi.row(i)
                .iter()
                .zip(x)
                .filter(|(&bit, _)| bit == 1)
                .map(|(_, &p)| u32::from(p))
                .sum::<u32>() as u16
        })
        .collect();
    BlockMeasurements { y }
}

/// Measures every block of `image`; blocks are processed in parallel and
/// emitted in scan order.
pub fn compress(image: &GrayImage, phi: &MeasurementMatrix) -> Result<MeasurementStream> {
    if phi.n() != BLOCK_LEN {
        return Err(Error::InvalidParameter(format!(
            "measurement matrix has {} columns, blocks have {BLOCK_LEN} pixels",
            phi.n()
        )));
    }
    let blocks = split_blocks(image)?;
    let data: Vec<u16> = blocks
        .par_iter()
        .flat_map_iter(|b| measure_block(b, phi).y)
        .collect();
    MeasurementStream::new(phi.m(), image.width(), image.height(), data)
}
