//! Multiplier-free OMP reconstruction against the arrow sensing matrix.
//!
//! Every block starts with column 0 already selected, so the first pass
//! goes straight to least squares. Each later pass picks the unselected
//! column with the largest residual magnitude (the dot product `A^T r`
//! reduces to `V * r_j` for `j > 0`, and the common factor `V` is dropped),
//! appends one new entry to `A_S^T y`, and re-solves the arrow system with a
//! single LUT multiplication. Decoding stops when the residual is exactly
//! zero or the active set reaches `k_max`.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::encoder::{assemble_blocks, Block, GrayImage, MeasurementStream, BLOCK_LEN};
use crate::error::{Error, Result};
use crate::fixedpoint::{Datapath, Fixed, OpCounters, Rounding, DEFAULT_FRAC_BITS};
use crate::sensing::{GramInverseLut, SensingMatrix};
use crate::transform::{inverse_transform, log2_exact};

/// Fraction width of the stored `s_t` constants.
pub const DEFAULT_LUT_FRAC_BITS: u32 = 30;

#[derive(Clone, Debug, PartialEq)]
pub struct DecoderConfig {
    pub m: usize,
    pub k_max: usize,
    /// Fraction bits of the datapath words.
    pub frac_bits: u32,
    /// Fraction bits of the LUT constants.
    pub lut_frac_bits: u32,
    pub lut_rounding: Rounding,
    /// Optional tolerance on `|r_i|` (raw units) for the zero-residual exit.
    /// `None` demands every residual word be exactly zero.
    pub residual_epsilon: Option<i32>,
}

impl DecoderConfig {
    /// Defaults for `m` measurements per block: `k_max = m / 2`, 11 fraction
    /// bits, exact zero-residual exit.
    pub fn new(m: usize) -> Self {
        Self {
            m,
            k_max: (m / 2).max(1),
            frac_bits: DEFAULT_FRAC_BITS,
            lut_frac_bits: DEFAULT_LUT_FRAC_BITS,
            lut_rounding: Rounding::Up,
            residual_epsilon: None,
        }
    }

    pub fn with_frac_bits(mut self, bits: u32) -> Self {
        self.frac_bits = bits;
        self
    }

    pub fn with_k_max(mut self, k_max: usize) -> Self {
        self.k_max = k_max;
        self
    }

    /// Every fixed-point word, LUT constants included, at `bits` fraction
    /// bits with round-to-nearest quantization of the constants.
    pub fn with_uniform_width(mut self, bits: u32) -> Self {
        self.frac_bits = bits;
        self.lut_frac_bits = bits;
        self.lut_rounding = Rounding::Nearest;
        self
    }
}

/// Recovered support and coefficients for one block. Support entries are
/// sequency indices in selection order; `support[0]` is always 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseSolution {
    pub support: Vec<usize>,
    pub coeffs: Vec<Fixed>,
}

impl SparseSolution {
    /// Length-`n` coefficient vector, zero outside the support.
    pub fn to_dense(&self, n: usize) -> Vec<Fixed> {
        let mut theta = vec![Fixed::ZERO; n];
        for (&j, &c) in self.support.iter().zip(&self.coeffs) {
            theta[j] = c;
        }
        theta
    }
}

/// Iteration state of one block.
#[derive(Clone, Debug)]
pub struct DecodeState {
    pub residual: Vec<Fixed>,
    pub chosen: Vec<usize>,
    pub aty: Vec<Fixed>,
    pub theta: Vec<Fixed>,
    pub finished: bool,
    selected: Vec<bool>,
}

impl DecodeState {
    pub fn iteration(&self) -> usize {
        self.chosen.len()
    }
}

#[derive(Clone, Debug)]
pub struct BlockReconstruction {
    pub pixels: Block,
    pub solution: SparseSolution,
}

#[derive(Clone, Debug)]
pub struct Decoder {
    config: DecoderConfig,
    sensing: SensingMatrix,
    lut: GramInverseLut,
    // V = 2^-v_shift
    v_shift: u32,
}

impl Decoder {
    pub fn new(config: DecoderConfig) -> Result<Self> {
        Datapath::new(config.frac_bits)?;
        let sensing = SensingMatrix::new(config.m, BLOCK_LEN)?;
        let lut = GramInverseLut::new(
            &sensing,
            config.k_max,
            config.lut_frac_bits,
            config.lut_rounding,
        )?;
        let v = sensing.v();
        let v_shift = log2_exact(*v.denom() as usize)
            .ok()
            .filter(|_| *v.numer() == 1)
            .ok_or_else(|| Error::InvalidParameter(format!("V = {v} is not a power of two")))?;
        Ok(Self {
            config,
            sensing,
            lut,
            v_shift,
        })
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    pub fn lut(&self) -> &GramInverseLut {
        &self.lut
    }

    pub fn sensing(&self) -> &SensingMatrix {
        &self.sensing
    }

    pub fn datapath(&self) -> Datapath {
        Datapath::new(self.config.frac_bits).expect("validated in Decoder::new")
    }

    /// Column selection for passes after the first: argmax over unselected
    /// `j` of `|r_j|`, with the DC slot forced to zero. Reduced by a
    /// pairwise comparison tree; ties go to the lower index.
    pub fn dp_argmax(
        &self,
        dp: &mut Datapath,
        residual: &[Fixed],
        selected: &[bool],
    ) -> Result<usize> {
        let mut level: Vec<(usize, Option<Fixed>)> = Vec::with_capacity(residual.len());
        for (j, &r) in residual.iter().enumerate() {
            let candidate = if j == 0 || selected[j] {
                None
            } else {
                Some(dp.abs(r)?)
            };
            level.push((j, candidate));
        }
        while level.len() > 1 {
            level = level
                .chunks(2)
                .map(|pair| match pair {
                    [a, b] => match (a.1, b.1) {
                        (Some(x), Some(y)) => {
                            if dp.cmp(y, x) == Ordering::Greater {
                                *b
                            } else {
                                *a
                            }
                        }
                        (None, Some(_)) => *b,
                        _ => *a,
                    },
                    [a] => *a,
                    _ => unreachable!(),
                })
                .collect();
        }
        match level.first() {
            Some(&(j, Some(_))) => Ok(j),
            _ => Err(Error::Internal(
                "no unselected column left for selection".into(),
            )),
        }
    }

    /// New entry of `A_S^T y` for column `index`: `V (2 y_0 + y_1 + ... )`
    /// for the DC column, `V y_index` otherwise. `V` is a right shift.
    pub fn update_aty(&self, dp: &mut Datapath, index: usize, y: &[Fixed]) -> Result<Fixed> {
        let v = -(self.v_shift as i32);
        if index == 0 {
            let mut acc = dp.shift(y[0], 1)?;
            for &yi in &y[1..] {
                acc = dp.add(acc, yi)?;
            }
            dp.shift(acc, v)
        } else {
            dp.shift(y[index], v)
        }
    }

    /// Arrow-system solve `theta = G_t^{-1} b`, `b[0]` belonging to the DC
    /// column. With `d = b_0 - sum_{j>0} b_j`:
    /// `theta_0 = s_t d` and `theta_j = b_j / Q - s_t d`.
    pub fn solve_lsp(&self, dp: &mut Datapath, aty: &[Fixed]) -> Result<Vec<Fixed>> {
        let t = aty.len();
        if t == 0 || t > self.lut.k_max() {
            return Err(Error::Internal(format!(
                "active set of size {t} outside 1..={}",
                self.lut.k_max()
            )));
        }
        let mut d = aty[0];
        for &b in &aty[1..] {
            d = dp.sub(d, b)?;
        }
        let scaled = dp.mul_const(d, self.lut.s(t))?;
        let mut theta = Vec::with_capacity(t);
        theta.push(scaled);
        for &b in &aty[1..] {
            let wide = dp.shift(b, self.lut.inv_q_shift() as i32)?;
            theta.push(dp.sub(wide, scaled)?);
        }
        Ok(theta)
    }

    /// `r = y - A_S theta`: `r_0 = y_0 - 2V theta_0`,
    /// `r_i = y_i - V theta_0 - [i in S] V theta_i`.
    pub fn update_residual(
        &self,
        dp: &mut Datapath,
        y: &[Fixed],
        support: &[usize],
        theta: &[Fixed],
    ) -> Result<Vec<Fixed>> {
        let v = -(self.v_shift as i32);
        let dc = theta[0];
        let two_v_dc = if self.v_shift == 1 {
            dc
        } else {
            dp.shift(dc, v + 1)?
        };
        let v_dc = dp.shift(dc, v)?;
        let mut residual = Vec::with_capacity(y.len());
        residual.push(dp.sub(y[0], two_v_dc)?);
        for &yi in &y[1..] {
            residual.push(dp.sub(yi, v_dc)?);
        }
        for (&j, &c) in support.iter().zip(theta).skip(1) {
            let vc = dp.shift(c, v)?;
            residual[j] = dp.sub(residual[j], vc)?;
        }
        Ok(residual)
    }

    fn residual_is_zero(&self, dp: &mut Datapath, residual: &[Fixed]) -> Result<bool> {
        match self.config.residual_epsilon {
            None => Ok(residual.iter().all(|&r| dp.is_zero(r))),
            Some(eps) => {
                let eps = Fixed::from_raw(eps);
                for &r in residual {
                    let mag = dp.abs(r)?;
                    if dp.cmp(mag, eps) == Ordering::Greater {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    fn initial_state(&self, dp: &mut Datapath, y: &[Fixed]) -> Result<DecodeState> {
        let m = self.config.m;
        let mut selected = vec![false; m];
        selected[0] = true;
        let b0 = self.update_aty(dp, 0, y)?;
        Ok(DecodeState {
            residual: y.to_vec(),
            chosen: vec![0],
            aty: vec![b0],
            theta: Vec::new(),
            finished: false,
            selected,
        })
    }

    /// Runs the pursuit on one block's measurements.
    pub fn solve_block(&self, dp: &mut Datapath, measurements: &[u16]) -> Result<SparseSolution> {
        if measurements.len() != self.config.m {
            return Err(Error::InvalidInput(format!(
                "block has {} measurements, decoder expects {}",
                measurements.len(),
                self.config.m
            )));
        }
        let y = measurements
            .iter()
            .map(|&v| dp.from_int(i64::from(v)))
            .collect::<Result<Vec<_>>>()?;
        let mut state = self.initial_state(dp, &y)?;
        loop {
            state.theta = self.solve_lsp(dp, &state.aty)?;
            state.residual = self.update_residual(dp, &y, &state.chosen, &state.theta)?;
            if self.residual_is_zero(dp, &state.residual)? || state.iteration() == self.config.k_max
            {
                state.finished = true;
                break;
            }
            let next = self.dp_argmax(dp, &state.residual, &state.selected)?;
            let b = self.update_aty(dp, next, &y)?;
            state.selected[next] = true;
            state.chosen.push(next);
            state.aty.push(b);
        }
        Ok(SparseSolution {
            support: state.chosen,
            coeffs: state.theta,
        })
    }

    pub fn reconstruct_block(
        &self,
        dp: &mut Datapath,
        measurements: &[u16],
    ) -> Result<BlockReconstruction> {
        let solution = self.solve_block(dp, measurements)?;
        let theta = solution.to_dense(BLOCK_LEN);
        let pixels = inverse_transform(&theta, self.config.frac_bits)?;
        let stages = BLOCK_LEN.trailing_zeros() as u64;
        let half = (BLOCK_LEN as u64 / 2) * stages;
        dp.account(OpCounters {
            adds: half + BLOCK_LEN as u64,
            subs: half,
            shifts: BLOCK_LEN as u64,
            ..OpCounters::default()
        });
        Ok(BlockReconstruction {
            pixels: pixels.try_into().expect("64 pixels"),
            solution,
        })
    }

    /// Reconstructs every block of a stream. `threads = None` uses the
    /// global pool; output is identical for any worker count.
    pub fn reconstruct_image(
        &self,
        stream: &MeasurementStream,
        threads: Option<usize>,
    ) -> Result<(GrayImage, OpCounters)> {
        if stream.m() != self.config.m {
            return Err(Error::InvalidInput(format!(
                "stream carries m = {}, decoder configured for m = {}",
                stream.m(),
                self.config.m
            )));
        }
        let run = || -> Result<(GrayImage, OpCounters)> {
            let decoded: Vec<(Block, OpCounters)> = stream
                .blocks()
                .collect::<Vec<_>>()
                .par_iter()
                .enumerate()
                .map_init(
                    || self.datapath(),
                    |dp, (index, y)| {
                        let block = self
                            .reconstruct_block(dp, y)
                            .map_err(|e| e.in_block(index))?;
                        Ok((block.pixels, dp.take_counters()))
                    },
                )
                .collect::<Result<_>>()?;
            let counters = decoded.iter().map(|(_, c)| *c).sum();
            let blocks: Vec<Block> = decoded.into_iter().map(|(b, _)| b).collect();
            Ok((
                assemble_blocks(&blocks, stream.width(), stream.height())?,
                counters,
            ))
        };
        match threads {
            None => run(),
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
                .install(run),
        }
    }
}
