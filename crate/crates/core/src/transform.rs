//! Walsh-Hadamard matrices and the fast butterfly transform.
//!
//! The transform pair used throughout the codec is unnormalized:
//! `theta = W * x` and `x = W * theta / N`, where `W` is the sequency-ordered
//! Walsh matrix. Row `s` of `W` has exactly `s` sign changes, so low indices
//! carry the low-frequency content of a block. `W` is symmetric and satisfies
//! `W * W = N * I`, which is why one butterfly serves both directions.

use crate::error::{Error, Result};
use crate::fixedpoint::Fixed;

/// Row ordering of a Walsh-Hadamard matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum WalshOrder {
    /// Sylvester (natural, Hadamard) ordering.
    Natural,
    /// Rows sorted by number of sign changes.
    Sequency,
}

/// Dense `N x N` matrix of `+1/-1` entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalshMatrix {
    order: usize,
    ordering: WalshOrder,
    entries: Vec<i8>,
}

impl WalshMatrix {
    pub fn new(order: usize, ordering: WalshOrder) -> Result<Self> {
        let log2 = log2_exact(order)?;
        let perm = match ordering {
            WalshOrder::Natural => (0..order).collect(),
            WalshOrder::Sequency => sequency_permutation(order, log2),
        };
        let mut entries = Vec::with_capacity(order * order);
        for &row in &perm {
            entries.extend((0..order).map(|col| natural_entry(row, col)));
        }
        Ok(Self {
            order,
            ordering,
            entries,
        })
    }

    pub fn sequency(order: usize) -> Result<Self> {
        Self::new(order, WalshOrder::Sequency)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn ordering(&self) -> WalshOrder {
        self.ordering
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.entries[row * self.order + col]
    }

    pub fn row(&self, row: usize) -> &[i8] {
        &self.entries[row * self.order..(row + 1) * self.order]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i8]> {
        self.entries.chunks_exact(self.order)
    }
}

/// Sylvester Hadamard matrix `H_N`, with `H_1 = [1]` and
/// `H_2N = [[H_N, H_N], [H_N, -H_N]]`.
pub fn hadamard_natural(order: usize) -> Result<WalshMatrix> {
    WalshMatrix::new(order, WalshOrder::Natural)
}

/// Returns `p` such that natural Hadamard row `p[s]` has exactly `s` sign
/// changes.
pub fn sequency_order(order: usize) -> Result<Vec<usize>> {
    let log2 = log2_exact(order)?;
    Ok(sequency_permutation(order, log2))
}

/// Unnormalized Walsh-Hadamard transform `W * x` in the requested ordering.
///
/// Exact integer arithmetic; intermediate magnitudes grow by at most a factor
/// of `N`.
pub fn fwht(x: &[i64], ordering: WalshOrder) -> Result<Vec<i64>> {
    let log2 = log2_exact(x.len())?;
    let mut natural = x.to_vec();
    fwht_natural_in_place(&mut natural);
    Ok(match ordering {
        WalshOrder::Natural => natural,
        WalshOrder::Sequency => sequency_permutation(x.len(), log2)
            .into_iter()
            .map(|row| natural[row])
            .collect(),
    })
}

/// In-place natural-order butterfly. `data.len()` must be a power of two.
pub fn fwht_natural_in_place(data: &mut [i64]) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    let mut half = 1;
    while half < n {
        for start in (0..n).step_by(2 * half) {
            for i in start..start + half {
                let a = data[i];
                let b = data[i + half];
                data[i] = a + b;
                data[i + half] = a - b;
            }
        }
        half *= 2;
    }
}

/// Maps sequency-indexed fixed-point coefficients back to the pixel domain:
/// `x = W * theta / N`, rounded half-up to an integer and clamped to `[0, 255]`.
///
/// The division by `N` and the removal of the `frac_bits` fraction are a
/// single arithmetic right shift.
pub fn inverse_transform(theta: &[Fixed], frac_bits: u32) -> Result<Vec<u8>> {
    let log2 = log2_exact(theta.len())?;
    let raw: Vec<i64> = theta.iter().map(|c| i64::from(c.raw())).collect();
    // W is symmetric, so the sequency-ordered forward transform is also W * theta.
    let summed = fwht(&raw, WalshOrder::Sequency)?;
    let shift = log2 + frac_bits;
    let half = 1i64 << (shift - 1);
    Ok(summed
        .into_iter()
        .map(|v| ((v + half) >> shift).clamp(0, 255) as u8)
        .collect())
}

pub(crate) fn log2_exact(order: usize) -> Result<u32> {
    if order == 0 || !order.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "transform order {order} is not a power of two"
        )));
    }
    Ok(order.trailing_zeros())
}

#[inline]
fn natural_entry(row: usize, col: usize) -> i8 {
    if (row & col).count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

// Natural row for sequency s is the bit-reversed Gray code of s.
fn sequency_permutation(order: usize, log2: u32) -> Vec<usize> {
    (0..order)
        .map(|s| {
            let gray = s ^ (s >> 1);
            if log2 == 0 {
                gray
            } else {
                gray.reverse_bits() >> (usize::BITS - log2)
            }
        })
        .collect()
}
