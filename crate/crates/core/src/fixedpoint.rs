//! Q-format fixed-point datapath used by the decoder.
//!
//! Values are `i32` words with a configurable number of fraction bits
//! (11 by default, leaving 20 integer bits and a sign). Every arithmetic
//! primitive goes through a [`Datapath`], which checks for overflow and
//! tallies the operation in its [`OpCounters`]. The datapath offers add,
//! subtract, shift, compare and multiplication by a stored LUT constant.
//! There is no division primitive and no general multiplier.
//!
//! Worst-case magnitudes at `m = 48`, 12 fraction bits: a measurement is at
//! most `64 * 255 = 16320`, non-DC measurements at most `32 * 255 = 8160`,
//! so the widest accumulator (the index-0 correlation before its halving
//! shift) is `2 * 16320 + 47 * 8160 = 416_160 < 2^19`, which fits the
//! 19 integer bits left at that width. Coefficients are bounded by
//! `|W x|_inf <= 16320`.

use std::cmp::Ordering;
use std::ops::AddAssign;

use num_rational::Ratio;

use crate::error::{Error, Result};

pub const DEFAULT_FRAC_BITS: u32 = 11;
pub const MAX_FRAC_BITS: u32 = 20;

/// Raw fixed-point word. The fraction width lives in the [`Datapath`] that
/// produced it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fixed(i32);

impl Fixed {
    pub const ZERO: Fixed = Fixed(0);

    pub const fn from_raw(raw: i32) -> Self {
        Fixed(raw)
    }

    pub const fn raw(self) -> i32 {
        self.0
    }

    pub fn to_f64(self, frac_bits: u32) -> f64 {
        f64::from(self.0) / f64::from(1u32 << frac_bits)
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// How a real constant is mapped onto the fixed-point grid at LUT build time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rounding {
    Nearest,
    /// Toward positive infinity. Paired with the truncating multiplier this
    /// keeps `c * x` exact whenever the true product is representable and
    /// `x >= 0` is small enough.
    Up,
}

/// Constant stored in a lookup table, with its own fraction width.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LutConst {
    raw: i32,
    frac_bits: u32,
}

impl LutConst {
    pub fn from_raw(raw: i32, frac_bits: u32) -> Self {
        Self { raw, frac_bits }
    }

    pub fn quantize(value: Ratio<i64>, frac_bits: u32, rounding: Rounding) -> Result<Self> {
        if frac_bits > 30 {
            return Err(Error::InvalidParameter(format!(
                "LUT fraction width {frac_bits} exceeds 30 bits"
            )));
        }
        let num = i128::from(*value.numer()) << frac_bits;
        let den = i128::from(*value.denom());
        let raw = match rounding {
            Rounding::Nearest => (2 * num + den).div_euclid(2 * den),
            Rounding::Up => -(-num).div_euclid(den),
        };
        let raw = i32::try_from(raw).map_err(|_| Error::Overflow("LUT constant"))?;
        Ok(Self { raw, frac_bits })
    }

    pub fn raw(self) -> i32 {
        self.raw
    }

    pub fn frac_bits(self) -> u32 {
        self.frac_bits
    }

    pub fn to_f64(self) -> f64 {
        f64::from(self.raw) / (1u64 << self.frac_bits) as f64
    }
}

/// Per-worker operation tallies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounters {
    pub adds: u64,
    pub subs: u64,
    pub shifts: u64,
    pub compares: u64,
    pub const_mults: u64,
    /// Always zero: the datapath has no divider. Reported so that summaries
    /// can show it.
    pub divisions: u64,
}

impl OpCounters {
    pub fn total(&self) -> u64 {
        self.adds + self.subs + self.shifts + self.compares + self.const_mults + self.divisions
    }
}

impl AddAssign for OpCounters {
    fn add_assign(&mut self, rhs: Self) {
        self.adds += rhs.adds;
        self.subs += rhs.subs;
        self.shifts += rhs.shifts;
        self.compares += rhs.compares;
        self.const_mults += rhs.const_mults;
        self.divisions += rhs.divisions;
    }
}

impl std::iter::Sum for OpCounters {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        let mut total = OpCounters::default();
        for c in iter {
            total += c;
        }
        total
    }
}

/// Instrumented arithmetic unit.
#[derive(Clone, Debug)]
pub struct Datapath {
    frac_bits: u32,
    counters: OpCounters,
}

impl Datapath {
    pub fn new(frac_bits: u32) -> Result<Self> {
        if frac_bits == 0 || frac_bits > MAX_FRAC_BITS {
            return Err(Error::InvalidParameter(format!(
                "fraction bits must be in 1..={MAX_FRAC_BITS}, got {frac_bits}"
            )));
        }
        Ok(Self {
            frac_bits,
            counters: OpCounters::default(),
        })
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn counters(&self) -> OpCounters {
        self.counters
    }

    pub fn reset_counters(&mut self) {
        self.counters = OpCounters::default();
    }

    /// Returns the tallies accumulated so far and starts a fresh set.
    pub fn take_counters(&mut self) -> OpCounters {
        std::mem::take(&mut self.counters)
    }

    /// Books operations performed by a fixed-function block (e.g. a
    /// butterfly network) outside the per-call primitives.
    pub fn account(&mut self, ops: OpCounters) {
        self.counters += ops;
    }

    pub fn one(&self) -> Fixed {
        Fixed(1 << self.frac_bits)
    }

    /// Shifts an integer into the fixed-point grid.
    pub fn from_int(&mut self, value: i64) -> Result<Fixed> {
        self.counters.shifts += 1;
        let raw = value
            .checked_mul(1 << self.frac_bits)
            .ok_or(Error::Overflow("from_int"))?;
        narrow(raw, "from_int")
    }

    pub fn add(&mut self, a: Fixed, b: Fixed) -> Result<Fixed> {
        self.counters.adds += 1;
        a.0.checked_add(b.0)
            .map(Fixed)
            .ok_or(Error::Overflow("add"))
    }

    pub fn sub(&mut self, a: Fixed, b: Fixed) -> Result<Fixed> {
        self.counters.subs += 1;
        a.0.checked_sub(b.0)
            .map(Fixed)
            .ok_or(Error::Overflow("sub"))
    }

    pub fn neg(&mut self, a: Fixed) -> Result<Fixed> {
        self.sub(Fixed::ZERO, a)
    }

    /// Conditional negation; tallied as a subtraction.
    pub fn abs(&mut self, a: Fixed) -> Result<Fixed> {
        self.counters.subs += 1;
        a.0.checked_abs().map(Fixed).ok_or(Error::Overflow("abs"))
    }

    /// Arithmetic shift: positive `bits` shift left (checked), negative
    /// `bits` shift right with truncation toward negative infinity.
    pub fn shift(&mut self, a: Fixed, bits: i32) -> Result<Fixed> {
        self.counters.shifts += 1;
        if bits >= 0 {
            let wide = i64::from(a.0)
                .checked_shl(bits as u32)
                .filter(|_| bits < 32)
                .ok_or(Error::Overflow("shift"))?;
            narrow(wide, "shift")
        } else {
            Ok(Fixed(a.0 >> (-bits).min(31)))
        }
    }

    pub fn cmp(&mut self, a: Fixed, b: Fixed) -> Ordering {
        self.counters.compares += 1;
        a.0.cmp(&b.0)
    }

    pub fn is_zero(&mut self, a: Fixed) -> bool {
        self.cmp(a, Fixed::ZERO) == Ordering::Equal
    }

    /// Multiplication by a LUT constant: `(a * c) >> c.frac_bits`, truncating
    /// toward negative infinity. The only multiplier in the datapath.
    pub fn mul_const(&mut self, a: Fixed, c: LutConst) -> Result<Fixed> {
        self.counters.const_mults += 1;
        let wide = (i64::from(a.0) * i64::from(c.raw)) >> c.frac_bits;
        narrow(wide, "mul_const")
    }
}

fn narrow(raw: i64, op: &'static str) -> Result<Fixed> {
    i32::try_from(raw)
        .map(Fixed)
        .map_err(|_| Error::Overflow(op))
}
