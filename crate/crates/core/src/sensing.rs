//! Binary measurement matrix, the structured sensing matrix it induces, and
//! the lookup table replacing the Gram-matrix inverse.
//!
//! Measurement rows are the first `m` Walsh rows mapped to `{0, 1}` by
//! `(h + 1) / 2`. With the transform basis `W / n`, the product
//! `A = Phi * W / n` collapses to an "arrow": `A(0,0) = 2V`, `A(i,0) = V`
//! and `A(i,i) = V` for `0 < i < m`, zero elsewhere, with `V = 1/2`.
//! Indices here are zero-based; column 0 is the DC column.

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::fixedpoint::{LutConst, Rounding};
use crate::transform::{log2_exact, WalshMatrix, WalshOrder};

pub type Rational = Ratio<i64>;

/// `{0,1}` measurement matrix, `m x n`, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasurementMatrix {
    m: usize,
    n: usize,
    ordering: WalshOrder,
    rows: Vec<u8>,
}

impl MeasurementMatrix {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        Self::with_ordering(m, n, WalshOrder::Sequency)
    }

    pub fn with_ordering(m: usize, n: usize, ordering: WalshOrder) -> Result<Self> {
        check_dims(m, n)?;
        let walsh = WalshMatrix::new(n, ordering)?;
        let rows = walsh
            .rows()
            .take(m)
            .flat_map(|row| row.iter().map(|&h| ((h + 1) / 2) as u8))
            .collect();
        Ok(Self {
            m,
            n,
            ordering,
            rows,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ordering(&self) -> WalshOrder {
        self.ordering
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.rows[i * self.n..(i + 1) * self.n]
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.rows[i * self.n + j]
    }

    /// Exact dense product `Phi * W / n` in rational arithmetic, where `W`
    /// uses the same row ordering the measurement rows were drawn from.
    pub fn dense_sensing_product(&self) -> Result<Vec<Vec<Rational>>> {
        let walsh = WalshMatrix::new(self.n, self.ordering)?;
        let n = self.n as i64;
        Ok((0..self.m)
            .map(|i| {
                let phi = self.row(i);
                (0..self.n)
                    .map(|j| {
                        let acc: i64 = phi
                            .iter()
                            .enumerate()
                            .filter(|(_, &bit)| bit == 1)
                            .map(|(x, _)| i64::from(walsh.get(x, j)))
                            .sum();
                        Rational::new(acc, n)
                    })
                    .collect()
            })
            .collect())
    }
}

pub fn build_measurement_matrix(m: usize, n: usize) -> Result<MeasurementMatrix> {
    MeasurementMatrix::new(m, n)
}

/// Derives the arrow scale `V` from the dense product and verifies that the
/// product has exactly the arrow pattern.
pub fn derive_v(m: usize, n: usize) -> Result<Rational> {
    derive_v_from(&MeasurementMatrix::new(m, n)?)
}

pub fn derive_v_from(phi: &MeasurementMatrix) -> Result<Rational> {
    let dense = phi.dense_sensing_product()?;
    let v = dense[0][0] / 2;
    if v <= Rational::from_integer(0) {
        return Err(Error::Internal(format!(
            "non-positive corner value {}",
            dense[0][0]
        )));
    }
    let arrow = SensingMatrix {
        m: phi.m,
        n: phi.n,
        v,
    };
    for (i, row) in dense.iter().enumerate() {
        for (j, &value) in row.iter().enumerate() {
            let expected = arrow.entry(i, j);
            if value != expected {
                return Err(Error::Internal(format!(
                    "sensing product entry ({i},{j}) is {value}, arrow structure needs {expected}"
                )));
            }
        }
    }
    Ok(v)
}

/// The structured sensing matrix, held as `(m, n, V)` only.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SensingMatrix {
    m: usize,
    n: usize,
    v: Rational,
}

impl SensingMatrix {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        let v = derive_v(m, n)?;
        Ok(Self { m, n, v })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn v(&self) -> Rational {
        self.v
    }

    pub fn entry(&self, i: usize, j: usize) -> Rational {
        match (i, j) {
            (0, 0) => self.v * 2,
            (_, 0) => self.v,
            _ if i == j => self.v,
            _ => Rational::from_integer(0),
        }
    }

    /// Column `j` as a length-`m` vector.
    pub fn column(&self, j: usize) -> Vec<Rational> {
        (0..self.m).map(|i| self.entry(i, j)).collect()
    }

    /// Row-major `f64` copy, for the floating-point reference solver.
    pub fn to_dense_f64(&self) -> Vec<f64> {
        (0..self.m)
            .flat_map(|i| (0..self.n).map(move |j| (i, j)))
            .map(|(i, j)| ratio_to_f64(self.entry(i, j)))
            .collect()
    }

    /// `P`: Gram entry for column 0 with itself, `(m + 3) V^2`.
    pub fn gram_p(&self) -> Rational {
        self.v * self.v * (self.m as i64 + 3)
    }

    /// `Q`: every other nonzero Gram entry, `V^2`.
    pub fn gram_q(&self) -> Rational {
        self.v * self.v
    }
}

pub fn build_sensing_matrix(m: usize, n: usize) -> Result<SensingMatrix> {
    SensingMatrix::new(m, n)
}

/// Per-iteration arrow-inverse constants.
///
/// For an active set of size `t` containing column 0, the Gram matrix is
/// `P` at the corner, `Q` along the first row, first column and diagonal.
/// Its inverse has `s_t = 1 / (P - (t-1) Q)` at the corner, `-s_t` along the
/// first row and column, `1/Q + s_t` on the remaining diagonal and `s_t`
/// everywhere else. `1/Q` is a power of two and becomes a shift.
#[derive(Clone, Debug)]
pub struct GramInverseLut {
    m: usize,
    k_max: usize,
    p: Rational,
    q: Rational,
    inv_q_shift: u32,
    exact: Vec<Rational>,
    stored: Vec<LutConst>,
}

impl GramInverseLut {
    pub fn new(
        sensing: &SensingMatrix,
        k_max: usize,
        frac_bits: u32,
        rounding: Rounding,
    ) -> Result<Self> {
        if k_max == 0 || k_max > sensing.m {
            return Err(Error::InvalidParameter(format!(
                "sparsity cap {k_max} must be in 1..={}",
                sensing.m
            )));
        }
        let p = sensing.gram_p();
        let q = sensing.gram_q();
        let inv_q = q.recip();
        if !inv_q.is_integer() || !(*inv_q.numer() as u64).is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "1/Q = {inv_q} is not a power of two; no shift realization"
            )));
        }
        let inv_q_shift = (*inv_q.numer() as u64).trailing_zeros();
        let mut exact = Vec::with_capacity(k_max);
        let mut stored = Vec::with_capacity(k_max);
        for t in 1..=k_max {
            let schur = p - q * (t as i64 - 1);
            if schur <= Rational::from_integer(0) {
                return Err(Error::InvalidParameter(format!(
                    "sparsity cap {k_max} too large: P - (t-1)Q <= 0 at t = {t}"
                )));
            }
            let s = schur.recip();
            exact.push(s);
            stored.push(LutConst::quantize(s, frac_bits, rounding)?);
        }
        let lut = Self {
            m: sensing.m,
            k_max,
            p,
            q,
            inv_q_shift,
            exact,
            stored,
        };
        for t in 1..=k_max {
            lut.verify_inverse(t)?;
        }
        Ok(lut)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn p(&self) -> Rational {
        self.p
    }

    pub fn q(&self) -> Rational {
        self.q
    }

    pub fn inv_q_shift(&self) -> u32 {
        self.inv_q_shift
    }

    /// Stored `s_t` for an active set of size `t` (1-based).
    pub fn s(&self, t: usize) -> LutConst {
        self.stored[t - 1]
    }

    pub fn s_exact(&self, t: usize) -> Rational {
        self.exact[t - 1]
    }

    /// `t x t` arrow Gram matrix.
    pub fn arrow_matrix(&self, t: usize) -> Vec<Vec<Rational>> {
        let zero = Rational::from_integer(0);
        (0..t)
            .map(|i| {
                (0..t)
                    .map(|j| match (i, j) {
                        (0, 0) => self.p,
                        (0, _) | (_, 0) => self.q,
                        _ if i == j => self.q,
                        _ => zero,
                    })
                    .collect()
            })
            .collect()
    }

    /// Closed-form inverse of [`Self::arrow_matrix`].
    pub fn closed_form_inverse(&self, t: usize) -> Vec<Vec<Rational>> {
        let s = self.s_exact(t);
        let inv_q = self.q.recip();
        (0..t)
            .map(|i| {
                (0..t)
                    .map(|j| match (i, j) {
                        (0, 0) => s,
                        (0, _) | (_, 0) => -s,
                        _ if i == j => inv_q + s,
                        _ => s,
                    })
                    .collect()
            })
            .collect()
    }

    fn verify_inverse(&self, t: usize) -> Result<()> {
        let g = self.arrow_matrix(t);
        let inv = self.closed_form_inverse(t);
        for i in 0..t {
            for j in 0..t {
                let dot: Rational = (0..t).map(|k| g[i][k] * inv[k][j]).sum();
                let expected = Rational::from_integer(i64::from(i == j));
                if dot != expected {
                    return Err(Error::Internal(format!(
                        "arrow inverse check failed at t={t}, ({i},{j})"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn build_gram_lut(
    sensing: &SensingMatrix,
    k_max: usize,
    frac_bits: u32,
    rounding: Rounding,
) -> Result<GramInverseLut> {
    GramInverseLut::new(sensing, k_max, frac_bits, rounding)
}

pub(crate) fn ratio_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    log2_exact(n)?;
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!(
            "measurement count {m} must be in 1..={n}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::index::sample;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    // Numerical Gauss-Jordan inverse, independent of the closed form.
    fn numeric_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = a.len();
        let mut aug: Vec<Vec<f64>> = a
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut r = row.clone();
                r.extend((0..n).map(|j| f64::from(u8::from(i == j))));
                r
            })
            .collect();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| aug[x][col].abs().total_cmp(&aug[y][col].abs()))
                .unwrap();
            aug.swap(col, pivot);
            let d = aug[col][col];
            aug[col].iter_mut().for_each(|v| *v /= d);
            for row in 0..n {
                if row != col {
                    let f = aug[row][col];
                    for k in 0..2 * n {
                        aug[row][k] -= f * aug[col][k];
                    }
                }
            }
        }
        aug.into_iter().map(|r| r[n..].to_vec()).collect()
    }

    #[test]
    fn measurement_matrix_rows() {
        let one = build_measurement_matrix(1, 4).unwrap();
        assert_eq!(one.row(0), &[1, 1, 1, 1]);
        let two = build_measurement_matrix(2, 4).unwrap();
        assert_eq!(two.row(1), &[1, 1, 0, 0]);
        let full = build_measurement_matrix(16, 64).unwrap();
        assert_eq!(full.row(0).iter().filter(|&&b| b == 1).count(), 64);
        for i in 1..16 {
            assert_eq!(full.row(i).iter().filter(|&&b| b == 1).count(), 32);
        }
        assert!(build_measurement_matrix(5, 4).is_err());
        assert!(build_measurement_matrix(0, 4).is_err());
        assert!(build_measurement_matrix(2, 6).is_err());
    }

    #[test]
    fn v_is_one_half() {
        for (m, n) in [(4, 16), (16, 64), (32, 64), (48, 64), (1, 4), (64, 64)] {
            assert_eq!(derive_v(m, n).unwrap(), r(1, 2), "({m},{n})");
        }
    }

    #[test]
    fn structure_is_ordering_invariant() {
        for (m, n) in [(4, 16), (16, 64), (48, 64)] {
            let phi = MeasurementMatrix::with_ordering(m, n, WalshOrder::Natural).unwrap();
            assert_eq!(derive_v_from(&phi).unwrap(), r(1, 2));
        }
    }

    #[test]
    fn fig1_columns() {
        let a = build_sensing_matrix(4, 16).unwrap();
        let v = a.v();
        assert_eq!(a.column(0), vec![v * 2, v, v, v]);
        let zero = r(0, 1);
        assert_eq!(a.column(2), vec![zero, zero, v, zero]);
        for j in 4..16 {
            assert!(a.column(j).iter().all(|&e| e == zero));
        }
    }

    #[test]
    fn parametric_matches_dense_product() {
        for (m, n) in [(4, 16), (16, 64), (32, 64), (48, 64)] {
            let a = build_sensing_matrix(m, n).unwrap();
            let dense = build_measurement_matrix(m, n)
                .unwrap()
                .dense_sensing_product()
                .unwrap();
            for i in 0..m {
                for j in 0..n {
                    assert_eq!(dense[i][j], a.entry(i, j));
                }
            }
        }
    }

    #[test]
    fn lut_values_m16() {
        let a = build_sensing_matrix(16, 64).unwrap();
        let lut = build_gram_lut(&a, 8, 11, Rounding::Nearest).unwrap();
        assert_eq!(lut.p(), r(19, 4));
        assert_eq!(lut.q(), r(1, 4));
        assert_eq!(lut.inv_q_shift(), 2);
        assert_eq!(lut.s_exact(1), r(4, 19));
        assert_eq!(lut.s_exact(2), r(2, 9));
        assert_eq!(lut.s_exact(8), r(1, 3));
        assert_eq!(
            lut.closed_form_inverse(2),
            vec![vec![r(2, 9), r(-2, 9)], vec![r(-2, 9), r(38, 9)]]
        );
        for t in 2..=8 {
            assert!(lut.s_exact(t) > lut.s_exact(t - 1));
        }
    }

    #[test]
    fn lut_rejects_oversized_cap() {
        let a = build_sensing_matrix(4, 16).unwrap();
        assert!(build_gram_lut(&a, 5, 11, Rounding::Nearest).is_err());
        assert!(build_gram_lut(&a, 0, 11, Rounding::Nearest).is_err());
        assert!(build_gram_lut(&a, 4, 11, Rounding::Nearest).is_ok());
    }

    #[test]
    fn closed_form_matches_numeric_inverse() {
        let a = build_sensing_matrix(16, 64).unwrap();
        let lut = build_gram_lut(&a, 16, 11, Rounding::Nearest).unwrap();
        for t in 1..=16 {
            let g: Vec<Vec<f64>> = lut
                .arrow_matrix(t)
                .into_iter()
                .map(|row| row.into_iter().map(ratio_to_f64).collect())
                .collect();
            let numeric = numeric_inverse(&g);
            let closed = lut.closed_form_inverse(t);
            for i in 0..t {
                for j in 0..t {
                    assert!((numeric[i][j] - ratio_to_f64(closed[i][j])).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn dense_gram_of_random_supports_is_arrow() {
        let a = build_sensing_matrix(16, 64).unwrap();
        let lut = build_gram_lut(&a, 8, 11, Rounding::Nearest).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for t in 1..=8 {
            for _ in 0..20 {
                let mut support = vec![0usize];
                support.extend(sample(&mut rng, 15, t - 1).into_iter().map(|j| j + 1));
                let cols: Vec<Vec<Rational>> = support.iter().map(|&j| a.column(j)).collect();
                let gram: Vec<Vec<Rational>> = cols
                    .iter()
                    .map(|ci| {
                        cols.iter()
                            .map(|cj| ci.iter().zip(cj).map(|(x, y)| x * y).sum())
                            .collect()
                    })
                    .collect();
                assert_eq!(gram, lut.arrow_matrix(t));
            }
        }
    }
}
