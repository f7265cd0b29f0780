//! Textbook floating-point OMP over an arbitrary dense sensing matrix.

use crate::error::{Error, Result};
use crate::sensing::SensingMatrix;

/// Row-major `m x n` real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseSensingMatrix {
    m: usize,
    n: usize,
    data: Vec<f64>,
}

impl DenseSensingMatrix {
    pub fn new(m: usize, n: usize, data: Vec<f64>) -> Result<Self> {
        if m == 0 || n < m {
            return Err(Error::InvalidParameter(format!(
                "need n >= m >= 1, got {m}x{n}"
            )));
        }
        if data.len() != m * n {
            return Err(Error::InvalidInput(format!(
                "{m}x{n} matrix needs {} entries, got {}",
                m * n,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(Self { m, n, data })
    }

    pub fn from_structured(a: &SensingMatrix) -> Self {
        Self {
            m: a.m(),
            n: a.n(),
            data: a.to_dense_f64(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.m).map(|i| self.get(i, j)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `A^T r`.
    pub fn tr_mul_vec(&self, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (row, &ri) in self.data.chunks_exact(self.n).zip(r) {
            for (o, &a) in out.iter_mut().zip(row) {
                *o += a * ri;
            }
        }
        out
    }

    /// `self * rhs` for a row-major `n x p` right-hand side.
    pub fn matmul(&self, rhs: &[f64], p: usize) -> Result<Self> {
        if rhs.len() != self.n * p {
            return Err(Error::InvalidInput("matmul dimension mismatch".into()));
        }
        let mut data = vec![0.0; self.m * p];
        for i in 0..self.m {
            for k in 0..self.n {
                let a = self.get(i, k);
                for j in 0..p {
                    data[i * p + j] += a * rhs[k * p + j];
                }
            }
        }
        Self::new(self.m, p, data)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmpStep {
    pub index: usize,
    /// `|A^T r|` over all columns at selection time, before masking.
    pub correlations: Vec<f64>,
    /// `||r||_2` after the least-squares refit.
    pub residual_norm: f64,
    /// `||A_S^T r||_inf` after the refit.
    pub orthogonality: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmpResult {
    pub support: Vec<usize>,
    pub coeffs: Vec<f64>,
    pub residual: Vec<f64>,
    pub steps: Vec<OmpStep>,
}

impl OmpResult {
    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut theta = vec![0.0; n];
        for (&j, &c) in self.support.iter().zip(&self.coeffs) {
            theta[j] = c;
        }
        theta
    }
}

/// Greedy pursuit: select `argmax |A^T r|` over unselected columns (ties to
/// the lowest index), refit by least squares on the normal equations, and
/// stop at `k_max` columns or when `||r||_2 <= residual_tol`.
pub fn omp_reference(
    a: &DenseSensingMatrix,
    y: &[f64],
    k_max: usize,
    residual_tol: f64,
) -> Result<OmpResult> {
    if y.len() != a.m {
        return Err(Error::InvalidInput(format!(
            "measurement vector has {} entries, matrix has {} rows",
            y.len(),
            a.m
        )));
    }
    if k_max == 0 || k_max > a.m {
        return Err(Error::InvalidParameter(format!(
            "k_max {k_max} must be in 1..={}",
            a.m
        )));
    }
    let columns: Vec<Vec<f64>> = (0..a.n).map(|j| a.column(j)).collect();
    let mut selected = vec![false; a.n];
    let mut support = Vec::new();
    let mut coeffs = Vec::new();
    let mut residual = y.to_vec();
    let mut steps = Vec::new();

    while support.len() < k_max && norm2(&residual) > residual_tol {
        let correlations: Vec<f64> = a.tr_mul_vec(&residual).iter().map(|c| c.abs()).collect();
        let mut best: Option<usize> = None;
        for (j, &c) in correlations.iter().enumerate() {
            if !selected[j] && best.is_none_or(|b| c > correlations[b]) {
                best = Some(j);
            }
        }
        let index = best.ok_or_else(|| Error::Internal("all columns selected".into()))?;
        selected[index] = true;
        support.push(index);

        let gram: Vec<Vec<f64>> = support
            .iter()
            .map(|&i| {
                support
                    .iter()
                    .map(|&j| dot(&columns[i], &columns[j]))
                    .collect()
            })
            .collect();
        let rhs: Vec<f64> = support.iter().map(|&j| dot(&columns[j], y)).collect();
        coeffs = solve_pivoted(gram, rhs).ok_or_else(|| Error::Singular {
            support: support.clone(),
        })?;

        residual = y.to_vec();
        for (&j, &c) in support.iter().zip(&coeffs) {
            for (r, a) in residual.iter_mut().zip(&columns[j]) {
                *r -= a * c;
            }
        }
        let orthogonality = support
            .iter()
            .map(|&j| dot(&columns[j], &residual).abs())
            .fold(0.0, f64::max);
        steps.push(OmpStep {
            index,
            correlations,
            residual_norm: norm2(&residual),
            orthogonality,
        });
    }
    Ok(OmpResult {
        support,
        coeffs,
        residual,
        steps,
    })
}

/// Gaussian elimination with partial pivoting. `None` if singular.
pub fn solve_pivoted(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::measure_block;
    use crate::reference::gaussian_matrix;
    use crate::sensing::{build_sensing_matrix, MeasurementMatrix};
    use rand::seq::index::sample;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_basis() {
        let a = DenseSensingMatrix::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let res = omp_reference(&a, &[3.0, 0.0], 1, 0.0).unwrap();
        assert_eq!(res.support, vec![0]);
        assert_eq!(res.coeffs, vec![3.0]);
    }

    #[test]
    fn structured_constant_block() {
        let a = DenseSensingMatrix::from_structured(&build_sensing_matrix(16, 64).unwrap());
        let phi = MeasurementMatrix::new(16, 64).unwrap();
        let y: Vec<f64> = measure_block(&[77u8; 64], &phi)
            .y
            .iter()
            .map(|&v| f64::from(v))
            .collect();
        let res = omp_reference(&a, &y, 8, 1e-9).unwrap();
        assert_eq!(res.support, vec![0]);
        assert!((res.coeffs[0] - 64.0 * 77.0).abs() < 1e-9);
        assert!(res.steps[0].residual_norm < 1e-9);
    }

    #[test]
    fn recovers_exactly_sparse_signals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = gaussian_matrix(24, 64, 5).unwrap();
        let norms: Vec<f64> = (0..64).map(|j| norm2(&g.column(j))).collect();
        let unit: Vec<f64> = (0..24)
            .flat_map(|i| (0..64).map(move |j| (i, j)))
            .map(|(i, j)| g.get(i, j) / norms[j])
            .collect();
        let a = DenseSensingMatrix::new(24, 64, unit).unwrap();
        for _ in 0..50 {
            let idx = sample(&mut rng, 64, 3).into_vec();
            let mut theta = vec![0.0; 64];
            for &j in &idx {
                let mag: f64 = rng.random_range(1.0..5.0);
                theta[j] = if rng.random_bool(0.5) { mag } else { -mag };
            }
            let y = a.mul_vec(&theta);
            let res = omp_reference(&a, &y, 3, 1e-10).unwrap();
            let mut got = res.support.clone();
            got.sort_unstable();
            let mut want = idx.clone();
            want.sort_unstable();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn residual_is_orthogonal_and_shrinks() {
        let a = gaussian_matrix(16, 64, 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let y: Vec<f64> = (0..16).map(|_| rng.random_range(-100.0..100.0)).collect();
            let res = omp_reference(&a, &y, 8, 0.0).unwrap();
            let y_inf = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut prev = norm2(&y);
            for step in &res.steps {
                assert!(step.orthogonality <= 1e-9 * y_inf);
                assert!(step.residual_norm <= prev + 1e-9);
                prev = step.residual_norm;
            }
        }
    }

    #[test]
    fn singular_system_reports_support() {
        // Two identical columns: after the first is fitted the residual is
        // zero, and a negative tolerance forces the duplicate in.
        let a = DenseSensingMatrix::new(2, 3, vec![1.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let err = omp_reference(&a, &[1.0, 0.0], 2, -1.0).unwrap_err();
        assert!(
            matches!(err, Error::Singular { ref support } if support.len() == 2),
            "{err}"
        );
    }

    #[test]
    fn pivoted_solve() {
        let x = solve_pivoted(vec![vec![0.0, 2.0], vec![3.0, 1.0]], vec![4.0, 5.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
        assert!(solve_pivoted(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![1.0, 2.0]).is_none());
    }

    #[test]
    fn rejects_bad_inputs() {
        let a = DenseSensingMatrix::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(omp_reference(&a, &[1.0], 1, 0.0).is_err());
        assert!(omp_reference(&a, &[1.0, 0.0], 3, 0.0).is_err());
        assert!(DenseSensingMatrix::new(3, 2, vec![0.0; 6]).is_err());
        assert!(DenseSensingMatrix::new(1, 2, vec![f64::NAN, 0.0]).is_err());
    }
}
