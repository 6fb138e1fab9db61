//! Dense helpers for the small symmetric systems the game needs (n is the
//! number of stocks, typically well under a hundred).

use crate::error::{Error, Result};

/// Relative pivot threshold for the positive-definiteness test.
pub const PIVOT_TOLERANCE: f64 = 1e-10;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y = A x` for a row-major `n x n` matrix.
pub fn mat_vec(a: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    (0..n).map(|i| dot(&a[i * n..(i + 1) * n], x)).collect()
}

/// `x' A x` for a row-major `n x n` matrix.
pub fn quad_form(a: &[f64], n: usize, x: &[f64]) -> f64 {
    dot(x, &mat_vec(a, n, x))
}

/// Lower-triangular factor `L` with `A = L L'`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    /// Factors a symmetric row-major matrix. Fails with `SingularCovariance`
    /// when any pivot drops to `PIVOT_TOLERANCE * max diagonal` or below.
    pub fn factor(a: &[f64], n: usize) -> Result<Self> {
        debug_assert_eq!(a.len(), n * n);
        let max_diag = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max);
        let threshold = PIVOT_TOLERANCE * max_diag;
        let mut lower = vec![0.0; n * n];
        for j in 0..n {
            let mut pivot = a[j * n + j];
            for k in 0..j {
                pivot -= lower[j * n + k] * lower[j * n + k];
            }
            if !(pivot > threshold) {
                return Err(Error::SingularCovariance {
                    pivot: j,
                    value: pivot,
                });
            }
            let diag = pivot.sqrt();
            lower[j * n + j] = diag;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= lower[i * n + k] * lower[j * n + k];
                }
                lower[i * n + j] = s / diag;
            }
        }
        Ok(Self { n, lower })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    /// `L z`, mapping independent standard normals to correlated ones.
    pub fn apply_lower(&self, z: &[f64], out: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            out[i] = dot(&self.lower[i * n..i * n + i + 1], &z[..=i]);
        }
    }

    /// Solves `A x = rhs` by forward and back substitution.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let l = &self.lower;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = rhs[i];
            for k in 0..i {
                s -= l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        x
    }
}

/// Neumaier-compensated sum, evaluated in slice order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
