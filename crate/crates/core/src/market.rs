//! Market of a risk-free bond and `n` correlated geometric Brownian motions.
//!
//! The bond earns `r` continuously; stock `i` has drift `mu[i]` and
//! volatility `sigma[i]`, and the driving Brownian motions have correlation
//! matrix `rho`. The instantaneous return covariance per unit time is
//! `Sigma[i][j] = rho[i][j] * sigma[i] * sigma[j]`, which must be positive
//! definite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Cholesky};

/// Symmetry and unit-diagonal tolerance for user-supplied correlations.
const CORRELATION_TOLERANCE: f64 = 1e-12;

/// Plain JSON form of a market: `{"r", "mu", "sigma", "rho"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSpec {
    pub r: f64,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub rho: Vec<Vec<f64>>,
}

/// Validated market parameters. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketParams {
    r: f64,
    mu: Vec<f64>,
    sigma: Vec<f64>,
    rho: Vec<f64>,
    cov: Vec<f64>,
    rho_factor: Cholesky,
    cov_factor: Cholesky,
}

impl MarketParams {
    /// Validates inputs and assembles the covariance matrix.
    pub fn new(r: f64, mu: Vec<f64>, sigma: Vec<f64>, rho: &[Vec<f64>]) -> Result<Self> {
        let n = mu.len();
        if n == 0 {
            return Err(Error::DimensionMismatch {
                what: "mu",
                expected: 1,
                found: 0,
            });
        }
        if sigma.len() != n {
            return Err(Error::DimensionMismatch {
                what: "sigma",
                expected: n,
                found: sigma.len(),
            });
        }
        if rho.len() != n {
            return Err(Error::DimensionMismatch {
                what: "rho rows",
                expected: n,
                found: rho.len(),
            });
        }
        if let Some(row) = rho.iter().find(|row| row.len() != n) {
            return Err(Error::DimensionMismatch {
                what: "rho columns",
                expected: n,
                found: row.len(),
            });
        }
        if !r.is_finite() {
            return Err(Error::NonFinite("r"));
        }
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("mu"));
        }
        for (index, &value) in sigma.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveVolatility { index, value });
            }
        }

        let mut flat = vec![0.0; n * n];
        for i in 0..n {
            if (rho[i][i] - 1.0).abs() > CORRELATION_TOLERANCE {
                return Err(Error::InvalidCorrelation(format!(
                    "diagonal entry rho[{i}][{i}] = {} is not 1",
                    rho[i][i]
                )));
            }
            flat[i * n + i] = 1.0;
            for j in 0..i {
                let (lo, hi) = (rho[i][j], rho[j][i]);
                if !lo.is_finite() || !hi.is_finite() {
                    return Err(Error::NonFinite("rho"));
                }
                if (lo - hi).abs() > CORRELATION_TOLERANCE {
                    return Err(Error::InvalidCorrelation(format!(
                        "rho[{i}][{j}] = {lo} differs from rho[{j}][{i}] = {hi}"
                    )));
                }
                if lo.abs() > 1.0 {
                    return Err(Error::InvalidCorrelation(format!(
                        "|rho[{i}][{j}]| = {} exceeds 1",
                        lo.abs()
                    )));
                }
                flat[i * n + j] = lo;
                flat[j * n + i] = lo;
            }
        }

        let mut cov = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = flat[i * n + j] * (sigma[i] * sigma[j]);
                cov[i * n + j] = v;
                cov[j * n + i] = v;
            }
        }
        let cov_factor = Cholesky::factor(&cov, n)?;
        let rho_factor = Cholesky::factor(&flat, n)?;

        Ok(Self {
            r,
            mu,
            sigma,
            rho: flat,
            cov,
            rho_factor,
            cov_factor,
        })
    }

    /// Single-stock market, embedded as `n = 1` with `rho = [[1]]`.
    pub fn univariate(r: f64, mu: f64, sigma: f64) -> Result<Self> {
        Self::new(r, vec![mu], vec![sigma], &[vec![1.0]])
    }

    /// Zero interest, `sigma = ln 2`, `mu = sigma^2 / 2`: a stock whose
    /// median growth is zero, paired with cash.
    pub fn shannon_demon() -> Self {
        let sigma = std::f64::consts::LN_2;
        Self::univariate(0.0, 0.5 * sigma * sigma, sigma).expect("static parameters are valid")
    }

    pub fn from_spec(spec: &MarketSpec) -> Result<Self> {
        Self::new(spec.r, spec.mu.clone(), spec.sigma.clone(), &spec.rho)
    }

    pub fn to_spec(&self) -> MarketSpec {
        let n = self.n();
        MarketSpec {
            r: self.r,
            mu: self.mu.clone(),
            sigma: self.sigma.clone(),
            rho: (0..n)
                .map(|i| self.rho[i * n..(i + 1) * n].to_vec())
                .collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn rate(&self) -> f64 {
        self.r
    }

    pub fn drift(&self) -> &[f64] {
        &self.mu
    }

    pub fn volatility(&self) -> &[f64] {
        &self.sigma
    }

    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        self.rho[i * self.n() + j]
    }

    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        self.cov[i * self.n() + j]
    }

    /// Row-major covariance matrix.
    pub fn covariance_matrix(&self) -> &[f64] {
        &self.cov
    }

    /// `mu - r 1`.
    pub fn excess_drift(&self) -> Vec<f64> {
        self.mu.iter().map(|m| m - self.r).collect()
    }

    pub fn covariance_factor(&self) -> &Cholesky {
        &self.cov_factor
    }

    pub fn correlation_factor(&self) -> &Cholesky {
        &self.rho_factor
    }

    /// `Sigma x`.
    pub fn cov_times(&self, x: &[f64]) -> Vec<f64> {
        linalg::mat_vec(&self.cov, self.n(), x)
    }

    /// `x' Sigma x`.
    pub fn cov_quad(&self, x: &[f64]) -> f64 {
        linalg::quad_form(&self.cov, self.n(), x)
    }

    pub(crate) fn check_dim(&self, what: &'static str, len: usize) -> Result<()> {
        if len == self.n() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                what,
                expected: self.n(),
                found: len,
            })
        }
    }
}

/// Constant-proportion portfolio: `weights[i]` of wealth in stock `i`, the
/// remainder `1 - sum(weights)` in the bond. Any sign or size is allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RebalancingRule(Vec<f64>);

impl RebalancingRule {
    pub fn new(weights: Vec<f64>) -> Self {
        Self(weights)
    }

    pub fn scalar(weight: f64) -> Self {
        Self(vec![weight])
    }

    /// All wealth in the bond.
    pub fn cash(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bond_fraction(&self) -> f64 {
        1.0 - self.0.iter().sum::<f64>()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for RebalancingRule {
    fn from(weights: Vec<f64>) -> Self {
        Self(weights)
    }
}
