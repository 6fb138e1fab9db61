//! Closed forms for constant-rebalanced wealth.
//!
//! Under rule `b`, `log V_t(b)` is normal with mean `mean_rate * t` and
//! variance `variance_rate * t`, where
//! `mean_rate = r + (mu - r 1)'b - b'Sigma b / 2` and `variance_rate = b'Sigma b`.
//! Two rules driven by the same Brownian motion give a lognormal wealth
//! ratio whose expectation is `exp{(mu - r 1 - Sigma c)'(b - c) t}`.
//!
//! Nothing here simulates; the Monte Carlo module is tested against these.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::dot;
use crate::market::{MarketParams, RebalancingRule};

/// Law of `log V_t` per unit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogWealthLaw {
    pub mean_rate: f64,
    pub variance_rate: f64,
}

impl LogWealthLaw {
    pub fn mean(&self, t: f64) -> f64 {
        self.mean_rate * t
    }

    pub fn std_dev(&self, t: f64) -> f64 {
        (self.variance_rate * t).sqrt()
    }

    /// `E[exp(X_t)]` for `X_t ~ N(mean_rate t, variance_rate t)`.
    pub fn expected_exp(&self, t: f64) -> f64 {
        ((self.mean_rate + 0.5 * self.variance_rate) * t).exp()
    }
}

/// Exponential growth rate of the expected wealth ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffValue {
    pub kernel: f64,
}

impl PayoffValue {
    /// `E[V_t(b) / V_t(c)] = exp(kernel * t)`.
    pub fn ratio_at_t(&self, t: f64) -> f64 {
        (self.kernel * t).exp()
    }
}

pub fn log_wealth_law(m: &MarketParams, b: &RebalancingRule) -> Result<LogWealthLaw> {
    m.check_dim("rule b", b.len())?;
    let w = b.weights();
    let variance_rate = m.cov_quad(w);
    let mean_rate = m.rate() + dot(&m.excess_drift(), w) - 0.5 * variance_rate;
    Ok(LogWealthLaw {
        mean_rate,
        variance_rate,
    })
}

/// Asymptotic growth rate `lim (1/t) log V_t(b)`.
pub fn growth_rate(m: &MarketParams, b: &RebalancingRule) -> Result<f64> {
    Ok(log_wealth_law(m, b)?.mean_rate)
}

/// `(mu - r 1 - Sigma c)'(b - c)`.
pub fn payoff_kernel(
    m: &MarketParams,
    b: &RebalancingRule,
    c: &RebalancingRule,
) -> Result<PayoffValue> {
    m.check_dim("rule b", b.len())?;
    m.check_dim("rule c", c.len())?;
    let sigma_c = m.cov_times(c.weights());
    let kernel = m
        .drift()
        .iter()
        .zip(&sigma_c)
        .zip(b.weights().iter().zip(c.weights()))
        .map(|((mu, sc), (bi, ci))| (mu - m.rate() - sc) * (bi - ci))
        .sum();
    Ok(PayoffValue { kernel })
}

/// Law of `log(V_t(b) / V_t(c))` per unit time when both rules see the
/// same Brownian motion.
pub fn log_ratio_law(
    m: &MarketParams,
    b: &RebalancingRule,
    c: &RebalancingRule,
) -> Result<LogWealthLaw> {
    m.check_dim("rule b", b.len())?;
    m.check_dim("rule c", c.len())?;
    let diff: Vec<f64> = b
        .weights()
        .iter()
        .zip(c.weights())
        .map(|(x, y)| x - y)
        .collect();
    let mean_rate =
        dot(&m.excess_drift(), &diff) + 0.5 * (m.cov_quad(c.weights()) - m.cov_quad(b.weights()));
    Ok(LogWealthLaw {
        mean_rate,
        variance_rate: m.cov_quad(&diff),
    })
}

/// `P{V_t(b) >= V_t(c)}`.
///
/// When the ratio is degenerate (`t = 0` or `b = c`) it equals 1 exactly and
/// the tie counts as a win, giving 1.
pub fn win_probability(
    m: &MarketParams,
    b: &RebalancingRule,
    c: &RebalancingRule,
    t: f64,
) -> Result<f64> {
    let law = log_ratio_law(m, b, c)?;
    if t == 0.0 || b == c || law.variance_rate == 0.0 {
        return Ok(if t == 0.0 || law.mean_rate >= 0.0 {
            1.0
        } else {
            0.0
        });
    }
    Ok(normal_cdf(law.mean(t) / law.std_dev(t)))
}

/// Standard normal CDF, `Phi(x) = erfc(-x / sqrt 2) / 2`.
///
/// `erfc` is the FreeBSD msun rational approximation (via `libm`), accurate
/// to about one ulp over the whole real line, so the absolute error here is
/// far below 1e-12, including deep in the tails.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}
