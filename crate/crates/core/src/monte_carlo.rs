//! Seeded simulation of correlated Brownian paths and the wealth of
//! constant-rebalanced portfolios along them.
//!
//! Wealth is advanced with the exact lognormal step
//! `log V_{t+dt} - log V_t = mean_rate dt + sum_i b_i sigma_i dW_i`,
//! so grid values have the exact continuous-time law at any step size.
//! Both players are always evaluated on the same increments.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::log_wealth_law;
use crate::error::{Error, Result};
use crate::linalg::compensated_sum;
use crate::market::{MarketParams, RebalancingRule};
use crate::rng::{Domain, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: f64,
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(horizon: f64, steps: usize, paths: usize, seed: u64) -> Result<Self> {
        let cfg = Self {
            horizon,
            steps,
            paths,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "horizon must be positive and finite, got {}",
                self.horizon
            )));
        }
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be at least 1".into()));
        }
        if self.paths == 0 {
            return Err(Error::InvalidConfig("paths must be at least 1".into()));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.steps)
            .map(|k| {
                if k == self.steps {
                    self.horizon
                } else {
                    k as f64 * dt
                }
            })
            .collect()
    }
}

/// Standard normals for `(step, asset)` mapped through the correlation
/// factor and scaled by `sqrt(dt)`.
fn fill_increments(
    stream: &mut Stream,
    factor: &crate::linalg::Cholesky,
    dt: f64,
    out: &mut [f64],
) {
    let n = factor.dim();
    let scale = dt.sqrt();
    let mut z = vec![0.0; n];
    for step in out.chunks_mut(n) {
        for zi in z.iter_mut() {
            *zi = stream.normal();
        }
        factor.apply_lower(&z, step);
        for w in step.iter_mut() {
            *w *= scale;
        }
    }
}

/// Brownian increments for a batch of paths, stored path-major as
/// `[path][step][asset]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    config: SimConfig,
    assets: usize,
    times: Vec<f64>,
    increments: Vec<f64>,
}

pub fn simulate_paths(m: &MarketParams, cfg: &SimConfig) -> Result<PathBatch> {
    cfg.validate()?;
    let n = m.n();
    let per_path = cfg.steps * n;
    let factor = m.correlation_factor();
    let dt = cfg.dt();
    let mut increments = vec![0.0; cfg.paths * per_path];
    increments
        .par_chunks_mut(per_path)
        .enumerate()
        .for_each(|(path, out)| {
            let mut stream = Stream::new(cfg.seed, Domain::Path, path as u64);
            fill_increments(&mut stream, factor, dt, out);
        });
    Ok(PathBatch {
        config: *cfg,
        assets: n,
        times: cfg.times(),
        increments,
    })
}

/// Moments of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub mean: f64,
    pub std_dev: f64,
    pub std_error: f64,
    pub count: usize,
}

impl SampleStats {
    /// Sample mean and `n - 1` standard deviation, summed in slice order.
    /// A single observation reports zero spread.
    pub fn from_values(values: &[f64]) -> Self {
        let count = values.len();
        let mean = compensated_sum(values.iter().copied()) / count as f64;
        let var = if count > 1 {
            compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (count - 1) as f64
        } else {
            0.0
        };
        let std_dev = var.sqrt();
        Self {
            mean,
            std_dev,
            std_error: std_dev / (count as f64).sqrt(),
            count,
        }
    }
}

/// A Monte Carlo estimate in the JSON form `{estimate, std_error, paths, seed}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub std_error: f64,
    pub paths: usize,
    pub seed: u64,
}

impl Estimate {
    /// `|estimate - reference|` in standard errors; infinite when the
    /// estimate has no spread but misses the reference.
    pub fn z_score(&self, reference: f64) -> f64 {
        let gap = (self.estimate - reference).abs();
        if gap == 0.0 {
            0.0
        } else {
            gap / self.std_error
        }
    }

    pub fn within(&self, reference: f64, standard_errors: f64) -> bool {
        self.z_score(reference) <= standard_errors
    }
}

impl PathBatch {
    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn paths(&self) -> usize {
        self.config.paths
    }

    pub fn steps(&self) -> usize {
        self.config.steps
    }

    pub fn assets(&self) -> usize {
        self.assets
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Increment `dW` over step `step` of path `path`, one entry per asset.
    pub fn increment(&self, path: usize, step: usize) -> &[f64] {
        let n = self.assets;
        let start = (path * self.config.steps + step) * n;
        &self.increments[start..start + n]
    }

    /// Index of grid time `t`, within a relative tolerance of `1e-9`.
    pub fn grid_index(&self, t: f64) -> Result<usize> {
        let tol = 1e-9 * self.config.horizon.max(1.0);
        let k = (t / self.config.dt()).round();
        if !(k >= 0.0) || k > self.config.steps as f64 {
            return Err(Error::TimeOffGrid { t });
        }
        let k = k as usize;
        if (self.times[k] - t).abs() > tol {
            return Err(Error::TimeOffGrid { t });
        }
        Ok(k)
    }

    /// `W_t` for every asset at grid index `k` of one path.
    pub fn brownian_at(&self, path: usize, k: usize) -> Vec<f64> {
        let mut w = vec![0.0; self.assets];
        for step in 0..k {
            for (wi, dw) in w.iter_mut().zip(self.increment(path, step)) {
                *wi += dw;
            }
        }
        w
    }

    /// `sum_i x_i sigma_i W_i(t_k)` for every path.
    fn exposure_at(&self, m: &MarketParams, x: &[f64], k: usize) -> Vec<f64> {
        let loadings: Vec<f64> = x.iter().zip(m.volatility()).map(|(a, s)| a * s).collect();
        (0..self.paths())
            .into_par_iter()
            .map(|p| {
                (0..k)
                    .map(|step| {
                        self.increment(p, step)
                            .iter()
                            .zip(&loadings)
                            .map(|(dw, l)| dw * l)
                            .sum::<f64>()
                    })
                    .sum()
            })
            .collect()
    }

    /// `log V_t(b)` at grid index `k` for every path.
    pub fn log_wealth_at(
        &self,
        m: &MarketParams,
        b: &RebalancingRule,
        k: usize,
    ) -> Result<Vec<f64>> {
        self.check(m)?;
        let law = log_wealth_law(m, b)?;
        let drift = law.mean(self.times[k]);
        Ok(self
            .exposure_at(m, b.weights(), k)
            .into_iter()
            .map(|x| drift + x)
            .collect())
    }

    /// `log(V_t(b) / V_t(c))` at grid index `k` for every path.
    ///
    /// Identical rules give exactly zero on every path.
    pub fn log_ratio_at(
        &self,
        m: &MarketParams,
        b: &RebalancingRule,
        c: &RebalancingRule,
        k: usize,
    ) -> Result<Vec<f64>> {
        self.check(m)?;
        let (lb, lc) = (log_wealth_law(m, b)?, log_wealth_law(m, c)?);
        let drift = (lb.mean_rate - lc.mean_rate) * self.times[k];
        let diff: Vec<f64> = b
            .weights()
            .iter()
            .zip(c.weights())
            .map(|(x, y)| x - y)
            .collect();
        Ok(self
            .exposure_at(m, &diff, k)
            .into_iter()
            .map(|x| drift + x)
            .collect())
    }

    /// `log V(b)` along the whole grid of one path.
    pub fn log_wealth_path(
        &self,
        m: &MarketParams,
        b: &RebalancingRule,
        path: usize,
    ) -> Result<Vec<f64>> {
        self.check(m)?;
        let law = log_wealth_law(m, b)?;
        let loadings: Vec<f64> = b
            .weights()
            .iter()
            .zip(m.volatility())
            .map(|(a, s)| a * s)
            .collect();
        let mut exposure = 0.0;
        let mut out = Vec::with_capacity(self.steps() + 1);
        out.push(0.0);
        for step in 0..self.steps() {
            exposure += self
                .increment(path, step)
                .iter()
                .zip(&loadings)
                .map(|(dw, l)| dw * l)
                .sum::<f64>();
            out.push(law.mean(self.times[step + 1]) + exposure);
        }
        Ok(out)
    }

    fn check(&self, m: &MarketParams) -> Result<()> {
        m.check_dim("path batch assets", self.assets)
    }
}

/// Sample mean of `V_t(b) / V_t(c)` with its standard error.
pub fn estimate_expected_ratio(
    batch: &PathBatch,
    m: &MarketParams,
    b: &RebalancingRule,
    c: &RebalancingRule,
    t: f64,
) -> Result<Estimate> {
    let k = batch.grid_index(t)?;
    let ratios: Vec<f64> = batch
        .log_ratio_at(m, b, c, k)?
        .into_iter()
        .map(f64::exp)
        .collect();
    let stats = SampleStats::from_values(&ratios);
    Ok(Estimate {
        estimate: stats.mean,
        std_error: stats.std_error,
        paths: batch.paths(),
        seed: batch.config.seed,
    })
}

/// Fraction of paths with `V_t(b) >= V_t(c)` and its binomial standard error.
pub fn estimate_win_probability(
    batch: &PathBatch,
    m: &MarketParams,
    b: &RebalancingRule,
    c: &RebalancingRule,
    t: f64,
) -> Result<Estimate> {
    let k = batch.grid_index(t)?;
    let wins = batch
        .log_ratio_at(m, b, c, k)?
        .into_iter()
        .filter(|x| *x >= 0.0)
        .count();
    let n = batch.paths() as f64;
    let p = wins as f64 / n;
    Ok(Estimate {
        estimate: p,
        std_error: (p * (1.0 - p) / n).sqrt(),
        paths: batch.paths(),
        seed: batch.config.seed,
    })
}

/// Moments of `log V_t(b)` across paths.
pub fn log_wealth_stats(
    batch: &PathBatch,
    m: &MarketParams,
    b: &RebalancingRule,
    t: f64,
) -> Result<SampleStats> {
    let k = batch.grid_index(t)?;
    Ok(SampleStats::from_values(&batch.log_wealth_at(m, b, k)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlayRow {
    pub t: f64,
    pub v1: f64,
    pub v2: f64,
    pub ratio: f64,
}

/// One play of the game: both wealths along path 0 of `cfg` (the same path
/// a batch with this seed would produce first). `cfg.paths` is ignored.
pub fn sample_play(
    m: &MarketParams,
    b: &RebalancingRule,
    c: &RebalancingRule,
    cfg: &SimConfig,
) -> Result<Vec<PlayRow>> {
    let single = SimConfig { paths: 1, ..*cfg };
    let batch = simulate_paths(m, &single)?;
    let lb = batch.log_wealth_path(m, b, 0)?;
    let lc = batch.log_wealth_path(m, c, 0)?;
    Ok(batch
        .times()
        .iter()
        .zip(lb.iter().zip(&lc))
        .map(|(&t, (&x, &y))| PlayRow {
            t,
            v1: x.exp(),
            v2: y.exp(),
            ratio: (x - y).exp(),
        })
        .collect())
}

/// Fixed-width float formatting for CSV: 17 significant digits, which
/// round-trips every `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes rows as CSV with header `t,v1,v2,ratio`.
pub fn write_play_csv<W: Write>(mut out: W, rows: &[PlayRow]) -> std::io::Result<()> {
    writeln!(out, "t,v1,v2,ratio")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.v1),
            fmt_f64(r.v2),
            fmt_f64(r.ratio)
        )?;
    }
    Ok(())
}
