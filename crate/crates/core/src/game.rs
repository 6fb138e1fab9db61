//! Best responses and the equilibrium of the expected-wealth-ratio game.
//!
//! Player 1 picks `b` to maximize `E[V_t(b)/V_t(c)]`, Player 2 picks `c` to
//! minimize it. The kernel `(mu - r 1 - Sigma c)'(b - c)` is affine in `b`, so
//! Player 1's best response is unbounded unless `Sigma c = mu - r 1`; Player 2's
//! is the midpoint between `b` and the Kelly rule `Sigma^{-1}(mu - r 1)`.

use serde::{Deserialize, Serialize};

use crate::analytics::{growth_rate, payoff_kernel};
use crate::error::Result;
use crate::market::{MarketParams, RebalancingRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseKind {
    Finite,
    UnboundedAbove,
    UnboundedBelow,
    /// Any weight is optimal in this coordinate.
    Indifferent,
}

impl ResponseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ResponseKind::Finite => "finite",
            ResponseKind::UnboundedAbove => "unbounded_above",
            ResponseKind::UnboundedBelow => "unbounded_below",
            ResponseKind::Indifferent => "indifferent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponseReport {
    pub kinds: Vec<ResponseKind>,
    /// Present when every coordinate is finite or indifferent.
    pub rule: Option<RebalancingRule>,
}

impl BestResponseReport {
    pub fn is_bounded(&self) -> bool {
        self.rule.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSolution {
    pub kelly: RebalancingRule,
    pub value_kernel: f64,
    pub value_ratio: f64,
    pub growth_rate_at_kelly: f64,
}

/// Continuous-time Kelly rule, the solution of `Sigma b = mu - r 1`.
pub fn kelly_rule(m: &MarketParams) -> RebalancingRule {
    RebalancingRule::new(m.covariance_factor().solve(&m.excess_drift()))
}

pub fn solve(m: &MarketParams) -> GameSolution {
    let kelly = kelly_rule(m);
    let growth_rate_at_kelly = growth_rate(m, &kelly).expect("kelly has market dimension");
    GameSolution {
        kelly,
        value_kernel: 0.0,
        value_ratio: 1.0,
        growth_rate_at_kelly,
    }
}

/// Relative tolerance under which `(Sigma c)_i` and `mu_i - r` are treated as equal.
pub const INDIFFERENCE_TOLERANCE: f64 = 1e-9;

pub fn best_response_p1(m: &MarketParams, c: &RebalancingRule) -> Result<BestResponseReport> {
    m.check_dim("rule c", c.len())?;
    let sigma_c = m.cov_times(c.weights());
    let kinds: Vec<ResponseKind> = m
        .excess_drift()
        .iter()
        .zip(&sigma_c)
        .map(|(&excess, &hedge)| {
            if (hedge - excess).abs() <= INDIFFERENCE_TOLERANCE * (1.0 + excess.abs()) {
                ResponseKind::Indifferent
            } else if hedge < excess {
                ResponseKind::UnboundedAbove
            } else {
                ResponseKind::UnboundedBelow
            }
        })
        .collect();
    // Every rule is optimal when all coordinates are flat; report c itself.
    let rule = kinds
        .iter()
        .all(|k| *k == ResponseKind::Indifferent)
        .then(|| c.clone());
    Ok(BestResponseReport { kinds, rule })
}

/// `c*(b) = (b + kelly) / 2`.
pub fn best_response_p2(m: &MarketParams, b: &RebalancingRule) -> Result<RebalancingRule> {
    m.check_dim("rule b", b.len())?;
    let kelly = kelly_rule(m);
    Ok(RebalancingRule::new(
        b.weights()
            .iter()
            .zip(kelly.weights())
            .map(|(x, k)| 0.5 * (x + k))
            .collect(),
    ))
}

pub fn best_response_p2_report(
    m: &MarketParams,
    b: &RebalancingRule,
) -> Result<BestResponseReport> {
    let rule = best_response_p2(m, b)?;
    Ok(BestResponseReport {
        kinds: vec![ResponseKind::Finite; rule.len()],
        rule: Some(rule),
    })
}

/// Slack allowed before a saddle inequality counts as violated.
pub const SADDLE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleViolation {
    pub probe: RebalancingRule,
    /// `"p1"`: `pi(kelly, probe) < 0`; `"p2"`: `pi(probe, kelly) > 0`.
    pub side: String,
    pub kernel: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleReport {
    pub kelly: RebalancingRule,
    pub probes: usize,
    /// `min_c pi(kelly, c)` over the probes; must be `>= 0`.
    pub p1_worst_margin: f64,
    pub p1_worst_probe: RebalancingRule,
    /// `max_b pi(b, kelly)` over the probes; must be `<= 0`.
    pub p2_worst_margin: f64,
    pub p2_worst_probe: RebalancingRule,
    pub violations: Vec<SaddleViolation>,
    pub passed: bool,
}

/// Checks `pi(kelly, c) >= 0` and `pi(b, kelly) <= 0` for every probe used
/// as both `b` and `c`.
pub fn verify_saddle(m: &MarketParams, probes: &[RebalancingRule]) -> Result<SaddleReport> {
    let kelly = kelly_rule(m);
    let mut p1 = (f64::INFINITY, kelly.clone());
    let mut p2 = (f64::NEG_INFINITY, kelly.clone());
    let mut violations = Vec::new();
    for probe in probes {
        let guaranteed = payoff_kernel(m, &kelly, probe)?.kernel;
        let conceded = payoff_kernel(m, probe, &kelly)?.kernel;
        if guaranteed < p1.0 {
            p1 = (guaranteed, probe.clone());
        }
        if conceded > p2.0 {
            p2 = (conceded, probe.clone());
        }
        if guaranteed < -SADDLE_TOLERANCE {
            violations.push(SaddleViolation {
                probe: probe.clone(),
                side: "p1".into(),
                kernel: guaranteed,
            });
        }
        if conceded > SADDLE_TOLERANCE {
            violations.push(SaddleViolation {
                probe: probe.clone(),
                side: "p2".into(),
                kernel: conceded,
            });
        }
    }
    Ok(SaddleReport {
        kelly,
        probes: probes.len(),
        p1_worst_margin: p1.0,
        p1_worst_probe: p1.1,
        p2_worst_margin: p2.0,
        p2_worst_probe: p2.1,
        passed: violations.is_empty() && !probes.is_empty(),
        violations,
    })
}

/// Probe rules `kelly + o * e` for every offset `o` in `{-2, -1, -0.5, 0, 0.5, 1, 2}`
/// and every coordinate direction `e`, deduplicated.
pub fn default_probes(m: &MarketParams) -> Vec<RebalancingRule> {
    let kelly = kelly_rule(m);
    let mut out = vec![kelly.clone()];
    for i in 0..m.n() {
        for &o in &[-2.0, -1.0, -0.5, 0.5, 1.0, 2.0] {
            let mut w = kelly.weights().to_vec();
            w[i] += o;
            out.push(RebalancingRule::new(w));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(w: &[f64]) -> RebalancingRule {
        RebalancingRule::new(w.to_vec())
    }

    fn identity_market(r: f64, mu: &[f64]) -> MarketParams {
        let n = mu.len();
        let rho: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        MarketParams::new(r, mu.to_vec(), vec![1.0; n], &rho).unwrap()
    }

    #[test]
    fn shannon_kelly_is_half() {
        let k = kelly_rule(&MarketParams::shannon_demon());
        assert!((k.weights()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn identity_kelly_is_excess_drift() {
        let m = identity_market(0.02, &[0.12, 0.22]);
        let k = kelly_rule(&m);
        assert!((k.weights()[0] - 0.1).abs() < 1e-15);
        assert!((k.weights()[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn p1_response_kinds_shannon() {
        let m = MarketParams::shannon_demon();
        let kind = |c: f64| best_response_p1(&m, &rule(&[c])).unwrap().kinds[0];
        assert_eq!(kind(1.0), ResponseKind::UnboundedBelow);
        assert_eq!(kind(0.5), ResponseKind::Indifferent);
        assert_eq!(kind(0.0), ResponseKind::UnboundedAbove);
        assert!(best_response_p1(&m, &rule(&[0.5])).unwrap().is_bounded());
        assert!(!best_response_p1(&m, &rule(&[1.0])).unwrap().is_bounded());
    }

    #[test]
    fn p2_response_shannon() {
        let m = MarketParams::shannon_demon();
        let at = |b: f64| best_response_p2(&m, &rule(&[b])).unwrap().weights()[0];
        assert!((at(0.5) - 0.5).abs() < 1e-12);
        assert!((at(1.0) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn p2_response_grid_oracle() {
        // minimize (mu - r - sigma^2 c)(b - c) over a fine grid in c
        let m = MarketParams::shannon_demon();
        let (mu, s2) = (m.drift()[0], m.covariance(0, 0));
        let b = 1.0;
        let (mut best_c, mut best_v) = (0.0, f64::INFINITY);
        for i in 0..=400_000 {
            let c = -2.0 + i as f64 * 1e-5;
            let v = (mu - s2 * c) * (b - c);
            if v < best_v {
                best_v = v;
                best_c = c;
            }
        }
        assert!((best_c - 0.75).abs() < 1e-5);
        let got = best_response_p2(&m, &rule(&[b])).unwrap().weights()[0];
        assert!((got - best_c).abs() < 1e-5);
    }

    #[test]
    fn p2_response_identity() {
        let m = identity_market(0.0, &[0.1, 0.2]);
        let c = best_response_p2(&m, &RebalancingRule::cash(2)).unwrap();
        assert!((c.weights()[0] - 0.05).abs() < 1e-15);
        assert!((c.weights()[1] - 0.10).abs() < 1e-15);
        let report = best_response_p2_report(&m, &RebalancingRule::cash(2)).unwrap();
        assert!(report.kinds.iter().all(|k| *k == ResponseKind::Finite));
    }

    #[test]
    fn saddle_on_shannon_probes() {
        let m = MarketParams::shannon_demon();
        let probes: Vec<_> = [-1.0, 0.0, 0.5, 1.0, 2.0]
            .iter()
            .map(|&x| rule(&[x]))
            .collect();
        let report = verify_saddle(&m, &probes).unwrap();
        assert!(report.passed);
        assert!(report.p1_worst_margin.abs() < 1e-15);
        assert!((report.p1_worst_probe.weights()[0] - 0.5).abs() < 1e-15);
        assert!(report.p2_worst_margin.abs() < 1e-15);
    }

    #[test]
    fn guaranteed_margin_against_all_in() {
        let m = MarketParams::shannon_demon();
        let k = kelly_rule(&m);
        let v = payoff_kernel(&m, &k, &rule(&[1.0])).unwrap().kernel;
        assert!((v - 0.1201).abs() < 1e-4);
    }

    #[test]
    fn empty_probe_set_does_not_pass() {
        let report = verify_saddle(&MarketParams::shannon_demon(), &[]).unwrap();
        assert!(!report.passed);
    }

    #[test]
    fn default_probes_bracket_kelly() {
        let m = identity_market(0.0, &[0.1, 0.2]);
        let probes = default_probes(&m);
        assert_eq!(probes.len(), 13);
        assert!(verify_saddle(&m, &probes).unwrap().passed);
    }
}
