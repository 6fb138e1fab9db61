#![allow(dead_code)]

use kelly_game::{MarketParams, RebalancingRule};
use proptest::prelude::*;

pub fn two_asset() -> MarketParams {
    MarketParams::new(
        0.02,
        vec![0.06, 0.1],
        vec![0.2, 0.3],
        &[vec![1.0, 0.4], vec![0.4, 1.0]],
    )
    .unwrap()
}

pub fn rule(w: &[f64]) -> RebalancingRule {
    RebalancingRule::new(w.to_vec())
}

pub fn arb_market() -> impl Strategy<Value = MarketParams> {
    (1usize..=4)
        .prop_flat_map(|n| {
            (
                -0.05..0.1f64,
                prop::collection::vec(-0.2..0.4f64, n),
                prop::collection::vec(0.05..0.8f64, n),
                prop::collection::vec(-1.0..1.0f64, n * n),
            )
        })
        .prop_filter_map("positive definite", |(r, mu, sigma, raw)| {
            // correlation from a random factor: rho = D^-1/2 (A A' + eps I) D^-1/2
            let n = mu.len();
            let mut g = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    g[i][j] = (0..n).map(|k| raw[i * n + k] * raw[j * n + k]).sum::<f64>()
                        + if i == j { 0.1 } else { 0.0 };
                }
            }
            let rho: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| g[i][j] / (g[i][i] * g[j][j]).sqrt())
                        .collect()
                })
                .collect();
            MarketParams::new(r, mu, sigma, &rho).ok()
        })
}

pub fn arb_rule(n: usize) -> impl Strategy<Value = RebalancingRule> {
    prop::collection::vec(-3.0..3.0f64, n).prop_map(RebalancingRule::new)
}

pub fn shannon() -> MarketParams {
    MarketParams::shannon_demon()
}
