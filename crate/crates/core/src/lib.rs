//! Two traders each commit to a constant rebalancing rule over `[0, t]` in a
//! market of one bond and `n` correlated geometric Brownian motions. Player 1
//! maximizes `E[V_t(b) / V_t(c)]`, Player 2 minimizes it, and the unique
//! equilibrium has both at the Kelly rule `Sigma^{-1}(mu - r 1)`.
//!
//! - [`market`]: market parameters and rebalancing rules.
//! - [`analytics`]: closed forms for wealth, payoff kernel, growth rate, win probability.
//! - [`game`]: best responses, the Kelly equilibrium, saddle-point checks.
//! - [`monte_carlo`]: seeded correlated paths and estimators.
//! - [`phi_game`]: fair randomizations and the investment phi-game.
//! - [`hjb`]: finite-difference HJB residuals for state-dependent strategies.
//! - [`cli`]: the `kelly-game` command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod cli;
mod error;
pub mod game;
pub mod hjb;
pub mod linalg;
pub mod market;
pub mod monte_carlo;
pub mod phi_game;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
pub use market::{MarketParams, MarketSpec, RebalancingRule};
