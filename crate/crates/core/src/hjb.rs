//! Finite-difference residuals of the single-stock HJB equation.
//!
//! With state `(S, t, M1, M2)` and controls `b`, `c` held by the two players,
//! the generator of a candidate value function `J` is
//!
//! ```text
//! mu S J_S + [r + b(mu - r)] M1 J_M1 + [r + c(mu - r)] M2 J_M2
//!   + sigma^2/2 (S^2 J_SS + b^2 M1^2 J_M1M1 + c^2 M2^2 J_M2M2)
//!   + sigma^2 (b S M1 J_SM1 + c S M2 J_SM2 + b c M1 M2 J_M1M2)
//! ```
//!
//! and the residual `J_t + generator` vanishes for a solution. For
//! `J = M1 / M2` it collapses to `(mu - r - sigma^2 c)(b - c) M1 / M2`, which is
//! zero for every `b` when `c` is the Kelly weight and nonnegative in `c` with
//! its only zero at Kelly when `b` is.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::kelly_rule;
use crate::market::MarketParams;

/// Default relative stencil step.
pub const DEFAULT_STEP: f64 = 1e-4;
/// Default tolerance for residuals that should vanish.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatePoint {
    pub s: f64,
    pub t: f64,
    pub m1: f64,
    pub m2: f64,
}

impl StatePoint {
    pub fn new(s: f64, t: f64, m1: f64, m2: f64) -> Self {
        Self { s, t, m1, m2 }
    }
}

pub type ValueFn = Arc<dyn Fn(&StatePoint) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum CandidateValueFn {
    /// `J = M1 / M2`.
    Ratio,
    Constant(f64),
    Custom {
        name: String,
        f: ValueFn,
    },
}

impl fmt::Debug for CandidateValueFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ratio => f.write_str("Ratio"),
            Self::Constant(v) => write!(f, "Constant({v})"),
            Self::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl CandidateValueFn {
    pub fn custom<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(&StatePoint) -> f64 + Send + Sync + 'static,
    {
        Self::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, x: &StatePoint) -> f64 {
        match self {
            Self::Ratio => x.m1 / x.m2,
            Self::Constant(v) => *v,
            Self::Custom { f, .. } => f(x),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct UnivariateMarket {
    r: f64,
    mu: f64,
    var: f64,
}

fn univariate(m: &MarketParams) -> Result<UnivariateMarket> {
    if m.n() != 1 {
        return Err(Error::Unsupported(format!(
            "HJB residuals are implemented for one stock, market has {}",
            m.n()
        )));
    }
    Ok(UnivariateMarket {
        r: m.rate(),
        mu: m.drift()[0],
        var: m.covariance(0, 0),
    })
}

#[derive(Clone, Copy)]
enum Axis {
    S,
    T,
    M1,
    M2,
}

fn coord(x: &StatePoint, axis: Axis) -> f64 {
    match axis {
        Axis::S => x.s,
        Axis::T => x.t,
        Axis::M1 => x.m1,
        Axis::M2 => x.m2,
    }
}

fn shifted(x: &StatePoint, axis: Axis, d: f64) -> StatePoint {
    let mut y = *x;
    match axis {
        Axis::S => y.s += d,
        Axis::T => y.t += d,
        Axis::M1 => y.m1 += d,
        Axis::M2 => y.m2 += d,
    }
    y
}

struct Stencil<'a> {
    j: &'a CandidateValueFn,
    x: StatePoint,
    steps: [f64; 4],
}

impl Stencil<'_> {
    fn step(&self, axis: Axis) -> f64 {
        self.steps[axis as usize]
    }

    fn first(&self, a: Axis) -> f64 {
        let h = self.step(a);
        (self.j.eval(&shifted(&self.x, a, h)) - self.j.eval(&shifted(&self.x, a, -h))) / (2.0 * h)
    }

    fn second(&self, a: Axis) -> f64 {
        let h = self.step(a);
        (self.j.eval(&shifted(&self.x, a, h)) - 2.0 * self.j.eval(&self.x)
            + self.j.eval(&shifted(&self.x, a, -h)))
            / (h * h)
    }

    fn mixed(&self, a: Axis, b: Axis) -> f64 {
        let (ha, hb) = (self.step(a), self.step(b));
        let at = |sa: f64, sb: f64| {
            self.j
                .eval(&shifted(&shifted(&self.x, a, sa * ha), b, sb * hb))
        };
        (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * ha * hb)
    }
}

/// `J_t + generator` at `x` under controls `b`, `c`, with every partial
/// derivative taken by central differences of step `h (1 + |coordinate|)`.
pub fn hjb_rhs(
    m: &MarketParams,
    j: &CandidateValueFn,
    x: &StatePoint,
    b: f64,
    c: f64,
    h: f64,
) -> Result<f64> {
    let UnivariateMarket { r, mu, var } = univariate(m)?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "stencil step must be positive, got {h}"
        )));
    }
    let mut steps = [0.0; 4];
    for axis in [Axis::S, Axis::T, Axis::M1, Axis::M2] {
        steps[axis as usize] = h * (1.0 + coord(x, axis).abs());
    }
    for (axis, name) in [(Axis::S, "S"), (Axis::M1, "M1"), (Axis::M2, "M2")] {
        let lo = coord(x, axis) - steps[axis as usize];
        if !(lo > 0.0) {
            return Err(Error::DomainViolation {
                coordinate: name,
                value: coord(x, axis),
            });
        }
    }
    let st = Stencil { j, x: *x, steps };
    let (s, m1, m2) = (x.s, x.m1, x.m2);

    let generator = mu * s * st.first(Axis::S)
        + (r + b * (mu - r)) * m1 * st.first(Axis::M1)
        + (r + c * (mu - r)) * m2 * st.first(Axis::M2)
        + 0.5 * var * s * s * st.second(Axis::S)
        + 0.5 * b * b * var * m1 * m1 * st.second(Axis::M1)
        + 0.5 * c * c * var * m2 * m2 * st.second(Axis::M2)
        + b * var * s * m1 * st.mixed(Axis::S, Axis::M1)
        + c * var * s * m2 * st.mixed(Axis::S, Axis::M2)
        + b * c * var * m1 * m2 * st.mixed(Axis::M1, Axis::M2);
    Ok(st.first(Axis::T) + generator)
}

/// Exact residual of `J = M1 / M2`: `(mu - r - sigma^2 c)(b - c) M1 / M2`.
pub fn ratio_residual(m: &MarketParams, x: &StatePoint, b: f64, c: f64) -> Result<f64> {
    let UnivariateMarket { r, mu, var } = univariate(m)?;
    Ok((mu - r - var * c) * (b - c) * x.m1 / x.m2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub state: StatePoint,
    pub b: f64,
    pub c: f64,
    pub residual: f64,
    pub closed_form: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HjbReport {
    pub kelly: f64,
    pub step: f64,
    pub tolerance: f64,
    /// `c` fixed at Kelly, `b` over the grid: every residual must vanish.
    pub player1: Vec<ResidualEntry>,
    /// `b` fixed at Kelly, `c` over the grid: residuals `>= 0`, zero only at Kelly.
    pub player2: Vec<ResidualEntry>,
    pub player1_worst: f64,
    pub player2_min_off_kelly: Option<f64>,
    pub closed_form_worst: f64,
    pub terminal_condition_ok: bool,
    pub passed: bool,
}

fn contains(grid: &[f64], v: f64) -> bool {
    grid.iter()
        .any(|g| (g - v).abs() <= 1e-12 * (1.0 + v.abs()))
}

/// Checks that `J = M1 / M2` makes the Kelly control a best response for
/// both players at every probe state. Both grids must contain the Kelly
/// weight.
pub fn verify_mutual_best_response(
    m: &MarketParams,
    grid_b: &[f64],
    grid_c: &[f64],
    probes: &[StatePoint],
    h: f64,
    tolerance: f64,
) -> Result<HjbReport> {
    univariate(m)?;
    let kelly = kelly_rule(m).weights()[0];
    if !contains(grid_b, kelly) || !contains(grid_c, kelly) {
        return Err(Error::InvalidConfig(format!(
            "grids must contain the Kelly weight {kelly}"
        )));
    }
    if probes.is_empty() {
        return Err(Error::InvalidConfig(
            "at least one state probe is required".into(),
        ));
    }
    let j = CandidateValueFn::Ratio;
    let entry = |x: &StatePoint, b: f64, c: f64| -> Result<ResidualEntry> {
        Ok(ResidualEntry {
            state: *x,
            b,
            c,
            residual: hjb_rhs(m, &j, x, b, c, h)?,
            closed_form: ratio_residual(m, x, b, c)?,
            ok: true,
        })
    };

    let mut player1 = Vec::new();
    let mut player2 = Vec::new();
    for x in probes {
        for &b in grid_b {
            let mut e = entry(x, b, kelly)?;
            e.ok = e.residual.abs() <= tolerance;
            player1.push(e);
        }
        for &c in grid_c {
            let mut e = entry(x, kelly, c)?;
            e.ok = if (c - kelly).abs() <= 1e-12 * (1.0 + kelly.abs()) {
                e.residual.abs() <= tolerance
            } else {
                e.residual > tolerance
            };
            player2.push(e);
        }
    }
    let player1_worst = player1.iter().map(|e| e.residual.abs()).fold(0.0, f64::max);
    let player2_min_off_kelly = player2
        .iter()
        .filter(|e| (e.c - kelly).abs() > 1e-12 * (1.0 + kelly.abs()))
        .map(|e| e.residual)
        .reduce(f64::min);
    let closed_form_worst = player1
        .iter()
        .chain(&player2)
        .map(|e| (e.residual - e.closed_form).abs())
        .fold(0.0, f64::max);
    // J(S, T, M1, M2) = M1 / M2 for every T; probe a spread of horizons.
    let terminal_condition_ok = probes.iter().all(|x| {
        [0.0, 1.0, 300.0]
            .iter()
            .all(|&horizon| j.eval(&StatePoint { t: horizon, ..*x }) == x.m1 / x.m2)
    });
    let passed = player1.iter().chain(&player2).all(|e| e.ok)
        && closed_form_worst <= tolerance
        && terminal_condition_ok;
    Ok(HjbReport {
        kelly,
        step: h,
        tolerance,
        player1,
        player2,
        player1_worst,
        player2_min_off_kelly,
        closed_form_worst,
        terminal_condition_ok,
        passed,
    })
}

/// Kelly plus `{-2, -1, -0.5, 0, 0.5, 1, 2}`.
pub fn default_grid(m: &MarketParams) -> Result<Vec<f64>> {
    univariate(m)?;
    let kelly = kelly_rule(m).weights()[0];
    Ok([-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0]
        .iter()
        .map(|o| kelly + o)
        .collect())
}

pub fn default_probes() -> Vec<StatePoint> {
    vec![
        StatePoint::new(1.0, 0.0, 1.0, 1.0),
        StatePoint::new(1.0, 0.0, 2.0, 1.0),
        StatePoint::new(1.0, 0.0, 1.0, 2.0),
        StatePoint::new(3.5, 10.0, 0.7, 1.3),
    ]
}
