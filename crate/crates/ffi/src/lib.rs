//! C ABI over `kelly_game`.
//!
//! Markets are opaque handles created by `kg_market_new` (or
//! `kg_market_shannon_demon`) and released with `kg_market_free`. Rules are
//! passed as `(pointer, length)` pairs whose length must equal the market
//! dimension. Every fallible call returns a `KgStatus`; on failure the
//! message is kept per thread and can be copied out with
//! `kg_last_error_message`.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use kelly_game::analytics;
use kelly_game::game::{self, ResponseKind};
use kelly_game::hjb::{self, CandidateValueFn, StatePoint};
use kelly_game::monte_carlo::{self, SimConfig};
use kelly_game::{Error, MarketParams, RebalancingRule};

/// Opaque market handle.
pub struct KgMarket {
    inner: MarketParams,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KgStatus {
    Ok = 0,
    NullPointer = 1,
    DimensionMismatch = 2,
    NonPositiveVolatility = 3,
    InvalidCorrelation = 4,
    SingularCovariance = 5,
    NonFinite = 6,
    TimeOffGrid = 7,
    InvalidConfig = 8,
    InvalidRandomization = 9,
    DivisionDegenerate = 10,
    DomainViolation = 11,
    Unsupported = 12,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KgResponseKind {
    Finite = 0,
    UnboundedAbove = 1,
    UnboundedBelow = 2,
    Indifferent = 3,
}

/// Monte Carlo estimate with its standard error.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KgEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub paths: u64,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> KgStatus {
    match err {
        Error::DimensionMismatch { .. } => KgStatus::DimensionMismatch,
        Error::NonPositiveVolatility { .. } => KgStatus::NonPositiveVolatility,
        Error::InvalidCorrelation(_) => KgStatus::InvalidCorrelation,
        Error::SingularCovariance { .. } => KgStatus::SingularCovariance,
        Error::NonFinite(_) => KgStatus::NonFinite,
        Error::TimeOffGrid { .. } => KgStatus::TimeOffGrid,
        Error::InvalidConfig(_) => KgStatus::InvalidConfig,
        Error::InvalidRandomization(_) => KgStatus::InvalidRandomization,
        Error::DivisionDegenerate(_) => KgStatus::DivisionDegenerate,
        Error::DomainViolation { .. } => KgStatus::DomainViolation,
        Error::Unsupported(_) => KgStatus::Unsupported,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> KgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KgStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            KgStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            KgStatus::Panic
        }
    }
}

unsafe fn market_ref<'a>(m: *const KgMarket) -> Result<&'a MarketParams, Fail> {
    m.as_ref().map(|m| &m.inner).ok_or(Fail::Null("market"))
}

unsafe fn read_slice<'a>(
    ptr: *const f64,
    len: usize,
    what: &'static str,
) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn read_rule(
    m: &MarketParams,
    ptr: *const f64,
    len: usize,
    what: &'static str,
) -> Result<RebalancingRule, Fail> {
    if len != m.n() {
        return Err(Fail::Lib(Error::DimensionMismatch {
            what,
            expected: m.n(),
            found: len,
        }));
    }
    Ok(RebalancingRule::new(read_slice(ptr, len, what)?.to_vec()))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn write_slice(
    out: *mut f64,
    len: usize,
    values: &[f64],
    what: &'static str,
) -> Result<(), Fail> {
    if len != values.len() {
        return Err(Fail::Lib(Error::DimensionMismatch {
            what,
            expected: values.len(),
            found: len,
        }));
    }
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    slice::from_raw_parts_mut(out, len).copy_from_slice(values);
    Ok(())
}

/// Builds a validated market. `rho` is row-major `n * n`.
///
/// # Safety
/// `mu` and `sigma` must point to `n` doubles, `rho` to `n * n` doubles, and
/// `out` to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn kg_market_new(
    r: f64,
    mu: *const f64,
    sigma: *const f64,
    rho: *const f64,
    n: usize,
    out: *mut *mut KgMarket,
) -> KgStatus {
    guard(|| {
        let mu = read_slice(mu, n, "mu")?.to_vec();
        let sigma = read_slice(sigma, n, "sigma")?.to_vec();
        let flat = read_slice(rho, n * n, "rho")?;
        let rows: Vec<Vec<f64>> = flat.chunks(n.max(1)).map(<[f64]>::to_vec).collect();
        let market = MarketParams::new(r, mu, sigma, &rows)?;
        write_out(
            out,
            Box::into_raw(Box::new(KgMarket { inner: market })),
            "out",
        )
    })
}

/// The zero-rate single-stock market with `sigma = ln 2`, `mu = sigma^2 / 2`.
///
/// # Safety
/// `out` must point to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn kg_market_shannon_demon(out: *mut *mut KgMarket) -> KgStatus {
    guard(|| {
        let market = MarketParams::shannon_demon();
        write_out(
            out,
            Box::into_raw(Box::new(KgMarket { inner: market })),
            "out",
        )
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `m` must come from `kg_market_new` or `kg_market_shannon_demon` and not
/// have been freed already.
#[no_mangle]
pub unsafe extern "C" fn kg_market_free(m: *mut KgMarket) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of stocks, or 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn kg_market_dim(m: *const KgMarket) -> usize {
    m.as_ref().map_or(0, |m| m.inner.n())
}

/// Copies the row-major covariance matrix into `out` (`len = n * n`).
///
/// # Safety
/// `m` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn kg_market_covariance(
    m: *const KgMarket,
    out: *mut f64,
    len: usize,
) -> KgStatus {
    guard(|| {
        let m = market_ref(m)?;
        write_slice(out, len, m.covariance_matrix(), "covariance out")
    })
}

/// Kelly rule `Sigma^{-1}(mu - r 1)` into `out` (`len = n`).
///
/// # Safety
/// `m` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn kg_kelly_rule(m: *const KgMarket, out: *mut f64, len: usize) -> KgStatus {
    guard(|| {
        let m = market_ref(m)?;
        write_slice(out, len, game::kelly_rule(m).weights(), "kelly out")
    })
}

/// # Safety
/// `b` must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kg_growth_rate(
    m: *const KgMarket,
    b: *const f64,
    n: usize,
    out: *mut f64,
) -> KgStatus {
    guard(|| {
        let m = market_ref(m)?;
        let b = read_rule(m, b, n, "b")?;
        write_out(out, analytics::growth_rate(m, &b)?, "out")
    })
}

/// Kernel `(mu - r 1 - Sigma c)'(b - c)`.
///
/// # Safety
/// `b` and `c` must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kg_payoff_kernel(
    m: *const KgMarket,
    b: *const f64,
    c: *const f64,
    n: usize,
    out: *mut f64,
) -> KgStatus {
    guard(|| {
        let m = market_ref(m)?;
        let (b, c) = (read_rule(m, b, n, "b")?, read_rule(m, c, n, "c")?);
        write_out(out, analytics::payoff_kernel(m, &b, &c)?.kernel, "out")
    })
}

/// `E[V_t(b) / V_t(c)]` in closed form.
///
/// # Safety
/// `b` and `c` must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kg_expected_ratio(
    m: *const KgMarket,
    b: *const f64,
    c: *const f64,
    n: usize,
    t: f64,
    out: *mut f64,
) -> KgStatus {
    guard(|| {
        let m = market_ref(m)?;
        let (b, c) = (read_rule(m, b, n, "b")?, read_rule(m, c, n, "c")?);
        write_out(
            out,
            analytics::payoff_kernel(m, &b, &c)?.ratio_at_t(t),
            "out",
        )
    })
}

/// `P{V_t(b) >= V_t(c)}` in closed form.
///
/// # Safety
/// `b` and `c` must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kg_win_probability(
    m: *const KgMarket,
    b: *const f64,
    c: *const f64,
    n: usize,
    t: f64,
    out: *mut f64,
) -> KgStatus {
    guard(|| {
        let m = market_ref(m)?;
        let (b, c) = (read_rule(m, b, n, "b")?, read_rule(m, c, n, "c")?);
        write_out(out, analytics::win_probability(m, &b, &c, t)?, "out")
    })
}

/// Player 1's response kind per coordinate against `c`.
///
/// # Safety
/// `c` must hold `n` doubles and `kinds` must hold `n` entries.
#[no_mangle]
pub unsafe extern "C" fn kg_best_response_p1(
    m: *const KgMarket,
    c: *const f64,
    n: usize,
    kinds: *mut KgResponseKind,
) -> KgStatus {
    guard(|| {
        let m = market_ref(m)?;
        let c = read_rule(m, c, n, "c")?;
        let report = game::best_response_p1(m, &c)?;
        if kinds.is_null() {
            return Err(Fail::Null("kinds"));
        }
        let out = slice::from_raw_parts_mut(kinds, n);
        for (o, k) in out.iter_mut().zip(&report.kinds) {
            *o = match k {
                ResponseKind::Finite => KgResponseKind::Finite,
                ResponseKind::UnboundedAbove => KgResponseKind::UnboundedAbove,
                ResponseKind::UnboundedBelow => KgResponseKind::UnboundedBelow,
                ResponseKind::Indifferent => KgResponseKind::Indifferent,
            };
        }
        Ok(())
    })
}

/// Player 2's best response `(b + kelly) / 2` into `out`.
///
/// # Safety
/// `b` and `out` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn kg_best_response_p2(
    m: *const KgMarket,
    b: *const f64,
    n: usize,
    out: *mut f64,
) -> KgStatus {
    guard(|| {
        let m = market_ref(m)?;
        let b = read_rule(m, b, n, "b")?;
        let c = game::best_response_p2(m, &b)?;
        write_slice(out, n, c.weights(), "out")
    })
}

#[allow(clippy::too_many_arguments)]
unsafe fn estimate_with<F>(
    m: *const KgMarket,
    b: *const f64,
    c: *const f64,
    n: usize,
    t: f64,
    cfg: (f64, usize, usize, u64),
    out: *mut KgEstimate,
    f: F,
) -> KgStatus
where
    F: FnOnce(
        &monte_carlo::PathBatch,
        &MarketParams,
        &RebalancingRule,
        &RebalancingRule,
        f64,
    ) -> kelly_game::Result<monte_carlo::Estimate>,
{
    guard(|| {
        let m = market_ref(m)?;
        let (b, c) = (read_rule(m, b, n, "b")?, read_rule(m, c, n, "c")?);
        let cfg = SimConfig::new(cfg.0, cfg.1, cfg.2, cfg.3)?;
        let batch = monte_carlo::simulate_paths(m, &cfg)?;
        let e = f(&batch, m, &b, &c, t)?;
        write_out(
            out,
            KgEstimate {
                estimate: e.estimate,
                std_error: e.std_error,
                paths: e.paths as u64,
                seed: e.seed,
            },
            "out",
        )
    })
}

/// Monte Carlo `E[V_t(b) / V_t(c)]` on `paths` seeded paths over
/// `[0, horizon]` with `steps` steps; `t` must be a grid time.
///
/// # Safety
/// `b` and `c` must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kg_estimate_expected_ratio(
    m: *const KgMarket,
    b: *const f64,
    c: *const f64,
    n: usize,
    t: f64,
    horizon: f64,
    steps: usize,
    paths: usize,
    seed: u64,
    out: *mut KgEstimate,
) -> KgStatus {
    estimate_with(
        m,
        b,
        c,
        n,
        t,
        (horizon, steps, paths, seed),
        out,
        monte_carlo::estimate_expected_ratio,
    )
}

/// Monte Carlo `P{V_t(b) >= V_t(c)}`; arguments as for
/// `kg_estimate_expected_ratio`.
///
/// # Safety
/// `b` and `c` must hold `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kg_estimate_win_probability(
    m: *const KgMarket,
    b: *const f64,
    c: *const f64,
    n: usize,
    t: f64,
    horizon: f64,
    steps: usize,
    paths: usize,
    seed: u64,
    out: *mut KgEstimate,
) -> KgStatus {
    estimate_with(
        m,
        b,
        c,
        n,
        t,
        (horizon, steps, paths, seed),
        out,
        monte_carlo::estimate_win_probability,
    )
}

/// Finite-difference HJB residual of `J = M1 / M2` at `(s, t, m1, m2)`
/// under controls `b`, `c` with relative step `h`. Single-stock markets only.
///
/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kg_hjb_ratio_residual(
    m: *const KgMarket,
    s: f64,
    t: f64,
    m1: f64,
    m2: f64,
    b: f64,
    c: f64,
    h: f64,
    out: *mut f64,
) -> KgStatus {
    guard(|| {
        let m = market_ref(m)?;
        let x = StatePoint::new(s, t, m1, m2);
        write_out(
            out,
            hjb::hjb_rhs(m, &CandidateValueFn::Ratio, &x, b, c, h)?,
            "out",
        )
    })
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to `len - 1` bytes, into `buf`. Returns the full message length
/// in bytes (excluding the NUL).
///
/// # Safety
/// `buf` must be null or hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn kg_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
