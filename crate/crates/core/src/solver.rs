//! Maximum-likelihood temperature via a bracketed root solve of the
//! residual in reverse-temperature space.
//!
//! The residual is monotone in `beta`, so a sign change on the bracket means
//! exactly one root. When there is no sign change the estimate is clamped to
//! the bracket edge and flagged instead of being extrapolated.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimation::{self, check_aligned, InputError, LogitSequence, TokenSequence};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("invalid bracket [{lo}, {hi}]")]
    InvalidBracket { lo: f64, hi: f64 },
    #[error("no sign change on bracket: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange { f_lo: f64, f_hi: f64 },
    #[error("function returned {value} at x = {x}")]
    NonFinite { x: f64, value: f64 },
    #[error("iteration limit of {iterations} reached; best x = {best}, bracket [{lo}, {hi}]")]
    IterationLimit { best: f64, lo: f64, hi: f64, iterations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RootMethod {
    Bisection,
    /// Bisection safeguarding inverse-quadratic and secant steps.
    #[default]
    Brent,
}

/// A bracketed root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    /// Whichever final bracket endpoint has the smaller `|f|`.
    pub x: f64,
    pub f_x: f64,
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
}

/// Finds a root of `f` on `[lo, hi]` with the default accelerated method.
pub fn find_root<F: FnMut(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    tol_rel: f64,
    max_iter: usize,
) -> Result<Root, RootError> {
    find_root_with(f, lo, hi, tol_rel, max_iter, RootMethod::Brent)
}

pub fn find_root_with<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol_rel: f64,
    max_iter: usize,
    method: RootMethod,
) -> Result<Root, RootError> {
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(RootError::InvalidBracket { lo, hi });
    }
    let mut eval = |x: f64| {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(RootError::NonFinite { x, value: v })
        }
    };
    let f_lo = eval(lo)?;
    let f_hi = eval(hi)?;
    let exact = |x, f_x| Root { x, f_x, lo: x, hi: x, iterations: 0 };
    if f_lo == 0.0 {
        return Ok(exact(lo, f_lo));
    }
    if f_hi == 0.0 {
        return Ok(exact(hi, f_hi));
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(RootError::NoSignChange { f_lo, f_hi });
    }
    bracketed(eval, (lo, f_lo), (hi, f_hi), tol_rel, max_iter, method)
}

/// Core loop over a bracket already known to contain a sign change.
fn bracketed<F: FnMut(f64) -> Result<f64, RootError>>(
    mut eval: F,
    (mut a, mut fa): (f64, f64),
    (mut b, mut fb): (f64, f64),
    tol_rel: f64,
    max_iter: usize,
    method: RootMethod,
) -> Result<Root, RootError> {
    // Third point for inverse quadratic interpolation: the endpoint most
    // recently replaced.
    let mut prev: Option<(f64, f64)> = None;
    let mut widths = [b - a, b - a];
    let mut force_bisect = false;
    let best = |a: f64, fa: f64, b: f64, fb: f64| if fa.abs() <= fb.abs() { (a, fa) } else { (b, fb) };

    for iteration in 0..=max_iter {
        let scale = a.abs().max(b.abs());
        let mid = a + 0.5 * (b - a);
        if b - a <= tol_rel * scale || mid <= a || mid >= b {
            let (x, f_x) = best(a, fa, b, fb);
            return Ok(Root { x, f_x, lo: a, hi: b, iterations: iteration });
        }
        if iteration == max_iter {
            break;
        }

        let mut x = mid;
        if method == RootMethod::Brent && !force_bisect {
            let candidate = match prev {
                Some((c, fc)) if fc != fa && fc != fb => {
                    a * fb * fc / ((fa - fb) * (fa - fc))
                        + b * fa * fc / ((fb - fa) * (fb - fc))
                        + c * fa * fb / ((fc - fa) * (fc - fb))
                }
                _ => b - fb * (b - a) / (fb - fa),
            };
            if candidate > a && candidate < b {
                // Keep the step at least half a tolerance away from either
                // endpoint so both sides of the bracket keep moving.
                let margin = 0.5 * tol_rel * scale;
                x = if a + margin < b - margin { candidate.clamp(a + margin, b - margin) } else { mid };
            }
        }

        let fx = eval(x)?;
        if fx == 0.0 {
            return Ok(Root { x, f_x: fx, lo: x, hi: x, iterations: iteration + 1 });
        }
        if fx.signum() == fa.signum() {
            prev = Some((a, fa));
            a = x;
            fa = fx;
        } else {
            prev = Some((b, fb));
            b = x;
            fb = fx;
        }
        // Fall back to plain bisection whenever two steps failed to halve
        // the bracket.
        force_bisect = b - a > 0.5 * widths[0];
        widths = [widths[1], b - a];
    }
    let (x, _) = best(a, fa, b, fb);
    Err(RootError::IterationLimit { best: x, lo: a, hi: b, iterations: max_iter })
}

/// Bracket and stopping rule for the temperature solve, in reverse
/// temperature `beta = 1 / T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub beta_lo: f64,
    pub beta_hi: f64,
    /// First interior probe; it only narrows the bracket.
    pub beta_init: f64,
    pub tol_beta_rel: f64,
    pub max_iter: usize,
    pub method: RootMethod,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta_lo: 1e-2,
            beta_hi: 1e4,
            beta_init: 5e3,
            tol_beta_rel: 1e-10,
            max_iter: 200,
            method: RootMethod::Brent,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let ok = self.beta_lo > 0.0
            && self.beta_lo < self.beta_init
            && self.beta_init < self.beta_hi
            && self.beta_hi.is_finite()
            && self.tol_beta_rel > 0.0
            && self.tol_beta_rel.is_finite()
            && self.max_iter > 0;
        if ok {
            Ok(())
        } else {
            Err(SolveError::InvalidConfig(*self))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimateStatus {
    #[serde(rename = "converged")]
    Converged,
    /// No root below `beta_hi`: the text is at least as sharp as the model's
    /// most peaked setting. Reported at `t_hat = 1 / beta_hi`.
    #[serde(rename = "saturated_low_T")]
    SaturatedLowT,
    /// No root above `beta_lo`. Reported at `t_hat = 1 / beta_lo`.
    #[serde(rename = "saturated_high_T")]
    SaturatedHighT,
    /// Every step has all-equal logits; any temperature is a maximizer.
    /// Reported at `t_hat = 1`.
    #[serde(rename = "degenerate")]
    Degenerate,
}

impl EstimateStatus {
    pub const ALL: [EstimateStatus; 4] = [
        EstimateStatus::Converged,
        EstimateStatus::SaturatedLowT,
        EstimateStatus::SaturatedHighT,
        EstimateStatus::Degenerate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimateStatus::Converged => "converged",
            EstimateStatus::SaturatedLowT => "saturated_low_T",
            EstimateStatus::SaturatedHighT => "saturated_high_T",
            EstimateStatus::Degenerate => "degenerate",
        }
    }

    pub fn is_converged(self) -> bool {
        self == EstimateStatus::Converged
    }
}

impl fmt::Display for EstimateStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimateStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|st| st.as_str() == s).ok_or_else(|| format!("unknown estimate status {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureEstimate {
    pub t_hat: f64,
    pub beta_hat: f64,
    pub status: EstimateStatus,
    /// Root-finder iterations, not counting the bracket and initial probes.
    pub iterations: usize,
    pub residual_at_root: f64,
    pub log_likelihood_at_root: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("invalid solver configuration {0:?}")]
    InvalidConfig(SolverConfig),
    #[error(transparent)]
    Root(#[from] RootError),
}

/// Maximum-likelihood temperature of `tokens` given the per-step `logits`.
pub fn estimate_temperature(
    logits: &LogitSequence,
    tokens: &TokenSequence,
    config: &SolverConfig,
) -> Result<TemperatureEstimate, SolveError> {
    config.validate()?;
    check_aligned(logits, tokens)?;

    let residual = |beta: f64| estimation::residual_unchecked(logits, tokens, beta);
    let finish = |beta: f64, status, iterations, r: f64| TemperatureEstimate {
        t_hat: 1.0 / beta,
        beta_hat: beta,
        status,
        iterations,
        residual_at_root: r,
        log_likelihood_at_root: estimation::log_likelihood_unchecked(logits, tokens, beta),
    };

    if logits.all_degenerate() {
        return Ok(finish(1.0, EstimateStatus::Degenerate, 0, 0.0));
    }

    let r_lo = residual(config.beta_lo);
    let r_hi = residual(config.beta_hi);
    for (beta, r) in [(config.beta_lo, r_lo), (config.beta_hi, r_hi)] {
        if !r.is_finite() {
            return Err(RootError::NonFinite { x: beta, value: r }.into());
        }
    }
    if r_lo >= 0.0 {
        return Ok(finish(config.beta_lo, EstimateStatus::SaturatedHighT, 0, r_lo));
    }
    if r_hi <= 0.0 {
        return Ok(finish(config.beta_hi, EstimateStatus::SaturatedLowT, 0, r_hi));
    }

    let r_init = residual(config.beta_init);
    if r_init == 0.0 {
        return Ok(finish(config.beta_init, EstimateStatus::Converged, 0, r_init));
    }
    let (lo, hi) = if r_init < 0.0 {
        ((config.beta_init, r_init), (config.beta_hi, r_hi))
    } else {
        ((config.beta_lo, r_lo), (config.beta_init, r_init))
    };
    let eval = |beta: f64| {
        let r = residual(beta);
        if r.is_finite() {
            Ok(r)
        } else {
            Err(RootError::NonFinite { x: beta, value: r })
        }
    };
    let root = bracketed(eval, lo, hi, config.tol_beta_rel, config.max_iter, config.method)?;
    Ok(finish(root.x, EstimateStatus::Converged, root.iterations, root.f_x))
}
