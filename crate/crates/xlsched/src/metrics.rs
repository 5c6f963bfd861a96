//! Conformance metrics over recorded per-user capacity traces.
//!
//! Three views of how badly a rate series violates its bounds:
//!
//! * [`m1`] - fraction of slots marked non-conforming by a token-bucket
//!   process with burst allowance `rho * tau * x`.
//! * [`m2`] - average excess bits per window of `G` slots.
//! * [`m3`] - average length of maximal runs of consecutive violating
//!   windows.
//!
//! Each metric is evaluated against both bounds of the trace's constraint
//! and returned as a [`BoundPair`]. A disabled bound cannot be violated;
//! its side reports 0 with the corresponding `*_disabled` flag set so
//! consumers can tell a vacuous zero from an earned one.
//!
//! The min-bound burst sweep is meaningful on x in (0, 1]; the max-bound
//! sweep on x >= 1. Both computations are total for any finite x > 0, so
//! callers pick the grid.

use crate::tbrm::RateConstraint;
use thiserror::Error;

/// Slots excluded from metrics by default. The slot-0 all-zeros allocation
/// is an artifact of the one-slot request delay, not of rate control.
pub const DEFAULT_WARMUP_SLOTS: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("burst multiplier must be positive and finite, got {0}")]
    InvalidBurst(f64),
    #[error("window must span at least one slot")]
    ZeroWindow,
    #[error("trace has {horizon} slots, shorter than one window of {window}")]
    EmptyReport { horizon: usize, window: usize },
    #[error("slot {slot} rate {rate} outside [0, {cmax}]")]
    RateOutOfRange { slot: usize, rate: f64, cmax: f64 },
    #[error("trace has no slots")]
    EmptyTrace,
    #[error("slot length must be positive and finite, got {0}")]
    InvalidTau(f64),
}

/// Per-slot achieved rates `C(t)` (bit/s) for one user, with the slot
/// length and the constraint they are judged against.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityTrace {
    rates: Vec<f64>,
    tau: f64,
    constraint: RateConstraint,
}

impl CapacityTrace {
    pub fn new(
        rates: Vec<f64>,
        tau: f64,
        constraint: RateConstraint,
    ) -> Result<Self, MetricsError> {
        if !tau.is_finite() || tau <= 0.0 {
            return Err(MetricsError::InvalidTau(tau));
        }
        if rates.is_empty() {
            return Err(MetricsError::EmptyTrace);
        }
        let cmax = constraint.cmax();
        for (slot, &rate) in rates.iter().enumerate() {
            if !rate.is_finite() || rate < 0.0 || rate > cmax {
                return Err(MetricsError::RateOutOfRange { slot, rate, cmax });
            }
        }
        Ok(Self {
            rates,
            tau,
            constraint,
        })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn constraint(&self) -> &RateConstraint {
        &self.constraint
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Copy of the trace without its first `slots` entries.
    pub fn without_warmup(&self, slots: usize) -> Result<Self, MetricsError> {
        if slots >= self.rates.len() {
            return Err(MetricsError::EmptyTrace);
        }
        Ok(Self {
            rates: self.rates[slots..].to_vec(),
            tau: self.tau,
            constraint: self.constraint,
        })
    }
}

/// One metric evaluated against both bounds of a constraint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPair {
    /// Value against the maximal rate (upper bound).
    pub max: f64,
    /// Value against the guaranteed rate (lower bound).
    pub min: f64,
    /// The upper bound is disabled; `max` is a vacuous 0.
    pub max_disabled: bool,
    /// The lower bound is disabled; `min` is a vacuous 0.
    pub min_disabled: bool,
}

/// Token-bucket slot conformance: the fraction of slots whose running
/// excess (deficit for the min bound) exceeds the burst allowance
/// `rho * tau * x`. Both buckets start empty.
pub fn m1(trace: &CapacityTrace, x: f64) -> Result<BoundPair, MetricsError> {
    if !x.is_finite() || x <= 0.0 {
        return Err(MetricsError::InvalidBurst(x));
    }
    let constraint = trace.constraint();
    let tau = trace.tau();
    let slots = trace.len() as f64;
    let mut pair = disabled_zeroes(constraint);

    if !pair.max_disabled {
        let rho_m = constraint.rho_m();
        let allowance = rho_m * tau * x;
        let mut excess = 0.0f64;
        let mut violations = 0usize;
        for &rate in trace.rates() {
            excess = (excess + (rate - rho_m) * tau).max(0.0);
            if excess > allowance {
                violations += 1;
            }
        }
        pair.max = violations as f64 / slots;
    }
    if !pair.min_disabled {
        let rho_g = constraint.rho_g();
        let allowance = rho_g * tau * x;
        let mut deficit = 0.0f64;
        let mut violations = 0usize;
        for &rate in trace.rates() {
            deficit = (deficit + (rho_g - rate) * tau).max(0.0);
            if deficit > allowance {
                violations += 1;
            }
        }
        pair.min = violations as f64 / slots;
    }
    Ok(pair)
}

/// Average excess bits per window: windows are consecutive half-open blocks
/// of `window` slots (a trailing partial window is dropped); each window's
/// excess is the bits above `rho_M * G * tau` (max) or below
/// `rho_g * G * tau` (min), clamped at zero.
pub fn m2(trace: &CapacityTrace, window: usize) -> Result<BoundPair, MetricsError> {
    let mut pair = disabled_zeroes(trace.constraint());
    let excesses = window_excesses(trace, window)?;
    let count = excesses.len() as f64;
    if !pair.max_disabled {
        pair.max = excesses.iter().map(|e| e.max).sum::<f64>() / count;
    }
    if !pair.min_disabled {
        pair.min = excesses.iter().map(|e| e.min).sum::<f64>() / count;
    }
    Ok(pair)
}

/// Average length of maximal runs of consecutive violating windows, where a
/// window violates iff its `m2` excess is positive. Zero when nothing
/// violates.
pub fn m3(trace: &CapacityTrace, window: usize) -> Result<BoundPair, MetricsError> {
    let mut pair = disabled_zeroes(trace.constraint());
    let excesses = window_excesses(trace, window)?;
    if !pair.max_disabled {
        pair.max = mean_streak(excesses.iter().map(|e| e.max > 0.0));
    }
    if !pair.min_disabled {
        pair.min = mean_streak(excesses.iter().map(|e| e.min > 0.0));
    }
    Ok(pair)
}

struct WindowExcess {
    max: f64,
    min: f64,
}

fn window_excesses(
    trace: &CapacityTrace,
    window: usize,
) -> Result<Vec<WindowExcess>, MetricsError> {
    if window == 0 {
        return Err(MetricsError::ZeroWindow);
    }
    let horizon = trace.len();
    if horizon < window {
        return Err(MetricsError::EmptyReport { horizon, window });
    }
    let constraint = trace.constraint();
    let tau = trace.tau();
    let cap_max = constraint.rho_m() * window as f64 * tau;
    let cap_min = constraint.rho_g() * window as f64 * tau;
    Ok(trace
        .rates()
        .chunks_exact(window)
        .map(|slots| {
            let bits: f64 = slots.iter().map(|rate| rate * tau).sum();
            WindowExcess {
                max: (bits - cap_max).max(0.0),
                min: (cap_min - bits).max(0.0),
            }
        })
        .collect())
}

fn mean_streak(flags: impl Iterator<Item = bool>) -> f64 {
    let mut streaks = 0usize;
    let mut total = 0usize;
    let mut current = 0usize;
    for violating in flags {
        if violating {
            if current == 0 {
                streaks += 1;
            }
            current += 1;
            total += 1;
        } else {
            current = 0;
        }
    }
    if streaks == 0 {
        0.0
    } else {
        total as f64 / streaks as f64
    }
}

fn disabled_zeroes(constraint: &RateConstraint) -> BoundPair {
    BoundPair {
        max: 0.0,
        min: 0.0,
        max_disabled: !constraint.upper_active(),
        min_disabled: !constraint.lower_active(),
    }
}

/// All three metrics evaluated over burst and window grids.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub x_max_grid: Vec<f64>,
    pub x_min_grid: Vec<f64>,
    pub window_grid: Vec<usize>,
    /// `m1` against the max bound, one entry per `x_max_grid` point.
    pub m1_max: Vec<f64>,
    /// `m1` against the min bound, one entry per `x_min_grid` point.
    pub m1_min: Vec<f64>,
    pub m2_max: Vec<f64>,
    pub m2_min: Vec<f64>,
    pub m3_max: Vec<f64>,
    pub m3_min: Vec<f64>,
    pub max_disabled: bool,
    pub min_disabled: bool,
}

impl MetricsReport {
    pub fn compute(
        trace: &CapacityTrace,
        x_max_grid: &[f64],
        x_min_grid: &[f64],
        window_grid: &[usize],
    ) -> Result<Self, MetricsError> {
        let mut report = Self {
            x_max_grid: x_max_grid.to_vec(),
            x_min_grid: x_min_grid.to_vec(),
            window_grid: window_grid.to_vec(),
            m1_max: Vec::with_capacity(x_max_grid.len()),
            m1_min: Vec::with_capacity(x_min_grid.len()),
            m2_max: Vec::with_capacity(window_grid.len()),
            m2_min: Vec::with_capacity(window_grid.len()),
            m3_max: Vec::with_capacity(window_grid.len()),
            m3_min: Vec::with_capacity(window_grid.len()),
            max_disabled: !trace.constraint().upper_active(),
            min_disabled: !trace.constraint().lower_active(),
        };
        for &x in x_max_grid {
            report.m1_max.push(m1(trace, x)?.max);
        }
        for &x in x_min_grid {
            report.m1_min.push(m1(trace, x)?.min);
        }
        for &window in window_grid {
            let excess = m2(trace, window)?;
            let streak = m3(trace, window)?;
            report.m2_max.push(excess.max);
            report.m2_min.push(excess.min);
            report.m3_max.push(streak.max);
            report.m3_min.push(streak.min);
        }
        Ok(report)
    }
}
