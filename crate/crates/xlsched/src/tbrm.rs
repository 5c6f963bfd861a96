//! Token bucket rate modifier: per-user token counters that reshape scheduler
//! weights so long-run assigned rates respect a guaranteed lower bound and a
//! maximal upper bound.
//!
//! Per user, two token counters integrate the gap between the bound and the
//! assigned rate `C(t)`:
//!
//! ```text
//! k_g <- max(0, k_g + (rho_g - C(t)) * tau)     guaranteed bucket, k_g >= 0
//! k_M <- min(0, k_M + (rho_M - C(t)) * tau)     maximal bucket,    k_M <= 0
//! ```
//!
//! The multiplicative correction scales the base weight by
//! `exp(k_g / sigma_g + k_M / sigma_M)`: a starved user's weight grows, an
//! over-served user's weight shrinks. A disabled bound (`rho_g = 0`, or
//! `rho_M >= cmax`) contributes exactly zero to the exponent, so a user with
//! both bounds disabled keeps its base weight bit-for-bit.
//!
//! Zero weights would gag the exponential (no multiple of zero can grow), so
//! when the base weight falls at or below a relative floor `epsilon` while a
//! correction is pending, the smoothed positive-weight aggregate `omega_bar`
//! stands in for it. Both `omega_bar` and `epsilon` are tracked per scheduler
//! instance by [`WeightAggregate`].

use thiserror::Error;

/// Smoothing factor for the positive-weight aggregate.
pub const OMEGA_SMOOTHING: f64 = 0.05;
/// `epsilon = max(base weights) * EPSILON_SCALE`, recomputed every slot.
pub const EPSILON_SCALE: f64 = 1e-5;
/// Default bucket scale multiplier: `sigma = 5 * tau * rho`.
pub const DEFAULT_SIGMA_MULTIPLIER: f64 = 5.0;
/// Exponent clamp; keeps `exp` finite under infeasible configurations while
/// leaving any reachable operating range untouched.
const EXPONENT_CLAMP: f64 = 60.0;

#[derive(Debug, Error, PartialEq)]
pub enum TbrmError {
    #[error("capacity must be positive and finite, got {0}")]
    InvalidCapacity(f64),
    #[error("guaranteed rate must be finite and in [0, cmax], got {0}")]
    InvalidGuaranteedRate(f64),
    #[error("maximal rate must be non-negative, got {0}")]
    InvalidMaximalRate(f64),
    #[error("guaranteed rate {rho_g} exceeds maximal rate {rho_m}")]
    CrossedBounds { rho_g: f64, rho_m: f64 },
    #[error("sigma must be strictly positive for an active bound, got {0}")]
    InvalidSigma(f64),
}

/// Per-user rate bounds against a link capacity `cmax`.
///
/// `rho_g = 0` disables the lower bound; `rho_M >= cmax` disables the upper
/// bound. When both bounds are active, `0 <= rho_g <= rho_M <= cmax` holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateConstraint {
    rho_g: f64,
    rho_m: f64,
    cmax: f64,
}

impl RateConstraint {
    pub fn new(rho_g: f64, rho_m: f64, cmax: f64) -> Result<Self, TbrmError> {
        if !cmax.is_finite() || cmax <= 0.0 {
            return Err(TbrmError::InvalidCapacity(cmax));
        }
        if !rho_g.is_finite() || rho_g < 0.0 || rho_g > cmax {
            return Err(TbrmError::InvalidGuaranteedRate(rho_g));
        }
        if rho_m.is_nan() || rho_m < 0.0 {
            return Err(TbrmError::InvalidMaximalRate(rho_m));
        }
        let constraint = Self { rho_g, rho_m, cmax };
        if constraint.lower_active() && constraint.upper_active() && rho_g > rho_m {
            return Err(TbrmError::CrossedBounds { rho_g, rho_m });
        }
        Ok(constraint)
    }

    /// Both bounds disabled: any assigned rate conforms.
    pub fn unconstrained(cmax: f64) -> Result<Self, TbrmError> {
        Self::new(0.0, cmax, cmax)
    }

    pub fn rho_g(&self) -> f64 {
        self.rho_g
    }

    pub fn rho_m(&self) -> f64 {
        self.rho_m
    }

    pub fn cmax(&self) -> f64 {
        self.cmax
    }

    pub fn lower_active(&self) -> bool {
        self.rho_g > 0.0
    }

    pub fn upper_active(&self) -> bool {
        self.rho_m < self.cmax
    }
}

/// Odd shaping functions for the additive correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdditiveShape {
    /// `alpha(x) = x`: proportional response.
    Identity,
    /// `alpha(x) = x^3`: soft near zero, aggressive when buckets fill.
    Cubic,
}

impl AdditiveShape {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            AdditiveShape::Identity => x,
            AdditiveShape::Cubic => x * x * x,
        }
    }
}

/// Token counters and bucket scales for one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TbrmState {
    k_g: f64,
    k_m: f64,
    sigma_g: f64,
    sigma_m: f64,
}

impl TbrmState {
    /// Scales must be strictly positive; both counters start at zero.
    pub fn new(sigma_g: f64, sigma_m: f64) -> Result<Self, TbrmError> {
        for sigma in [sigma_g, sigma_m] {
            if !sigma.is_finite() || sigma <= 0.0 {
                return Err(TbrmError::InvalidSigma(sigma));
            }
        }
        Ok(Self {
            k_g: 0.0,
            k_m: 0.0,
            sigma_g,
            sigma_m,
        })
    }

    /// Default scales `sigma = multiplier * tau * rho` per bound; a disabled
    /// bound gets a placeholder scale of 1 (its exponent term is always 0).
    pub fn for_constraint(
        constraint: &RateConstraint,
        tau: f64,
        multiplier_g: f64,
        multiplier_m: f64,
    ) -> Result<Self, TbrmError> {
        let sigma_g = if constraint.lower_active() {
            multiplier_g * tau * constraint.rho_g()
        } else {
            1.0
        };
        let sigma_m = if constraint.upper_active() {
            multiplier_m * tau * constraint.rho_m()
        } else {
            1.0
        };
        Self::new(sigma_g, sigma_m)
    }

    pub fn k_g(&self) -> f64 {
        self.k_g
    }

    pub fn k_m(&self) -> f64 {
        self.k_m
    }

    pub fn sigma_g(&self) -> f64 {
        self.sigma_g
    }

    pub fn sigma_m(&self) -> f64 {
        self.sigma_m
    }

    /// Integrates one slot of assigned rate into the buckets.
    ///
    /// Keeps `k_g >= 0` and `k_M <= 0`; a disabled bound's counter stays 0.
    /// Per slot each counter moves by at most `max(rho, cmax - rho) * tau`.
    pub fn update_tokens(&mut self, constraint: &RateConstraint, assigned_rate: f64, tau: f64) {
        if constraint.lower_active() {
            self.k_g = (self.k_g + (constraint.rho_g() - assigned_rate) * tau).max(0.0);
        }
        if constraint.upper_active() {
            self.k_m = (self.k_m + (constraint.rho_m() - assigned_rate) * tau).min(0.0);
        }
    }

    /// Weight-correction exponent; exactly 0 when no bound is pending.
    pub fn exponent(&self, constraint: &RateConstraint) -> f64 {
        let mut e = 0.0;
        if constraint.lower_active() {
            e += self.k_g / self.sigma_g;
        }
        if constraint.upper_active() {
            e += self.k_m / self.sigma_m;
        }
        e
    }

    /// Multiplicative correction `phi * exp(exponent)`.
    ///
    /// `phi` is the base weight, except when the base weight sits at or below
    /// `aggregate.epsilon()` while a correction is pending; then the smoothed
    /// aggregate `omega_bar` stands in so the correction can act. With both
    /// counters at zero the base weight is returned bit-for-bit.
    pub fn effective_weight(
        &self,
        constraint: &RateConstraint,
        base_weight: f64,
        aggregate: &WeightAggregate,
    ) -> f64 {
        let exponent = self.exponent(constraint);
        let phi = if base_weight <= aggregate.epsilon() && exponent != 0.0 {
            aggregate.omega_bar()
        } else {
            base_weight
        };
        phi * exponent.clamp(-EXPONENT_CLAMP, EXPONENT_CLAMP).exp()
    }

    /// Additive correction: returns `(base_weight, offset)` where
    /// `offset = (alpha(k_g / sigma_g) + alpha(k_M / sigma_M)) * beta`.
    ///
    /// `alpha` must be odd and increasing with `alpha(0) = 0`; `beta` converts
    /// the unitless bucket fills into weight units (the engine passes
    /// `omega_bar`). Disabled bounds contribute exactly zero.
    pub fn additive_effective_weight<F: Fn(f64) -> f64>(
        &self,
        constraint: &RateConstraint,
        base_weight: f64,
        alpha: F,
        beta: f64,
    ) -> (f64, f64) {
        debug_assert_eq!(alpha(0.0), 0.0, "alpha must vanish at zero");
        let mut shaped = 0.0;
        if constraint.lower_active() {
            shaped += alpha(self.k_g / self.sigma_g);
        }
        if constraint.upper_active() {
            shaped += alpha(self.k_m / self.sigma_m);
        }
        (base_weight, shaped * beta)
    }
}

/// Scheduler-instance aggregate: the smoothed sum of positive base weights
/// `omega_bar` and the zero-weight threshold `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightAggregate {
    omega_bar: f64,
    epsilon: f64,
}

impl Default for WeightAggregate {
    fn default() -> Self {
        Self::new()
    }
}

impl WeightAggregate {
    /// Starts at zero; meaningful after the first [`update`](Self::update).
    pub fn new() -> Self {
        Self {
            omega_bar: 0.0,
            epsilon: 0.0,
        }
    }

    /// Folds one slot of base weights into the aggregate:
    /// `omega_bar <- (1 - beta) * omega_bar + beta * sum(max(w, 0))` and
    /// `epsilon <- max(w) * EPSILON_SCALE`.
    pub fn update(&mut self, base_weights: &[f64]) {
        let positive_sum: f64 = base_weights.iter().filter(|w| **w > 0.0).sum();
        self.omega_bar = (1.0 - OMEGA_SMOOTHING) * self.omega_bar + OMEGA_SMOOTHING * positive_sum;
        let max = base_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        self.epsilon = if max.is_finite() { max * EPSILON_SCALE } else { 0.0 };
    }

    pub fn omega_bar(&self) -> f64 {
        self.omega_bar
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}
