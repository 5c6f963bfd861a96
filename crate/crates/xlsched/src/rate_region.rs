//! Parametric rate region and the per-slot network-utility solver.
//!
//! The feasible set for `N` users is the image of the angle box
//! `[0, pi/2]^(N-1)` under a generalized spherical-coordinate map. With
//! per-user capacities `cmax[n]` and a shape parameter `gamma` in `[-1, 1]`:
//!
//! ```text
//! r[n] = cmax[n] * (sin a[0] * ... * sin a[n-1])^(1-gamma) * (cos a[n])^(1-gamma)   (n < N-1)
//! r[N-1] = cmax[N-1] * (sin a[0] * ... * sin a[N-2])^(1-gamma)
//! ```
//!
//! `gamma = -1` yields a simplex face (fixed total rate for uniform
//! capacities), `gamma = 0` an ellipsoid surface, and `gamma = 1` collapses
//! every exponent to zero so all angles map to the capacity corner.
//!
//! Each slot the engine maximizes `sum_n f(r[n]) * w[n]` over the angle box,
//! where `f` is linear (`f(r) = r`) or reciprocal (`f(r) = -1/r`) per user.
//! [`solve_num`] runs a deterministic dividing-rectangles global pass followed
//! by a compass (pattern) local refinement. [`grid_oracle_solve`] is an
//! exhaustive grid evaluator kept as an independent cross-check for tests; it
//! shares only the objective definition with the production search.

use thiserror::Error;

/// Search effort of the global phase, scaled by the number of angles.
const GLOBAL_EVALS_PER_DIM: usize = 500;
/// Local refinement stops once the relative objective gain falls below this.
const LOCAL_REL_IMPROVEMENT: f64 = 1e-6;
/// Hard cap on local refinement iterations.
const LOCAL_MAX_ITERS: usize = 200;
/// Reciprocal utilities clamp rates at `RECIP_RATE_FLOOR_SCALE * min(cmax)`.
const RECIP_RATE_FLOOR_SCALE: f64 = 1e-6;

const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;

#[derive(Debug, Error, PartialEq)]
pub enum RegionError {
    #[error("rate region needs at least one user")]
    EmptyRegion,
    #[error("capacity for user {index} must be positive and finite, got {value}")]
    InvalidCapacity { index: usize, value: f64 },
    #[error("gamma must lie in [-1, 1], got {gamma}")]
    GammaOutOfRange { gamma: f64 },
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("angle {index} out of [0, pi/2]: {value}")]
    AngleOutOfRange { index: usize, value: f64 },
    #[error("weight for user {index} must be finite and non-negative, got {value}")]
    InvalidWeight { index: usize, value: f64 },
    #[error("grid oracle supports at most 4 users, got {n}")]
    UnsupportedDimension { n: usize },
}

/// Exponent `1 - gamma` with the common cases kept off the `powf` path.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Power {
    Zero,
    One,
    Two,
    General(f64),
}

impl Power {
    fn new(exponent: f64) -> Self {
        if exponent == 0.0 {
            Power::Zero
        } else if exponent == 1.0 {
            Power::One
        } else if exponent == 2.0 {
            Power::Two
        } else {
            Power::General(exponent)
        }
    }

    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Power::Zero => 1.0,
            Power::One => x,
            Power::Two => x * x,
            Power::General(e) => x.powf(e),
        }
    }
}

/// Feasible rate set; immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRegion {
    cmax: Vec<f64>,
    gamma: f64,
    power: Power,
}

impl RateRegion {
    /// Capacities must be positive and finite, `gamma` in `[-1, 1]`.
    pub fn new(cmax: Vec<f64>, gamma: f64) -> Result<Self, RegionError> {
        if cmax.is_empty() {
            return Err(RegionError::EmptyRegion);
        }
        for (index, &value) in cmax.iter().enumerate() {
            if !value.is_finite() || value <= 0.0 {
                return Err(RegionError::InvalidCapacity { index, value });
            }
        }
        if !(-1.0..=1.0).contains(&gamma) || gamma.is_nan() {
            return Err(RegionError::GammaOutOfRange { gamma });
        }
        Ok(Self {
            cmax,
            gamma,
            power: Power::new(1.0 - gamma),
        })
    }

    pub fn n_users(&self) -> usize {
        self.cmax.len()
    }

    pub fn cmax(&self) -> &[f64] {
        &self.cmax
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Number of free angles, `N - 1`.
    pub fn n_angles(&self) -> usize {
        self.cmax.len() - 1
    }

    /// Maps an angle vector to its rate vector.
    ///
    /// Every returned rate lies in `[0, cmax[n]]`.
    pub fn point_from_angles(&self, angles: &[f64]) -> Result<Vec<f64>, RegionError> {
        if angles.len() != self.n_angles() {
            return Err(RegionError::DimensionMismatch {
                expected: self.n_angles(),
                got: angles.len(),
            });
        }
        for (index, &value) in angles.iter().enumerate() {
            if !(0.0..=HALF_PI).contains(&value) || value.is_nan() {
                return Err(RegionError::AngleOutOfRange { index, value });
            }
        }
        let mut rates = vec![0.0; self.n_users()];
        self.point_unchecked(angles, &mut rates);
        Ok(rates)
    }

    /// Hot path shared by both solvers; callers guarantee valid input.
    #[inline]
    fn point_unchecked(&self, angles: &[f64], rates: &mut [f64]) {
        let n = self.cmax.len();
        let mut prefix = 1.0;
        for i in 0..n - 1 {
            let (sin, cos) = angles[i].sin_cos();
            rates[i] = self.cmax[i] * prefix * self.power.apply(cos);
            prefix *= self.power.apply(sin);
        }
        rates[n - 1] = self.cmax[n - 1] * prefix;
    }
}

/// How a user's rate enters the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UtilityForm {
    /// `f(r) = r`; rewards absolute rate.
    Linear,
    /// `f(r) = -1/r`; rewards relative rate increases near zero.
    Reciprocal,
}

/// One user's term in the slot objective `sum f(r[n]) * w[n]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityEntry {
    pub form: UtilityForm,
    /// Finite and non-negative; non-positive scheduler weights are corrected
    /// upstream before they reach the solver.
    pub weight: f64,
}

impl UtilityEntry {
    pub fn linear(weight: f64) -> Self {
        Self {
            form: UtilityForm::Linear,
            weight,
        }
    }

    pub fn reciprocal(weight: f64) -> Self {
        Self {
            form: UtilityForm::Reciprocal,
            weight,
        }
    }
}

/// Solver output. `rates` always equals `point_from_angles(&angles)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub rates: Vec<f64>,
    pub objective: f64,
    pub angles: Vec<f64>,
    /// Set when every weight is zero and the objective carries no signal.
    pub degenerate: bool,
}

fn validate_utilities(region: &RateRegion, utilities: &[UtilityEntry]) -> Result<(), RegionError> {
    if utilities.len() != region.n_users() {
        return Err(RegionError::DimensionMismatch {
            expected: region.n_users(),
            got: utilities.len(),
        });
    }
    for (index, entry) in utilities.iter().enumerate() {
        if !entry.weight.is_finite() || entry.weight < 0.0 {
            return Err(RegionError::InvalidWeight {
                index,
                value: entry.weight,
            });
        }
    }
    Ok(())
}

/// Shared objective evaluator; `rates` is caller-provided scratch.
struct Objective<'a> {
    region: &'a RateRegion,
    utilities: &'a [UtilityEntry],
    rate_floor: f64,
}

impl<'a> Objective<'a> {
    fn new(region: &'a RateRegion, utilities: &'a [UtilityEntry]) -> Self {
        let min_cmax = region.cmax.iter().cloned().fold(f64::INFINITY, f64::min);
        Self {
            region,
            utilities,
            rate_floor: RECIP_RATE_FLOOR_SCALE * min_cmax,
        }
    }

    #[inline]
    fn eval(&self, angles: &[f64], rates: &mut [f64]) -> f64 {
        self.region.point_unchecked(angles, rates);
        let mut total = 0.0;
        for (entry, &r) in self.utilities.iter().zip(rates.iter()) {
            total += match entry.form {
                UtilityForm::Linear => entry.weight * r,
                UtilityForm::Reciprocal => -entry.weight / r.max(self.rate_floor),
            };
        }
        total
    }
}

fn finish(region: &RateRegion, angles: Vec<f64>, objective: f64, degenerate: bool) -> Allocation {
    let mut rates = vec![0.0; region.n_users()];
    region.point_unchecked(&angles, &mut rates);
    Allocation {
        rates,
        objective,
        angles,
        degenerate,
    }
}

/// Maximizes the slot objective over the angle box.
///
/// Deterministic: equal inputs produce bitwise-equal outputs. The search is
/// scale-invariant in the weights, so multiplying every weight by a positive
/// constant leaves the returned rates unchanged.
pub fn solve_num(region: &RateRegion, utilities: &[UtilityEntry]) -> Result<Allocation, RegionError> {
    validate_utilities(region, utilities)?;
    let dims = region.n_angles();
    let objective = Objective::new(region, utilities);
    let mut rates = vec![0.0; region.n_users()];

    if utilities.iter().all(|u| u.weight == 0.0) {
        let angles = vec![0.0; dims];
        let value = objective.eval(&angles, &mut rates);
        return Ok(finish(region, angles, value, true));
    }
    if dims == 0 {
        let value = objective.eval(&[], &mut rates);
        return Ok(finish(region, Vec::new(), value, false));
    }

    let budget = GLOBAL_EVALS_PER_DIM * dims;
    let (mut best_angles, mut best_value) = global_search(&objective, dims, budget, &mut rates);
    compass_refine(&objective, &mut best_angles, &mut best_value, &mut rates);
    Ok(finish(region, best_angles, best_value, false))
}

/// Dividing-rectangles-style pass: alternately trisect the best-valued box
/// (exploitation) and the largest box (exploration). All selection rules are
/// pure comparisons, which keeps the search path invariant under positive
/// scaling of the objective.
fn global_search(
    objective: &Objective,
    dims: usize,
    budget: usize,
    rates: &mut [f64],
) -> (Vec<f64>, f64) {
    // Flat box store: bounds[i] = [lo.., hi..], value at the box center.
    let mut bounds: Vec<f64> = Vec::with_capacity(2 * dims * (budget / 2 + 4));
    bounds.extend(std::iter::repeat_n(0.0, dims));
    bounds.extend(std::iter::repeat_n(HALF_PI, dims));
    let mut values: Vec<f64> = Vec::with_capacity(budget / 2 + 4);

    let mut center = vec![0.0; dims];
    let mut evals = 0usize;
    let eval_center = |bounds: &[f64], box_idx: usize, center: &mut [f64], rates: &mut [f64], evals: &mut usize| {
        let base = 2 * dims * box_idx;
        for d in 0..dims {
            center[d] = 0.5 * (bounds[base + d] + bounds[base + dims + d]);
        }
        *evals += 1;
        objective.eval(center, rates)
    };

    let v0 = eval_center(&bounds, 0, &mut center, rates, &mut evals);
    values.push(v0);
    let mut best_idx = 0usize;
    let mut best_value = v0;
    let mut best_angles = center.clone();

    // Lazy max-heap over squared diameters; stale sizes are skipped on pop.
    let mut by_size: std::collections::BinaryHeap<(u64, usize)> = std::collections::BinaryHeap::new();
    let size_key = |bounds: &[f64], idx: usize| -> u64 {
        let base = 2 * dims * idx;
        let mut d2 = 0.0;
        for d in 0..dims {
            let w = bounds[base + dims + d] - bounds[base + d];
            d2 += w * w;
        }
        // Non-negative finite f64s order identically to their bit patterns.
        d2.to_bits()
    };
    by_size.push((size_key(&bounds, 0), 0));

    let split = |idx: usize,
                     bounds: &mut Vec<f64>,
                     values: &mut Vec<f64>,
                     by_size: &mut std::collections::BinaryHeap<(u64, usize)>,
                     best_idx: &mut usize,
                     best_value: &mut f64,
                     best_angles: &mut Vec<f64>,
                     center: &mut [f64],
                     rates: &mut [f64],
                     evals: &mut usize| {
        let base = 2 * dims * idx;
        // Longest dimension, first index on ties.
        let mut dim = 0;
        let mut width = bounds[base + dims] - bounds[base];
        for d in 1..dims {
            let w = bounds[base + dims + d] - bounds[base + d];
            if w > width {
                width = w;
                dim = d;
            }
        }
        let lo_d = bounds[base + dim];
        let third = width / 3.0;
        for child in 0..2 {
            let child_idx = values.len();
            let cbase = bounds.len();
            bounds.extend_from_within(base..base + 2 * dims);
            let (clo, chi) = (cbase + dim, cbase + dims + dim);
            if child == 0 {
                bounds[chi] = lo_d + third;
            } else {
                bounds[clo] = lo_d + 2.0 * third;
            }
            let v = {
                let b = &bounds[cbase..cbase + 2 * dims];
                for d in 0..dims {
                    center[d] = 0.5 * (b[d] + b[dims + d]);
                }
                *evals += 1;
                objective.eval(center, rates)
            };
            values.push(v);
            if v > *best_value {
                *best_value = v;
                *best_idx = child_idx;
                best_angles.copy_from_slice(center);
            }
            by_size.push((size_key(bounds, child_idx), child_idx));
        }
        // Parent shrinks to the middle third; its center and value survive.
        bounds[base + dim] = lo_d + third;
        bounds[base + dims + dim] = lo_d + 2.0 * third;
        by_size.push((size_key(bounds, idx), idx));
    };

    while evals + 2 <= budget {
        split(
            best_idx, &mut bounds, &mut values, &mut by_size, &mut best_idx, &mut best_value,
            &mut best_angles, &mut center, rates, &mut evals,
        );
        if evals + 2 > budget {
            break;
        }
        // Pop the genuinely largest box, discarding stale entries.
        while let Some(&(key, idx)) = by_size.peek() {
            if size_key(&bounds, idx) == key {
                break;
            }
            by_size.pop();
        }
        if let Some(&(_, idx)) = by_size.peek() {
            if idx != best_idx {
                split(
                    idx, &mut bounds, &mut values, &mut by_size, &mut best_idx, &mut best_value,
                    &mut best_angles, &mut center, rates, &mut evals,
                );
            } else {
                by_size.pop();
            }
        }
    }

    (best_angles, best_value)
}

/// Compass (coordinate pattern) search clamped to the angle box.
fn compass_refine(objective: &Objective, angles: &mut [f64], value: &mut f64, rates: &mut [f64]) {
    let dims = angles.len();
    let mut step = HALF_PI / 8.0;
    let mut trial = angles.to_vec();
    for _ in 0..LOCAL_MAX_ITERS {
        let mut best_dim = usize::MAX;
        let mut best_coord = 0.0;
        let mut best_value = *value;
        for d in 0..dims {
            let original = angles[d];
            for dir in [1.0, -1.0] {
                let candidate = (original + dir * step).clamp(0.0, HALF_PI);
                if candidate == original {
                    continue;
                }
                trial[d] = candidate;
                let v = objective.eval(&trial, rates);
                if v > best_value {
                    best_value = v;
                    best_dim = d;
                    best_coord = candidate;
                }
            }
            trial[d] = original;
        }
        if best_dim != usize::MAX {
            angles[best_dim] = best_coord;
            trial[best_dim] = best_coord;
            let improvement = best_value - *value;
            let scale = value.abs().max(best_value.abs()).max(f64::MIN_POSITIVE);
            *value = best_value;
            if improvement / scale < LOCAL_REL_IMPROVEMENT {
                return;
            }
        } else {
            step *= 0.5;
            if step < 1e-10 {
                return;
            }
        }
    }
}

/// Exhaustive reference solver on a uniform angle grid (`steps` points per
/// dimension, endpoints included). Independent of [`solve_num`]'s search; used
/// as a test oracle. Supports at most 4 users; intended for `steps >= 100`.
pub fn grid_oracle_solve(
    region: &RateRegion,
    utilities: &[UtilityEntry],
    steps: usize,
) -> Result<Allocation, RegionError> {
    if region.n_users() > 4 {
        return Err(RegionError::UnsupportedDimension {
            n: region.n_users(),
        });
    }
    validate_utilities(region, utilities)?;
    assert!(steps >= 2, "grid needs at least two points per dimension");

    let dims = region.n_angles();
    let objective = Objective::new(region, utilities);
    let mut rates = vec![0.0; region.n_users()];
    let degenerate = utilities.iter().all(|u| u.weight == 0.0);

    if dims == 0 || degenerate {
        let angles = vec![0.0; dims];
        let value = objective.eval(&angles, &mut rates);
        return Ok(finish(region, angles, value, degenerate));
    }

    let grid: Vec<f64> = (0..steps)
        .map(|j| HALF_PI * j as f64 / (steps - 1) as f64)
        .collect();
    let mut index = vec![0usize; dims];
    let mut angles = vec![0.0; dims];
    let mut best_angles = angles.clone();
    let mut best_value = f64::NEG_INFINITY;
    loop {
        for d in 0..dims {
            angles[d] = grid[index[d]];
        }
        let v = objective.eval(&angles, &mut rates);
        if v > best_value {
            best_value = v;
            best_angles.copy_from_slice(&angles);
        }
        // Odometer increment.
        let mut d = 0;
        loop {
            index[d] += 1;
            if index[d] < steps {
                break;
            }
            index[d] = 0;
            d += 1;
            if d == dims {
                return Ok(finish(region, best_angles, best_value, false));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI_4: f64 = std::f64::consts::FRAC_PI_4;

    fn unit_region(gamma: f64) -> RateRegion {
        RateRegion::new(vec![1.0, 1.0], gamma).unwrap()
    }

    #[test]
    fn hypercube_corner_at_gamma_one() {
        let r = unit_region(1.0).point_from_angles(&[PI_4]).unwrap();
        assert_eq!(r, vec![1.0, 1.0]);
    }

    #[test]
    fn simplex_midpoint_at_gamma_minus_one() {
        let r = unit_region(-1.0).point_from_angles(&[PI_4]).unwrap();
        assert!((r[0] - 0.5).abs() < 1e-12);
        assert!((r[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sphere_point_at_gamma_zero() {
        let r = unit_region(0.0)
            .point_from_angles(&[std::f64::consts::FRAC_PI_6])
            .unwrap();
        assert!((r[0] - 0.8660254037844387).abs() < 1e-12);
        assert!((r[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_construction() {
        assert_eq!(
            RateRegion::new(vec![], 0.0).unwrap_err(),
            RegionError::EmptyRegion
        );
        assert!(matches!(
            RateRegion::new(vec![1.0, -2.0], 0.0).unwrap_err(),
            RegionError::InvalidCapacity { index: 1, .. }
        ));
        assert!(matches!(
            RateRegion::new(vec![1.0], 1.5).unwrap_err(),
            RegionError::GammaOutOfRange { .. }
        ));
    }

    #[test]
    fn rejects_bad_angles() {
        let region = unit_region(0.0);
        assert_eq!(
            region.point_from_angles(&[]).unwrap_err(),
            RegionError::DimensionMismatch { expected: 1, got: 0 }
        );
        assert!(matches!(
            region.point_from_angles(&[2.0]).unwrap_err(),
            RegionError::AngleOutOfRange { index: 0, .. }
        ));
        assert!(matches!(
            region.point_from_angles(&[-0.1]).unwrap_err(),
            RegionError::AngleOutOfRange { index: 0, .. }
        ));
    }

    #[test]
    fn rates_stay_within_capacity_box() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for &gamma in &[-1.0, -0.5, 0.0, 0.5, 1.0] {
            let cmax = vec![2.0, 5.0, 1.0, 3.0];
            let region = RateRegion::new(cmax.clone(), gamma).unwrap();
            for _ in 0..200 {
                let angles: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..=HALF_PI)).collect();
                let rates = region.point_from_angles(&angles).unwrap();
                for (r, c) in rates.iter().zip(&cmax) {
                    assert!(*r >= 0.0 && *r <= *c + 1e-12);
                }
            }
        }
    }

    #[test]
    fn simplex_face_has_constant_total_rate() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let m = 400e6;
        let region = RateRegion::new(vec![m; 5], -1.0).unwrap();
        for _ in 0..100 {
            let angles: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..=HALF_PI)).collect();
            let rates = region.point_from_angles(&angles).unwrap();
            let total: f64 = rates.iter().sum();
            assert!((total - m).abs() <= 1e-9 * m);
        }
    }

    #[test]
    fn sphere_has_constant_norm() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        let m = 10.0;
        let region = RateRegion::new(vec![m; 4], 0.0).unwrap();
        for _ in 0..100 {
            let angles: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..=HALF_PI)).collect();
            let rates = region.point_from_angles(&angles).unwrap();
            let norm2: f64 = rates.iter().map(|r| r * r).sum();
            assert!((norm2 - m * m).abs() <= 1e-9 * m * m);
        }
    }

    #[test]
    fn solve_prefers_single_weighted_user() {
        let region = unit_region(0.0);
        let alloc = solve_num(&region, &[UtilityEntry::linear(1.0), UtilityEntry::linear(0.0)])
            .unwrap();
        assert!((alloc.rates[0] - 1.0).abs() < 1e-3);
        assert!(alloc.rates[1].abs() < 1e-3);
        assert!(!alloc.degenerate);
    }

    #[test]
    fn solve_splits_equal_linear_weights_on_sphere() {
        let region = unit_region(0.0);
        let alloc = solve_num(&region, &[UtilityEntry::linear(1.0), UtilityEntry::linear(1.0)])
            .unwrap();
        let expected = std::f64::consts::FRAC_1_SQRT_2;
        assert!((alloc.rates[0] - expected).abs() < 1e-3);
        assert!((alloc.rates[1] - expected).abs() < 1e-3);
    }

    #[test]
    fn solve_picks_simplex_vertex_for_dominant_weight() {
        let region = unit_region(-1.0);
        let alloc = solve_num(&region, &[UtilityEntry::linear(2.0), UtilityEntry::linear(1.0)])
            .unwrap();
        assert!((alloc.rates[0] - 1.0).abs() < 1e-3);
        assert!(alloc.rates[1].abs() < 1e-3);
    }

    #[test]
    fn solve_flags_all_zero_weights_as_degenerate() {
        let region = unit_region(0.0);
        let alloc = solve_num(&region, &[UtilityEntry::linear(0.0), UtilityEntry::reciprocal(0.0)])
            .unwrap();
        assert!(alloc.degenerate);
        assert_eq!(alloc.objective, 0.0);
        let reproduced = region.point_from_angles(&alloc.angles).unwrap();
        assert_eq!(reproduced, alloc.rates);
    }

    #[test]
    fn solve_rejects_bad_utilities() {
        let region = unit_region(0.0);
        assert!(matches!(
            solve_num(&region, &[UtilityEntry::linear(1.0)]).unwrap_err(),
            RegionError::DimensionMismatch { .. }
        ));
        assert!(matches!(
            solve_num(
                &region,
                &[UtilityEntry::linear(f64::NAN), UtilityEntry::linear(1.0)]
            )
            .unwrap_err(),
            RegionError::InvalidWeight { index: 0, .. }
        ));
        assert!(matches!(
            solve_num(
                &region,
                &[UtilityEntry::linear(-1.0), UtilityEntry::linear(1.0)]
            )
            .unwrap_err(),
            RegionError::InvalidWeight { index: 0, .. }
        ));
    }

    #[test]
    fn allocation_rates_reproducible_from_angles() {
        let region = RateRegion::new(vec![3.0, 1.0, 2.0], -0.5).unwrap();
        let utilities = [
            UtilityEntry::linear(1.0),
            UtilityEntry::reciprocal(2.0),
            UtilityEntry::linear(0.5),
        ];
        let alloc = solve_num(&region, &utilities).unwrap();
        let reproduced = region.point_from_angles(&alloc.angles).unwrap();
        for (a, b) in alloc.rates.iter().zip(&reproduced) {
            assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0));
        }
    }

    #[test]
    fn oracle_matches_closed_form_cases() {
        let region = unit_region(0.0);
        let corner = grid_oracle_solve(
            &region,
            &[UtilityEntry::linear(1.0), UtilityEntry::linear(0.0)],
            201,
        )
        .unwrap();
        assert_eq!(corner.rates[0], 1.0);

        let split = grid_oracle_solve(
            &region,
            &[UtilityEntry::linear(1.0), UtilityEntry::linear(1.0)],
            201,
        )
        .unwrap();
        let expected = std::f64::consts::FRAC_1_SQRT_2;
        let step = HALF_PI / 200.0;
        assert!((split.rates[0] - expected).abs() <= step);
        assert!((split.rates[1] - expected).abs() <= step);

        let fair = grid_oracle_solve(
            &region,
            &[UtilityEntry::reciprocal(1.0), UtilityEntry::reciprocal(1.0)],
            201,
        )
        .unwrap();
        assert!((fair.rates[0] - fair.rates[1]).abs() <= 2.0 * step);
    }

    #[test]
    fn oracle_rejects_large_regions() {
        let region = RateRegion::new(vec![1.0; 5], 0.0).unwrap();
        let utilities: Vec<_> = (0..5).map(|_| UtilityEntry::linear(1.0)).collect();
        assert_eq!(
            grid_oracle_solve(&region, &utilities, 100).unwrap_err(),
            RegionError::UnsupportedDimension { n: 5 }
        );
    }

    #[test]
    fn single_user_region_is_a_point() {
        let region = RateRegion::new(vec![10.0], 0.0).unwrap();
        assert_eq!(region.point_from_angles(&[]).unwrap(), vec![10.0]);
        let alloc = solve_num(&region, &[UtilityEntry::linear(5.0)]).unwrap();
        assert_eq!(alloc.rates, vec![10.0]);
        assert_eq!(alloc.objective, 50.0);
    }
}
