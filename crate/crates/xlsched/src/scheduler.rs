//! Base weight rules for six cross-layer schedulers.
//!
//! Each rule turns per-flow observables into a non-negative scheduler weight
//! `w[n]` for the slot objective `sum_n f(r[n]) * w[n]`:
//!
//! | rule    | weight                                         | `f`        |
//! |---------|------------------------------------------------|------------|
//! | MW      | `Q`                                            | linear     |
//! | M-LWDF  | `(-ln(eps) / T) * hol / avg_rate`              | linear     |
//! | EXP/PF  | `exp((a*hol - chi) / (1 + sqrt(chi))) / avg_rate` | linear  |
//! | MDU     | `|u'(avg_waiting)| / avg_arrival_rate`         | linear     |
//! | MD      | `Q`                                            | reciprocal |
//! | MDV     | `Q / max(T - hol, 1 ms)`                       | reciprocal |
//!
//! `Q` is the backlog in bits, `hol` the head-of-line delay in seconds, `T`
//! the per-flow delay bound and `eps` the tolerated violation probability.
//! EXP/PF couples all flows through `chi`, the mean of `a[n] * hol[n]`, so it
//! is computed jointly. The exponential smoothing that produces `avg_rate`,
//! `avg_waiting` and `avg_arrival_rate` lives in the engine; weight rules are
//! pure functions of the observables.

use crate::rate_region::UtilityForm;

/// Deadline slack floor for MDV, in seconds. Keeps the weight finite once the
/// head-of-line delay reaches the bound.
pub const MIN_DEADLINE_SLACK: f64 = 1e-3;

/// Ceiling for the EXP/PF exponent argument, just under where `exp`
/// overflows. The weight ordering past this point no longer matters.
pub const EXPPF_ARG_CAP: f64 = 700.0;

/// Snapshot of one flow as seen by the weight rules at the end of a slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowObservables {
    /// Backlog in bits.
    pub queue_bits: f64,
    /// Head-of-line delay in seconds; 0 for an empty queue.
    pub hol_delay: f64,
    /// Smoothed assigned rate in bit/s; strictly positive.
    pub avg_rate: f64,
    /// Smoothed waiting-time in seconds.
    pub avg_waiting: f64,
    /// Smoothed arrival rate in bit/s; strictly positive.
    pub avg_arrival_rate: f64,
    /// Delay bound `T` in seconds.
    pub delay_bound: f64,
    /// Tolerated delay-violation probability, in (0, 1).
    pub violation_prob: f64,
}

/// QoS exponent `a = -ln(eps) / T` shared by M-LWDF and EXP/PF.
pub fn qos_exponent(violation_prob: f64, delay_bound: f64) -> f64 {
    -violation_prob.ln() / delay_bound
}

/// Longest-queue rule.
pub fn mw_weight(obs: &FlowObservables) -> f64 {
    obs.queue_bits
}

/// Delay-scaled proportional fairness with a QoS exponent.
pub fn mlwdf_weight(obs: &FlowObservables) -> f64 {
    qos_exponent(obs.violation_prob, obs.delay_bound) * obs.hol_delay / obs.avg_rate
}

/// Joint EXP/PF weights; the coupling term `chi` is the mean of `a * hol`.
pub fn exppf_weights(all: &[FlowObservables]) -> Vec<f64> {
    if all.is_empty() {
        return Vec::new();
    }
    let chi = all
        .iter()
        .map(|o| qos_exponent(o.violation_prob, o.delay_bound) * o.hol_delay)
        .sum::<f64>()
        / all.len() as f64;
    let denom = 1.0 + chi.sqrt();
    all.iter()
        .map(|o| {
            let a = qos_exponent(o.violation_prob, o.delay_bound);
            // The cap only binds when a flow lags the pack by hundreds of
            // weighted seconds; past it `exp` would overflow to infinity.
            let arg = ((a * o.hol_delay - chi) / denom).min(EXPPF_ARG_CAP);
            arg.exp() / o.avg_rate
        })
        .collect()
}

/// Sigmoid delay-utility `u(U) = 1 / (1 + exp(a * (U - midpoint)))`.
///
/// The derivative magnitude peaks at `steepness / 4` when `U` hits the
/// midpoint, so flows approaching their bound dominate the MDU weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmoidUtility {
    pub steepness: f64,
    pub midpoint: f64,
}

impl SigmoidUtility {
    /// Default class utility for a delay bound: midpoint at the bound and
    /// steepness `10 / T`, so the usable transition spans roughly `[0, 2T]`.
    pub fn for_delay_bound(delay_bound: f64) -> Self {
        Self {
            steepness: 10.0 / delay_bound,
            midpoint: delay_bound,
        }
    }

    pub fn value(&self, waiting: f64) -> f64 {
        1.0 / (1.0 + (self.steepness * (waiting - self.midpoint)).exp())
    }

    /// `u'(U)`; always negative for positive steepness.
    pub fn derivative(&self, waiting: f64) -> f64 {
        // Logistic product -a * s(z) * s(-z) instead of the textbook
        // e / (1 + e)^2 ratio, which turns into inf / inf = NaN once a
        // flow waits far enough past the midpoint. This form underflows
        // cleanly to zero on both tails.
        let z = self.steepness * (waiting - self.midpoint);
        let s_pos = 1.0 / (1.0 + (-z).exp());
        let s_neg = 1.0 / (1.0 + z.exp());
        -self.steepness * s_pos * s_neg
    }
}

/// Maximum-delay-utility rule: marginal utility per unit of arrival rate.
pub fn mdu_weight<F: Fn(f64) -> f64>(obs: &FlowObservables, utility_derivative: F) -> f64 {
    utility_derivative(obs.avg_waiting).abs() / obs.avg_arrival_rate
}

/// Maximum-delay rule (reciprocal utility form).
pub fn md_weight(obs: &FlowObservables) -> f64 {
    obs.queue_bits
}

/// Deadline-pressure variant of MD: backlog over remaining slack.
pub fn mdv_weight(obs: &FlowObservables) -> f64 {
    obs.queue_bits / (obs.delay_bound - obs.hol_delay).max(MIN_DEADLINE_SLACK)
}

/// The six scheduling rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchedulerKind {
    Mw,
    Mlwdf,
    ExpPf,
    Mdu,
    Md,
    Mdv,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 6] = [
        SchedulerKind::Mw,
        SchedulerKind::Mlwdf,
        SchedulerKind::ExpPf,
        SchedulerKind::Mdu,
        SchedulerKind::Md,
        SchedulerKind::Mdv,
    ];

    /// Utility form the rule was designed for.
    pub fn utility_form(self) -> UtilityForm {
        match self {
            SchedulerKind::Mw | SchedulerKind::Mlwdf | SchedulerKind::ExpPf | SchedulerKind::Mdu => {
                UtilityForm::Linear
            }
            SchedulerKind::Md | SchedulerKind::Mdv => UtilityForm::Reciprocal,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Mw => "mw",
            SchedulerKind::Mlwdf => "mlwdf",
            SchedulerKind::ExpPf => "exppf",
            SchedulerKind::Mdu => "mdu",
            SchedulerKind::Md => "md",
            SchedulerKind::Mdv => "mdv",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "mw" => Some(SchedulerKind::Mw),
            "mlwdf" | "m-lwdf" => Some(SchedulerKind::Mlwdf),
            "exppf" | "exp/pf" | "exp-pf" => Some(SchedulerKind::ExpPf),
            "mdu" => Some(SchedulerKind::Mdu),
            "md" => Some(SchedulerKind::Md),
            "mdv" => Some(SchedulerKind::Mdv),
            _ => None,
        }
    }
}

/// Computes all users' base weights for one rule. MDU consults the per-user
/// class utility in `mdu_utilities` (one entry per user).
pub fn base_weights(
    kind: SchedulerKind,
    all: &[FlowObservables],
    mdu_utilities: &[SigmoidUtility],
) -> Vec<f64> {
    match kind {
        SchedulerKind::Mw => all.iter().map(mw_weight).collect(),
        SchedulerKind::Mlwdf => all.iter().map(mlwdf_weight).collect(),
        SchedulerKind::ExpPf => exppf_weights(all),
        SchedulerKind::Mdu => all
            .iter()
            .zip(mdu_utilities)
            .map(|(obs, util)| mdu_weight(obs, |w| util.derivative(w)))
            .collect(),
        SchedulerKind::Md => all.iter().map(md_weight).collect(),
        SchedulerKind::Mdv => all.iter().map(mdv_weight).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(queue: f64, hol: f64, rate: f64) -> FlowObservables {
        FlowObservables {
            queue_bits: queue,
            hol_delay: hol,
            avg_rate: rate,
            avg_waiting: 0.0,
            avg_arrival_rate: 1.0,
            delay_bound: 0.5,
            violation_prob: 0.05,
        }
    }

    #[test]
    fn mw_returns_backlog() {
        assert_eq!(mw_weight(&obs(0.0, 0.0, 1.0)), 0.0);
        assert_eq!(mw_weight(&obs(1.0e6, 0.0, 1.0)), 1.0e6);
    }

    #[test]
    fn mlwdf_matches_hand_values() {
        assert_eq!(mlwdf_weight(&obs(1.0, 0.0, 1.0e6)), 0.0);

        // eps = 0.05, T = 0.5 s, hol = 0.1 s, avg rate 1 Mbit/s.
        let w = mlwdf_weight(&obs(1.0, 0.1, 1.0e6));
        let expected = -(0.05f64.ln()) / 0.5 * 0.1 / 1.0e6;
        assert!((w - expected).abs() < 1e-18);
        assert!((w - 5.991464547107982e-7).abs() < 1e-15);

        let mut o = obs(1.0, 1.0, 1.0);
        o.delay_bound = 1.0;
        o.violation_prob = (-1.0f64).exp();
        assert!((mlwdf_weight(&o) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mlwdf_scales_linearly_in_hol_and_inverse_rate() {
        let base = mlwdf_weight(&obs(1.0, 0.1, 2.0e6));
        assert!((mlwdf_weight(&obs(1.0, 0.2, 2.0e6)) - 2.0 * base).abs() < 1e-18);
        assert!((mlwdf_weight(&obs(1.0, 0.1, 1.0e6)) - 2.0 * base).abs() < 1e-18);
    }

    #[test]
    fn exppf_with_zero_delays_reduces_to_inverse_rate() {
        let flows = [obs(1.0, 0.0, 2.0), obs(1.0, 0.0, 4.0)];
        let w = exppf_weights(&flows);
        assert!((w[0] - 0.5).abs() < 1e-12);
        assert!((w[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn exppf_single_flow_cancels_its_own_coupling() {
        // One flow: a * hol = chi, so the exponential is exp(0) = 1.
        let mut o = obs(1.0, 0.25, 1.0);
        o.delay_bound = 0.25;
        o.violation_prob = (-1.0f64).exp();
        let w = exppf_weights(&[o]);
        assert!((w[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exppf_spreads_around_the_mean_pressure() {
        // a * hol = 2 and 0 with unit rates: chi = 1, exponents +-0.5.
        let mut hot = obs(1.0, 2.0, 1.0);
        hot.delay_bound = 1.0;
        hot.violation_prob = (-1.0f64).exp();
        let mut cold = obs(1.0, 0.0, 1.0);
        cold.delay_bound = 1.0;
        cold.violation_prob = (-1.0f64).exp();
        let w = exppf_weights(&[hot, cold]);
        assert!((w[0] - 0.5f64.exp()).abs() < 1e-12);
        assert!((w[1] - (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn exppf_is_permutation_equivariant() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let flows: Vec<FlowObservables> = (0..4)
                .map(|_| {
                    let mut o = obs(
                        rng.gen_range(0.0..1e6),
                        rng.gen_range(0.0..1.0),
                        rng.gen_range(1.0..1e6),
                    );
                    o.delay_bound = rng.gen_range(0.1..2.0);
                    o.violation_prob = rng.gen_range(0.01..0.5);
                    o
                })
                .collect();
            let w = exppf_weights(&flows);
            let mut reversed: Vec<FlowObservables> = flows.clone();
            reversed.reverse();
            let mut w_rev = exppf_weights(&reversed);
            w_rev.reverse();
            for (a, b) in w.iter().zip(&w_rev) {
                // The shared exponent chi sums in permuted order, so agree
                // to rounding rather than bitwise.
                assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()));
            }
        }
    }

    #[test]
    fn exppf_weights_are_positive() {
        let flows = [obs(0.0, 0.0, 1.0), obs(1e9, 10.0, 1e9)];
        for w in exppf_weights(&flows) {
            assert!(w > 0.0 && w.is_finite());
        }
    }

    #[test]
    fn exppf_weights_stay_finite_under_extreme_lag() {
        // A tight QoS class that has lagged for the whole run would push the
        // raw exponent past the overflow point; the cap keeps it finite.
        let mut lagging = obs(1e12, 600.0, 1.0);
        lagging.delay_bound = 0.01;
        lagging.violation_prob = 1e-9;
        let flows = [obs(0.0, 0.0, 1.0), lagging];
        for w in exppf_weights(&flows) {
            assert!(w.is_finite() && w >= 0.0, "weight {w} not finite");
        }
    }

    #[test]
    fn mdu_matches_sigmoid_hand_values() {
        let util = SigmoidUtility {
            steepness: 10.0,
            midpoint: 0.5,
        };
        // At the midpoint the derivative magnitude is steepness / 4.
        let mut o = obs(1.0, 0.0, 1.0);
        o.avg_waiting = 0.5;
        o.avg_arrival_rate = 1.0e6;
        let w = mdu_weight(&o, |x| util.derivative(x));
        assert!((w - 2.5e-6).abs() < 1e-18);

        let mut far = obs(1.0, 0.0, 1.0);
        far.avg_waiting = 0.0;
        far.avg_arrival_rate = 1.0;
        let w0 = mdu_weight(&far, |x| util.derivative(x));
        let e = (-5.0f64).exp();
        let expected = 10.0 * e / ((1.0 + e) * (1.0 + e));
        assert!((w0 - expected).abs() < 1e-12);
        assert!((w0 - 0.06648).abs() < 1e-4);
    }

    #[test]
    fn sigmoid_derivative_underflows_cleanly_on_both_tails() {
        // A starved flow can wait minutes; the derivative must fade to zero
        // instead of overflowing into NaN.
        let util = SigmoidUtility::for_delay_bound(0.5);
        assert_eq!(util.derivative(600.0), 0.0);
        assert_eq!(util.derivative(-600.0), 0.0);
        for i in 0..=2_000 {
            let d = util.derivative(i as f64 * 0.5);
            assert!(d.is_finite() && d <= 0.0, "derivative {d} at {i}");
        }
    }

    #[test]
    fn mdu_weight_is_nonzero_for_lazy_flows() {
        // The sigmoid tail keeps even an idle flow marginally schedulable.
        let util = SigmoidUtility::for_delay_bound(0.5);
        let mut o = obs(0.0, 0.0, 1.0);
        o.avg_waiting = 0.0;
        o.avg_arrival_rate = 1.0;
        assert!(mdu_weight(&o, |x| util.derivative(x)) > 0.0);
    }

    #[test]
    fn md_mirrors_mw_but_reciprocal() {
        let o = obs(5.0e5, 0.0, 1.0);
        assert_eq!(md_weight(&o), mw_weight(&o));
        assert_eq!(SchedulerKind::Md.utility_form(), UtilityForm::Reciprocal);
        assert_eq!(SchedulerKind::Mw.utility_form(), UtilityForm::Linear);
    }

    #[test]
    fn mdv_divides_by_remaining_slack() {
        let mut o = obs(1.0e6, 0.25, 1.0);
        o.delay_bound = 0.5;
        assert!((mdv_weight(&o) - 4.0e6).abs() < 1e-6);

        // Past the deadline the slack clamps at 1 ms.
        o.hol_delay = 0.6;
        assert!((mdv_weight(&o) - 1.0e9).abs() < 1e-3);

        o.queue_bits = 0.0;
        assert_eq!(mdv_weight(&o), 0.0);
    }

    #[test]
    fn utility_forms_and_names_round_trip() {
        for kind in SchedulerKind::ALL {
            assert_eq!(SchedulerKind::parse(kind.name()), Some(kind));
        }
        assert_eq!(SchedulerKind::parse("EXP/PF"), Some(SchedulerKind::ExpPf));
        assert_eq!(SchedulerKind::parse("nope"), None);
    }

    #[test]
    fn base_weights_dispatches_per_rule() {
        let flows = [obs(2.0, 0.0, 1.0), obs(3.0, 0.0, 1.0)];
        let utils = [SigmoidUtility::for_delay_bound(0.5); 2];
        assert_eq!(
            base_weights(SchedulerKind::Mw, &flows, &utils),
            vec![2.0, 3.0]
        );
        assert_eq!(
            base_weights(SchedulerKind::Md, &flows, &utils),
            vec![2.0, 3.0]
        );
        let e = base_weights(SchedulerKind::ExpPf, &flows, &utils);
        assert_eq!(e.len(), 2);
    }
}
