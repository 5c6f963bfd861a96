//! The slotted simulation loop.
//!
//! Each slot runs the same sequence:
//!
//! 1. apply the allocation requested one slot earlier (all zeros at slot 0,
//!    when no request preceded) and serve each queue FIFO with
//!    `min(Q, C * tau)` bits;
//! 2. enqueue the slot's arrivals, which become servable next slot;
//! 3. fold the applied rate into smoothed observables and token counters;
//! 4. compute base weights, refresh the weight aggregate, and derive
//!    effective weights;
//! 5. solve the weighted NUM problem on the rate region to obtain the
//!    allocation for the next slot;
//! 6. emit a [`SlotRecord`] snapshot.
//!
//! The one-slot gap between request and application means `C(t)` depends
//! only on information available through slot `t - 1`. Capacity a queue
//! cannot absorb is discarded, not redistributed: rate bounds make the
//! scheduler deliberately non-work-conserving.

use crate::rate_region::{solve_num, RateRegion, RegionError, UtilityEntry};
use crate::scheduler::{base_weights, FlowObservables, SchedulerKind, SigmoidUtility};
use crate::tbrm::{
    AdditiveShape, RateConstraint, TbrmError, TbrmState, WeightAggregate,
    DEFAULT_SIGMA_MULTIPLIER,
};
use crate::traffic::{FlowTraffic, TrafficError, TrafficSpec};
use std::collections::VecDeque;
use thiserror::Error;

/// Default slot length in seconds: weights and weight modifiers recompute
/// every 50 ms.
pub const DEFAULT_TAU: f64 = 0.05;

/// Smoothing constant for the per-flow rate, waiting and arrival averages;
/// spreads the memory over roughly 20 slots.
pub const OBSERVABLE_SMOOTHING: f64 = 0.05;

/// Floor (bit/s) on the smoothed rate and arrival-rate observables, which
/// appear in denominators.
const OBSERVABLE_FLOOR: f64 = 1.0;

/// Cold-start value of the smoothed rate, as a fraction of the user cap.
const INITIAL_RATE_FRACTION: f64 = 0.01;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("slot length must be positive and finite, got {0}")]
    InvalidTau(f64),
    #[error("region serves {region} users but {users} are configured")]
    UserCountMismatch { region: usize, users: usize },
    #[error("user {user}: delay bound must be positive and finite, got {value}")]
    InvalidDelayBound { user: usize, value: f64 },
    #[error("user {user}: violation probability must lie in (0, 1), got {value}")]
    InvalidViolationProb { user: usize, value: f64 },
    #[error("user {user}: sigma multiplier must be positive and finite, got {value}")]
    InvalidSigmaMultiplier { user: usize, value: f64 },
    #[error("user {user}: constraint cap {constraint} does not match region cap {region}")]
    CapMismatch {
        user: usize,
        constraint: f64,
        region: f64,
    },
    #[error("user {user}: {source}")]
    Tbrm {
        user: usize,
        #[source]
        source: TbrmError,
    },
    #[error("user {user}: {source}")]
    Traffic {
        user: usize,
        #[source]
        source: TrafficError,
    },
    #[error(transparent)]
    Region(#[from] RegionError),
}

/// Delay-QoS targets entering the M-LWDF, EXP/PF and MDU weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QosParams {
    /// Delay bound (seconds) the flow should stay under.
    pub delay_bound: f64,
    /// Acceptable probability of exceeding the bound.
    pub violation_prob: f64,
}

impl Default for QosParams {
    fn default() -> Self {
        Self {
            delay_bound: 0.5,
            violation_prob: 0.05,
        }
    }
}

/// How token counters act on base weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TbrmMode {
    /// Scale the weight by `exp(k_g / sigma_g + k_M / sigma_M)`.
    Multiplicative,
    /// Add `alpha(k_g / sigma_g) + alpha(k_M / sigma_M)`, scaled by the
    /// smoothed weight aggregate, to the weight.
    Additive(AdditiveShape),
}

/// Everything the engine needs to know about one user.
#[derive(Debug, Clone)]
pub struct UserConfig {
    pub traffic: TrafficSpec,
    pub constraint: RateConstraint,
    pub qos: QosParams,
    /// Burst scale `sigma_g = multiplier * tau * rho_g`.
    pub sigma_g_multiplier: f64,
    /// Burst scale `sigma_M = multiplier * tau * rho_M`.
    pub sigma_m_multiplier: f64,
}

impl UserConfig {
    pub fn new(traffic: TrafficSpec, constraint: RateConstraint) -> Self {
        Self {
            traffic,
            constraint,
            qos: QosParams::default(),
            sigma_g_multiplier: DEFAULT_SIGMA_MULTIPLIER,
            sigma_m_multiplier: DEFAULT_SIGMA_MULTIPLIER,
        }
    }
}

/// Full description of one simulation run.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub tau: f64,
    pub horizon: u64,
    pub scheduler: SchedulerKind,
    pub tbrm_enabled: bool,
    pub tbrm_mode: TbrmMode,
    pub region: RateRegion,
    pub users: Vec<UserConfig>,
    /// Run seed; each user's generator seed mixes this with the user's
    /// stream seed, so one knob reseeds the whole run reproducibly.
    pub seed: u64,
}

impl SimConfig {
    pub fn new(region: RateRegion, scheduler: SchedulerKind, users: Vec<UserConfig>) -> Self {
        Self {
            tau: DEFAULT_TAU,
            horizon: 12_000,
            scheduler,
            tbrm_enabled: true,
            tbrm_mode: TbrmMode::Multiplicative,
            region,
            users,
            seed: 1,
        }
    }
}

/// Snapshot of one slot: the applied allocation, what it did to the queues,
/// and the weights computed at slot end (which drive the next allocation).
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub slot: u64,
    /// `C(t)` applied this slot (bit/s).
    pub assigned_rate_bps: Vec<f64>,
    /// Bits actually drained from each queue.
    pub served_bits: Vec<f64>,
    /// Bits enqueued at slot end.
    pub arrived_bits: Vec<f64>,
    /// Queue depth at slot end, after service and arrivals.
    pub queue_bits: Vec<f64>,
    /// Head-of-line delay at slot end (seconds).
    pub hol_s: Vec<f64>,
    /// Guaranteed-rate token counter after this slot's update (bits).
    pub k_g_bits: Vec<f64>,
    /// Maximal-rate token counter after this slot's update (bits; <= 0).
    pub k_m_bits: Vec<f64>,
    pub base_weight: Vec<f64>,
    pub eff_weight: Vec<f64>,
    /// The applied allocation came from a degenerate (all-zero-weight)
    /// solve. Never set on slot 0, whose zeros are the causality bootstrap.
    pub degenerate: bool,
}

#[derive(Debug)]
struct Packet {
    arrival_slot: u64,
    bits: f64,
}

#[derive(Debug)]
struct Flow {
    constraint: RateConstraint,
    qos: QosParams,
    traffic: FlowTraffic,
    fifo: VecDeque<Packet>,
    queue_bits: f64,
    avg_rate: f64,
    avg_waiting: f64,
    avg_arrival_rate: f64,
    tokens: TbrmState,
}

impl Flow {
    fn hol_delay(&self, slot: u64, tau: f64) -> f64 {
        match self.fifo.front() {
            Some(packet) => (slot - packet.arrival_slot) as f64 * tau,
            None => 0.0,
        }
    }

    /// Drains up to `budget` bits FIFO; returns the bits served and the
    /// arrival slot of the last packet completed, if any.
    fn serve(&mut self, budget: f64) -> (f64, Option<u64>) {
        let served = self.queue_bits.min(budget);
        self.queue_bits -= served;
        let mut remaining = served;
        let mut last_completed = None;
        while remaining > 0.0 {
            let Some(packet) = self.fifo.front_mut() else {
                break;
            };
            if packet.bits <= remaining {
                remaining -= packet.bits;
                last_completed = Some(packet.arrival_slot);
                self.fifo.pop_front();
            } else {
                packet.bits -= remaining;
                remaining = 0.0;
            }
        }
        if self.queue_bits == 0.0 {
            // min(Q, budget) and the per-packet walk can disagree by
            // rounding; an emptied queue clears the FIFO outright.
            if let Some(packet) = self.fifo.pop_front() {
                last_completed = Some(packet.arrival_slot);
            }
            self.fifo.clear();
        }
        (served, last_completed)
    }
}

/// Engine state for one run; create with [`Engine::new`], drive with
/// [`Engine::step`], or use [`Engine::run`] for the whole horizon.
#[derive(Debug)]
pub struct Engine {
    tau: f64,
    horizon: u64,
    scheduler: SchedulerKind,
    tbrm_enabled: bool,
    tbrm_mode: TbrmMode,
    region: RateRegion,
    flows: Vec<Flow>,
    mdu_utilities: Vec<SigmoidUtility>,
    aggregate: WeightAggregate,
    pending_rates: Vec<f64>,
    pending_degenerate: bool,
    slot: u64,
    observables: Vec<FlowObservables>,
    utilities: Vec<UtilityEntry>,
}

impl Engine {
    pub fn new(config: SimConfig) -> Result<Self, ConfigError> {
        if !config.tau.is_finite() || config.tau <= 0.0 {
            return Err(ConfigError::InvalidTau(config.tau));
        }
        let n = config.region.n_users();
        if config.users.len() != n {
            return Err(ConfigError::UserCountMismatch {
                region: n,
                users: config.users.len(),
            });
        }
        let mut flows = Vec::with_capacity(n);
        let mut mdu_utilities = Vec::with_capacity(n);
        for (user, user_config) in config.users.iter().enumerate() {
            let qos = user_config.qos;
            if !qos.delay_bound.is_finite() || qos.delay_bound <= 0.0 {
                return Err(ConfigError::InvalidDelayBound {
                    user,
                    value: qos.delay_bound,
                });
            }
            if !(qos.violation_prob > 0.0 && qos.violation_prob < 1.0) {
                return Err(ConfigError::InvalidViolationProb {
                    user,
                    value: qos.violation_prob,
                });
            }
            for &multiplier in &[user_config.sigma_g_multiplier, user_config.sigma_m_multiplier] {
                if !multiplier.is_finite() || multiplier <= 0.0 {
                    return Err(ConfigError::InvalidSigmaMultiplier {
                        user,
                        value: multiplier,
                    });
                }
            }
            let region_cap = config.region.cmax()[user];
            if user_config.constraint.cmax() != region_cap {
                return Err(ConfigError::CapMismatch {
                    user,
                    constraint: user_config.constraint.cmax(),
                    region: region_cap,
                });
            }
            let tokens = TbrmState::for_constraint(
                &user_config.constraint,
                config.tau,
                user_config.sigma_g_multiplier,
                user_config.sigma_m_multiplier,
            )
            .map_err(|source| ConfigError::Tbrm { user, source })?;
            let mut traffic_spec = user_config.traffic.clone();
            traffic_spec.seed = mix_seeds(config.seed, traffic_spec.seed);
            let traffic = FlowTraffic::new(&traffic_spec)
                .map_err(|source| ConfigError::Traffic { user, source })?;
            mdu_utilities.push(SigmoidUtility::for_delay_bound(qos.delay_bound));
            flows.push(Flow {
                constraint: user_config.constraint,
                qos,
                traffic,
                fifo: VecDeque::new(),
                queue_bits: 0.0,
                avg_rate: INITIAL_RATE_FRACTION * region_cap,
                avg_waiting: 0.0,
                avg_arrival_rate: OBSERVABLE_FLOOR,
                tokens,
            });
        }
        Ok(Self {
            tau: config.tau,
            horizon: config.horizon,
            scheduler: config.scheduler,
            tbrm_enabled: config.tbrm_enabled,
            tbrm_mode: config.tbrm_mode,
            region: config.region,
            flows,
            mdu_utilities,
            aggregate: WeightAggregate::new(),
            pending_rates: vec![0.0; n],
            pending_degenerate: false,
            slot: 0,
            observables: Vec::with_capacity(n),
            utilities: Vec::with_capacity(n),
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    /// Runs one slot and returns its record.
    pub fn step(&mut self) -> SlotRecord {
        let t = self.slot;
        let tau = self.tau;
        let n = self.flows.len();
        let mut record = SlotRecord {
            slot: t,
            assigned_rate_bps: std::mem::take(&mut self.pending_rates),
            served_bits: Vec::with_capacity(n),
            arrived_bits: Vec::with_capacity(n),
            queue_bits: Vec::with_capacity(n),
            hol_s: Vec::with_capacity(n),
            k_g_bits: Vec::with_capacity(n),
            k_m_bits: Vec::with_capacity(n),
            base_weight: Vec::new(),
            eff_weight: Vec::new(),
            degenerate: self.pending_degenerate,
        };

        self.observables.clear();
        for (user, flow) in self.flows.iter_mut().enumerate() {
            let assigned = record.assigned_rate_bps[user];

            // (1) Serve with the applied rate.
            let (served, last_completed) = flow.serve(assigned * tau);
            let waiting_sample = match last_completed {
                Some(arrival_slot) => (t - arrival_slot) as f64 * tau,
                None => flow.hol_delay(t, tau),
            };

            // (2) Arrivals land at slot end and become servable next slot.
            let arrived = flow.traffic.arrivals(
                t,
                tau,
                flow.queue_bits,
                flow.constraint.cmax(),
            );
            if arrived > 0.0 {
                flow.fifo.push_back(Packet {
                    arrival_slot: t,
                    bits: arrived,
                });
            }
            flow.queue_bits += arrived;

            // (3) Fold the applied rate into observables and tokens.
            let beta = OBSERVABLE_SMOOTHING;
            flow.avg_rate = ((1.0 - beta) * flow.avg_rate + beta * assigned).max(OBSERVABLE_FLOOR);
            flow.avg_waiting = (1.0 - beta) * flow.avg_waiting + beta * waiting_sample;
            flow.avg_arrival_rate =
                ((1.0 - beta) * flow.avg_arrival_rate + beta * arrived / tau).max(OBSERVABLE_FLOOR);
            if self.tbrm_enabled {
                flow.tokens.update_tokens(&flow.constraint, assigned, tau);
            }

            let hol = flow.hol_delay(t, tau);
            self.observables.push(FlowObservables {
                queue_bits: flow.queue_bits,
                hol_delay: hol,
                avg_rate: flow.avg_rate,
                avg_waiting: flow.avg_waiting,
                avg_arrival_rate: flow.avg_arrival_rate,
                delay_bound: flow.qos.delay_bound,
                violation_prob: flow.qos.violation_prob,
            });
            record.served_bits.push(served);
            record.arrived_bits.push(arrived);
            record.queue_bits.push(flow.queue_bits);
            record.hol_s.push(hol);
            record.k_g_bits.push(flow.tokens.k_g());
            record.k_m_bits.push(flow.tokens.k_m());
        }

        // (4) Base weights, aggregate, effective weights.
        record.base_weight = base_weights(self.scheduler, &self.observables, &self.mdu_utilities);
        self.aggregate.update(&record.base_weight);
        record.eff_weight = record
            .base_weight
            .iter()
            .zip(&self.flows)
            .map(|(&base, flow)| self.correct_weight(flow, base))
            .collect();

        // (5) Solve the weighted NUM problem for the next slot.
        self.utilities.clear();
        for &weight in &record.eff_weight {
            self.utilities.push(match self.scheduler.utility_form() {
                crate::rate_region::UtilityForm::Linear => UtilityEntry::linear(weight),
                crate::rate_region::UtilityForm::Reciprocal => UtilityEntry::reciprocal(weight),
            });
        }
        let allocation = solve_num(&self.region, &self.utilities)
            .expect("engine-built utilities are finite and non-negative");
        self.pending_rates = allocation.rates;
        self.pending_degenerate = allocation.degenerate;
        self.slot += 1;
        record
    }

    fn correct_weight(&self, flow: &Flow, base: f64) -> f64 {
        if !self.tbrm_enabled {
            return base;
        }
        match self.tbrm_mode {
            TbrmMode::Multiplicative => {
                flow.tokens
                    .effective_weight(&flow.constraint, base, &self.aggregate)
            }
            TbrmMode::Additive(shape) => {
                let (kept, offset) = flow.tokens.additive_effective_weight(
                    &flow.constraint,
                    base,
                    |x| shape.apply(x),
                    self.aggregate.omega_bar(),
                );
                // A negative corrected weight would flip the utility's sign;
                // the solver contract wants non-negative weights.
                (kept + offset).max(0.0)
            }
        }
    }

    /// Runs `config.horizon` slots and returns every record.
    pub fn run(config: SimConfig) -> Result<Vec<SlotRecord>, ConfigError> {
        let mut engine = Engine::new(config)?;
        let mut records = Vec::with_capacity(engine.horizon as usize);
        for _ in 0..engine.horizon {
            records.push(engine.step());
        }
        Ok(records)
    }
}

/// Stirs the run seed and a per-user stream seed into one generator seed.
fn mix_seeds(run_seed: u64, stream_seed: u64) -> u64 {
    run_seed ^ stream_seed.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}
