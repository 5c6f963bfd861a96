//! Per-flow arrival generators and slot-trace files.
//!
//! Four families cover the simulated workloads:
//!
//! * [`Sine2`] - deterministic double-sine rate, for slow load swings with a
//!   faster ripple on top.
//! * [`SelfSimilarParams`] - superposition of ON/OFF sources with Pareto
//!   holding times, the classic self-similar traffic construction.
//! * [`Trace`] - bits-per-slot series read from a file (video traces); wraps
//!   cyclically past the end. [`synthesize_video_trace`] fabricates a
//!   deterministic stand-in trace when no capture is available.
//! * [`sat_arrivals`] - saturating source that keeps a queue backlogged by
//!   topping it up to three slots' worth of link capacity.
//!
//! All generators are deterministic: the stochastic ones are pure functions
//! of their parameters, seed and slot sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Pareto};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrafficError {
    #[error("failed to read trace {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("trace line {line} is not a non-negative integer: {content:?}")]
    Malformed { line: usize, content: String },
    #[error("trace has no slots")]
    EmptyTrace,
    #[error("Pareto shape must exceed 1 for finite mean holding times, got {0}")]
    InvalidShape(f64),
    #[error("mean holding time must be positive and finite, got {0}")]
    InvalidDuration(f64),
    #[error("need at least one ON/OFF source")]
    ZeroSources,
    #[error("rate must be non-negative and finite, got {0}")]
    NegativeRate(f64),
    #[error("sine period must be positive, got {0}")]
    NonPositivePeriod(f64),
    #[error("sine amplitudes sum to {amp_sum}, exceeding base rate {base}")]
    AmplitudeExceedsBase { base: f64, amp_sum: f64 },
}

/// Double-sine arrival rate: `base + amp1 * sin(2 pi t / period1) + amp2 *
/// sin(2 pi t / period2)`, integrated over one slot and floored at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sine2 {
    pub base_rate: f64,
    pub amp1: f64,
    pub period1: f64,
    pub amp2: f64,
    pub period2: f64,
}

impl Sine2 {
    pub fn new(
        base_rate: f64,
        amp1: f64,
        period1: f64,
        amp2: f64,
        period2: f64,
    ) -> Result<Self, TrafficError> {
        for &rate in &[base_rate, amp1, amp2] {
            if !rate.is_finite() || rate < 0.0 {
                return Err(TrafficError::NegativeRate(rate));
            }
        }
        for &period in &[period1, period2] {
            if !period.is_finite() || period <= 0.0 {
                return Err(TrafficError::NonPositivePeriod(period));
            }
        }
        if amp1 + amp2 > base_rate {
            return Err(TrafficError::AmplitudeExceedsBase {
                base: base_rate,
                amp_sum: amp1 + amp2,
            });
        }
        Ok(Self {
            base_rate,
            amp1,
            period1,
            amp2,
            period2,
        })
    }

    /// Slow-swing preset: a one-minute main period with a four-second ripple,
    /// amplitudes at 30% and 10% of the base rate.
    pub fn slow_variation(base_rate: f64) -> Result<Self, TrafficError> {
        Self::new(base_rate, 0.3 * base_rate, 60.0, 0.1 * base_rate, 4.0)
    }

    /// Fast-swing preset: same shape with an eight-second main period.
    pub fn fast_variation(base_rate: f64) -> Result<Self, TrafficError> {
        Self::new(base_rate, 0.3 * base_rate, 8.0, 0.1 * base_rate, 4.0)
    }

    /// Bits arriving in the slot starting at `t_seconds`.
    pub fn arrivals(&self, t_seconds: f64, tau: f64) -> f64 {
        let two_pi = std::f64::consts::TAU;
        let rate = self.base_rate
            + self.amp1 * (two_pi * t_seconds / self.period1).sin()
            + self.amp2 * (two_pi * t_seconds / self.period2).sin();
        (tau * rate).max(0.0)
    }
}

/// ON/OFF superposition parameters. Each of `n_sources` alternates between
/// ON periods (mean `mean_on` seconds) and OFF periods (mean `mean_off`),
/// both Pareto with the given shape; an ON source emits `on_rate` bit/s.
///
/// Long-run mean rate: `n_sources * on_rate * mean_on / (mean_on + mean_off)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfSimilarParams {
    pub n_sources: u32,
    pub shape: f64,
    pub on_rate: f64,
    pub mean_on: f64,
    pub mean_off: f64,
}

impl SelfSimilarParams {
    /// Workload preset: 16 sources, shape 1.4, 0.4 s ON / 1.2 s OFF, with
    /// `on_rate` solved so the long-run mean hits `mean_rate`.
    pub fn with_mean_rate(mean_rate: f64) -> Self {
        let duty = 0.4 / (0.4 + 1.2);
        Self {
            n_sources: 16,
            shape: 1.4,
            on_rate: mean_rate / (16.0 * duty),
            mean_on: 0.4,
            mean_off: 1.2,
        }
    }

    pub fn mean_rate(&self) -> f64 {
        self.n_sources as f64 * self.on_rate * self.mean_on / (self.mean_on + self.mean_off)
    }

    fn validate(&self) -> Result<(), TrafficError> {
        if self.n_sources == 0 {
            return Err(TrafficError::ZeroSources);
        }
        if !self.shape.is_finite() || self.shape <= 1.0 {
            return Err(TrafficError::InvalidShape(self.shape));
        }
        for &mean in &[self.mean_on, self.mean_off] {
            if !mean.is_finite() || mean <= 0.0 {
                return Err(TrafficError::InvalidDuration(mean));
            }
        }
        if !self.on_rate.is_finite() || self.on_rate < 0.0 {
            return Err(TrafficError::NegativeRate(self.on_rate));
        }
        Ok(())
    }
}

#[derive(Debug)]
struct OnOffSource {
    rng: ChaCha8Rng,
    on: bool,
    /// Seconds until the next state toggle; may carry sub-slot remainders.
    remaining: f64,
}

/// Stateful ON/OFF generator; slot `t`'s arrivals are `tau * on_rate * (#
/// sources ON at the start of slot t)`, fully determined by the seed.
#[derive(Debug)]
pub struct SelfSimilar {
    params: SelfSimilarParams,
    sources: Vec<OnOffSource>,
}

impl SelfSimilar {
    pub fn new(params: SelfSimilarParams, seed: u64) -> Result<Self, TrafficError> {
        params.validate()?;
        let p_on = params.mean_on / (params.mean_on + params.mean_off);
        let sources = (0..params.n_sources)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                );
                // Start from the stationary state mix so early slots are not
                // systematically quiet.
                let on = rng.gen_bool(p_on);
                let remaining = Self::holding_time(&params, on, &mut rng);
                OnOffSource { rng, on, remaining }
            })
            .collect();
        Ok(Self { params, sources })
    }

    fn holding_time(params: &SelfSimilarParams, on: bool, rng: &mut ChaCha8Rng) -> f64 {
        let mean = if on { params.mean_on } else { params.mean_off };
        // Pareto(scale, shape) has mean scale * shape / (shape - 1).
        let scale = mean * (params.shape - 1.0) / params.shape;
        Pareto::new(scale, params.shape)
            .expect("validated parameters")
            .sample(rng)
    }

    pub fn params(&self) -> &SelfSimilarParams {
        &self.params
    }

    /// Arrivals for the next slot; advances every source by `tau` seconds.
    pub fn arrivals_for_slot(&mut self, tau: f64) -> f64 {
        let mut active = 0u32;
        for source in &mut self.sources {
            if source.on {
                active += 1;
            }
            source.remaining -= tau;
            while source.remaining <= 0.0 {
                source.on = !source.on;
                source.remaining += Self::holding_time(&self.params, source.on, &mut source.rng);
            }
        }
        tau * self.params.on_rate * active as f64
    }
}

/// Saturating source: enough bits to keep the queue at twice a slot's link
/// capacity even after a worst-case (full `cmax * tau`) service.
pub fn sat_arrivals(queue_bits: f64, cmax: f64, tau: f64) -> f64 {
    (2.0 * cmax * tau - queue_bits + cmax * tau).max(0.0)
}

/// Bits-per-slot series, typically loaded from a trace file. The engine
/// replays it cyclically, so a short capture drives arbitrarily long runs.
///
/// File format: UTF-8, LF line endings, one non-negative decimal integer
/// (bits arriving in that slot) per line, with an optional first line
/// `# tau=<seconds>` recording the slot length the trace was sampled at.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub slot_bits: Vec<u64>,
    pub tau: Option<f64>,
}

impl Trace {
    pub fn new(slot_bits: Vec<u64>, tau: Option<f64>) -> Result<Self, TrafficError> {
        if slot_bits.is_empty() {
            return Err(TrafficError::EmptyTrace);
        }
        Ok(Self { slot_bits, tau })
    }

    pub fn parse(text: &str) -> Result<Self, TrafficError> {
        let mut slot_bits = Vec::new();
        let mut tau = None;
        for (idx, line) in text.lines().enumerate() {
            let number = idx + 1;
            if idx == 0 {
                if let Some(rest) = line.strip_prefix("# tau=") {
                    tau = Some(rest.trim().parse::<f64>().map_err(|_| {
                        TrafficError::Malformed {
                            line: number,
                            content: line.to_string(),
                        }
                    })?);
                    continue;
                }
            }
            let bits = line
                .parse::<u64>()
                .map_err(|_| TrafficError::Malformed {
                    line: number,
                    content: line.to_string(),
                })?;
            slot_bits.push(bits);
        }
        Self::new(slot_bits, tau)
    }

    pub fn from_path(path: &Path) -> Result<Self, TrafficError> {
        let text = std::fs::read_to_string(path).map_err(|source| TrafficError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn write_to(&self, path: &Path) -> Result<(), TrafficError> {
        let io_err = |source| TrafficError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut out = Vec::with_capacity(self.slot_bits.len() * 8 + 16);
        if let Some(tau) = self.tau {
            writeln!(out, "# tau={tau}").map_err(io_err)?;
        }
        for bits in &self.slot_bits {
            writeln!(out, "{bits}").map_err(io_err)?;
        }
        std::fs::write(path, out).map_err(io_err)
    }

    /// Arrivals for `slot`, wrapping cyclically past the end.
    pub fn arrivals(&self, slot: u64) -> f64 {
        self.slot_bits[(slot % self.slot_bits.len() as u64) as usize] as f64
    }
}

/// Fabricates a deterministic video-like trace: 25 frames per second with
/// log-normally distributed frame sizes (sigma 0.5) averaging to
/// `mean_rate_bps`. Frames land in the slot containing their timestamp.
pub fn synthesize_video_trace(
    mean_rate_bps: f64,
    n_slots: usize,
    tau: f64,
    seed: u64,
) -> Result<Trace, TrafficError> {
    if !mean_rate_bps.is_finite() || mean_rate_bps < 0.0 {
        return Err(TrafficError::NegativeRate(mean_rate_bps));
    }
    if n_slots == 0 {
        return Err(TrafficError::EmptyTrace);
    }
    const FPS: f64 = 25.0;
    const LOG_SIGMA: f64 = 0.5;
    let mean_frame_bits = mean_rate_bps / FPS;
    let mut slots = vec![0.0f64; n_slots];
    if mean_frame_bits > 0.0 {
        let mu = mean_frame_bits.ln() - LOG_SIGMA * LOG_SIGMA / 2.0;
        let frame_sizes = LogNormal::new(mu, LOG_SIGMA).expect("finite parameters");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let horizon = n_slots as f64 * tau;
        let mut frame = 0u64;
        loop {
            let time = frame as f64 / FPS;
            if time >= horizon {
                break;
            }
            let slot = (time / tau) as usize;
            slots[slot.min(n_slots - 1)] += frame_sizes.sample(&mut rng);
            frame += 1;
        }
    }
    Trace::new(slots.into_iter().map(|bits| bits.round() as u64).collect(), Some(tau))
}

/// Configured arrival process for one flow.
#[derive(Debug, Clone)]
pub enum TrafficModel {
    /// Keeps the queue backlogged; reacts to the queue, needs no seed.
    Sat,
    Sine2(Sine2),
    SelfSimilar(SelfSimilarParams),
    Trace(Trace),
}

/// Traffic model plus the seed that fixes its stochastic choices.
#[derive(Debug, Clone)]
pub struct TrafficSpec {
    pub model: TrafficModel,
    pub seed: u64,
}

impl TrafficSpec {
    pub fn new(model: TrafficModel, seed: u64) -> Self {
        Self { model, seed }
    }
}

/// Engine-side generator state for one flow.
#[derive(Debug)]
pub enum FlowTraffic {
    Sat,
    Sine2(Sine2),
    SelfSimilar(Box<SelfSimilar>),
    Trace(Trace),
}

impl FlowTraffic {
    pub fn new(spec: &TrafficSpec) -> Result<Self, TrafficError> {
        Ok(match &spec.model {
            TrafficModel::Sat => FlowTraffic::Sat,
            TrafficModel::Sine2(sine) => FlowTraffic::Sine2(*sine),
            TrafficModel::SelfSimilar(params) => {
                FlowTraffic::SelfSimilar(Box::new(SelfSimilar::new(*params, spec.seed)?))
            }
            TrafficModel::Trace(trace) => FlowTraffic::Trace(trace.clone()),
        })
    }

    /// Bits arriving at the end of `slot`. SAT sees the queue as left after
    /// this slot's service, since arrivals are enqueued afterwards.
    pub fn arrivals(&mut self, slot: u64, tau: f64, queue_after_service: f64, cmax: f64) -> f64 {
        match self {
            FlowTraffic::Sat => sat_arrivals(queue_after_service, cmax, tau),
            FlowTraffic::Sine2(sine) => sine.arrivals(slot as f64 * tau, tau),
            FlowTraffic::SelfSimilar(gen) => gen.arrivals_for_slot(tau),
            FlowTraffic::Trace(trace) => trace.arrivals(slot),
        }
    }
}
