//! Slotted cross-layer scheduling simulator with token-bucket rate constraining.
//!
//! The crate models a shared downlink in which a scheduler picks, once per
//! slot, a rate vector from a parametric rate region by maximizing a weighted
//! network-utility objective. Per-user token buckets then reshape the weights
//! so that long-run assigned rates respect a guaranteed lower bound and a
//! maximal upper bound, without changing the scheduler itself.
//!
//! Modules follow the data path:
//!
//! * [`rate_region`] - the feasible rate set and the per-slot NUM solver
//! * [`scheduler`] - base weight rules (MW, M-LWDF, EXP/PF, MDU, MD, MDV)
//! * [`tbrm`] - token bucket rate modifier state and weight correction
//! * [`traffic`] - arrival generators and trace files
//! * [`engine`] - the slotted simulation loop
//! * [`metrics`] - conformance metrics over assigned-rate traces

pub mod engine;
pub mod metrics;
pub mod rate_region;
pub mod scheduler;
pub mod tbrm;
pub mod traffic;

mod guide;

pub use engine::{Engine, QosParams, SimConfig, SlotRecord, TbrmMode, UserConfig};
pub use metrics::{m1, m2, m3, BoundPair, CapacityTrace, MetricsReport};
pub use rate_region::{
    grid_oracle_solve, solve_num, Allocation, RateRegion, UtilityEntry, UtilityForm,
};
pub use scheduler::{FlowObservables, SchedulerKind, SigmoidUtility};
pub use tbrm::{AdditiveShape, RateConstraint, TbrmState, WeightAggregate};
pub use traffic::{Sine2, TrafficSpec};
