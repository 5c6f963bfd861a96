//! Command-line front-end for the `xlsched` simulator.
//!
//! The binary wires three layers together:
//!
//! * [`scenario`] - scenario documents (text and JSON), bundled presets,
//!   and their translation into engine configurations
//! * [`csvio`] - the CSV shapes the tool emits and reads back
//! * [`orchestrate`] - run matrices, parameter sweeps and metric reports

pub mod csvio;
pub mod orchestrate;
pub mod scenario;
