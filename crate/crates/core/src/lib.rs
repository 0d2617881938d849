//! Effective capacity of fixed-rate HARQ-IR over block-fading channels.
//!
//! The crate is organized bottom-up:
//!
//! * [`channel`]: fading gains, instantaneous and ergodic capacity.
//! * [`protocol`]: transmission-time samplers for HARQ-IR, plain ARQ and
//!   deadline-bounded HARQ-IR, plus the exact law on discrete channels.
//! * [`renewal`]: moments of the transmission time, renewal counting and the
//!   effective-capacity estimators.
//! * [`analysis`]: reference curves (zero-QoS throughput, perfect-CSI effective
//!   capacity) and a queue simulator for the buffer-overflow exponent.
//! * [`experiments`]: configuration, parameter sweeps and their CSV/JSON output.
//! * [`cli`]: the `harq-renewal` command line.

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod experiments;
pub mod protocol;
pub mod quadrature;
pub mod renewal;
pub mod rng;
pub mod special;
pub mod stats;

pub use channel::{ergodic_capacity, instantaneous_capacity, FadingModel, SnrConfig};
pub use protocol::{ProtocolSpec, Scheme, TransmissionOutcome, TransmissionSampler};
pub use renewal::{EcEstimate, EcMethod, RenewalStats};
pub use rng::RngStream;
