//! Joint antenna positioning, beamforming and power allocation for a
//! multi-user full-duplex MIMO base station whose transmit and receive
//! antennas can be repositioned inside square regions.
//!
//! The crate is organised bottom-up:
//!
//! - [`config`]: scenario parameters and the key/value config format.
//! - [`channel`]: finite-scattering channel model and random realizations.
//! - [`objective`]: SINRs, weighted sum-rate and the fractional-programming
//!   auxiliary variables.
//! - [`beamforming`]: closed-form block updates for the transmit precoder,
//!   receive combiner and uplink powers.
//! - [`geometry`]: nearest feasible antenna position under the region and
//!   minimum-spacing constraints.
//! - [`placement`]: surrogate-based (BSUM) antenna position updates.
//! - [`solver`]: the alternating-optimization outer loop.
//! - [`baselines`]: fixed arrays, half-duplex and gradient-descent placement.
//! - [`experiment`] and [`report`]: seeded Monte Carlo campaigns and CSV output.
//! - [`oracle`]: brute-force reference checks used by the `oracle` command
//!   and the acceptance suite.

pub mod baselines;
pub mod beamforming;
pub mod channel;
pub mod config;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod linalg;
pub mod objective;
pub mod oracle;
pub mod placement;
pub mod report;
pub mod rng;
pub mod solver;

pub use channel::{AntennaLayout, ChannelRealization, Channels, PathAngle, Point};
pub use config::ScenarioConfig;
pub use error::{Error, Result};
pub use objective::{Auxiliary, Beamformers, SolverState};
pub use solver::{alternating_optimize, AoOptions, TrialResult};
