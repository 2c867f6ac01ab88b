//! Hub-and-spoke tethered satellite formations whose deputies trace Lissajous
//! curves in the plane normal to the local vertical.
//!
//! The crate is organised bottom-up:
//!
//! * [`system`]: physical parameters, vertical equilibrium, closed-form
//!   stability conditions and the relative-motion energy.
//! * [`lindyn`]: linearised decoupled dynamics, Routh-Hurwitz tests and mode
//!   frequencies.
//! * [`formation`]: Type I / Type II Lissajous formations, their admissibility
//!   arithmetic and geometric oracles.
//! * [`topology`]: pairwise winding numbers and entanglement verdicts.
//! * [`perturb`]: second-order correction sums and the main-satellite forcing.
//! * [`simulate`]: the nonlinear HCW + visco-elastic tether model and its
//!   adaptive integrator.
//! * [`harness`]: deviation metrics, scenario runs and mass-ratio tuning.
//!
//! All quantities are SI. Frames are LVLH: `x` along-track, `y` orbit normal,
//! `z` towards the Earth.

pub mod error;
pub mod formation;
pub mod harness;
pub mod lindyn;
pub mod perturb;
mod search;
pub mod simulate;
pub mod system;
pub mod topology;

pub use error::{Error, Result};
pub use formation::{AdmissibilityReport, FormationKind, FormationSpec, Phase, ReferenceFrequencies};
pub use harness::{DeviationReport, ScenarioConfig, StabilityHorizon};
pub use lindyn::{ModeFrequencies, Stability};
pub use simulate::{BodyState, SystemState, Trajectory};
pub use system::{EquilibriumConfig, SystemParams};
