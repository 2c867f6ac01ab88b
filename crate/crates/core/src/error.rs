use thiserror::Error;

use crate::system::ParamViolation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid system parameters: {}", join(.0))]
    InvalidParams(Vec<ParamViolation>),

    #[error("invalid formation: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The tethers are too soft to hold the vertical equilibrium against the tidal force.
    #[error("equilibrium-infeasible: equilibrium denominator {denominator:e} is not positive")]
    EquilibriumInfeasible { denominator: f64 },

    #[error("degenerate-table: Routh pivot {pivot:e} vanishes within tolerance")]
    DegenerateTable { pivot: f64 },

    #[error("unstable-params: deputy relative spectrum is not purely imaginary")]
    UnstableParams,

    #[error("ratio-infeasible: p/q = {p}/{q} is not below sqrt(3)/2")]
    RatioInfeasible { p: u32, q: u32 },

    #[error("colliding-formation: minimum separation {separation:e} m")]
    CollidingFormation { separation: f64 },

    #[error("amplitude-too-large: deputy {deputy} horizontal offset {offset:e} m exceeds tether length {length:e} m")]
    AmplitudeTooLarge { deputy: usize, offset: f64, length: f64 },

    #[error("mass-ratio-mismatch: parameters give N*m_D/m_C = {actual}, formation needs {nominal} (allowed offset {allowed})")]
    MassRatioMismatch { actual: f64, nominal: f64, allowed: f64 },

    #[error("near-collision: deputies {i} and {j} come within {radius:e} m")]
    NearCollision { i: usize, j: usize, radius: f64 },

    #[error("unbalanced-spec: tension forces on the main satellite do not cancel for this formation")]
    UnbalancedSpec,

    #[error("coincident-bodies: deputy {deputy} is {separation:e} m from the main satellite")]
    CoincidentBodies { deputy: usize, separation: f64 },

    #[error("step-underflow: step size {step:e} s at t = {t} s")]
    StepUnderflow { t: f64, step: f64 },

    #[error("nonfinite-state at t = {t} s")]
    NonfiniteState { t: f64 },

    #[error("step budget of {max_steps} exhausted at t = {t} s")]
    StepBudget { t: f64, max_steps: usize },

    #[error("optimization-diverged: best grid value at interval endpoint {at}")]
    OptimizationDiverged { at: f64 },

    #[error("spec-mismatch: trajectory has {found} deputies, formation has {expected}")]
    SpecMismatch { expected: usize, found: usize },
}

fn join(v: &[ParamViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
