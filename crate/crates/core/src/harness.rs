//! Experiments on full nonlinear propagations: deviation metrics, the
//! stability horizon and tuning of the mass ratio.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::formation::{
    mass_ratio_for, min_separation, synthesize_initial_state_with, theoretical_state, FormationSpec,
    ReferenceFrequencies, SynthesisOptions, SEPARATION_SAMPLES,
};
use crate::search::golden_section_fallible;
use crate::simulate::{integrate, IntegratorConfig, IntegratorStats, Trajectory};
use crate::system::{vertical_equilibrium, SystemParams};

/// Which frequencies drive the theoretical comparison curves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceMode {
    /// Commensurate frequencies of the nominal mass ratio, independent of
    /// the mass-ratio offset.
    #[default]
    Nominal,
    /// Linear frequencies of the simulated parameters.
    Exact,
}

/// One experiment. `params.m_main` and `params.stiffness` are recomputed
/// by [`ScenarioConfig::effective_params`] from the mass-ratio offset and the
/// rigidity; the amplitudes of `spec` are replaced by `a = kappa l0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub params: SystemParams,
    pub spec: FormationSpec,
    pub kappa_deg: f64,
    /// k / (3 w0^2 m_D)
    pub rigidity_dimensionless: f64,
    /// Length of the run in orbital periods `2 pi / w0`.
    pub duration_orbits: f64,
    /// `N m_D / m_C = 3 q^2 / p^2 - 4 - mass_ratio_offset`.
    pub mass_ratio_offset: f64,
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub reference: ReferenceMode,
}

/// Default number of recorded states per orbital period.
pub const SAMPLES_PER_ORBIT: f64 = 200.0;

impl ScenarioConfig {
    /// Geostationary orbit, `l0 = 10 km`, `m_D = 100 kg`, rigidity `10^3`,
    /// no damping, ten orbital periods.
    pub fn geo_default(spec: FormationSpec, kappa_deg: f64) -> Result<Self> {
        let mean_motion = crate::system::GEO_MEAN_MOTION;
        let alpha = mass_ratio_for(spec.p, spec.q)?.to_f64().unwrap_or(f64::NAN);
        let params = SystemParams::from_ratios(spec.n_deputies, alpha, 1000.0, 100.0, 1e4, mean_motion);
        let cfg = Self {
            params,
            spec,
            kappa_deg,
            rigidity_dimensionless: 1000.0,
            duration_orbits: 10.0,
            mass_ratio_offset: 0.0,
            integrator: IntegratorConfig {
                output_stride: params.orbital_period() / SAMPLES_PER_ORBIT,
                ..IntegratorConfig::default()
            },
            reference: ReferenceMode::Nominal,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the configuration and the parameters it produces.
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_deg > 0.0 && self.kappa_deg <= 6.0) {
            return Err(Error::InvalidArgument(format!(
                "kappa_deg = {} outside (0, 6]",
                self.kappa_deg
            )));
        }
        if !(self.rigidity_dimensionless > 1.0 && self.rigidity_dimensionless.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "rigidity {} must exceed 1",
                self.rigidity_dimensionless
            )));
        }
        if !(self.duration_orbits > 0.0 && self.duration_orbits.is_finite()) {
            return Err(Error::InvalidArgument("duration must be positive".into()));
        }
        if self.params.n_deputies != self.spec.n_deputies {
            return Err(Error::SpecMismatch {
                expected: self.spec.n_deputies,
                found: self.params.n_deputies,
            });
        }
        let alpha = self.nominal_mass_ratio()? - self.mass_ratio_offset;
        if !(alpha > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "mass ratio offset {} leaves a non-positive mass ratio",
                self.mass_ratio_offset
            )));
        }
        crate::system::ensure_valid(&self.effective_params()?)
    }

    pub fn nominal_mass_ratio(&self) -> Result<f64> {
        Ok(mass_ratio_for(self.spec.p, self.spec.q)?.to_f64().unwrap_or(f64::NAN))
    }

    /// `a = kappa_rad l0` (m).
    pub fn amplitude(&self) -> f64 {
        self.kappa_deg.to_radians() * self.params.slack_length
    }

    pub fn orbital_period(&self) -> f64 {
        2.0 * PI / self.params.mean_motion
    }

    pub fn duration(&self) -> f64 {
        self.duration_orbits * self.orbital_period()
    }

    pub fn effective_params(&self) -> Result<SystemParams> {
        let p = &self.params;
        let alpha = self.nominal_mass_ratio()? - self.mass_ratio_offset;
        Ok(SystemParams {
            m_main: p.n_deputies as f64 * p.m_deputy / alpha,
            stiffness: self.rigidity_dimensionless * 3.0 * p.mean_motion.powi(2) * p.m_deputy,
            ..*p
        })
    }

    pub fn effective_spec(&self) -> FormationSpec {
        let a = self.amplitude();
        FormationSpec {
            amp_x: a,
            amp_y: a,
            ..self.spec
        }
    }

    pub fn reference_frequencies(&self) -> Result<ReferenceFrequencies> {
        match self.reference {
            ReferenceMode::Nominal => Ok(ReferenceFrequencies::nominal(
                self.spec.p,
                self.spec.q,
                self.params.mean_motion,
            )),
            ReferenceMode::Exact => ReferenceFrequencies::exact(&self.effective_params()?),
        }
    }

    pub fn with_offset(&self, mass_ratio_offset: f64) -> Self {
        Self {
            mass_ratio_offset,
            ..self.clone()
        }
    }
}

/// First time the stability condition `delta_D < delta_min / 2` fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StabilityHorizon {
    /// Seconds from the start of the run.
    At(f64),
    EntireRun,
}

impl StabilityHorizon {
    pub fn holds_throughout(&self) -> bool {
        matches!(self, Self::EntireRun)
    }
}

impl Serialize for StabilityHorizon {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::At(t) => s.serialize_f64(*t),
            Self::EntireRun => s.serialize_str("entire-run"),
        }
    }
}

impl<'de> Deserialize<'de> for StabilityHorizon {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            At(f64),
            Tag(String),
        }
        match Raw::deserialize(d)? {
            Raw::At(t) => Ok(Self::At(t)),
            Raw::Tag(s) if s == "entire-run" => Ok(Self::EntireRun),
            Raw::Tag(s) => Err(serde::de::Error::custom(format!("unknown horizon {s:?}"))),
        }
    }
}

/// Deviations of a propagated trajectory from the theoretical formation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub times: Vec<f64>,
    pub delta_c: Vec<f64>,
    pub delta_d: Vec<f64>,
    pub delta_min: f64,
    pub stability_horizon: StabilityHorizon,
    pub max_delta_d: f64,
    pub max_delta_c: f64,
}

/// `delta_C = |(x_C, y_C)| / a` and `delta_D`, the mean planar distance of
/// the deputies from their theoretical positions divided by `a`.
pub fn deviation_metrics(
    traj: &Trajectory,
    spec: &FormationSpec,
    a: f64,
    freqs: &ReferenceFrequencies,
) -> Result<DeviationReport> {
    let n = spec.n_deputies;
    if let Some(bad) = traj.states.iter().find(|s| s.deputies.len() != n) {
        return Err(Error::SpecMismatch {
            expected: n,
            found: bad.deputies.len(),
        });
    }
    let delta_min = min_separation(spec, a, SEPARATION_SAMPLES)?;
    let mut report = DeviationReport {
        times: Vec::with_capacity(traj.states.len()),
        delta_c: Vec::with_capacity(traj.states.len()),
        delta_d: Vec::with_capacity(traj.states.len()),
        delta_min,
        stability_horizon: StabilityHorizon::EntireRun,
        max_delta_d: 0.0,
        max_delta_c: 0.0,
    };
    for s in &traj.states {
        let dc = s.main.position.x.hypot(s.main.position.y) / a;
        let dd = s
            .deputies
            .iter()
            .enumerate()
            .map(|(k, d)| {
                let ((x, y), _) = theoretical_state(spec, freqs, k + 1, s.t);
                (d.position.x - x).hypot(d.position.y - y)
            })
            .sum::<f64>()
            / (n as f64 * a);
        if dd >= 0.5 * delta_min && report.stability_horizon == StabilityHorizon::EntireRun {
            report.stability_horizon = StabilityHorizon::At(s.t - traj.states[0].t);
        }
        report.max_delta_c = report.max_delta_c.max(dc);
        report.max_delta_d = report.max_delta_d.max(dd);
        report.times.push(s.t);
        report.delta_c.push(dc);
        report.delta_d.push(dd);
    }
    Ok(report)
}

/// Result of [`run_scenario`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub params: SystemParams,
    pub spec: FormationSpec,
    pub report: DeviationReport,
    pub trajectory: Trajectory,
}

/// Builds the parameters, synthesises the initial state, propagates it and
/// evaluates the deviations.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutcome> {
    cfg.validate()?;
    let params = cfg.effective_params()?;
    let spec = cfg.effective_spec();
    let freqs = cfg.reference_frequencies()?;
    let eq = vertical_equilibrium(&params)?;
    let s0 = synthesize_initial_state_with(
        &params,
        &spec,
        &eq,
        SynthesisOptions {
            frequencies: Some(freqs),
            max_ratio_offset: cfg.mass_ratio_offset.abs() + 1e-9,
        },
    )?;
    let trajectory = integrate(&params, &s0, cfg.duration(), &cfg.integrator)?;
    let report = deviation_metrics(&trajectory, &spec, cfg.amplitude(), &freqs)?;
    Ok(ScenarioOutcome {
        params,
        spec,
        report,
        trajectory,
    })
}

/// Number of points of the coarse optimisation grid.
pub const OPTIMIZER_GRID: usize = 21;
/// Width of the final golden-section bracket.
pub const OPTIMIZER_TOLERANCE: f64 = 1e-4;

/// Result of [`optimize_mass_ratio`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub delta_alpha: f64,
    pub max_delta_d: f64,
    /// Objective at `delta_alpha = 0`.
    pub unadjusted_max_delta_d: f64,
    /// `(delta_alpha, max delta_D)` on the coarse grid.
    pub grid: Vec<(f64, f64)>,
    pub evaluations: usize,
}

fn objective(cfg: &ScenarioConfig, offset: f64) -> Result<f64> {
    Ok(run_scenario(&cfg.with_offset(offset))?.report.max_delta_d)
}

/// Minimises the largest `delta_D` of the run over the mass-ratio offset:
/// a parallel coarse grid of [`OPTIMIZER_GRID`] points on `interval`, then
/// golden-section search around the best grid point.
pub fn optimize_mass_ratio(cfg: &ScenarioConfig, interval: (f64, f64)) -> Result<OptimizationResult> {
    let (lo, hi) = interval;
    if !(lo <= 0.0 && 0.0 <= hi && lo < hi) {
        return Err(Error::InvalidArgument(format!(
            "search interval [{lo}, {hi}] must contain 0"
        )));
    }
    let step = (hi - lo) / (OPTIMIZER_GRID - 1) as f64;
    let nodes: Vec<f64> = (0..OPTIMIZER_GRID).map(|k| lo + k as f64 * step).collect();
    let values: Vec<f64> = nodes.par_iter().map(|&x| objective(cfg, x)).collect::<Result<_>>()?;
    let grid: Vec<(f64, f64)> = nodes.iter().copied().zip(values.iter().copied()).collect();
    let best = (0..OPTIMIZER_GRID)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("non-empty grid");
    if best == 0 || best == OPTIMIZER_GRID - 1 {
        return Err(Error::OptimizationDiverged { at: nodes[best] });
    }
    let mut evaluations = OPTIMIZER_GRID;
    let (x, fx) = golden_section_fallible(
        |x| {
            evaluations += 1;
            objective(cfg, x)
        },
        nodes[best - 1],
        nodes[best + 1],
        OPTIMIZER_TOLERANCE,
    )?;
    let (delta_alpha, max_delta_d) = if fx <= values[best] { (x, fx) } else { (nodes[best], values[best]) };
    let unadjusted_max_delta_d = match nodes.iter().position(|&x| x == 0.0) {
        Some(k) => values[k],
        None => {
            evaluations += 1;
            objective(cfg, 0.0)?
        }
    };
    Ok(OptimizationResult {
        delta_alpha,
        max_delta_d,
        unadjusted_max_delta_d,
        grid,
        evaluations,
    })
}

/// Version of the JSON report layout.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Summary written next to the time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub schema_version: u32,
    pub config: ScenarioConfig,
    pub delta_min: f64,
    pub stability_horizon: StabilityHorizon,
    pub max_delta_d: f64,
    pub max_delta_c: f64,
    pub delta_alpha: f64,
    pub integrator: IntegratorStats,
}

impl ScenarioReport {
    pub fn new(cfg: &ScenarioConfig, outcome: &ScenarioOutcome) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            config: cfg.clone(),
            delta_min: outcome.report.delta_min,
            stability_horizon: outcome.report.stability_horizon,
            max_delta_d: outcome.report.max_delta_d,
            max_delta_c: outcome.report.max_delta_c,
            delta_alpha: cfg.mass_ratio_offset,
            integrator: outcome.trajectory.stats,
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `t_seconds,tau,delta_C,delta_D`, followed by
/// `x_C,y_C,z_C,x_1,y_1,z_1,...` when `full_state` is set. `tau` is time in
/// units of the Lissajous period.
pub fn write_timeseries_csv<W: Write>(
    mut w: W,
    report: &DeviationReport,
    trajectory: &Trajectory,
    lissajous_period: f64,
    full_state: bool,
) -> io::Result<()> {
    let n = trajectory.params.n_deputies;
    let mut header = String::from("t_seconds,tau,delta_C,delta_D");
    if full_state {
        header.push_str(",x_C,y_C,z_C");
        for i in 1..=n {
            header.push_str(&format!(",x_{i},y_{i},z_{i}"));
        }
    }
    writeln!(w, "{header}")?;
    for (k, s) in trajectory.states.iter().enumerate() {
        let mut line = [s.t, s.t / lissajous_period, report.delta_c[k], report.delta_d[k]]
            .map(num)
            .join(",");
        if full_state {
            for b in std::iter::once(&s.main).chain(&s.deputies) {
                for c in 0..3 {
                    line.push(',');
                    line.push_str(&num(b.position[c]));
                }
            }
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}
