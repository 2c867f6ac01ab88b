//! JSON configuration: schema, `--set` overrides and conversion into library
//! types. Physical keys carry their unit in the name.

use std::fmt;
use std::path::Path;

use hubspoke::formation::{mass_ratio_for, FormationKind, FormationSpec, Phase};
use hubspoke::harness::{ReferenceMode, ScenarioConfig};
use hubspoke::simulate::IntegratorConfig;
use hubspoke::system::{mean_motion_from_period, SystemParams, GEO_MEAN_MOTION};
use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config-invalid: {}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    #[serde(default)]
    pub formation: FormationSection,
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub optimize: OptimizeSection,
    #[serde(default)]
    pub design: DesignSection,
    #[serde(default)]
    pub check: CheckSection,
    #[serde(default)]
    pub trace: TraceSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            formation: Default::default(),
            system: Default::default(),
            simulation: Default::default(),
            optimize: Default::default(),
            design: Default::default(),
            check: Default::default(),
            trace: Default::default(),
        }
    }
}

/// Without explicit phases, `phi_y = 0` and `phi_x = pi phi0 / q` with
/// `phi0 = 1/4` for Type I and `1/2` for Type II.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FormationSection {
    pub kind: FormationKind,
    pub p: u32,
    pub q: u32,
    pub n_deputies: usize,
    pub phase_x_deg: Option<f64>,
    pub phase_y_deg: Option<f64>,
}

impl Default for FormationSection {
    fn default() -> Self {
        Self {
            kind: FormationKind::TypeI,
            p: 1,
            q: 2,
            n_deputies: 3,
            phase_x_deg: None,
            phase_y_deg: None,
        }
    }
}

/// `m_main_kg` overrides the mass ratio implied by `(p, q)` and
/// `mass_ratio_offset`; `stiffness_n_m` overrides `rigidity`;
/// `damping_ratio` overrides `damping_n_s_m`; `orbital_period_s` overrides
/// `omega0_rad_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub m_deputy_kg: f64,
    pub m_main_kg: Option<f64>,
    pub mass_ratio_offset: f64,
    pub l0_m: f64,
    pub omega0_rad_s: f64,
    pub orbital_period_s: Option<f64>,
    pub rigidity: f64,
    pub stiffness_n_m: Option<f64>,
    pub damping_n_s_m: f64,
    pub damping_ratio: Option<f64>,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            m_deputy_kg: 100.0,
            m_main_kg: None,
            mass_ratio_offset: 0.0,
            l0_m: 1e4,
            omega0_rad_s: GEO_MEAN_MOTION,
            orbital_period_s: None,
            rigidity: 1000.0,
            stiffness_n_m: None,
            damping_n_s_m: 0.0,
            damping_ratio: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationSection {
    pub kappa_deg: f64,
    pub duration_orbits: f64,
    pub rtol: f64,
    pub samples_per_orbit: f64,
    pub max_step_fraction: f64,
    pub reference: ReferenceMode,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            kappa_deg: 1.0,
            duration_orbits: 10.0,
            rtol: 1e-10,
            samples_per_orbit: 200.0,
            max_step_fraction: 0.05,
            reference: ReferenceMode::Nominal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeSection {
    /// Deputy count of the tuned formation; `null` keeps `formation.n_deputies`.
    pub n_deputies: Option<usize>,
    pub kappa_deg: Vec<f64>,
    pub offset_min: f64,
    pub offset_max: f64,
}

impl Default for OptimizeSection {
    fn default() -> Self {
        Self {
            n_deputies: Some(5),
            kappa_deg: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
            offset_min: -0.05,
            offset_max: 0.45,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignSection {
    pub n_max: usize,
    /// Points of the uniform `phi0` grid used for the separation scan.
    pub phase_grid: i64,
    /// Largest `N` included in the separation scan.
    pub scan_n_max: usize,
    pub scan_samples: usize,
}

impl Default for DesignSection {
    fn default() -> Self {
        Self {
            n_max: 11,
            phase_grid: 24,
            scan_n_max: 5,
            scan_samples: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckSection {
    /// Whether condition C (no deputy crosses the centre) is required.
    pub require_center_free: bool,
}

impl Default for CheckSection {
    fn default() -> Self {
        Self {
            require_center_free: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceSection {
    pub samples: usize,
    pub kappa_deg: Option<f64>,
}

impl Default for TraceSection {
    fn default() -> Self {
        Self {
            samples: 1000,
            kappa_deg: None,
        }
    }
}

/// Reads the file (or starts from defaults), applies the overrides and
/// validates the schema.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Config, ConfigError> {
    let mut value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str::<Value>(&text)
                .map_err(|e| ConfigError(format!("{}: {e}", p.display())))?
        }
        None => serde_json::to_value(Config::default()).expect("default config serialises"),
    };
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    let cfg: Config = serde_json::from_value(value).map_err(|e| ConfigError(e.to_string()))?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(ConfigError(format!(
            "schema_version {} is not supported (expected {SCHEMA_VERSION})",
            cfg.schema_version
        )));
    }
    Ok(cfg)
}

/// Applies `dotted.key=value`. The value is parsed as JSON when possible and
/// taken as a string otherwise. Keys are checked against the schema when the
/// result is deserialised.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError(format!("override {assignment:?} is not of the form key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError(format!("malformed key {key:?}")));
    }
    let parsed = serde_json::from_str::<Value>(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().into()));
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| ConfigError(format!("key {key:?}: {part:?} is not inside an object")))?;
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    let obj = node
        .as_object_mut()
        .ok_or_else(|| ConfigError(format!("key {key:?} does not name an object field")))?;
    obj.insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}

fn err<E: fmt::Display>(e: E) -> ConfigError {
    ConfigError(e.to_string())
}

impl Config {
    pub fn mean_motion(&self) -> f64 {
        match self.system.orbital_period_s {
            Some(t) => mean_motion_from_period(t),
            None => self.system.omega0_rad_s,
        }
    }

    /// Formation with unit amplitudes.
    pub fn formation_spec(&self, amplitude: f64) -> Result<FormationSpec, ConfigError> {
        let f = &self.formation;
        let (phase_x, phase_y) = match (f.phase_x_deg, f.phase_y_deg) {
            (None, None) => {
                let phi0 = match f.kind {
                    FormationKind::TypeI => Rational64::new(1, 4),
                    FormationKind::TypeII => Rational64::new(1, 2),
                };
                let fx = phi0 / Rational64::from_integer(f.q.max(1) as i64);
                (Phase::pi_fraction(*fx.numer(), *fx.denom()), Phase::zero())
            }
            (x, y) => (Phase::degrees(x.unwrap_or(0.0)), Phase::degrees(y.unwrap_or(0.0))),
        };
        FormationSpec::new(f.kind, f.p, f.q, f.n_deputies, amplitude, amplitude, phase_x, phase_y).map_err(err)
    }

    /// Mass ratio used for the system, honouring `m_main_kg`.
    fn mass_ratio(&self) -> Result<f64, ConfigError> {
        let s = &self.system;
        match s.m_main_kg {
            Some(m) => Ok(self.formation.n_deputies as f64 * s.m_deputy_kg / m),
            None => {
                let alpha = mass_ratio_for(self.formation.p, self.formation.q).map_err(err)?;
                Ok(*alpha.numer() as f64 / *alpha.denom() as f64 - s.mass_ratio_offset)
            }
        }
    }

    /// Physical parameters without validation.
    pub fn system_params(&self) -> Result<SystemParams, ConfigError> {
        let s = &self.system;
        let w = self.mean_motion();
        let n = self.formation.n_deputies;
        let stiffness = s
            .stiffness_n_m
            .unwrap_or(s.rigidity * 3.0 * w * w * s.m_deputy_kg);
        let m_main = match s.m_main_kg {
            Some(m) => m,
            None => n as f64 * s.m_deputy_kg / self.mass_ratio()?,
        };
        let p = SystemParams {
            n_deputies: n,
            m_main,
            m_deputy: s.m_deputy_kg,
            stiffness,
            damping: s.damping_n_s_m,
            slack_length: s.l0_m,
            mean_motion: w,
        };
        Ok(match s.damping_ratio {
            Some(z) => p.with_damping_ratio(z),
            None => p,
        })
    }

    pub fn scenario(&self) -> Result<ScenarioConfig, ConfigError> {
        let params = self.system_params()?;
        let spec = self.formation_spec(1.0)?;
        let nominal = mass_ratio_for(spec.p, spec.q).map_err(err)?;
        let nominal = *nominal.numer() as f64 / *nominal.denom() as f64;
        let sim = &self.simulation;
        if !(sim.samples_per_orbit > 0.0) {
            return Err(ConfigError("simulation.samples_per_orbit must be positive".into()));
        }
        let cfg = ScenarioConfig {
            params,
            spec,
            kappa_deg: sim.kappa_deg,
            rigidity_dimensionless: params.rigidity(),
            duration_orbits: sim.duration_orbits,
            mass_ratio_offset: nominal - params.mass_ratio(),
            integrator: IntegratorConfig {
                rtol: sim.rtol,
                output_stride: params.orbital_period() / sim.samples_per_orbit,
                max_step_fraction: sim.max_step_fraction,
                ..IntegratorConfig::default()
            },
            reference: sim.reference,
        };
        cfg.validate().map_err(err)?;
        Ok(cfg)
    }
}
