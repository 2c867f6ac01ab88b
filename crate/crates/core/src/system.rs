//! Physical parameters of the N+1 body system, its vertical equilibrium,
//! closed-form stability conditions and the energy of relative motion.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulate::{BodyState, SystemState};

/// Length of the sidereal day (s).
pub const SIDEREAL_DAY_S: f64 = 86164.0905;

/// Mean motion of a geostationary orbit (rad/s).
pub const GEO_MEAN_MOTION: f64 = 2.0 * PI / SIDEREAL_DAY_S;

/// Mean motion of a circular orbit with the given period.
pub fn mean_motion_from_period(period_s: f64) -> f64 {
    2.0 * PI / period_s
}

/// Main satellite of mass `m_main` tethered to `n_deputies` deputies of mass
/// `m_deputy` by identical massless visco-elastic tethers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub n_deputies: usize,
    /// kg
    pub m_main: f64,
    /// kg
    pub m_deputy: f64,
    /// Tether elastic coefficient k (N/m).
    pub stiffness: f64,
    /// Tether damping coefficient b (N s/m).
    pub damping: f64,
    /// Slack tether length l0 (m).
    pub slack_length: f64,
    /// Orbital mean motion w0 (rad/s).
    pub mean_motion: f64,
}

impl SystemParams {
    /// Builds parameters from the dimensionless design quantities: the mass
    /// ratio `N m_D / m_C` and the rigidity `k / (3 w0^2 m_D)`. Damping is zero.
    pub fn from_ratios(
        n_deputies: usize,
        mass_ratio: f64,
        rigidity: f64,
        m_deputy: f64,
        slack_length: f64,
        mean_motion: f64,
    ) -> Self {
        Self {
            n_deputies,
            m_main: n_deputies as f64 * m_deputy / mass_ratio,
            m_deputy,
            stiffness: rigidity * 3.0 * mean_motion * mean_motion * m_deputy,
            damping: 0.0,
            slack_length,
            mean_motion,
        }
    }

    pub fn with_damping(mut self, damping: f64) -> Self {
        self.damping = damping;
        self
    }

    /// Sets `b = 2 zeta sqrt(k m_D)`.
    pub fn with_damping_ratio(mut self, zeta: f64) -> Self {
        self.damping = 2.0 * zeta * (self.stiffness * self.m_deputy).sqrt();
        self
    }

    pub fn damping_ratio(&self) -> f64 {
        self.damping / (2.0 * (self.stiffness * self.m_deputy).sqrt())
    }

    pub fn orbital_period(&self) -> f64 {
        2.0 * PI / self.mean_motion
    }

    pub fn total_mass(&self) -> f64 {
        self.m_main + self.n_deputies as f64 * self.m_deputy
    }

    /// m_r = m_C m_D / (N m_D + m_C).
    pub fn reduced_mass(&self) -> f64 {
        self.m_main * self.m_deputy / self.total_mass()
    }

    /// N m_D / m_C.
    pub fn mass_ratio(&self) -> f64 {
        self.n_deputies as f64 * self.m_deputy / self.m_main
    }

    /// Equilibrium stretch ratio lambda* = 3 w0^2 m_r / k.
    pub fn stretch_ratio(&self) -> f64 {
        3.0 * self.mean_motion.powi(2) * self.reduced_mass() / self.stiffness
    }

    /// k / (3 w0^2 m_D).
    pub fn rigidity(&self) -> f64 {
        self.stiffness / (3.0 * self.mean_motion.powi(2) * self.m_deputy)
    }
}

/// One violated parameter invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamViolation {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Lists every violated invariant, in field declaration order.
pub fn validate_params(p: &SystemParams) -> Vec<ParamViolation> {
    let mut out = Vec::new();
    if p.n_deputies < 2 {
        out.push(ParamViolation {
            field: "n_deputies",
            message: format!("must be >= 2, got {}", p.n_deputies),
        });
    }
    let checks = [
        ("m_main", p.m_main, false),
        ("m_deputy", p.m_deputy, false),
        ("stiffness", p.stiffness, false),
        ("damping", p.damping, true),
        ("slack_length", p.slack_length, false),
        ("mean_motion", p.mean_motion, false),
    ];
    for (field, v, zero_ok) in checks {
        let ok = v.is_finite() && (v > 0.0 || (zero_ok && v == 0.0));
        if !ok {
            let bound = if zero_ok { ">= 0" } else { "> 0" };
            out.push(ParamViolation {
                field,
                message: format!("must be finite and {bound}, got {v}"),
            });
        }
    }
    out
}

/// Fails with [`Error::InvalidParams`] when any invariant is violated.
pub fn ensure_valid(p: &SystemParams) -> Result<()> {
    let v = validate_params(p);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidParams(v))
    }
}

/// Relative equilibrium with every tether at rest along the local vertical.
///
/// Deputies sit at `z_deputy > 0` (towards the Earth), the main satellite at
/// `z_main < 0`, so that the system centre of mass is at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumConfig {
    pub z_main: f64,
    pub z_deputy: f64,
    pub stretched_length: f64,
    pub tension_magnitude: f64,
}

impl EquilibriumConfig {
    /// The equilibrium as a state at `t = 0` with all bodies at rest.
    pub fn state(&self, p: &SystemParams) -> SystemState {
        let deputy = BodyState::at_rest(Vector3::new(0.0, 0.0, self.z_deputy));
        SystemState {
            t: 0.0,
            main: BodyState::at_rest(Vector3::new(0.0, 0.0, self.z_main)),
            deputies: vec![deputy; p.n_deputies],
        }
    }
}

pub fn vertical_equilibrium(p: &SystemParams) -> Result<EquilibriumConfig> {
    let n = p.n_deputies as f64;
    let denominator = (n * p.m_deputy + p.m_main) / p.m_main
        - 3.0 * p.m_deputy * p.mean_motion.powi(2) / p.stiffness;
    if !(denominator > 0.0) {
        return Err(Error::EquilibriumInfeasible { denominator });
    }
    let z_deputy = p.slack_length / denominator;
    let z_main = -(n * p.m_deputy / p.m_main) * z_deputy;
    let stretched_length = z_deputy - z_main;
    Ok(EquilibriumConfig {
        z_main,
        z_deputy,
        stretched_length,
        tension_magnitude: p.stiffness * (stretched_length - p.slack_length),
    })
}

/// The tethers hold the vertical equilibrium: `k > 3 w0^2 m_r`.
pub fn stability_rigid(p: &SystemParams) -> bool {
    p.stiffness > 3.0 * p.mean_motion.powi(2) * p.reduced_mass()
}

/// Deputy relative motion is stable (asymptotically when `b > 0`):
/// `k >= 3 w0^2 m_D`. Implies [`stability_rigid`].
pub fn stability_deputy(p: &SystemParams) -> bool {
    p.stiffness >= 3.0 * p.mean_motion.powi(2) * p.m_deputy
}

fn centre_of_mass(p: &SystemParams, s: &SystemState) -> (Vector3<f64>, Vector3<f64>) {
    let mut r = s.main.position * p.m_main;
    let mut v = s.main.velocity * p.m_main;
    for d in &s.deputies {
        r += d.position * p.m_deputy;
        v += d.velocity * p.m_deputy;
    }
    let m = p.total_mass();
    (r / m, v / m)
}

fn tidal(m: f64, w2: f64, r: &Vector3<f64>) -> f64 {
    0.5 * m * w2 * (r.y * r.y - 3.0 * r.z * r.z)
}

fn elastic(p: &SystemParams, separation: f64) -> f64 {
    if separation > p.slack_length {
        0.5 * p.stiffness * (separation - p.slack_length).powi(2)
    } else {
        0.0
    }
}

/// Potential V of the relative motion: tidal terms plus the elastic energy of
/// every taut tether. Positions are taken relative to their common centre of
/// mass.
pub fn relative_potential(p: &SystemParams, s: &SystemState) -> f64 {
    let (com, _) = centre_of_mass(p, s);
    let w2 = p.mean_motion.powi(2);
    let main = s.main.position - com;
    let mut v = tidal(p.m_main, w2, &main);
    for d in &s.deputies {
        let r = d.position - com;
        v += tidal(p.m_deputy, w2, &r);
        v += elastic(p, (main - r).norm());
    }
    v
}

/// Energy E = T + V of the motion relative to the system centre of mass.
///
/// Conserved when `b = 0` and non-increasing otherwise; its minimum is the
/// vertical equilibrium whenever both stability conditions hold.
pub fn relative_energy(p: &SystemParams, s: &SystemState) -> Result<f64> {
    if s.deputies.len() != p.n_deputies {
        return Err(Error::SpecMismatch {
            expected: p.n_deputies,
            found: s.deputies.len(),
        });
    }
    let (_, vcom) = centre_of_mass(p, s);
    let mut kinetic = 0.5 * p.m_main * (s.main.velocity - vcom).norm_squared();
    for d in &s.deputies {
        kinetic += 0.5 * p.m_deputy * (d.velocity - vcom).norm_squared();
    }
    Ok(kinetic + relative_potential(p, s))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianConfig {
    /// Finite-difference step as a fraction of the stretched tether length.
    pub relative_step: f64,
}

impl Default for HessianConfig {
    fn default() -> Self {
        Self { relative_step: 1e-6 }
    }
}

/// V(equilibrium + displacement) - V(equilibrium), evaluated in displacement
/// form so that the large equilibrium value does not swamp the increments.
/// `u` holds the 3N deputy displacements; the main satellite moves by
/// `-(m_D/m_C) sum(u_i)` so the centre of mass stays at the origin.
fn potential_excess(p: &SystemParams, eq: &EquilibriumConfig, u: &[f64]) -> f64 {
    let w2 = p.mean_motion.powi(2);
    let n = p.n_deputies;
    let mut sum = Vector3::zeros();
    for i in 0..n {
        sum += Vector3::new(u[3 * i], u[3 * i + 1], u[3 * i + 2]);
    }
    let dc = -sum * (p.m_deputy / p.m_main);
    // 1/2 m w0^2 (y^2 - 3 z^2) expanded around (0, 0, z*).
    let tidal_excess =
        |m: f64, z0: f64, d: &Vector3<f64>| 0.5 * m * w2 * (d.y * d.y - 3.0 * (2.0 * z0 * d.z + d.z * d.z));
    let mut v = tidal_excess(p.m_main, eq.z_main, &dc);
    let l = eq.stretched_length;
    let stretch0 = l - p.slack_length;
    for i in 0..n {
        let di = Vector3::new(u[3 * i], u[3 * i + 1], u[3 * i + 2]);
        v += tidal_excess(p.m_deputy, eq.z_deputy, &di);
        // Deputy minus main: (0, 0, l) + rel.
        let rel = di - dc;
        let q = rel.x * rel.x + rel.y * rel.y + rel.z * rel.z + 2.0 * l * rel.z;
        let d = (l * l + q).sqrt();
        let dl = q / (d + l);
        if d > p.slack_length {
            // (s^2 - s0^2)/2 with s = s0 + dl
            v += 0.5 * p.stiffness * dl * (2.0 * stretch0 + dl);
        } else {
            v -= 0.5 * p.stiffness * stretch0 * stretch0;
        }
    }
    v
}

/// 3N x 3N Hessian of V at the vertical equilibrium in the deputy
/// displacement coordinates (centre of mass held fixed), by central
/// differences with step `relative_step * l*`.
pub fn potential_hessian(p: &SystemParams, cfg: HessianConfig) -> Result<DMatrix<f64>> {
    let eq = vertical_equilibrium(p)?;
    let h = cfg.relative_step * eq.stretched_length;
    let dim = 3 * p.n_deputies;
    let mut u = vec![0.0; dim];
    let v0 = potential_excess(p, &eq, &u);
    let mut hess = DMatrix::zeros(dim, dim);
    for a in 0..dim {
        u[a] = h;
        let vp = potential_excess(p, &eq, &u);
        u[a] = -h;
        let vm = potential_excess(p, &eq, &u);
        u[a] = 0.0;
        hess[(a, a)] = (vp - 2.0 * v0 + vm) / (h * h);
        for b in (a + 1)..dim {
            let mut eval = |sa: f64, sb: f64| {
                u[a] = sa * h;
                u[b] = sb * h;
                let v = potential_excess(p, &eq, &u);
                u[a] = 0.0;
                u[b] = 0.0;
                v
            };
            let val = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                / (4.0 * h * h);
            hess[(a, b)] = val;
            hess[(b, a)] = val;
        }
    }
    Ok(hess)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn geo() -> SystemParams {
        SystemParams::from_ratios(5, 8.0, 1000.0, 100.0, 1e4, GEO_MEAN_MOTION)
    }

    #[test]
    fn valid_geo_set_has_no_violations() {
        assert!(validate_params(&geo()).is_empty());
    }

    #[test]
    fn zero_stiffness_is_one_violation() {
        let mut p = geo();
        p.stiffness = 0.0;
        let v = validate_params(&p);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "stiffness");
    }

    #[test]
    fn sign_violations_are_listed_in_order() {
        let mut p = geo();
        p.m_main = -1.0;
        p.damping = -1.0;
        let v = validate_params(&p);
        let fields: Vec<_> = v.iter().map(|x| x.field).collect();
        assert_eq!(fields, ["m_main", "damping"]);
    }

    #[test]
    fn single_deputy_rejected() {
        let mut p = geo();
        p.n_deputies = 1;
        assert_eq!(validate_params(&p)[0].field, "n_deputies");
    }

    #[test]
    fn equilibrium_balances_centre_of_mass() {
        let p = geo();
        let eq = vertical_equilibrium(&p).unwrap();
        let com = p.m_main * eq.z_main + 5.0 * p.m_deputy * eq.z_deputy;
        assert!(com.abs() < 1e-9 * eq.z_deputy);
        assert!(eq.stretched_length > p.slack_length);
        assert_relative_eq!(
            (eq.stretched_length - p.slack_length) / eq.stretched_length,
            p.stretch_ratio(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            eq.tension_magnitude,
            p.stiffness * (eq.stretched_length - p.slack_length),
            max_relative = 1e-15
        );
    }

    #[test]
    fn rigid_limit_recovers_slack_length() {
        let mut p = geo();
        p.stiffness *= 1e12;
        let eq = vertical_equilibrium(&p).unwrap();
        assert_relative_eq!(eq.stretched_length, p.slack_length, max_relative = 1e-9);
        let expected = p.slack_length * p.m_main / (5.0 * p.m_deputy + p.m_main);
        assert_relative_eq!(eq.z_deputy, expected, max_relative = 1e-9);
    }

    #[test]
    fn infeasible_equilibrium_is_reported() {
        let mut p = geo();
        p.stiffness = 0.5 * 3.0 * p.mean_motion.powi(2) * p.reduced_mass();
        assert!(matches!(
            vertical_equilibrium(&p),
            Err(Error::EquilibriumInfeasible { .. })
        ));
    }

    #[test]
    fn rigid_threshold_is_strict() {
        let mut p = geo();
        let threshold = 3.0 * p.mean_motion.powi(2) * p.reduced_mass();
        p.stiffness = 10.0 * threshold;
        assert!(stability_rigid(&p));
        p.stiffness = threshold;
        assert!(!stability_rigid(&p));
    }

    #[test]
    fn deputy_threshold_is_inclusive() {
        let mut p = geo();
        p.stiffness = 3.0 * p.mean_motion.powi(2) * p.m_deputy;
        assert!(stability_deputy(&p));
        p.stiffness *= 0.5;
        assert!(!stability_deputy(&p));
    }

    #[test]
    fn damping_ratio_round_trips() {
        let p = geo().with_damping_ratio(0.05);
        assert_relative_eq!(p.damping_ratio(), 0.05, max_relative = 1e-14);
    }

    #[test]
    fn energy_is_minimal_at_equilibrium() {
        let p = geo();
        let eq = vertical_equilibrium(&p).unwrap();
        let s = eq.state(&p);
        let e0 = relative_energy(&p, &s).unwrap();
        assert_relative_eq!(e0, relative_potential(&p, &s), max_relative = 1e-15);
        for (body, axis) in [(0usize, 0usize), (1, 1), (2, 2), (0, 2), (3, 0)] {
            let mut s1 = s.clone();
            s1.deputies[body].position[axis] += 1.0;
            assert!(relative_energy(&p, &s1).unwrap() > e0);
        }
        let mut s2 = s.clone();
        s2.main.velocity.x = 1e-3;
        assert!(relative_energy(&p, &s2).unwrap() > e0);
    }

    #[test]
    fn hessian_excess_matches_direct_potential() {
        let p = geo();
        let eq = vertical_equilibrium(&p).unwrap();
        let mut s = eq.state(&p);
        let mut u = vec![0.0; 15];
        u[0] = 3.0;
        u[4] = -2.0;
        u[8] = 1.5;
        u[14] = 0.7;
        let mut sum = Vector3::zeros();
        for i in 0..5 {
            let d = Vector3::new(u[3 * i], u[3 * i + 1], u[3 * i + 2]);
            s.deputies[i].position += d;
            sum += d;
        }
        s.main.position -= sum * (p.m_deputy / p.m_main);
        let direct = relative_potential(&p, &s) - relative_potential(&p, &eq.state(&p));
        let excess = potential_excess(&p, &eq, &u);
        assert_relative_eq!(direct, excess, max_relative = 1e-6);
    }

    #[test]
    fn hessian_is_symmetric_under_deputy_exchange() {
        let p = SystemParams::from_ratios(2, 8.0, 500.0, 10.0, 1e4, GEO_MEAN_MOTION);
        let h = potential_hessian(&p, HessianConfig::default()).unwrap();
        let scale = h.amax();
        for a in 0..3 {
            for b in 0..3 {
                assert!((h[(a, b)] - h[(3 + a, 3 + b)]).abs() < 1e-6 * scale);
                assert!((h[(a, 3 + b)] - h[(3 + a, b)]).abs() < 1e-6 * scale);
            }
        }
    }
}
