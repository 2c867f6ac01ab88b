//! Nonlinear propagation of the hub-and-spoke system: HCW relative motion of
//! every body plus indicator-gated visco-elastic tether forces.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::SystemParams;

mod dop853;

pub use dop853::{IntegratorConfig, IntegratorStats};

/// Position (m) and velocity (m/s) of one body in the LVLH frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

impl BodyState {
    pub fn new(position: Vector3<f64>, velocity: Vector3<f64>) -> Self {
        Self { position, velocity }
    }

    pub fn at_rest(position: Vector3<f64>) -> Self {
        Self::new(position, Vector3::zeros())
    }
}

/// Time-stamped state of the main satellite and its N deputies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    /// s
    pub t: f64,
    pub main: BodyState,
    pub deputies: Vec<BodyState>,
}

impl SystemState {
    pub fn is_finite(&self) -> bool {
        std::iter::once(&self.main)
            .chain(&self.deputies)
            .all(|b| b.position.iter().chain(b.velocity.iter()).all(|v| v.is_finite()))
            && self.t.is_finite()
    }

    /// Flat layout: main position, main velocity, then each deputy's
    /// position and velocity.
    pub(crate) fn to_flat(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(6 * (self.deputies.len() + 1));
        for b in std::iter::once(&self.main).chain(&self.deputies) {
            y.extend_from_slice(b.position.as_slice());
            y.extend_from_slice(b.velocity.as_slice());
        }
        y
    }

    pub(crate) fn from_flat(t: f64, y: &[f64]) -> Self {
        let body = |k: usize| {
            let o = 6 * k;
            BodyState::new(
                Vector3::new(y[o], y[o + 1], y[o + 2]),
                Vector3::new(y[o + 3], y[o + 4], y[o + 5]),
            )
        };
        let n = y.len() / 6 - 1;
        Self {
            t,
            main: body(0),
            deputies: (1..=n).map(body).collect(),
        }
    }
}

/// Velocity and acceleration of one body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyRate {
    pub velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
}

/// Time derivative of a [`SystemState`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub main: BodyRate,
    pub deputies: Vec<BodyRate>,
}

impl StateDerivative {
    pub fn norm(&self) -> f64 {
        std::iter::once(&self.main)
            .chain(&self.deputies)
            .map(|r| r.velocity.norm_squared() + r.acceleration.norm_squared())
            .sum::<f64>()
            .sqrt()
    }
}

/// Minimum separation, relative to the slack length, below which two bodies
/// are treated as coincident.
pub const COINCIDENCE_TOLERANCE: f64 = 1e-12;

/// Tension force exerted on a deputy by its tether; the main satellite
/// receives the opposite force.
///
/// Zero while the tether is slack (`|r_C - r_i| <= l0`); otherwise
/// `[k (d - l0) + b d'] (r_C - r_i) / d` with `d' ` the radial separation rate.
pub fn tether_tension(
    p: &SystemParams,
    r_main: &Vector3<f64>,
    r_deputy: &Vector3<f64>,
    v_main: &Vector3<f64>,
    v_deputy: &Vector3<f64>,
) -> Result<Vector3<f64>> {
    let rel = r_main - r_deputy;
    let d = rel.norm();
    if d < COINCIDENCE_TOLERANCE * p.slack_length {
        return Err(Error::CoincidentBodies {
            deputy: 0,
            separation: d,
        });
    }
    if d <= p.slack_length {
        return Ok(Vector3::zeros());
    }
    let rate = rel.dot(&(v_main - v_deputy)) / d;
    Ok(rel * ((p.stiffness * (d - p.slack_length) + p.damping * rate) / d))
}

#[inline]
fn hcw_acceleration(w: f64, r: &[f64], v: &[f64]) -> [f64; 3] {
    [
        2.0 * w * v[2],
        -w * w * r[1],
        -2.0 * w * v[0] + 3.0 * w * w * r[2],
    ]
}

/// Flat right-hand side used by the integrator. Writes `dy` in the layout of
/// [`SystemState::to_flat`].
pub(crate) fn rhs_flat(p: &SystemParams, y: &[f64], dy: &mut [f64]) -> Result<()> {
    let w = p.mean_motion;
    let n = y.len() / 6 - 1;
    let (rc, vc) = (&y[0..3], &y[3..6]);
    let mut total = [0.0; 3];
    let inv_md = 1.0 / p.m_deputy;
    for i in 1..=n {
        let o = 6 * i;
        let (ri, vi) = (&y[o..o + 3], &y[o + 3..o + 6]);
        let rel = [rc[0] - ri[0], rc[1] - ri[1], rc[2] - ri[2]];
        let d = (rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2]).sqrt();
        if d < COINCIDENCE_TOLERANCE * p.slack_length {
            return Err(Error::CoincidentBodies {
                deputy: i,
                separation: d,
            });
        }
        let mut f = [0.0; 3];
        if d > p.slack_length {
            let rate = (rel[0] * (vc[0] - vi[0]) + rel[1] * (vc[1] - vi[1]) + rel[2] * (vc[2] - vi[2])) / d;
            let s = (p.stiffness * (d - p.slack_length) + p.damping * rate) / d;
            f = [rel[0] * s, rel[1] * s, rel[2] * s];
        }
        let g = hcw_acceleration(w, ri, vi);
        dy[o..o + 3].copy_from_slice(vi);
        for k in 0..3 {
            dy[o + 3 + k] = g[k] + f[k] * inv_md;
            total[k] += f[k];
        }
    }
    let g = hcw_acceleration(w, rc, vc);
    dy[0..3].copy_from_slice(vc);
    for k in 0..3 {
        dy[3 + k] = g[k] - total[k] / p.m_main;
    }
    Ok(())
}

/// HCW accelerations of every body plus tether forces, with the main
/// satellite receiving the sum of the reactions.
///
/// The out-of-plane equation uses the restoring form `y'' = -w0^2 y + T_y/m`.
pub fn system_derivative(p: &SystemParams, s: &SystemState) -> Result<StateDerivative> {
    if s.deputies.len() != p.n_deputies {
        return Err(Error::SpecMismatch {
            expected: p.n_deputies,
            found: s.deputies.len(),
        });
    }
    let y = s.to_flat();
    let mut dy = vec![0.0; y.len()];
    rhs_flat(p, &y, &mut dy)?;
    let rate = |k: usize| {
        let o = 6 * k;
        BodyRate {
            velocity: Vector3::new(dy[o], dy[o + 1], dy[o + 2]),
            acceleration: Vector3::new(dy[o + 3], dy[o + 4], dy[o + 5]),
        }
    };
    Ok(StateDerivative {
        main: rate(0),
        deputies: (1..=p.n_deputies).map(rate).collect(),
    })
}

/// Dense time series produced by [`integrate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: SystemParams,
    pub states: Vec<SystemState>,
    pub stats: IntegratorStats,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.states.iter().map(|s| s.t)
    }

    pub fn last(&self) -> &SystemState {
        self.states.last().expect("trajectory holds at least the initial state")
    }
}

/// Fastest natural frequency of the linearised tether modes (rad/s), from
/// the stiffer of the deputy-difference and main-relative vertical modes.
pub fn fastest_tether_frequency(p: &SystemParams) -> f64 {
    let m = p.reduced_mass().min(p.m_deputy);
    (p.stiffness / m + 3.0 * p.mean_motion.powi(2)).sqrt()
}

/// Propagates `s0` to `t_end`, recording a state every `cfg.output_stride`
/// seconds (and at `t_end`).
pub fn integrate(
    p: &SystemParams,
    s0: &SystemState,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    crate::system::ensure_valid(p)?;
    if s0.deputies.len() != p.n_deputies {
        return Err(Error::SpecMismatch {
            expected: p.n_deputies,
            found: s0.deputies.len(),
        });
    }
    if !(t_end > s0.t) {
        return Err(Error::InvalidArgument(format!(
            "t_end = {t_end} must exceed the initial time {}",
            s0.t
        )));
    }
    if !(1e-13..=1e-6).contains(&cfg.rtol) {
        return Err(Error::InvalidArgument(format!(
            "tolerance {} outside [1e-13, 1e-6]",
            cfg.rtol
        )));
    }
    if !s0.is_finite() {
        return Err(Error::NonfiniteState { t: s0.t });
    }
    let max_step = cfg.max_step_fraction * 2.0 * std::f64::consts::PI / fastest_tether_frequency(p);
    let y0 = s0.to_flat();
    let n = p.n_deputies + 1;
    let mut scale = vec![0.0; y0.len()];
    for k in 0..n {
        for c in 0..3 {
            scale[6 * k + c] = p.slack_length;
            scale[6 * k + 3 + c] = p.slack_length * p.mean_motion;
        }
    }
    let mut states = vec![s0.clone()];
    let stats = dop853::solve(
        |_, y, dy| rhs_flat(p, y, dy),
        s0.t,
        &y0,
        t_end,
        cfg,
        max_step,
        &scale,
        |t, y| states.push(SystemState::from_flat(t, y)),
    )?;
    Ok(Trajectory {
        params: *p,
        states,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{vertical_equilibrium, GEO_MEAN_MOTION};
    use approx::assert_relative_eq;

    fn params() -> SystemParams {
        SystemParams::from_ratios(3, 8.0, 1000.0, 100.0, 1e4, GEO_MEAN_MOTION)
    }

    fn unit() -> SystemParams {
        SystemParams {
            n_deputies: 2,
            m_main: 1.0,
            m_deputy: 1.0,
            stiffness: 1.0,
            damping: 0.0,
            slack_length: 1.0,
            mean_motion: 1e-3,
        }
    }

    #[test]
    fn tension_is_zero_at_and_below_slack_length() {
        let p = unit();
        let z = Vector3::zeros();
        let at = tether_tension(&p, &z, &Vector3::new(0.0, 0.0, 1.0), &z, &z).unwrap();
        assert_eq!(at, Vector3::zeros());
        let slack = tether_tension(&p, &z, &Vector3::new(0.0, 0.5, 0.0), &z, &z).unwrap();
        assert_eq!(slack, Vector3::zeros());
    }

    #[test]
    fn tension_hand_value() {
        let p = unit();
        let z = Vector3::zeros();
        // Tangential velocity only: zero radial rate.
        let v = Vector3::new(0.3, -0.2, 0.0);
        let f = tether_tension(&p, &z, &Vector3::new(0.0, 0.0, 2.0), &z, &v).unwrap();
        assert_relative_eq!(f, Vector3::new(0.0, 0.0, -1.0), epsilon = 1e-15);
    }

    #[test]
    fn damping_acts_on_radial_rate() {
        let p = unit().with_damping(0.5);
        let z = Vector3::zeros();
        // Deputy receding along +z at 1 m/s: separation grows, rate = +1.
        let f = tether_tension(&p, &z, &Vector3::new(0.0, 0.0, 2.0), &z, &Vector3::new(0.0, 0.0, 1.0))
            .unwrap();
        assert_relative_eq!(f.z, -1.5, epsilon = 1e-15);
    }

    #[test]
    fn coincident_bodies_rejected() {
        let p = unit();
        let z = Vector3::zeros();
        assert!(matches!(
            tether_tension(&p, &z, &z, &z, &z),
            Err(Error::CoincidentBodies { .. })
        ));
    }

    #[test]
    fn tension_is_continuous_across_slack_boundary() {
        let p = unit().with_damping(0.1);
        let z = Vector3::zeros();
        let v = Vector3::new(0.0, 0.0, 0.2);
        let mut prev = f64::INFINITY;
        for k in 1..8 {
            let eps = 10f64.powi(-k);
            let f = tether_tension(&p, &z, &Vector3::new(0.0, 0.0, 1.0 + eps), &z, &v).unwrap();
            let mag = f.norm();
            assert!(mag <= prev);
            prev = mag;
        }
        // With a receding deputy the damping term still vanishes only through
        // the indicator; the elastic part is continuous.
        let p0 = unit();
        let f = tether_tension(&p0, &z, &Vector3::new(0.0, 0.0, 1.0 + 1e-9), &z, &z).unwrap();
        assert!(f.norm() < 1e-8);
    }

    #[test]
    fn slack_along_track_configuration_is_fixed_point() {
        // Along-track offsets are neutral for HCW; tethers far from taut.
        let p = params();
        let s = SystemState {
            t: 0.0,
            main: BodyState::at_rest(Vector3::zeros()),
            deputies: [1.0, -1.0, 2.0]
                .iter()
                .map(|&x| BodyState::at_rest(Vector3::new(x, 0.0, 0.0)))
                .collect(),
        };
        let d = system_derivative(&p, &s).unwrap();
        assert_eq!(d.norm(), 0.0);
    }

    #[test]
    fn equilibrium_has_vanishing_derivative() {
        let p = params();
        let eq = vertical_equilibrium(&p).unwrap();
        let d = system_derivative(&p, &eq.state(&p)).unwrap();
        let scale = 3.0 * p.mean_motion.powi(2) * eq.z_deputy;
        assert!(d.norm() < 1e-10 * scale, "{}", d.norm() / scale);
    }

    #[test]
    fn tether_forces_cancel_in_total() {
        let p = params().with_damping_ratio(0.1);
        let eq = vertical_equilibrium(&p).unwrap();
        let mut s = eq.state(&p);
        s.deputies[0].position += Vector3::new(30.0, -12.0, 4.0);
        s.deputies[1].velocity += Vector3::new(0.01, 0.0, -0.02);
        s.deputies[2].position += Vector3::new(-5.0, 7.0, -1.0);
        s.main.velocity += Vector3::new(0.0, 0.003, 0.001);
        let d = system_derivative(&p, &s).unwrap();
        let w = p.mean_motion;
        let gravity = |b: &BodyState| {
            let g = hcw_acceleration(w, b.position.as_slice(), b.velocity.as_slice());
            Vector3::new(g[0], g[1], g[2])
        };
        let mut net = (d.main.acceleration - gravity(&s.main)) * p.m_main;
        for (rate, body) in d.deputies.iter().zip(&s.deputies) {
            net += (rate.acceleration - gravity(body)) * p.m_deputy;
        }
        assert!(net.norm() < 1e-12 * eq.tension_magnitude * 3.0);
    }
}
