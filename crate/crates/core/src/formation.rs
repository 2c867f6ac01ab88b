//! Lissajous formations of Types I and II.
//!
//! Deputies move in the `xy` plane along
//! `x = x0 sin(2 pi p tau + ...)`, `y = y0 sin(2 pi q tau + ...)` with
//! non-dimensional time `tau = t / T_L`. Type I places all deputies on one
//! curve, shifted in time by `1/N`; Type II shifts the phase of each
//! deputy's curve by `2 pi i / N`.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindyn::mode_frequencies;
use crate::search::golden_section;
use crate::simulate::{BodyState, SystemState};
use crate::system::{EquilibriumConfig, SystemParams};

/// Absolute tolerance on fractional parts in the admissibility arithmetic.
pub const EPS_INT: f64 = 1e-9;

/// Separations below `EPS_COL` times the amplitude count as collisions.
pub const EPS_COL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FormationKind {
    #[serde(rename = "type-i")]
    TypeI,
    #[serde(rename = "type-ii")]
    TypeII,
}

/// An angle in radians, optionally known exactly as a rational multiple of
/// pi (`num/den`), in which case the admissibility tests run in exact
/// arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub radians: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi_fraction: Option<(i64, i64)>,
}

impl Phase {
    pub fn zero() -> Self {
        Self::pi_fraction(0, 1)
    }

    pub fn radians(radians: f64) -> Self {
        Self {
            radians,
            pi_fraction: None,
        }
    }

    /// `num/den * pi`.
    pub fn pi_fraction(num: i64, den: i64) -> Self {
        let r = Rational64::new(num, den);
        Self {
            radians: PI * (*r.numer() as f64) / (*r.denom() as f64),
            pi_fraction: Some((*r.numer(), *r.denom())),
        }
    }

    /// Degrees given to at most six decimals are kept exact.
    pub fn degrees(deg: f64) -> Self {
        let micro = deg * 1e6;
        if micro.abs() < 1e15 && (micro - micro.round()).abs() < 1e-6 {
            Self::pi_fraction(micro.round() as i64, 180_000_000)
        } else {
            Self::radians(deg.to_radians())
        }
    }

    pub fn to_degrees(self) -> f64 {
        self.radians.to_degrees()
    }

    fn exact(self) -> Option<Rational64> {
        self.pi_fraction.map(|(n, d)| Rational64::new(n, d))
    }
}

/// A Type I or Type II Lissajous formation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormationSpec {
    pub kind: FormationKind,
    pub p: u32,
    pub q: u32,
    pub n_deputies: usize,
    /// x0 (m)
    pub amp_x: f64,
    /// y0 (m)
    pub amp_y: f64,
    pub phase_x: Phase,
    pub phase_y: Phase,
}

impl FormationSpec {
    /// Validated constructor: `gcd(p, q) = 1`, `p/q < sqrt(3)/2`, positive
    /// amplitudes and at least two deputies.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        kind: FormationKind,
        p: u32,
        q: u32,
        n_deputies: usize,
        amp_x: f64,
        amp_y: f64,
        phase_x: Phase,
        phase_y: Phase,
    ) -> Result<Self> {
        let spec = Self::diagnostic(kind, p, q, n_deputies, amp_x, amp_y, phase_x, phase_y)?;
        if p.gcd(&q) != 1 {
            return Err(Error::InvalidSpec(format!("p = {p} and q = {q} are not coprime")));
        }
        if !ratio_feasible(p, q) {
            return Err(Error::RatioInfeasible { p, q });
        }
        Ok(spec)
    }

    /// Constructor that skips the frequency-ratio constraints, for
    /// diagnostic curves such as the circle `p = q = 1`.
    #[allow(clippy::too_many_arguments)]
    pub fn diagnostic(
        kind: FormationKind,
        p: u32,
        q: u32,
        n_deputies: usize,
        amp_x: f64,
        amp_y: f64,
        phase_x: Phase,
        phase_y: Phase,
    ) -> Result<Self> {
        if p == 0 || q == 0 {
            return Err(Error::InvalidSpec("p and q must be positive".into()));
        }
        if n_deputies < 2 {
            return Err(Error::InvalidSpec(format!("need at least 2 deputies, got {n_deputies}")));
        }
        if !(amp_x > 0.0 && amp_y > 0.0 && amp_x.is_finite() && amp_y.is_finite()) {
            return Err(Error::InvalidSpec("amplitudes must be positive and finite".into()));
        }
        if !(phase_x.radians.is_finite() && phase_y.radians.is_finite()) {
            return Err(Error::InvalidSpec("phases must be finite".into()));
        }
        Ok(Self {
            kind,
            p,
            q,
            n_deputies,
            amp_x,
            amp_y,
            phase_x,
            phase_y,
        })
    }

    /// Equal amplitudes `a` with `phi_x = pi phi0 / q` and `phi_y = 0`.
    pub fn with_phi0(kind: FormationKind, p: u32, q: u32, n: usize, a: f64, phi0: Rational64) -> Result<Self> {
        let fx = phi0 / Rational64::from_integer(q as i64);
        Self::new(
            kind,
            p,
            q,
            n,
            a,
            a,
            Phase::pi_fraction(*fx.numer(), *fx.denom()),
            Phase::zero(),
        )
    }

    /// `phi0 = (q phi_x - p phi_y) / pi`.
    pub fn phi0(&self) -> f64 {
        if let Some(r) = self.phi0_exact() {
            return r.to_f64().unwrap_or(f64::NAN);
        }
        (self.q as f64 * self.phase_x.radians - self.p as f64 * self.phase_y.radians) / PI
    }

    pub fn phi0_exact(&self) -> Option<Rational64> {
        let (fx, fy) = (self.phase_x.exact()?, self.phase_y.exact()?);
        Some(fx * self.q as i64 - fy * self.p as i64)
    }

    /// Arguments of the sines for deputy `i` (1-based) at time `tau`.
    fn arguments(&self, i: usize, tau: f64) -> (f64, f64) {
        let (p, q) = (self.p as f64, self.q as f64);
        let s = i as f64 / self.n_deputies as f64;
        match self.kind {
            FormationKind::TypeI => (
                2.0 * PI * p * (tau + s) + self.phase_x.radians,
                2.0 * PI * q * (tau + s) + self.phase_y.radians,
            ),
            FormationKind::TypeII => (
                2.0 * PI * (p * tau + s) + self.phase_x.radians,
                2.0 * PI * (q * tau + s) + self.phase_y.radians,
            ),
        }
    }

    /// Velocity scale of the theoretical motion, `2 pi sqrt(p^2 x0^2 + q^2 y0^2)`
    /// per unit `tau`. Bounds the speed of every deputy.
    fn speed_bound(&self) -> f64 {
        2.0 * PI * ((self.p as f64 * self.amp_x).powi(2) + (self.q as f64 * self.amp_y).powi(2)).sqrt()
    }
}

/// `4 p^2 < 3 q^2`.
pub fn ratio_feasible(p: u32, q: u32) -> bool {
    4 * (p as u64).pow(2) < 3 * (q as u64).pow(2)
}

/// Required mass ratio `N m_D / m_C = 3 q^2 / p^2 - 4`.
pub fn mass_ratio_for(p: u32, q: u32) -> Result<Rational64> {
    if p == 0 || q == 0 || !ratio_feasible(p, q) {
        return Err(Error::RatioInfeasible { p, q });
    }
    let (p, q) = (p as i64, q as i64);
    Ok(Rational64::new(3 * q * q, p * p) - 4)
}

/// Position `(x, y)` (m) of deputy `i` in `1..=N` at time `tau`.
pub fn deputy_position(spec: &FormationSpec, i: usize, tau: f64) -> (f64, f64) {
    let (ax, ay) = spec.arguments(i, tau);
    (spec.amp_x * ax.sin(), spec.amp_y * ay.sin())
}

/// Derivative of [`deputy_position`] with respect to `tau` (m).
pub fn deputy_rate(spec: &FormationSpec, i: usize, tau: f64) -> (f64, f64) {
    let (ax, ay) = spec.arguments(i, tau);
    let (p, q) = (spec.p as f64, spec.q as f64);
    (
        2.0 * PI * p * spec.amp_x * ax.cos(),
        2.0 * PI * q * spec.amp_y * ay.cos(),
    )
}

/// Angular frequencies used to turn the curves into motion in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFrequencies {
    pub omega_x: f64,
    pub omega_y: f64,
}

impl ReferenceFrequencies {
    /// The commensurate pair `w_x = p w0 / sqrt(q^2 - p^2)`,
    /// `w_y = q w0 / sqrt(q^2 - p^2)` produced by the nominal mass ratio.
    pub fn nominal(p: u32, q: u32, mean_motion: f64) -> Self {
        let s = ((q * q - p * p) as f64).sqrt();
        Self {
            omega_x: p as f64 * mean_motion / s,
            omega_y: q as f64 * mean_motion / s,
        }
    }

    /// Linear frequencies of the actual parameters (exact `A1` spectrum and
    /// out-of-plane formula).
    pub fn exact(params: &SystemParams) -> Result<Self> {
        let m = mode_frequencies(params)?;
        Ok(Self {
            omega_x: m.omega_x,
            omega_y: m.omega_y,
        })
    }

    /// Lissajous period `T_L = 2 pi p / w_x` (s).
    pub fn lissajous_period(&self, p: u32) -> f64 {
        2.0 * PI * p as f64 / self.omega_x
    }
}

/// Theoretical planar position and velocity of deputy `i` at time `t` (s),
/// `x = x0 sin(w_x t + theta_x,i)` and likewise for `y`.
pub fn theoretical_state(
    spec: &FormationSpec,
    freqs: &ReferenceFrequencies,
    i: usize,
    t: f64,
) -> ((f64, f64), (f64, f64)) {
    let (tx, ty) = spec.arguments(i, 0.0);
    let (ax, ay) = (freqs.omega_x * t + tx, freqs.omega_y * t + ty);
    (
        (spec.amp_x * ax.sin(), spec.amp_y * ay.sin()),
        (
            spec.amp_x * freqs.omega_x * ax.cos(),
            spec.amp_y * freqs.omega_y * ay.cos(),
        ),
    )
}

/// Verdicts of the three formation conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    /// Condition A: tether forces on the main satellite cancel.
    pub balanced: bool,
    /// Condition B: deputies never collide.
    pub collision_free: bool,
    /// Condition C: no deputy passes through the centre.
    pub center_free: bool,
}

impl AdmissibilityReport {
    pub fn all(&self) -> bool {
        self.balanced && self.collision_free && self.center_free
    }
}

/// A number that is exact when the phases are rational multiples of pi.
#[derive(Clone, Copy)]
enum Num {
    Exact(Rational64),
    Float(f64),
}

impl Num {
    fn is_integer(self) -> bool {
        match self {
            Num::Exact(r) => r.is_integer(),
            Num::Float(x) => (x - x.round()).abs() < EPS_INT,
        }
    }

    fn add(self, r: Rational64) -> Self {
        match self {
            Num::Exact(a) => Num::Exact(a + r),
            Num::Float(x) => Num::Float(x + r.to_f64().unwrap_or(f64::NAN)),
        }
    }

    fn scale(self, num: i64, den: i64) -> Self {
        match self {
            Num::Exact(a) => Num::Exact(a * Rational64::new(num, den)),
            Num::Float(x) => Num::Float(x * num as f64 / den as f64),
        }
    }
}

/// Closed-form admissibility arithmetic for conditions A, B and C.
pub fn admissibility(spec: &FormationSpec) -> AdmissibilityReport {
    let n = spec.n_deputies as i64;
    let (p, q) = (spec.p as i64, spec.q as i64);
    let phi0 = match spec.phi0_exact() {
        Some(r) => Num::Exact(r),
        None => Num::Float(spec.phi0()),
    };
    let shifted = phi0.add(Rational64::new(p - q, 2));
    let diff = (q - p).abs();
    match spec.kind {
        FormationKind::TypeI => AdmissibilityReport {
            balanced: p % n != 0 && q % n != 0,
            collision_free: !shifted.is_integer() && n.gcd(&p) == 1 && n.gcd(&q) == 1,
            center_free: !phi0.is_integer(),
        },
        FormationKind::TypeII => {
            let collision_free = if n == 2 {
                !phi0.is_integer()
            } else {
                !shifted.scale(n, n.gcd(&diff)).is_integer()
            };
            AdmissibilityReport {
                balanced: true,
                collision_free,
                center_free: !phi0.scale(n, n.gcd(&(2 * diff))).is_integer(),
            }
        }
    }
}

/// Smallest planar distance between any two deputies over a uniform grid of
/// `samples` points in `tau` (m).
pub fn collision_oracle(spec: &FormationSpec, samples: usize) -> f64 {
    let n = spec.n_deputies;
    (0..samples)
        .into_par_iter()
        .fold(
            || (Vec::with_capacity(n), f64::INFINITY),
            |(mut buf, best): (Vec<(f64, f64)>, f64), k| {
                let tau = k as f64 / samples as f64;
                buf.clear();
                buf.extend((1..=n).map(|i| deputy_position(spec, i, tau)));
                let mut m = best;
                for a in 0..n {
                    for b in a + 1..n {
                        m = m.min((buf[a].0 - buf[b].0).hypot(buf[a].1 - buf[b].1));
                    }
                }
                (buf, m)
            },
        )
        .map(|(_, m)| m)
        .reduce(|| f64::INFINITY, f64::min)
}

/// Smallest distance of any deputy from the origin over a uniform grid (m).
pub fn origin_oracle(spec: &FormationSpec, samples: usize) -> f64 {
    (0..samples)
        .into_par_iter()
        .map(|k| {
            let tau = k as f64 / samples as f64;
            (1..=spec.n_deputies)
                .map(|i| {
                    let (x, y) = deputy_position(spec, i, tau);
                    x.hypot(y)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// Grid verdicts with a certified resolution: a grid floor above the
/// Lipschitz bound `L h / 2` proves separation, a floor below it is
/// reported as contact. The grid is chosen so that this bound is at most
/// `resolution` times the smaller amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleVerdict {
    pub floor: f64,
    pub bound: f64,
    pub samples: usize,
    pub separated: bool,
}

fn certified<F: Fn(&FormationSpec, usize) -> f64>(
    spec: &FormationSpec,
    lipschitz: f64,
    resolution: f64,
    oracle: F,
) -> OracleVerdict {
    let a = spec.amp_x.min(spec.amp_y);
    let samples = ((lipschitz / (2.0 * resolution * a)).ceil() as usize).max(1000);
    let bound = lipschitz / (2.0 * samples as f64);
    let floor = oracle(spec, samples);
    OracleVerdict {
        floor,
        bound,
        samples,
        separated: floor > bound,
    }
}

/// Geometric check of condition B.
pub fn collision_verdict(spec: &FormationSpec, resolution: f64) -> OracleVerdict {
    certified(spec, 2.0 * spec.speed_bound(), resolution, collision_oracle)
}

/// Geometric check of condition C.
pub fn center_verdict(spec: &FormationSpec, resolution: f64) -> OracleVerdict {
    certified(spec, spec.speed_bound(), resolution, origin_oracle)
}

/// Default grid size for [`min_separation`].
pub const SEPARATION_SAMPLES: usize = 1 << 14;

/// Minimal planar separation between different deputies divided by `a`.
/// Every local grid minimum of every pair is refined by golden-section
/// search within one grid cell to `1e-12` in `tau`.
pub fn min_separation(spec: &FormationSpec, a: f64, samples: usize) -> Result<f64> {
    if !(a > 0.0) || samples < 3 {
        return Err(Error::InvalidArgument("need a > 0 and at least 3 samples".into()));
    }
    let n = spec.n_deputies;
    let pairs: Vec<(usize, usize)> = (1..=n).flat_map(|i| (i + 1..=n).map(move |j| (i, j))).collect();
    let h = 1.0 / samples as f64;
    let dist = |i: usize, j: usize, tau: f64| {
        let (xi, yi) = deputy_position(spec, i, tau);
        let (xj, yj) = deputy_position(spec, j, tau);
        (xi - xj).hypot(yi - yj)
    };
    let best = pairs
        .par_iter()
        .map(|&(i, j)| {
            let d: Vec<f64> = (0..samples).map(|k| dist(i, j, k as f64 * h)).collect();
            let mut best = f64::INFINITY;
            for k in 0..samples {
                let prev = d[(k + samples - 1) % samples];
                let next = d[(k + 1) % samples];
                if d[k] <= prev && d[k] <= next {
                    let t = k as f64 * h;
                    let (_, v) = golden_section(|s| dist(i, j, s), t - h, t + h, 1e-12);
                    best = best.min(v.min(d[k]));
                }
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min);
    if best < EPS_COL * a {
        return Err(Error::CollidingFormation { separation: best });
    }
    Ok(best / a)
}

/// `delta_min` for `phi0` values on a grid; colliding phases give `None`.
pub fn phase_scan(
    kind: FormationKind,
    p: u32,
    q: u32,
    n: usize,
    phi0: &[Rational64],
    samples: usize,
) -> Result<Vec<(Rational64, Option<f64>)>> {
    phi0.par_iter()
        .map(|&f| {
            let spec = FormationSpec::with_phi0(kind, p, q, n, 1.0, f)?;
            match min_separation(&spec, 1.0, samples) {
                Ok(d) => Ok((f, Some(d))),
                Err(Error::CollidingFormation { .. }) => Ok((f, None)),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Options for [`synthesize_initial_state_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisOptions {
    /// Frequencies that set the initial velocities; nominal when `None`.
    pub frequencies: Option<ReferenceFrequencies>,
    /// Largest accepted `|N m_D / m_C - (3 q^2 / p^2 - 4)|`.
    pub max_ratio_offset: f64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            frequencies: None,
            max_ratio_offset: 0.5,
        }
    }
}

/// Initial state at `t = 0` realising the formation with default options.
pub fn synthesize_initial_state(
    params: &SystemParams,
    spec: &FormationSpec,
    eq: &EquilibriumConfig,
) -> Result<SystemState> {
    synthesize_initial_state_with(params, spec, eq, SynthesisOptions::default())
}

/// Places the deputies on their curves with the theoretical planar
/// velocities and taut tethers of length `l*`. The main satellite starts at
/// rest in the plane, and its height is chosen so that the system centre of
/// mass is at the origin with zero velocity.
pub fn synthesize_initial_state_with(
    params: &SystemParams,
    spec: &FormationSpec,
    eq: &EquilibriumConfig,
    opts: SynthesisOptions,
) -> Result<SystemState> {
    if params.n_deputies != spec.n_deputies {
        return Err(Error::SpecMismatch {
            expected: spec.n_deputies,
            found: params.n_deputies,
        });
    }
    let nominal = mass_ratio_for(spec.p, spec.q)?.to_f64().unwrap_or(f64::NAN);
    let actual = params.mass_ratio();
    if (actual - nominal).abs() > opts.max_ratio_offset {
        return Err(Error::MassRatioMismatch {
            actual,
            nominal,
            allowed: opts.max_ratio_offset,
        });
    }
    if !admissibility(spec).collision_free {
        return Err(Error::CollidingFormation { separation: 0.0 });
    }
    let freqs = opts
        .frequencies
        .unwrap_or_else(|| ReferenceFrequencies::nominal(spec.p, spec.q, params.mean_motion));
    let l = eq.stretched_length;
    let mut planar = Vec::with_capacity(spec.n_deputies);
    let mut h = Vec::with_capacity(spec.n_deputies);
    let mut h_dot = Vec::with_capacity(spec.n_deputies);
    for i in 1..=spec.n_deputies {
        let ((x, y), (vx, vy)) = theoretical_state(spec, &freqs, i, 0.0);
        let rho2 = x * x + y * y;
        if rho2 >= l * l {
            return Err(Error::AmplitudeTooLarge {
                deputy: i,
                offset: rho2.sqrt(),
                length: l,
            });
        }
        let hi = (l * l - rho2).sqrt();
        planar.push((x, y, vx, vy));
        h.push(hi);
        h_dot.push(-(x * vx + y * vy) / hi);
    }
    let md = params.m_deputy;
    let total = params.total_mass();
    let z_main = -md * h.iter().sum::<f64>() / total;
    let vz_main = -md * h_dot.iter().sum::<f64>() / total;
    let deputies = planar
        .iter()
        .zip(h.iter().zip(&h_dot))
        .map(|(&(x, y, vx, vy), (&hi, &hdi))| {
            BodyState::new(Vector3::new(x, y, z_main + hi), Vector3::new(vx, vy, vz_main + hdi))
        })
        .collect();
    Ok(SystemState {
        t: 0.0,
        main: BodyState::new(Vector3::new(0.0, 0.0, z_main), Vector3::new(0.0, 0.0, vz_main)),
        deputies,
    })
}

/// One row of the design table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRow {
    pub p: u32,
    pub q: u32,
    /// `N m_D / m_C` as `"num/den"` or an integer.
    pub mass_ratio: String,
    /// `N <= n_max` admitting a Type I formation satisfying A, B and C for
    /// suitable phases, i.e. `N` coprime with both `p` and `q`.
    pub type_i_n: Vec<usize>,
}

/// All coprime `(p, q)` with `p/q < sqrt(3)/2` inside the bounds, ordered by
/// `q` then `p`. Type II formations exist for every `N`.
pub fn enumerate_designs(p_max: u32, q_max: u32, n_max: usize) -> Vec<DesignRow> {
    let mut rows = Vec::new();
    for q in 1..=q_max {
        for p in 1..=p_max.min(q) {
            if p.gcd(&q) != 1 || !ratio_feasible(p, q) {
                continue;
            }
            let ratio = mass_ratio_for(p, q).expect("feasible ratio");
            rows.push(DesignRow {
                p,
                q,
                mass_ratio: ratio.to_string(),
                type_i_n: (2..=n_max)
                    .filter(|&n| n.gcd(&(p as usize)) == 1 && n.gcd(&(q as usize)) == 1)
                    .collect(),
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{vertical_equilibrium, GEO_MEAN_MOTION};
    use approx::assert_relative_eq;

    fn spec(kind: FormationKind, p: u32, q: u32, n: usize, phi0: (i64, i64)) -> FormationSpec {
        FormationSpec::with_phi0(kind, p, q, n, 1.0, Rational64::new(phi0.0, phi0.1)).unwrap()
    }

    #[test]
    fn mass_ratios() {
        assert_eq!(mass_ratio_for(1, 2).unwrap(), Rational64::from_integer(8));
        assert_eq!(mass_ratio_for(2, 3).unwrap(), Rational64::new(11, 4));
        assert_eq!(mass_ratio_for(3, 4).unwrap(), Rational64::new(4, 3));
        assert_eq!(mass_ratio_for(7, 8), Err(Error::RatioInfeasible { p: 7, q: 8 }));
    }

    #[test]
    fn direct_substitution() {
        let s = spec(FormationKind::TypeI, 1, 2, 3, (0, 1));
        for i in 1..=3 {
            let (x, y) = deputy_position(&s, i, 0.0);
            assert_relative_eq!(x, (2.0 * PI * i as f64 / 3.0).sin(), epsilon = 1e-15);
            assert_relative_eq!(y, (4.0 * PI * i as f64 / 3.0).sin(), epsilon = 1e-15);
        }
    }

    #[test]
    fn table_examples() {
        let r = admissibility(&spec(FormationKind::TypeI, 1, 2, 3, (1, 4)));
        assert!(r.balanced && r.collision_free && r.center_free);
        assert!(!admissibility(&spec(FormationKind::TypeI, 1, 2, 2, (1, 4))).balanced);
        let r = admissibility(&spec(FormationKind::TypeI, 1, 2, 3, (0, 1)));
        assert!(r.collision_free && !r.center_free);
    }

    #[test]
    fn closed_form_separation() {
        let s = spec(FormationKind::TypeI, 1, 2, 3, (0, 1));
        let d = min_separation(&s, 1.0, 4096).unwrap();
        assert_relative_eq!(d, 21f64.sqrt() / 4.0, epsilon = 1e-9);
        assert!((collision_oracle(&s, 100_000) - 21f64.sqrt() / 4.0).abs() < 1e-4);
    }

    #[test]
    fn colliding_phase_detected() {
        let s = spec(FormationKind::TypeI, 1, 2, 3, (1, 2));
        assert!(!admissibility(&s).collision_free);
        assert!(collision_oracle(&s, 1_000_000) < 1e-3);
        assert!(matches!(min_separation(&s, 1.0, 4096), Err(Error::CollidingFormation { .. })));
    }

    #[test]
    fn type_ii_pair_is_antipodal() {
        let s = spec(FormationKind::TypeII, 1, 2, 2, (1, 2));
        let p = SystemParams::from_ratios(2, 8.0, 1000.0, 100.0, 1e4, GEO_MEAN_MOTION);
        let eq = vertical_equilibrium(&p).unwrap();
        let st = synthesize_initial_state(&p, &s, &eq).unwrap();
        let (a, b) = (&st.deputies[0].position, &st.deputies[1].position);
        assert_relative_eq!(a.x, -b.x, epsilon = 1e-12);
        assert_relative_eq!(a.y, -b.y, epsilon = 1e-12);
        assert_eq!(st.main.position.x, 0.0);
        assert_eq!(st.main.position.y, 0.0);
    }

    #[test]
    fn zero_amplitude_limit_is_equilibrium() {
        let p = SystemParams::from_ratios(3, 8.0, 1000.0, 100.0, 1e4, GEO_MEAN_MOTION);
        let eq = vertical_equilibrium(&p).unwrap();
        let s = FormationSpec::with_phi0(FormationKind::TypeI, 1, 2, 3, 1e-9, Rational64::new(1, 4)).unwrap();
        let st = synthesize_initial_state(&p, &s, &eq).unwrap();
        assert_relative_eq!(st.main.position.z, eq.z_main, max_relative = 1e-12);
        for d in &st.deputies {
            assert_relative_eq!(d.position.z, eq.z_deputy, max_relative = 1e-12);
        }
    }

    #[test]
    fn oversized_amplitude_rejected() {
        let p = SystemParams::from_ratios(3, 8.0, 1000.0, 100.0, 1e4, GEO_MEAN_MOTION);
        let eq = vertical_equilibrium(&p).unwrap();
        let s = FormationSpec::with_phi0(FormationKind::TypeI, 1, 2, 3, 2e4, Rational64::new(1, 4)).unwrap();
        assert!(matches!(
            synthesize_initial_state(&p, &s, &eq),
            Err(Error::AmplitudeTooLarge { .. })
        ));
    }

    #[test]
    fn design_rows() {
        let rows = enumerate_designs(4, 4, 11);
        let got: Vec<_> = rows.iter().map(|r| (r.p, r.q, r.mass_ratio.as_str())).collect();
        assert_eq!(
            got,
            vec![(1, 2, "8"), (1, 3, "23"), (2, 3, "11/4"), (1, 4, "44"), (3, 4, "4/3")]
        );
        assert_eq!(rows[2].type_i_n[..3], [5, 7, 11]);
    }
}
