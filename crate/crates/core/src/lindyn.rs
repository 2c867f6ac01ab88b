//! Linearised dynamics about the vertical equilibrium.
//!
//! Near equilibrium the in-plane motion decouples into 4x4 blocks acting on
//! `(dx, dx', dz, dz')`: one for the deputy centre of mass relative to the
//! main satellite (matrix `A`, reduced mass `m_r`) and one for differences
//! between deputies (matrix `A1`, mass `m_D`). Any set of difference weights
//! summing to zero leads to the same block, so only `A1` is built.

use nalgebra::{Complex, Matrix4};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::{stability_deputy, SystemParams};

/// Natural frequencies of the linearised system (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeFrequencies {
    /// Slow in-plane deputy mode.
    pub omega_x: f64,
    /// Out-of-plane deputy mode.
    pub omega_y: f64,
    /// Fast in-plane (tether stretching) deputy mode.
    pub omega_z: f64,
    pub omega_com_x: f64,
    pub omega_com_y: f64,
}

/// Tri-state stability of a linear system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    /// All roots strictly in the left half plane.
    Asymptotic,
    /// No root in the open right half plane but some on the imaginary axis.
    Marginal,
    Unstable,
}

/// Matrix `A` of the main-satellite / deputy-CoM relative motion.
pub fn com_relative_matrix(p: &SystemParams) -> Matrix4<f64> {
    let w = p.mean_motion;
    let mr = p.reduced_mass();
    block_matrix(w, -3.0 * w * w, p.stiffness / mr, p.damping / mr)
}

/// Matrix `A1` of the deputy-difference motion.
pub fn deputy_relative_matrix(p: &SystemParams) -> Matrix4<f64> {
    let w = p.mean_motion;
    let md = p.m_deputy;
    let lam = p.stretch_ratio();
    block_matrix(w, -lam * p.stiffness / md, p.stiffness / md, p.damping / md)
}

fn block_matrix(w: f64, xx: f64, k_over_m: f64, b_over_m: f64) -> Matrix4<f64> {
    #[rustfmt::skip]
    let a = Matrix4::new(
        0.0, 1.0, 0.0, 0.0,
        xx, 0.0, 0.0, 2.0 * w,
        0.0, 0.0, 0.0, 1.0,
        0.0, -2.0 * w, 3.0 * w * w - k_over_m, -b_over_m,
    );
    a
}

/// Coefficients `[1, c1, c2, c3, c4]` of `det(rho I - A)`, computed from the
/// matrix by the Faddeev-LeVerrier recursion. For a 4x4 matrix this equals
/// `det(A - rho I)`.
pub fn characteristic_polynomial(a: &Matrix4<f64>) -> [f64; 5] {
    let mut c = [1.0, 0.0, 0.0, 0.0, 0.0];
    let mut m = Matrix4::<f64>::zeros();
    for k in 1..=4 {
        m = a * m + Matrix4::identity() * c[k - 1];
        c[k] = -(a * m).trace() / k as f64;
    }
    c
}

/// Closed-form characteristic polynomial of [`com_relative_matrix`].
pub fn com_polynomial(p: &SystemParams) -> [f64; 5] {
    let w2 = p.mean_motion.powi(2);
    let mr = p.reduced_mass();
    let (k, b) = (p.stiffness / mr, p.damping / mr);
    [1.0, b, k + 4.0 * w2, 3.0 * w2 * b, 3.0 * w2 * (k - 3.0 * w2)]
}

/// Closed-form characteristic polynomial of [`deputy_relative_matrix`].
pub fn deputy_polynomial(p: &SystemParams) -> [f64; 5] {
    let w2 = p.mean_motion.powi(2);
    let md = p.m_deputy;
    let lam = p.stretch_ratio();
    let (k, b) = (p.stiffness / md, p.damping / md);
    [
        1.0,
        b,
        (lam + 1.0) * k + w2,
        lam * k * b,
        lam * k * (k - 3.0 * w2),
    ]
}

/// Zero tolerance for the floating-point Routh table, applied after the
/// polynomial is rescaled so that its roots are of unit magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouthConfig {
    pub zero_tolerance: f64,
}

impl Default for RouthConfig {
    fn default() -> Self {
        Self {
            zero_tolerance: 1e-12,
        }
    }
}

/// Rescales `rho -> s sigma` so that the monic polynomial has coefficients of
/// order one.
fn normalize(c: &[f64; 5]) -> [f64; 5] {
    let monic: Vec<f64> = c.iter().map(|x| x / c[0]).collect();
    let s = (1..5)
        .map(|k| monic[k].abs().powf(1.0 / k as f64))
        .fold(0.0, f64::max);
    let s = if s > 0.0 && s.is_finite() { s } else { 1.0 };
    let mut out = [0.0; 5];
    for k in 0..5 {
        out[k] = monic[k] / s.powi(k as i32);
    }
    out
}

/// Routh-Hurwitz test for `c0 rho^4 + c1 rho^3 + c2 rho^2 + c3 rho + c4`:
/// true iff every root has a negative real part.
///
/// Fails with `DegenerateTable` when one of the two divisors of the table is
/// within tolerance of zero. A last entry within tolerance of zero is
/// decided exactly on the given coefficients, since cancellation there
/// can hide a small but genuine damping margin.
pub fn routh_hurwitz_quartic(c: [f64; 5], cfg: RouthConfig) -> Result<bool> {
    if c.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("coefficients must be finite".into()));
    }
    if !(c[0] > 0.0) {
        return Err(Error::InvalidArgument(
            "leading coefficient must be positive".into(),
        ));
    }
    let [_, a1, a2, a3, a4] = normalize(&c);
    let tol = cfg.zero_tolerance;
    if [a1, a2, a3, a4].iter().any(|&x| x < -tol) {
        return Ok(false);
    }
    if a1.abs() <= tol {
        return Err(Error::DegenerateTable { pivot: a1 });
    }
    let b1 = (a1 * a2 - a3) / a1;
    if b1.abs() <= tol {
        return Err(Error::DegenerateTable { pivot: b1 });
    }
    let c1 = (b1 * a3 - a1 * a4) / b1;
    if a1 > tol && b1 > tol && a4 > tol && c1.abs() <= tol {
        let exact = to_rational(&c).expect("finite coefficients");
        return routh_hurwitz_quartic_exact(&exact);
    }
    Ok(a1 > tol && b1 > tol && c1 > tol && a4 > tol)
}

/// Exact Routh-Hurwitz test on rational coefficients.
pub fn routh_hurwitz_quartic_exact(c: &[BigRational; 5]) -> Result<bool> {
    if !c[0].is_positive() {
        return Err(Error::InvalidArgument(
            "leading coefficient must be positive".into(),
        ));
    }
    let [a0, a1, a2, a3, a4] = c;
    if a1.is_zero() {
        return Err(Error::DegenerateTable { pivot: 0.0 });
    }
    let b1 = (a1 * a2 - a0 * a3) / a1;
    if b1.is_zero() {
        return Err(Error::DegenerateTable { pivot: 0.0 });
    }
    let c1 = (&b1 * a3 - a1 * a4) / &b1;
    Ok(a1.is_positive() && b1.is_positive() && c1.is_positive() && a4.is_positive())
}

/// Converts floating-point coefficients to exact rationals (every finite
/// double is a dyadic rational).
pub fn to_rational(c: &[f64; 5]) -> Option<[BigRational; 5]> {
    let v: Option<Vec<BigRational>> = c.iter().map(|&x| BigRational::from_f64(x)).collect();
    v.and_then(|v| v.try_into().ok())
}

/// Rational from an integer numerator and denominator.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Roots of the quartic divided by the scale used in [`routh_hurwitz_quartic`].
fn normalized_roots(c: &[f64; 5]) -> Vec<Complex<f64>> {
    let n = normalize(c);
    #[rustfmt::skip]
    let companion = Matrix4::new(
        -n[1], -n[2], -n[3], -n[4],
        1.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
        0.0, 0.0, 1.0, 0.0,
    );
    companion.complex_eigenvalues().iter().copied().collect()
}

/// Classifies the quartic as asymptotically stable, marginal or unstable.
/// Roots whose normalised real part is within `root_tolerance` of zero are
/// counted as lying on the imaginary axis.
pub fn classify_quartic(c: [f64; 5], cfg: RouthConfig, root_tolerance: f64) -> Stability {
    if let Ok(true) = routh_hurwitz_quartic(c, cfg) {
        return Stability::Asymptotic;
    }
    let max_re = normalized_roots(&c)
        .iter()
        .map(|r| r.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_re > root_tolerance {
        Stability::Unstable
    } else if max_re >= -root_tolerance {
        Stability::Marginal
    } else {
        Stability::Asymptotic
    }
}

/// Eigenvalues of a block matrix in units of `w0`. Velocities are rescaled by
/// `1/w0` first so that all entries are dimensionless.
pub fn scaled_eigenvalues(a: &Matrix4<f64>, mean_motion: f64) -> Vec<Complex<f64>> {
    let d = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0 / mean_motion, 1.0, 1.0 / mean_motion));
    let d_inv = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, mean_motion, 1.0, mean_motion));
    let scaled = d * a * d_inv / mean_motion;
    scaled.complex_eigenvalues().iter().copied().collect()
}

/// Largest real part of the spectrum, in units of `w0`.
pub fn max_real_part(a: &Matrix4<f64>, mean_motion: f64) -> f64 {
    scaled_eigenvalues(a, mean_motion)
        .iter()
        .map(|r| r.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Exact out-of-plane frequency `w0 sqrt((4 m_C + N m_D) / (m_C + N m_D))`.
pub fn omega_y(p: &SystemParams) -> f64 {
    let nmd = p.n_deputies as f64 * p.m_deputy;
    p.mean_motion * ((4.0 * p.m_main + nmd) / (p.m_main + nmd)).sqrt()
}

/// Linear frequencies of the undamped system. `omega_x` and `omega_z` are
/// the roots of the biquadratic `det(A1 - i w I) = 0` at `b = 0`, whatever
/// the damping stored in `p`.
pub fn mode_frequencies(p: &SystemParams) -> Result<ModeFrequencies> {
    if !stability_deputy(p) {
        return Err(Error::UnstableParams);
    }
    let c = deputy_polynomial(&p.with_damping(0.0));
    let (c2, c4) = (c[2], c[4]);
    let disc = c2 * c2 - 4.0 * c4;
    if disc < 0.0 || c4 < 0.0 {
        return Err(Error::UnstableParams);
    }
    let big = 0.5 * (c2 + disc.sqrt());
    let small = if big > 0.0 { c4 / big } else { 0.0 };
    let w = p.mean_motion;
    Ok(ModeFrequencies {
        omega_x: small.sqrt(),
        omega_y: omega_y(p),
        omega_z: big.sqrt(),
        omega_com_x: 3f64.sqrt() * w,
        omega_com_y: 2.0 * w,
    })
}

/// Large-rigidity approximations of `(omega_x, omega_z)`:
/// `sqrt(3 m_C / (N m_D + m_C)) (1 - 2 m_D w0^2 / k) w0` and
/// `sqrt(k / m_D) (1 + m_D w0^2 / 2k)`.
pub fn asymptotic_frequencies(p: &SystemParams) -> (f64, f64) {
    let w = p.mean_motion;
    let eps = p.m_deputy * w * w / p.stiffness;
    let wx = (3.0 * p.m_main / p.total_mass()).sqrt() * (1.0 - 2.0 * eps) * w;
    let wz = (p.stiffness / p.m_deputy).sqrt() * (1.0 + 0.5 * eps);
    (wx, wz)
}

/// Leading term `sqrt(3 m_C / (N m_D + m_C)) w0` of the slow mode.
pub fn omega_x_leading(p: &SystemParams) -> f64 {
    (3.0 * p.m_main / p.total_mass()).sqrt() * p.mean_motion
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::GEO_MEAN_MOTION;
    use approx::assert_relative_eq;

    fn params(rigidity: f64) -> SystemParams {
        SystemParams::from_ratios(5, 8.0, rigidity, 100.0, 1e4, GEO_MEAN_MOTION)
    }

    #[test]
    fn faddeev_matches_closed_form() {
        let p = params(300.0).with_damping_ratio(0.05);
        for (a, c) in [
            (com_relative_matrix(&p), com_polynomial(&p)),
            (deputy_relative_matrix(&p), deputy_polynomial(&p)),
        ] {
            let f = characteristic_polynomial(&a);
            for k in 0..5 {
                assert_relative_eq!(f[k], c[k], max_relative = 1e-10, epsilon = 1e-30);
            }
        }
    }

    #[test]
    fn printed_entries() {
        let p = params(10.0);
        let a = com_relative_matrix(&p);
        let w2 = p.mean_motion.powi(2);
        assert_eq!(a[(1, 0)], -3.0 * w2);
        assert_eq!(a[(3, 2)], 3.0 * w2 - p.stiffness / p.reduced_mass());
    }

    #[test]
    fn routh_textbook_cases() {
        let cfg = RouthConfig::default();
        assert!(routh_hurwitz_quartic([1.0, 4.0, 6.0, 4.0, 1.0], cfg).unwrap());
        assert!(!routh_hurwitz_quartic([1.0, 2.0, 2.0, 2.0, 1.0], cfg).unwrap());
        assert!(!routh_hurwitz_quartic([1.0, 1.0, 1.0, 1.0, -1.0], cfg).unwrap());
        assert!(matches!(
            routh_hurwitz_quartic([1.0, 0.0, 2.0, 0.0, 1.0], cfg),
            Err(Error::DegenerateTable { .. })
        ));
        let exact = |v: [i64; 5]| v.map(|x| ratio(x, 1));
        assert!(routh_hurwitz_quartic_exact(&exact([1, 4, 6, 4, 1])).unwrap());
        assert!(!routh_hurwitz_quartic_exact(&exact([1, 2, 2, 2, 1])).unwrap());
    }

    #[test]
    fn tri_state() {
        let cfg = RouthConfig::default();
        assert_eq!(classify_quartic([1.0, 4.0, 6.0, 4.0, 1.0], cfg, 1e-8), Stability::Asymptotic);
        assert_eq!(classify_quartic([1.0, 2.0, 2.0, 2.0, 1.0], cfg, 1e-6), Stability::Marginal);
        assert_eq!(classify_quartic([1.0, 0.0, 2.0, 0.0, 1.0], cfg, 1e-6), Stability::Marginal);
        assert_eq!(classify_quartic([1.0, -1.0, 2.0, 0.0, 1.0], cfg, 1e-6), Stability::Unstable);
    }

    #[test]
    fn omega_y_identities() {
        let p = params(500.0);
        let m = mode_frequencies(&p).unwrap();
        assert_relative_eq!(m.omega_y, 2.0 / 3f64.sqrt() * p.mean_motion, max_relative = 1e-12);
        let alt = (p.mean_motion.powi(2) + p.stretch_ratio() * p.stiffness / p.m_deputy).sqrt();
        assert_relative_eq!(m.omega_y, alt, max_relative = 1e-12);
    }

    #[test]
    fn frequencies_are_spectrum_of_a1() {
        let p = params(50.0);
        let m = mode_frequencies(&p).unwrap();
        let mut im: Vec<f64> = scaled_eigenvalues(&deputy_relative_matrix(&p), p.mean_motion)
            .iter()
            .filter(|r| r.im > 0.0)
            .map(|r| r.im * p.mean_motion)
            .collect();
        im.sort_by(f64::total_cmp);
        assert_relative_eq!(im[0], m.omega_x, max_relative = 1e-9);
        assert_relative_eq!(im[1], m.omega_z, max_relative = 1e-9);
    }

    #[test]
    fn soft_tethers_rejected() {
        assert_eq!(mode_frequencies(&params(0.5)), Err(Error::UnstableParams));
    }
}
