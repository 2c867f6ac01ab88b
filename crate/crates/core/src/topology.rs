//! Pairwise winding numbers of deputies and the entanglement verdicts they
//! imply.
//!
//! `w[i][j]` counts the turns deputy `j` makes around deputy `i` during one
//! formation period. Non-zero winding numbers certify weak entanglement, and
//! winding numbers of both signs certify strong entanglement. Zero winding
//! numbers prove nothing: the Type I formation with `p = 1`, `q = 2`, `N = 3`
//! is braided although every winding number vanishes (see
//! [`KNOWN_BRAIDED`]).

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formation::{deputy_position, FormationKind, FormationSpec, EPS_COL};

/// Formations known to be entangled although the winding criterion reports
/// nothing: `(kind, p, q, N)`.
pub const KNOWN_BRAIDED: &[(FormationKind, u32, u32, usize)] = &[(FormationKind::TypeI, 1, 2, 3)];

/// Largest number of steps used when tracking the argument.
pub const MAX_TRACKING_STEPS: usize = 1 << 20;

/// Symmetric matrix of winding numbers with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindingMatrix {
    pub w: Vec<Vec<i32>>,
}

impl WindingMatrix {
    /// Entry for deputies `i` and `j` in `1..=N`.
    pub fn get(&self, i: usize, j: usize) -> i32 {
        self.w[i - 1][j - 1]
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    fn off_diagonal(&self) -> impl Iterator<Item = i32> + '_ {
        let n = self.n();
        (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| self.w[i][j]))
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| (0..n).all(|j| self.w[i][j] == self.w[j][i]))
    }

    pub fn has_mixed_signs(&self) -> bool {
        self.off_diagonal().any(|v| v > 0) && self.off_diagonal().any(|v| v < 0)
    }

    pub fn all_zero(&self) -> bool {
        self.off_diagonal().all(|v| v == 0)
    }

    pub fn all_unit(&self) -> bool {
        self.off_diagonal().all(|v| v.abs() == 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Entanglement {
    /// The sufficient conditions do not apply. This is not a proof that the
    /// tethers stay untangled.
    NoneDetected,
    Weak,
    Strong,
}

fn relative(spec: &FormationSpec, i: usize, j: usize, tau: f64) -> (f64, f64) {
    let (xi, yi) = deputy_position(spec, i, tau);
    let (xj, yj) = deputy_position(spec, j, tau);
    (xj - xi, yj - yi)
}

/// Winding number of `r_j - r_i` about the origin over one period, from the
/// continuously tracked argument. Steps are halved until each one turns the
/// relative vector by less than a quarter turn.
pub fn winding_number_numeric(spec: &FormationSpec, i: usize, j: usize) -> Result<i32> {
    let radius = EPS_COL * spec.amp_x.min(spec.amp_y);
    let base = 256 * spec.p.max(spec.q) as usize;
    let mut steps = 0usize;
    let mut total = 0.0;
    let mut stack: Vec<(f64, f64)> = Vec::new();
    let check = |v: (f64, f64)| -> Result<(f64, f64)> {
        let r = v.0.hypot(v.1);
        if r < radius {
            return Err(Error::NearCollision { i, j, radius: r });
        }
        Ok(v)
    };
    for k in (0..base).rev() {
        stack.push((k as f64 / base as f64, (k + 1) as f64 / base as f64));
    }
    let mut cache_a = (f64::NAN, (0.0, 0.0));
    while let Some((a, b)) = stack.pop() {
        let va = if cache_a.0 == a { cache_a.1 } else { check(relative(spec, i, j, a))? };
        let vb = check(relative(spec, i, j, b))?;
        let turn = (va.0 * vb.1 - va.1 * vb.0).atan2(va.0 * vb.0 + va.1 * vb.1);
        if turn.abs() >= 0.5 * PI {
            if steps >= MAX_TRACKING_STEPS || b - a < f64::EPSILON {
                return Err(Error::NearCollision {
                    i,
                    j,
                    radius: va.0.hypot(va.1).min(vb.0.hypot(vb.1)),
                });
            }
            let m = 0.5 * (a + b);
            stack.push((m, b));
            stack.push((a, m));
            cache_a = (a, va);
            continue;
        }
        steps += 1;
        total += turn;
        cache_a = (b, vb);
    }
    let w = total / (2.0 * PI);
    let rounded = w.round();
    if (w - rounded).abs() > 1e-6 {
        return Err(Error::NearCollision { i, j, radius });
    }
    Ok(rounded as i32)
}

fn sign(x: f64) -> i32 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Sign of `sin(pi m / n)`, exact for integers.
fn sin_pi_sign(m: i64, n: i64) -> i32 {
    let r = m.rem_euclid(2 * n);
    if r == 0 || r == n {
        0
    } else if r < n {
        1
    } else {
        -1
    }
}

/// Nudge applied to the sign-crossing phase when a cosine vanishes.
const PHASE_NUDGE: f64 = 1e-7;
const COS_TOLERANCE: f64 = 1e-9;

/// Winding number `w*` of `(cos(2 pi p tau + phi_x), cos(2 pi q tau + phi_y))`
/// written through its crossings of the `x` axis:
/// `w* = 1/2 sum_{s=1}^{2q} (-1)^s sign(cos(pi p s / q + phi*))`.
fn crossing_sum(p: u32, q: u32, phi_star: f64) -> Option<i32> {
    let mut sum = 0;
    for s in 1..=2 * q {
        let c = (PI * (p * s) as f64 / q as f64 + phi_star).cos();
        if c.abs() < COS_TOLERANCE {
            return None;
        }
        sum += if s % 2 == 0 { sign(c) } else { -sign(c) };
    }
    Some(sum / 2)
}

/// Closed-form winding number from the sign-crossing formula.
pub fn winding_number_analytic(spec: &FormationSpec, i: usize, j: usize) -> Result<i32> {
    let (p, q) = (spec.p, spec.q);
    let n = spec.n_deputies as f64;
    let (fx, fy) = (spec.phase_x.radians, spec.phase_y.radians);
    let mut phi_star = fx - p as f64 / q as f64 * fy - PI * p as f64 / (2.0 * q as f64);
    let amp_sign = sign(spec.amp_x * spec.amp_y);
    let factor = match spec.kind {
        FormationKind::TypeI => {
            let d = j as i64 - i as i64;
            let nn = spec.n_deputies as i64;
            amp_sign * sin_pi_sign(p as i64 * d, nn) * sin_pi_sign(q as i64 * d, nn)
        }
        FormationKind::TypeII => {
            phi_star += PI * (i + j) as f64 * (q as f64 - p as f64) / (q as f64 * n);
            amp_sign
        }
    };
    let degenerate = || Error::NearCollision { i, j, radius: 0.0 };
    if factor == 0 {
        return Err(degenerate());
    }
    let w_star = crossing_sum(p, q, phi_star)
        .or_else(|| crossing_sum(p, q, phi_star + PHASE_NUDGE))
        .ok_or_else(degenerate)?;
    Ok(factor * w_star)
}

fn matrix_with<F>(spec: &FormationSpec, f: F) -> Result<WindingMatrix>
where
    F: Fn(&FormationSpec, usize, usize) -> Result<i32> + Sync,
{
    let n = spec.n_deputies;
    let pairs: Vec<(usize, usize)> = (1..=n).flat_map(|i| (i + 1..=n).map(move |j| (i, j))).collect();
    let values: Vec<i32> = pairs.par_iter().map(|&(i, j)| f(spec, i, j)).collect::<Result<_>>()?;
    let mut w = vec![vec![0; n]; n];
    for (&(i, j), v) in pairs.iter().zip(values) {
        w[i - 1][j - 1] = v;
        w[j - 1][i - 1] = v;
    }
    Ok(WindingMatrix { w })
}

pub fn winding_matrix_numeric(spec: &FormationSpec) -> Result<WindingMatrix> {
    matrix_with(spec, winding_number_numeric)
}

pub fn winding_matrix_analytic(spec: &FormationSpec) -> Result<WindingMatrix> {
    matrix_with(spec, winding_number_analytic)
}

/// Entanglement implied by the winding criterion: weak when `p` and `q` are
/// both odd, strong when in addition the formation is of Type I and `2N`
/// divides neither `q - p` nor `q + p`.
pub fn entanglement_verdict(spec: &FormationSpec) -> Entanglement {
    let (p, q) = (spec.p as i64, spec.q as i64);
    if p % 2 == 0 || q % 2 == 0 {
        return Entanglement::NoneDetected;
    }
    let two_n = 2 * spec.n_deputies as i64;
    if spec.kind == FormationKind::TypeI && (q - p) % two_n != 0 && (q + p) % two_n != 0 {
        Entanglement::Strong
    } else {
        Entanglement::Weak
    }
}

/// Whether the formation is listed in [`KNOWN_BRAIDED`].
pub fn known_braided(spec: &FormationSpec) -> bool {
    KNOWN_BRAIDED
        .iter()
        .any(|&(k, p, q, n)| k == spec.kind && p == spec.p && q == spec.q && n == spec.n_deputies)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formation::Phase;
    use num_rational::Rational64;

    fn spec(kind: FormationKind, p: u32, q: u32, n: usize) -> FormationSpec {
        FormationSpec::with_phi0(kind, p, q, n, 1.0, Rational64::new(1, 4)).unwrap()
    }

    #[test]
    fn even_frequency_gives_zero() {
        let s = spec(FormationKind::TypeI, 1, 2, 3);
        assert!(winding_matrix_numeric(&s).unwrap().all_zero());
        assert!(winding_matrix_analytic(&s).unwrap().all_zero());
        assert_eq!(entanglement_verdict(&s), Entanglement::NoneDetected);
        assert!(known_braided(&s));
    }

    #[test]
    fn circle_winds_once() {
        let s = FormationSpec::diagnostic(
            FormationKind::TypeI,
            1,
            1,
            4,
            1.0,
            1.0,
            Phase::pi_fraction(1, 2),
            Phase::zero(),
        )
        .unwrap();
        let m = winding_matrix_numeric(&s).unwrap();
        assert!(m.all_unit());
        assert_eq!(m, winding_matrix_analytic(&s).unwrap());
    }

    #[test]
    fn one_three_pair_is_weak() {
        let s = spec(FormationKind::TypeI, 1, 3, 2);
        assert_eq!(winding_number_numeric(&s, 1, 2).unwrap().abs(), 1);
        assert_eq!(winding_number_analytic(&s, 1, 2).unwrap(), winding_number_numeric(&s, 1, 2).unwrap());
        assert_eq!(entanglement_verdict(&s), Entanglement::Weak);
    }

    #[test]
    fn three_five_is_strong() {
        let s = spec(FormationKind::TypeI, 3, 5, 7);
        let m = winding_matrix_numeric(&s).unwrap();
        assert!(m.has_mixed_signs());
        assert_eq!(m, winding_matrix_analytic(&s).unwrap());
        assert_eq!(entanglement_verdict(&s), Entanglement::Strong);
    }

    #[test]
    fn shared_factor_with_p_is_degenerate() {
        let s = spec(FormationKind::TypeI, 3, 5, 3);
        assert!(matches!(
            winding_number_analytic(&s, 1, 2),
            Err(Error::NearCollision { .. })
        ));
    }
}
