//! Second-order forcing of the main satellite by a small Lissajous
//! oscillation of the deputies.
//!
//! Substituting the base oscillation into the quadratic terms of the
//! equations of motion and summing over deputies gives forcing terms built
//! from three sums, `sum x' x`, `sum y' y` and `sum x' y`. For Type I
//! formations whose `N` divides none of `2p`, `2q`, `q - p`, `q + p` these
//! sums vanish identically and the main satellite stays at rest to second
//! order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formation::{admissibility, deputy_position, deputy_rate, FormationSpec};
use crate::system::SystemParams;

/// Sums over deputies of products of the base motion and its time
/// derivative (m^2/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderSums {
    pub sum_xx: f64,
    pub sum_yy: f64,
    pub sum_xy: f64,
}

impl SecondOrderSums {
    pub fn max_abs(&self) -> f64 {
        self.sum_xx.abs().max(self.sum_yy.abs()).max(self.sum_xy.abs())
    }
}

/// `N` divides none of `2p`, `2q`, `q - p`, `q + p`.
pub fn prop3_hypothesis(p: u32, q: u32, n: usize) -> bool {
    let (p, q, n) = (p as i64, q as i64, n as i64);
    [2 * p, 2 * q, q - p, q + p].iter().all(|v| v % n != 0)
}

/// Evaluates the three sums at `tau` for a formation of period
/// `lissajous_period` (s).
pub fn second_order_sums(spec: &FormationSpec, lissajous_period: f64, tau: f64) -> SecondOrderSums {
    let mut s = SecondOrderSums {
        sum_xx: 0.0,
        sum_yy: 0.0,
        sum_xy: 0.0,
    };
    for i in 1..=spec.n_deputies {
        let (x, y) = deputy_position(spec, i, tau);
        let (dx, dy) = deputy_rate(spec, i, tau);
        let (vx, vy) = (dx / lissajous_period, dy / lissajous_period);
        s.sum_xx += vx * x;
        s.sum_yy += vy * y;
        s.sum_xy += vx * y;
    }
    s
}

/// Natural size of each sum: `N` times the largest single product.
pub fn sums_scale(spec: &FormationSpec, lissajous_period: f64) -> f64 {
    let a = spec.amp_x.max(spec.amp_y);
    spec.n_deputies as f64 * a * a * 2.0 * std::f64::consts::PI * spec.p.max(spec.q) as f64 / lissajous_period
}

/// Right-hand sides `(F_x, F_y)` (m/s^2) of the second-order main-satellite
/// equations,
/// `F_x = 2 w0 / l0 (m_C / M sum y' y - N m_D / M sum x' x)` and
/// `F_y = -2 w0 / l0 sum x' y`, with `M = m_C + N m_D` and the base motion
/// running at the nominal Lissajous period.
pub fn main_satellite_forcing(spec: &FormationSpec, params: &SystemParams, tau: f64) -> Result<(f64, f64)> {
    if params.n_deputies != spec.n_deputies {
        return Err(Error::SpecMismatch {
            expected: spec.n_deputies,
            found: params.n_deputies,
        });
    }
    if !admissibility(spec).balanced {
        return Err(Error::UnbalancedSpec);
    }
    let t_l = nominal_period(spec, params.mean_motion);
    let s = second_order_sums(spec, t_l, tau);
    let c = 2.0 * params.mean_motion / params.slack_length;
    let total = params.total_mass();
    let nmd = params.n_deputies as f64 * params.m_deputy;
    Ok((
        c * (params.m_main / total * s.sum_yy - nmd / total * s.sum_xx),
        -c * s.sum_xy,
    ))
}

/// `T_L = 2 pi sqrt(q^2 - p^2) / w0`.
pub fn nominal_period(spec: &FormationSpec, mean_motion: f64) -> f64 {
    2.0 * std::f64::consts::PI * ((spec.q * spec.q - spec.p * spec.p) as f64).sqrt() / mean_motion
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formation::{FormationKind, Phase};
    use num_rational::Rational64;

    fn spec(p: u32, q: u32, n: usize) -> FormationSpec {
        FormationSpec::with_phi0(FormationKind::TypeI, p, q, n, 1.0, Rational64::new(1, 4)).unwrap()
    }

    #[test]
    fn hypothesis_examples() {
        assert!(prop3_hypothesis(1, 2, 5));
        assert!(prop3_hypothesis(3, 4, 5));
        assert!(!prop3_hypothesis(1, 2, 3));
    }

    #[test]
    fn sums_vanish_for_five() {
        for (p, q) in [(1, 2), (3, 4)] {
            let s = spec(p, q, 5);
            let scale = sums_scale(&s, 1.0);
            for k in 0..100 {
                let v = second_order_sums(&s, 1.0, k as f64 * 0.0137);
                assert!(v.max_abs() < 1e-12 * scale);
            }
        }
    }

    #[test]
    fn sums_survive_for_three() {
        let s = spec(1, 2, 3);
        let scale = sums_scale(&s, 1.0);
        let worst = (0..100)
            .map(|k| second_order_sums(&s, 1.0, k as f64 / 100.0).max_abs())
            .fold(0.0, f64::max);
        assert!(worst > 1e-3 * scale);
    }

    #[test]
    fn unbalanced_refused() {
        let s = FormationSpec::new(FormationKind::TypeI, 1, 2, 2, 1.0, 1.0, Phase::zero(), Phase::zero()).unwrap();
        let p = SystemParams::from_ratios(2, 8.0, 1000.0, 100.0, 1e4, crate::system::GEO_MEAN_MOTION);
        assert_eq!(main_satellite_forcing(&s, &p, 0.1), Err(Error::UnbalancedSpec));
    }
}
