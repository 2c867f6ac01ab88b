//! Dormand-Prince 8(5,3) embedded Runge-Kutta pair with the Hairer-Wanner
//! step size controller. Output times are hit exactly by shortening the step
//! that would overshoot them, so no dense output is needed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Relative tolerance; the absolute floor for each component is
    /// `rtol * scale` with scale `l0` for positions and `l0 * w0` for
    /// velocities.
    pub rtol: f64,
    /// Spacing of recorded states (s).
    pub output_stride: f64,
    /// Upper bound on the step as a fraction of the fastest tether period.
    pub max_step_fraction: f64,
    /// Controller steps below this (s) abort the run.
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            output_stride: 100.0,
            max_step_fraction: 1.0 / 20.0,
            min_step: 1e-6,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Largest scaled error norm among accepted steps (<= 1).
    pub max_error_estimate: f64,
}

const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 1.0 / 3.0;
const FAC_MAX: f64 = 6.0;
const EXPONENT: f64 = 1.0 / 8.0;

/// Integrates `y' = f(t, y)` from `t0` to `t_end`, calling `observe` at every
/// multiple of the output stride and at `t_end`. The initial point is not
/// reported.
#[allow(clippy::too_many_arguments)]
pub(crate) fn solve<F, O>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
    max_step: f64,
    abs_scale: &[f64],
    mut observe: O,
) -> Result<IntegratorStats>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    O: FnMut(f64, &[f64]),
{
    if !(cfg.output_stride > 0.0) {
        return Err(Error::InvalidArgument("output stride must be positive".into()));
    }
    let n = y0.len();
    let mut stats = IntegratorStats::default();
    let mut y = y0.to_vec();
    let mut k = vec![vec![0.0; n]; 13];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut t = t0;

    let sk = |i: usize, a: f64, b: f64| cfg.rtol * (abs_scale[i] + a.abs().max(b.abs()));

    f(t, &y, &mut k[0])?;
    stats.evaluations += 1;

    // Initial step from the scaled derivative norm.
    let mut h = {
        let (mut d0, mut d1) = (0.0, 0.0);
        for i in 0..n {
            let s = sk(i, y[i], y[i]);
            d0 += (y[i] / s).powi(2);
            d1 += (k[0][i] / s).powi(2);
        }
        let (d0, d1) = ((d0 / n as f64).sqrt(), (d1 / n as f64).sqrt());
        let guess = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        guess.min(max_step).min(t_end - t0)
    };

    let mut output_index = 1u64;
    let next_output = |idx: u64| (t0 + idx as f64 * cfg.output_stride).min(t_end);
    let mut last_rejected = false;

    loop {
        if stats.steps >= cfg.max_steps {
            return Err(Error::StepBudget {
                t,
                max_steps: cfg.max_steps,
            });
        }
        if h < cfg.min_step {
            return Err(Error::StepUnderflow { t, step: h });
        }
        let target = next_output(output_index);
        let remaining = target - t;
        let landing = h >= remaining * (1.0 - 1e-12);
        let step = if landing { remaining } else { h };

        stages(&mut f, t, &y, step, &mut k, &mut ytmp, &mut ynew)?;
        stats.evaluations += 11;
        stats.steps += 1;

        // Error estimate combining the 5th and 3rd order embedded solutions.
        let (mut err, mut err2) = (0.0, 0.0);
        for i in 0..n {
            let s = sk(i, y[i], ynew[i]);
            let e3 = k[3][i] - BHH1 * k[0][i] - BHH2 * k[8][i] - BHH3 * k[2][i];
            let e5 = ER1 * k[0][i]
                + ER6 * k[5][i]
                + ER7 * k[6][i]
                + ER8 * k[7][i]
                + ER9 * k[8][i]
                + ER10 * k[9][i]
                + ER11 * k[1][i]
                + ER12 * k[2][i];
            err2 += (e3 / s).powi(2);
            err += (e5 / s).powi(2);
        }
        let mut deno = err + 0.01 * err2;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = step * err * (1.0 / (deno * n as f64)).sqrt();

        if !err.is_finite() {
            stats.rejected += 1;
            h = 0.25 * step;
            last_rejected = true;
            if h < cfg.min_step {
                return Err(Error::NonfiniteState { t });
            }
            continue;
        }

        let fac11 = err.powf(EXPONENT);
        let fac = (fac11 / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
        let mut h_new = step / fac;

        if err <= 1.0 {
            stats.max_error_estimate = stats.max_error_estimate.max(err);
            t = if landing { target } else { t + step };
            std::mem::swap(&mut y, &mut ynew);
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonfiniteState { t });
            }
            f(t, &y, &mut k[0])?;
            stats.evaluations += 1;
            if last_rejected {
                h_new = h_new.min(step);
                last_rejected = false;
            }
            if landing {
                observe(t, &y);
                if t >= t_end {
                    return Ok(stats);
                }
                output_index += 1;
                // Do not let a shortened landing step throttle the controller.
                h_new = h_new.max(h.min(h_new * FAC_MAX));
            }
            h = h_new.min(max_step);
        } else {
            stats.rejected += 1;
            h = step / (1.0 / FAC_MIN).min(fac11 / SAFE);
            last_rejected = true;
        }
    }
}

/// Evaluates the twelve stages for one step and the 8th order update.
/// On return `k[3]` holds the weighted stage sum, `k[2]` the derivative at
/// the 12th stage and `ynew` the candidate solution.
fn stages<F>(
    f: &mut F,
    t: f64,
    y: &[f64],
    h: f64,
    k: &mut [Vec<f64>],
    ytmp: &mut [f64],
    ynew: &mut [f64],
) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len();
    macro_rules! stage {
        ($out:expr, $c:expr, [$(($idx:expr, $a:expr)),*]) => {{
            for i in 0..n {
                ytmp[i] = y[i] + h * (0.0 $(+ $a * k[$idx][i])*);
            }
            f(t + $c * h, ytmp, &mut k[$out])?;
        }};
    }
    stage!(1, C2, [(0, A21)]);
    stage!(2, C3, [(0, A31), (1, A32)]);
    stage!(3, C4, [(0, A41), (2, A43)]);
    stage!(4, C5, [(0, A51), (2, A53), (3, A54)]);
    stage!(5, C6, [(0, A61), (3, A64), (4, A65)]);
    stage!(6, C7, [(0, A71), (3, A74), (4, A75), (5, A76)]);
    stage!(7, C8, [(0, A81), (3, A84), (4, A85), (5, A86), (6, A87)]);
    stage!(8, C9, [(0, A91), (3, A94), (4, A95), (5, A96), (6, A97), (7, A98)]);
    stage!(9, C10, [(0, A101), (3, A104), (4, A105), (5, A106), (6, A107), (7, A108), (8, A109)]);
    stage!(
        1,
        C11,
        [(0, A111), (3, A114), (4, A115), (5, A116), (6, A117), (7, A118), (8, A119), (9, A1110)]
    );
    stage!(
        2,
        1.0,
        [(0, A121), (3, A124), (4, A125), (5, A126), (6, A127), (7, A128), (8, A129), (9, A1210), (1, A1211)]
    );
    for i in 0..n {
        let sum = B1 * k[0][i]
            + B6 * k[5][i]
            + B7 * k[6][i]
            + B8 * k[7][i]
            + B9 * k[8][i]
            + B10 * k[9][i]
            + B11 * k[1][i]
            + B12 * k[2][i];
        k[3][i] = sum;
        ynew[i] = y[i] + h * sum;
    }
    Ok(())
}

const C2: f64 = 0.526001519587677318785587544488E-01;
const C3: f64 = 0.789002279381515978178381316732E-01;
const C4: f64 = 0.118350341907227396726757197510E+00;
const C5: f64 = 0.281649658092772603273242802490E+00;
const C6: f64 = 0.333333333333333333333333333333E+00;
const C7: f64 = 0.25E+00;
const C8: f64 = 0.307692307692307692307692307692E+00;
const C9: f64 = 0.651282051282051282051282051282E+00;
const C10: f64 = 0.6E+00;
const C11: f64 = 0.857142857142857142857142857142E+00;

const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;

const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;

const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;

const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;

#[cfg(test)]
mod tests {
    use super::*;

    fn run_oscillator(rtol: f64) -> (f64, IntegratorStats) {
        // x'' = -x over two periods, exact solution cos t.
        let cfg = IntegratorConfig {
            rtol,
            output_stride: 0.5,
            ..Default::default()
        };
        let t_end = 4.0 * std::f64::consts::PI;
        let mut last = vec![];
        let stats = solve(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            0.0,
            &[1.0, 0.0],
            t_end,
            &cfg,
            1.0,
            &[1.0, 1.0],
            |_, y| last = y.to_vec(),
        )
        .unwrap();
        ((last[0] - t_end.cos()).abs().max((last[1] + t_end.sin()).abs()), stats)
    }

    #[test]
    fn harmonic_oscillator_meets_tolerance() {
        let (err, stats) = run_oscillator(1e-10);
        assert!(err < 1e-8, "error {err}");
        assert!(stats.max_error_estimate <= 1.0);
    }

    #[test]
    fn outputs_land_on_stride_multiples() {
        let cfg = IntegratorConfig {
            output_stride: 0.3,
            ..Default::default()
        };
        let mut times = vec![];
        solve(
            |t, _, dy| {
                dy[0] = t.cos();
                Ok(())
            },
            0.0,
            &[0.0],
            1.0,
            &cfg,
            0.05,
            &[1.0],
            |t, y| {
                times.push(t);
                assert!((y[0] - t.sin()).abs() < 1e-9);
            },
        )
        .unwrap();
        assert_eq!(times.len(), 4);
        for (i, &t) in times.iter().take(3).enumerate() {
            assert!((t - 0.3 * (i + 1) as f64).abs() < 1e-15);
        }
        assert_eq!(*times.last().unwrap(), 1.0);
    }

    #[test]
    fn blow_up_is_reported() {
        let cfg = IntegratorConfig::default();
        let res = solve(
            |_, y, dy| {
                dy[0] = y[0] * y[0];
                Ok(())
            },
            0.0,
            &[1.0],
            2.0,
            &cfg,
            0.1,
            &[1.0],
            |_, _| {},
        );
        assert!(matches!(
            res,
            Err(Error::StepUnderflow { .. }) | Err(Error::NonfiniteState { .. })
        ));
    }
}
