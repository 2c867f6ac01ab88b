//! Scalar minimisation by golden-section search.

use std::convert::Infallible;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Minimises a unimodal `f` on `[a, b]` until the bracket is narrower than
/// `tol`. Returns the abscissa and value of the best point evaluated.
pub(crate) fn golden_section<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    match golden_section_fallible(|x| Ok::<_, Infallible>(f(x)), a, b, tol) {
        Ok(v) => v,
        Err(never) => match never {},
    }
}

/// Same as [`golden_section`] for an objective that can fail.
pub(crate) fn golden_section_fallible<F, E>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64), E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_vertex() {
        let (x, fx) = golden_section(|x| (x - 0.3).powi(2) + 2.0, -1.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 2.0).abs() < 1e-15);
    }
}
