use hubspoke::formation::{admissibility, ratio_feasible, FormationKind};
use hubspoke::topology::{entanglement_verdict, winding_matrix_analytic, winding_matrix_numeric, Entanglement};
use hubspoke::FormationSpec;
use num_integer::Integer;
use num_rational::Rational64;
use proptest::prelude::*;

fn admissible_specs(max: u32, n_max: usize, phi0: Rational64) -> Vec<FormationSpec> {
    let mut out = Vec::new();
    for q in 2..=max {
        for p in 1..q {
            if p.gcd(&q) != 1 || !ratio_feasible(p, q) {
                continue;
            }
            for n in 2..=n_max {
                for kind in [FormationKind::TypeI, FormationKind::TypeII] {
                    let spec = FormationSpec::with_phi0(kind, p, q, n, 1.0, phi0).unwrap();
                    if admissibility(&spec).all() {
                        out.push(spec);
                    }
                }
            }
        }
    }
    out
}

#[test]
fn parity_and_unit_laws() {
    let specs = admissible_specs(7, 6, Rational64::new(1, 4));
    assert!(specs.len() > 50);
    for spec in specs {
        let w = winding_matrix_analytic(&spec).unwrap();
        assert!(w.is_symmetric());
        if spec.p % 2 == 0 || spec.q % 2 == 0 {
            assert!(w.all_zero(), "{spec:?}");
        } else {
            assert!(w.all_unit(), "{spec:?}");
        }
    }
}

#[test]
fn mixed_signs_follow_divisibility() {
    for spec in admissible_specs(9, 8, Rational64::new(1, 4)) {
        if spec.kind != FormationKind::TypeI || spec.p % 2 == 0 || spec.q % 2 == 0 {
            continue;
        }
        let two_n = 2 * spec.n_deputies as u32;
        let expected = (spec.q - spec.p) % two_n != 0 && (spec.q + spec.p) % two_n != 0;
        let w = winding_matrix_analytic(&spec).unwrap();
        assert_eq!(w.has_mixed_signs(), expected, "{spec:?}");
        let verdict = entanglement_verdict(&spec);
        assert_eq!(verdict == Entanglement::Strong, expected);
    }
}

fn odd_spec() -> impl Strategy<Value = FormationSpec> {
    let pairs = [(1u32, 3u32), (1, 5), (3, 5), (1, 7), (3, 7), (5, 7), (1, 2), (2, 3), (3, 4)];
    (
        prop_oneof![Just(FormationKind::TypeI), Just(FormationKind::TypeII)],
        0..pairs.len(),
        2usize..7,
        1i64..48,
    )
        .prop_map(move |(kind, k, n, f)| {
            let (p, q) = pairs[k];
            FormationSpec::with_phi0(kind, p, q, n, 1.0, Rational64::new(f, 48)).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn analytic_equals_numeric(spec in odd_spec()) {
        prop_assume!(admissibility(&spec).all());
        let a = winding_matrix_analytic(&spec).unwrap();
        let n = winding_matrix_numeric(&spec).unwrap();
        prop_assert_eq!(a, n);
    }
}

#[test]
fn circle_windings_all_equal() {
    use hubspoke::formation::Phase;
    let spec = FormationSpec::diagnostic(
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
    let w = winding_matrix_numeric(&spec).unwrap();
    assert!(w.all_unit() && !w.has_mixed_signs());
}
