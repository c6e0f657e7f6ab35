use levy_density::exponent::{eval_psi, eval_re_psi, iso_g, quadratic_majorant};
use levy_density::library;
use levy_density::model::{Atom, AtomSet, MeasureSpec, ModelSpec};
use levy_density::oracle::direct_exponent;
use proptest::prelude::*;
use proptest::strategy::ValueTree;

/// Drift, correlated Gaussian part and two one-sided atoms in the plane.
fn skewed_plane() -> ModelSpec {
    ModelSpec {
        dim: 2,
        drift: vec![0.3, -0.1],
        gaussian: vec![1.0, 0.2, 0.2, 0.5],
        measure: MeasureSpec::Atoms(AtomSet {
            atoms: vec![
                Atom::Point { point: vec![1.0, 0.5], mass: 0.7 },
                Atom::Point { point: vec![-0.2, 0.9], mass: 1.3 },
            ],
            ladder: None,
        }),
        isotropic: false,
    }
}

fn zoo() -> Vec<ModelSpec> {
    vec![
        library::gaussian(2),
        library::stable(1, 0.7),
        library::stable(2, 1.3),
        library::tempered_stable(1, 1.5, 2.0),
        library::truncated_stable(2, 1.2, 0.5),
        library::sym_gamma(1),
        library::gamma(),
        library::log_kernel(1),
        library::builtin("exa3_atoms").unwrap(),
        library::builtin("exa4_atoms").unwrap(),
        library::compound_poisson(2, 1.0, 2.0),
        skewed_plane(),
    ]
}

fn point(m: &ModelSpec, raw: &[f64]) -> Vec<f64> {
    raw[..m.dim].to_vec()
}

fn coord() -> impl Strategy<Value = f64> {
    prop_oneof![-3.0..3.0f64, -300.0..300.0f64]
}

#[test]
fn vanishes_at_origin() {
    for m in zoo() {
        let v = eval_psi(&m, &vec![0.0; m.dim]).unwrap();
        assert_eq!(v.norm(), 0.0, "{m:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn real_part_nonnegative_and_conjugate_symmetric(which in 0usize..12, a in coord(), b in coord()) {
        let m = &zoo()[which];
        let xi = point(m, &[a, b]);
        let neg: Vec<f64> = xi.iter().map(|v| -v).collect();
        let p = eval_psi(m, &xi).unwrap();
        let q = eval_psi(m, &neg).unwrap();
        prop_assert!(p.re >= -1e-12 * (1.0 + p.re.abs()));
        let scale = 1e-10 * (1.0 + p.norm());
        prop_assert!((p.re - q.re).abs() <= scale && (p.im + q.im).abs() <= scale, "{p} vs {q}");
        if m.is_symmetric() {
            prop_assert!(p.im.abs() <= 1e-12 * (1.0 + p.re));
        }
    }

    #[test]
    fn square_root_subadditive(which in 0usize..12, a in coord(), b in coord(), c in coord(), d in coord()) {
        let m = &zoo()[which];
        let (x, y) = (point(m, &[a, b]), point(m, &[c, d]));
        let sum: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p + q).collect();
        let lhs = eval_psi(m, &sum).unwrap().norm().sqrt();
        let rhs = eval_psi(m, &x).unwrap().norm().sqrt() + eval_psi(m, &y).unwrap().norm().sqrt();
        prop_assert!(lhs <= rhs * (1.0 + 1e-9) + 1e-12, "{lhs} > {rhs}");
    }

    #[test]
    fn radial_exponent_matches_cartesian_quadrature(family in 0usize..3, n in 1usize..=3, log_u in -1.0..2.0f64) {
        let m = match family {
            0 => library::stable(n, 1.4),
            1 => library::tempered_stable(n, 0.8, 1.5),
            _ => library::truncated_stable(n, 1.6, 2.0),
        };
        let u = 10f64.powf(log_u);
        let a = iso_g(&m, u).unwrap();
        let b = direct_exponent(&m, u).unwrap();
        let mut xi = vec![0.0; n];
        xi[0] = u;
        let c = eval_re_psi(&m, &xi).unwrap();
        prop_assert!(((a - b) / b).abs() < 1e-6, "iso_g {a} vs direct {b}");
        prop_assert!(((a - c) / c).abs() < 1e-6, "iso_g {a} vs eval_re_psi {c}");
    }
}

#[test]
fn majorant_holds_on_a_thousand_probes() {
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let mut violations = 0;
    let mut probes = 0;
    for m in zoo() {
        let maj = quadratic_majorant(&m, 1.0).unwrap();
        for _ in 0..84 {
            let raw: Vec<f64> = (0..2).map(|_| coord().new_tree(&mut runner).unwrap().current()).collect();
            let xi = point(&m, &raw);
            let r2: f64 = xi.iter().map(|v| v * v).sum();
            let re = eval_re_psi(&m, &xi).unwrap();
            if re > maj.quadratic * r2 + maj.constant + 1e-9 * (1.0 + re) {
                violations += 1;
            }
            probes += 1;
        }
    }
    assert!(probes >= 1000);
    assert_eq!(violations, 0);
}
