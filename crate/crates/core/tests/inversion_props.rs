use levy_density::inversion::{integrability_probe, invert_grid, invert_radial, pt_zero, Axis, Grid, Integrability};
use levy_density::library;
use levy_density::Error;
use proptest::prelude::*;

fn line(lo: f64, hi: f64, step: f64) -> Grid {
    Grid::Line { x: Axis::with_step(lo, hi, step).unwrap() }
}

/// Trapezoid sum of grid values.
fn grid_integral(grid: &Grid, values: &[f64]) -> f64 {
    match grid {
        Grid::Line { x } => {
            let h = (x.stop - x.start) / (x.count - 1) as f64;
            let inner: f64 = values.iter().sum();
            h * (inner - 0.5 * (values[0] + values[values.len() - 1]))
        }
        _ => unreachable!(),
    }
}

#[test]
fn mass_is_conserved_for_light_tailed_models() {
    let grid = line(-40.0, 40.0, 0.02);
    let models = [
        ("gaussian", library::gaussian(1), 1.0),
        ("tempered", library::tempered_stable(1, 1.5, 1.0), 1.0),
        ("truncated", library::truncated_stable(1, 1.5, 1.0), 1.0),
        ("log kernel", library::log_kernel(1), 1.0),
        ("sym_gamma", library::sym_gamma(1), 2.0),
    ];
    for (name, m, t) in models {
        let f = invert_grid(&m, t, &grid).unwrap();
        let total = grid_integral(&grid, &f.values);
        assert!((f.mass - 1.0).abs() <= 1e-6 + f.tail_bound, "{name}: spectral mass {}", f.mass);
        assert!((total - f.mass).abs() < 1e-5, "{name}: grid sum {total} vs spectral {}", f.mass);
    }
}

#[test]
fn radial_and_line_agree_in_one_dimension() {
    let radii: Vec<f64> = (0..=30).map(|i| 0.2 * i as f64).collect();
    for m in [library::stable(1, 1.2), library::tempered_stable(1, 0.9, 1.0), library::sym_gamma(1)] {
        let a = invert_radial(&m, 1.0, &radii).unwrap();
        let b = invert_grid(&m, 1.0, &Grid::Line { x: Axis::new(0.0, 6.0, 31) }).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() <= 1e-8, "{x} vs {y}");
        }
    }
}

#[test]
fn plane_gaussian_factorizes() {
    let axis = Axis::new(-2.0, 2.0, 9);
    let grid = Grid::Plane { x: axis.clone(), y: axis.clone() };
    let f = invert_grid(&library::gaussian(2), 1.0, &grid).unwrap();
    let xs = axis.points();
    for (j, y) in xs.iter().enumerate() {
        for (i, x) in xs.iter().enumerate() {
            let want = (-(x * x + y * y) / 4.0).exp() / (4.0 * std::f64::consts::PI);
            assert!((f.values[j * xs.len() + i] - want).abs() < 1e-10);
        }
    }
}

#[test]
fn refusals_are_verdicts() {
    let m = library::sym_gamma(1);
    let probe = integrability_probe(&m, 0.3).unwrap();
    assert_eq!(probe.verdict, Integrability::NotIntegrable);
    let err = invert_grid(&m, 0.3, &line(-1.0, 1.0, 0.5)).unwrap_err();
    assert!(err.is_refusal(), "{err}");
    let atoms = library::compound_poisson(1, 1.0, 1.0);
    let err = pt_zero(&atoms, 1.0).unwrap_err();
    assert!(matches!(err, Error::WindowInsufficient { .. } | Error::NonIntegrable { .. }), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// (2π)^n p_t(0) = ∫e^{-t Re ψ} decreases in t, and p_t(x) ≤ p_t(0).
    #[test]
    fn smoothing_in_time(which in 0usize..5, t in 0.6..3.0f64, dt in 0.05..2.0f64, x in -5.0..5.0f64) {
        let m = [
            library::gaussian(1),
            library::stable(1, 1.0),
            library::stable(1, 0.8),
            library::sym_gamma(1),
            library::truncated_stable(1, 1.5, 1.0),
        ][which].clone();
        let a = pt_zero(&m, t).unwrap();
        let b = pt_zero(&m, t + dt).unwrap();
        prop_assert!(b <= a * (1.0 + 1e-12));
        let f = invert_grid(&m, t, &Grid::Line { x: Axis::new(x, x, 1) }).unwrap();
        prop_assert!(f.values[0] <= a * (1.0 + 1e-10));
    }
}
