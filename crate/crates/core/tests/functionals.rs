use levy_density::asymptotics::{doubling_report, phi_integrability, PhiSymbol};
use levy_density::diagnostics::{hw_functional, tail_mass_functional, Verdict};
use levy_density::library;
use levy_density::ratio_limit::{chi_tail_mass, inf_re_psi_outside, ratio_px_p0, ratio_report};
use proptest::prelude::*;

#[test]
fn widening_the_ladder_keeps_divergence() {
    for m in [library::gaussian(1), library::stable(1, 0.5), library::stable(2, 1.5)] {
        let narrow = hw_functional(&m, 4..=30, None).unwrap();
        let wide = hw_functional(&m, 4..=44, None).unwrap();
        assert_eq!(narrow.verdict, Verdict::Diverges);
        assert_eq!(wide.verdict, Verdict::Diverges);
    }
    let narrow = hw_functional(&library::sym_gamma(1), 4..=30, None).unwrap();
    let wide = hw_functional(&library::sym_gamma(1), 4..=44, None).unwrap();
    assert_ne!(narrow.verdict, Verdict::Vanishes);
    assert_ne!(wide.verdict, Verdict::Vanishes);
}

#[test]
fn bounded_growth_of_the_log_kernel() {
    let rep = hw_functional(&library::sym_gamma(1), 4..=40, Some(2.0)).unwrap();
    assert_eq!(rep.verdict, Verdict::Bounded);
    assert!((rep.trailing_min - 2.0).abs() < 0.05, "{}", rep.trailing_min);
    assert!(rep.threshold_compare.unwrap().pass);
}

#[test]
fn tail_mass_functional_in_the_plane() {
    let rep = tail_mass_functional(&library::sym_gamma(2), 4..=30).unwrap();
    assert!(rep.values.iter().all(|v| v.is_finite() && *v > 0.0));
    assert_ne!(rep.verdict, Verdict::Vanishes);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// For |ξ|^α in n dimensions the doubling constant is 2^{n/α},
    /// so (1+φ)^{-κ/2} ∈ L² whenever κ > n/α.
    #[test]
    fn finite_doubling_gives_phi_integrability(n in 1usize..=2, alpha in 0.6..2.0f64, extra in 0.05..2.0f64) {
        let m = library::stable(n, alpha);
        let d = doubling_report(&m, (1.0, 100.0)).unwrap();
        prop_assert!(d.finite);
        let lambda = n as f64 / alpha;
        prop_assert!((d.alpha - lambda).abs() < 1e-3 * lambda, "{} vs {lambda}", d.alpha);
        let p = phi_integrability(&PhiSymbol::Model(m), lambda + extra).unwrap();
        prop_assert!(p.holds);
    }

    #[test]
    fn tail_mass_and_gap_are_sane(which in 0usize..4, t in 0.5..20.0f64, delta in 0.2..3.0f64) {
        let m = [
            library::gaussian(1),
            library::stable(1, 1.0),
            library::sym_gamma(1),
            library::tempered_stable(1, 1.2, 1.0),
        ][which].clone();
        let mass = chi_tail_mass(&m, t.max(2.5), delta).unwrap();
        prop_assert!((0.0..=1.0 + 1e-9).contains(&mass), "{mass}");
        let gap = inf_re_psi_outside(&m, delta).unwrap();
        prop_assert!(gap.value >= 0.0);
    }
}

#[test]
fn ratio_envelope_holds() {
    for m in [library::gaussian(1), library::stable(1, 1.0), library::sym_gamma(1)] {
        let rep = ratio_report(&m, &[2.5, 5.0, 10.0, 20.0], 1.0, 1.0, None).unwrap();
        assert!(rep.envelope_holds, "{rep:?}");
        let masses: Vec<f64> = rep.rungs.iter().map(|r| r.tail_mass).collect();
        assert!(masses.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)), "{masses:?}");
    }
}

#[test]
fn point_ratio_climbs_to_one() {
    for m in [library::gaussian(1), library::stable(1, 1.0)] {
        let r: Vec<f64> = [1.0, 4.0, 16.0, 64.0, 256.0].iter().map(|&t| ratio_px_p0(&m, t, &[1.0]).unwrap()).collect();
        assert!(r.windows(2).all(|w| w[1] >= w[0]), "{r:?}");
        assert!(r.iter().all(|v| *v <= 1.0 + 1e-9));
        assert!(1.0 - r[r.len() - 1] < 0.01, "{r:?}");
    }
    // exact forms: e^{-x²/4t} and t²/(t²+x²)
    let g = ratio_px_p0(&library::gaussian(1), 2.0, &[1.0]).unwrap();
    assert!((g - (-1.0f64 / 8.0).exp()).abs() < 1e-8);
    let c = ratio_px_p0(&library::stable(1, 1.0), 2.0, &[1.0]).unwrap();
    assert!((c - 0.8).abs() < 1e-8);
}
