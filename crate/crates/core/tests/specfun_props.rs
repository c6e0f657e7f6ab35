use levy_density::specfun::{h_kernel, h_kernel_detailed};
use proptest::prelude::*;

#[test]
fn large_argument_envelope() {
    for nu in [-0.5, 0.0, 0.5, 1.0, 1.5, 2.0] {
        let bound = (2.0 / std::f64::consts::PI).sqrt() * 1.1;
        for i in 0..=400 {
            let z = 50.0 + 2.5 * i as f64;
            let h = h_kernel(nu, z).unwrap();
            // |J_ν(z)| ≲ √(2/(πz)), so |H_ν(z)|·z^{ν+1/2} ≤ 2^ν Γ(ν+1)·√(2/π)
            let scale = 2f64.powf(nu) * levy_density::specfun::gamma_fn(nu + 1.0).unwrap();
            assert!(h.abs() * z.powf(nu + 0.5) <= scale * bound, "nu={nu} z={z}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn half_integer_reductions(z in 1e-6..50.0f64) {
        prop_assert!((h_kernel(-0.5, z).unwrap() - z.cos()).abs() <= 1e-10);
        prop_assert!((h_kernel(0.5, z).unwrap() - z.sin() / z).abs() <= 1e-10);
    }

    #[test]
    fn derivative_identity(z in 0.01..50.0f64, which in 0usize..4) {
        let nu = [-0.5, 0.0, 0.5, 1.0][which];
        let h = 1e-5 * z.max(1.0);
        let fd = (h_kernel(nu, z + h).unwrap() - h_kernel(nu, z - h).unwrap()) / (2.0 * h);
        let exact = -z * h_kernel(nu + 1.0, z).unwrap() / (2.0 * (nu + 1.0));
        prop_assert!((fd - exact).abs() <= 1e-6, "{fd} vs {exact}");
    }

    #[test]
    fn bounded_by_one_with_finite_error(z in 0.0..200.0f64, nu in -0.5..4.0f64) {
        let r = h_kernel_detailed(nu, z).unwrap();
        prop_assert!(r.est_error.is_finite());
        prop_assert!(r.value.abs() <= 1.0 + 1e-12);
    }
}
