use levy_density::library;
use levy_density::model::ModelSpec;
use levy_density::rearrangement::RearrangementTable;
use proptest::prelude::*;
use std::sync::OnceLock;

fn tables() -> &'static [RearrangementTable] {
    static CELL: OnceLock<Vec<RearrangementTable>> = OnceLock::new();
    CELL.get_or_init(|| {
        let models: Vec<ModelSpec> = vec![
            library::gaussian(1),
            library::stable(2, 1.3),
            library::sym_gamma(1),
            library::builtin("exa3_atoms").unwrap(),
            library::compound_poisson(2, 1.0, 2.0),
        ];
        models.iter().map(|m| RearrangementTable::build(m, 20.0, 64).unwrap()).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn generalized_inverse_sandwich(which in 0usize..5, log_s in -3.0..1.5f64, x in 0.01..20.0f64) {
        let table = &tables()[which];
        let s = 10f64.powf(log_s);
        let back = table.inverse(s).unwrap();
        let nu_back = table.nu(back).unwrap();
        prop_assert!(nu_back >= s * (1.0 - 1e-9), "ν(ν⁻¹({s})) = {nu_back}");
        let nu = table.nu(x).unwrap();
        if nu.is_finite() && nu > 0.0 {
            let there = table.inverse(nu).unwrap();
            prop_assert!(there <= x * (1.0 + 1e-9) + 1e-12, "ν⁻¹(ν({x})) = {there}");
        }
    }

    #[test]
    fn rearrangement_is_decreasing(which in 0usize..5, t in 0.1..5.0f64, a in 0.0..10.0f64, b in 0.0..10.0f64) {
        let table = &tables()[which];
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(table.u_star(t, hi).unwrap() <= table.u_star(t, lo).unwrap());
    }
}

#[test]
fn nu_is_nondecreasing_on_nodes() {
    for table in tables() {
        let finite: Vec<f64> = table.nu_values.iter().cloned().take_while(|v| v.is_finite()).collect();
        assert!(finite.windows(2).all(|w| w[0] <= w[1]), "{:?}", table.method);
    }
}
