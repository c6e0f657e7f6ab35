use levy_density::library;
use levy_density::model::{Interpolation, MeasureSpec, ModelSpec, RadialTable};
use levy_density::modelfile::{model_hash, parse, save};
use proptest::prelude::*;

fn family() -> impl Strategy<Value = ModelSpec> {
    (1usize..=3, 0usize..5, 0.05..1.95f64, 0.1..10.0f64).prop_map(|(n, kind, alpha, scale)| match kind {
        0 => library::stable(n, alpha),
        1 => library::tempered_stable(n, alpha, scale),
        2 => library::truncated_stable(n, alpha, scale),
        3 => library::compound_poisson(n, scale, alpha),
        _ => library::gaussian(n),
    })
}

fn table() -> impl Strategy<Value = ModelSpec> {
    (1usize..=2, prop::collection::vec(0.01..5.0f64, 2..8)).prop_map(|(n, density)| {
        let r = (0..density.len()).map(|i| 0.1 + 0.3 * i as f64).collect();
        let mut m = library::gaussian(n);
        m.gaussian = vec![0.0; n * n];
        m.measure = MeasureSpec::RadialTable(RadialTable {
            r,
            density,
            interpolation: Interpolation::Linear,
        });
        m.isotropic = true;
        m
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn saved_models_parse_back(m in prop_oneof![family(), table()], drift in -3.0..3.0f64) {
        let mut m = m;
        if !m.isotropic {
            m.drift[0] = drift;
        }
        let text = save(&m);
        let back = parse(&text).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(model_hash(&back), model_hash(&m));
        prop_assert_eq!(save(&back), text);
    }
}

#[test]
fn hash_separates_parameters() {
    let a = model_hash(&library::stable(1, 1.5));
    let b = model_hash(&library::stable(1, 1.5000001));
    let c = model_hash(&library::stable(2, 1.5));
    assert_ne!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.len(), 16);
}
