use proptest::prelude::*;

use swarch::config::{params_from_kv, params_to_kv, pricing_from_kv, pricing_to_kv, KeyValues};
use swarch::mixture::VolatilityPrior;
use swarch::model::ModelParams;
use swarch::{InferenceConfig, PricingConfig, TailMode};

proptest! {
    #[test]
    fn params_round_trip(
        d in 0.01f64..0.99,
        nu in 1e-6f64..1.0,
        alpha in 0.5f64..20.0,
        beta in 1e-4f64..2.0,
        m in 1usize..60,
        mu in -0.01f64..0.01,
        r in 0.0f64..0.01,
    ) {
        let p = ModelParams::new(d, nu, alpha, beta, m, mu, r).unwrap();
        let mut kv = KeyValues::new();
        params_to_kv(&p, &mut kv);
        let text = kv.to_canonical_string();
        let back = params_from_kv(&KeyValues::parse(&text).unwrap()).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn pricing_round_trip(
        tau in 1usize..5,
        n_mc in 1usize..500,
        i_max in prop::option::of(10u64..5000),
        truncate in any::<bool>(),
        restarts in 0usize..4,
        point_mass in prop::option::of(1e-4f64..0.1),
    ) {
        let cfg = PricingConfig {
            inference: InferenceConfig {
                tau,
                n_mc,
                i_max,
                tail: if truncate { TailMode::Truncate } else { TailMode::EulerMaclaurin },
                max_future_restarts: restarts,
            },
            prior: point_mass.map_or(VolatilityPrior::InverseGamma, VolatilityPrior::PointMass),
            ..PricingConfig::default()
        };
        let mut kv = KeyValues::new();
        pricing_to_kv(&cfg, &mut kv);
        let back = pricing_from_kv(&KeyValues::parse(&kv.to_canonical_string()).unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

#[test]
fn later_sources_override_earlier_ones() {
    let mut base = KeyValues::parse("d = 0.2\nnu = 0.001\nalpha = 4\nbeta = 0.3\n").unwrap();
    base.merge(&KeyValues::parse("# override\nd = 0.3\n").unwrap());
    let p = params_from_kv(&base).unwrap();
    assert_eq!(p.d, 0.3);
    assert_eq!(p.m, 21);
    assert!(KeyValues::parse("d = 1\nd = 2\n").is_err());
    assert!(params_from_kv(&KeyValues::parse("d = 0.2\n").unwrap()).is_err());
}
