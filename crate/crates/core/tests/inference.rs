use proptest::prelude::*;

use swarch::inference::{enumerate_future_scenarios, ln_joint_xi_density, PastPosterior};
use swarch::model::{simulate_x, ModelParams};
use swarch::{InferenceConfig, TailMode};

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

proptest! {
    #[test]
    fn scenario_weights_are_binomial(n in 1usize..40, nu in 1e-4f64..0.3, order in 0usize..4, i_prev in 1u64..1000) {
        let set = enumerate_future_scenarios(i_prev, 50, 50 + n - 1, nu, order).unwrap();
        let k_max = order.min(n);
        let want: f64 = (0..=k_max).map(|k| binomial(n, k) * nu.powi(k as i32) * (1.0 - nu).powi((n - k) as i32)).sum();
        prop_assert!((set.normalization - want).abs() < 1e-12);
        let count: f64 = (0..=k_max).map(|k| binomial(n, k)).sum();
        prop_assert_eq!(set.scenarios.len() as f64, count);
        for s in &set.scenarios {
            let states = s.states();
            prop_assert_eq!(states.len(), n);
            prop_assert_eq!(states.iter().filter(|&&v| v == 1).count() >= s.order.min(1), true);
            let mut prev = i_prev;
            for (t, &v) in (50..).zip(&states) {
                prop_assert!(v == prev + 1 || (v == 1 && s.restart_times.contains(&t)));
                prev = v;
            }
        }
    }
}

#[test]
fn posterior_samples_are_chain_strings() {
    let p = ModelParams::new(0.224, 0.002, 5.5, 0.3, 21, 0.0, 0.0).unwrap();
    let x = simulate_x(&p, 200, 8).unwrap().x;
    let cfg = InferenceConfig::default();
    let post = PastPosterior::new(&x, 201, &p, &cfg).unwrap();
    let a = post.sample(50, 4).unwrap();
    assert_eq!(a, post.sample(50, 4).unwrap());
    for path in &a {
        assert_eq!(path.t_start, 180);
        assert_eq!(path.states.len(), 21);
        assert!(path.states.windows(2).all(|w| w[1] == 1 || w[1] == w[0] + 1));
        assert!((0.0..=1.0).contains(&path.weight));
    }
}

#[test]
fn tail_closure_converges_to_a_long_exact_sum() {
    let p = ModelParams::new(0.224, 0.0005, 5.5, 0.3, 21, 0.0, 0.0).unwrap();
    let x = simulate_x(&p, 7, 2).unwrap().x;
    let fixed = [None; 7];
    let closed = InferenceConfig { i_max: Some(200), tail: TailMode::EulerMaclaurin, ..InferenceConfig::default() };
    let exact = InferenceConfig { i_max: Some(200_000), tail: TailMode::Truncate, ..InferenceConfig::default() };
    let a = ln_joint_xi_density(&x, &fixed, &p, &closed).unwrap();
    let b = ln_joint_xi_density(&x, &fixed, &p, &exact).unwrap();
    assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    let short = InferenceConfig { i_max: Some(200), tail: TailMode::Truncate, ..InferenceConfig::default() };
    assert!(ln_joint_xi_density(&x, &fixed, &p, &short).unwrap() < b);
}

#[test]
fn invalid_windows_are_rejected() {
    let p = ModelParams::new(0.224, 0.002, 5.5, 0.3, 5, 0.0, 0.0).unwrap();
    let x = simulate_x(&p, 50, 1).unwrap().x;
    let wide = InferenceConfig { tau: 3, ..InferenceConfig::default() };
    assert!(PastPosterior::new(&x, 40, &p, &wide).is_err());
    let ok = InferenceConfig { tau: 2, ..InferenceConfig::default() };
    assert!(PastPosterior::new(&x, 40, &p, &ok).is_ok());
    assert!(PastPosterior::new(&x, 7, &p, &ok).is_err());
}
