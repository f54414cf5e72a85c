use ballistic::greenslab::SlabKernel;
use ballistic::oned::{chain_exit_probability, ChainSpec};
use ballistic::rng::StreamKey;
use ballistic::sde::smoothed_rho;
use ballistic::stats::ks_two_sample;
use ballistic::{sample_environment, EnvSpec, Exec};
use proptest::prelude::*;
use rand::Rng;

fn spec_strategy() -> impl Strategy<Value = EnvSpec> {
    (1usize..=4, 0.0f64..0.5, -1.0f64..=1.0, 0.55f64..1.0, 1.0f64..3.0, any::<bool>(), any::<bool>()).prop_map(|(d, eps, frac, r, nu, gen, off)| {
        let sd = (d as f64).sqrt();
        let mut s = EnvSpec::new(d, eps, frac * eps).with_range(2.0 * r * sd + 1e-3, r * sd).with_offset(off);
        if gen {
            s = s.with_generated_diffusion(nu);
        }
        s
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn drift_respects_its_bound(spec in spec_strategy(), seed in any::<u64>(), pts in prop::collection::vec(-50.0f64..50.0, 4 * 8)) {
        let env = sample_environment(&spec, seed).unwrap();
        for x in pts.chunks(4).map(|c| &c[..spec.dim]) {
            let b = env.drift_at(x);
            let n = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!(n <= spec.drift_bound * (1.0 + 1e-12) + 1e-15);
            prop_assert_eq!(b, env.drift_at(x));
        }
    }

    #[test]
    fn spec_text_round_trips(spec in spec_strategy()) {
        prop_assert_eq!(EnvSpec::from_text(&spec.to_text()).unwrap(), spec);
    }

    #[test]
    fn chain_probability_is_monotone(rho in prop::collection::vec(0.05f64..20.0, 3..60)) {
        let n = rho.len() as i64 + 1;
        let c = ChainSpec::new(0, n, rho).unwrap();
        let mut prev = 1.0;
        for k in 0..=n {
            let p = chain_exit_probability(&c, k);
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!(p <= prev + 1e-15);
            prev = p;
        }
    }

    #[test]
    fn smoothed_odds_are_capped_and_monotone(kp in 0usize..500, kq in 0usize..500, cap in 1.0f64..1e4) {
        let r = smoothed_rho(kp, kq, 0.5, cap);
        prop_assert!(r > 0.0 && r <= cap);
        prop_assert!(smoothed_rho(kp, kq + 1, 0.5, cap) >= r);
        prop_assert!(smoothed_rho(kp + 1, kq, 0.5, cap) <= r);
    }

    #[test]
    fn streams_are_reproducible(seed in any::<u64>(), tag in 0u64..8, unit in any::<u64>(), i in 0u64..1000) {
        let k = StreamKey::new(seed, tag, unit);
        let a: Vec<u64> = (0..4).map({ let mut r = k.rng(i); move |_| r.random::<u64>() }).collect();
        let b: Vec<u64> = (0..4).map({ let mut r = k.rng(i); move |_| r.random::<u64>() }).collect();
        let c: Vec<u64> = (0..4).map({ let mut r = k.rng(i + 1); move |_| r.random::<u64>() }).collect();
        prop_assert_eq!(&a, &b);
        prop_assert_ne!(&a, &c);
    }

    #[test]
    fn exec_map_ignores_worker_count(n in 0usize..200, w in 1usize..9) {
        let f = |i: usize| (i as f64).sin().to_bits();
        prop_assert_eq!(Exec::sequential().map(n, f), Exec::with_workers(w).map(n, f));
    }

    #[test]
    fn ks_of_a_sample_with_itself_is_zero(xs in prop::collection::vec(-10.0f64..10.0, 2..100)) {
        let r = ks_two_sample(&xs, &xs);
        prop_assert_eq!(r.statistic, 0.0);
        prop_assert!(r.p_value > 0.99);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn slab_green_is_symmetric_and_positive(
        x1 in -0.95f64..0.95, y1 in -0.95f64..0.95,
        xt in prop::collection::vec(-3.0f64..3.0, 3),
        yt in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        let kern = SlabKernel::new(4, 1.0).unwrap();
        let x = [x1, xt[0], xt[1], xt[2]];
        let y = [y1, yt[0], yt[1], yt[2]];
        prop_assume!(x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() > 1e-4);
        let gxy = kern.green_function(&x, &y).unwrap();
        let gyx = kern.green_function(&y, &x).unwrap();
        prop_assert!(gxy > 0.0);
        prop_assert!((gxy - gyx).abs() <= 1e-14 * gxy.max(1e-300) + 1e-300, "{} vs {}", gxy, gyx);
        let r = x.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!(gxy <= kern.free_green(r) * (1.0 + 1e-9));
    }
}
