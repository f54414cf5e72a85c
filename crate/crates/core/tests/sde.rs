use ballistic::oned::{hit_right_probability, ScaleProfile};
use ballistic::rng::StreamKey;
use ballistic::sde::*;
use ballistic::{sample_environment, EnvSpec, Exec};

fn seq(dt: f64) -> Sim {
    Sim::new(dt).with_exec(Exec::sequential())
}

#[test]
fn brownian_interval_exit_time() {
    let env = sample_environment(&EnvSpec::brownian(1), 0).unwrap();
    for x in [0.0, 0.5] {
        let est = mean_exit_time(&env, &[x], &Domain::Interval { half_width: 1.0 }, 4000, &seq(1e-3), StreamKey::new(1, 0, 0)).unwrap();
        assert!(est.estimate.within(1.0 - x * x, 3.0, 0.0), "x = {x}: {:?}", est.estimate);
        assert_eq!(est.counts.timeout, 0);
    }
}

#[test]
fn bridge_correction_removes_coarse_step_bias() {
    // Without the bridge test a path started next to the face would survive
    // a coarse step far too often; the hitting probability stays exact.
    let env = sample_environment(&EnvSpec::brownian(1), 0).unwrap();
    let dom = Domain::Thresholds { direction: vec![1.0], lo: -1.0, hi: 1.0 };
    let c = exit_counts(&env, &[0.8], &dom, 4000, &seq(0.05), StreamKey::new(2, 0, 0)).unwrap();
    let p = ballistic::MCEstimate::proportion(c.positive, c.completed());
    assert!(p.within(0.9, 3.0, 0.0), "{p:?}");
}

#[test]
fn constant_drift_hitting_matches_scale_function() {
    let beta = 0.3;
    let env = sample_environment(&EnvSpec::constant(2, beta), 0).unwrap();
    let dom = Domain::Thresholds { direction: vec![1.0, 0.0], lo: -2.0, hi: 3.0 };
    let c = exit_counts(&env, &[0.0, 0.0], &dom, 4000, &seq(5e-3), StreamKey::new(3, 0, 0)).unwrap();
    let p = ballistic::MCEstimate::proportion(c.positive, c.completed());
    let e1 = sample_environment(&EnvSpec::constant(1, beta), 0).unwrap();
    let exact = hit_right_probability(&ScaleProfile::new(&e1, 4.0, 1e-3).unwrap(), 0.0, -2.0, 3.0);
    assert!(p.within(exact, 3.0, 0.0), "{p:?} vs {exact}");
}

#[test]
fn rotated_box_sees_drift_along_its_axis() {
    let d = 2;
    let env = sample_environment(&EnvSpec::constant(d, 0.5), 0).unwrap();
    let forward = Domain::box_domain(identity_rotation(d), 3.0, 3.0, 10.0);
    let backward = Domain::box_domain(rotation_to(&[-1.0, 0.0]), 3.0, 3.0, 10.0);
    let f = estimate_exit_stats(&env, &[0.0, 0.0], &forward, 800, &seq(0.01), StreamKey::new(4, 0, 0), f64::INFINITY).unwrap();
    let b = estimate_exit_stats(&env, &[0.0, 0.0], &backward, 800, &seq(0.01), StreamKey::new(4, 0, 0), f64::INFINITY).unwrap();
    assert!(f.rho_hat < 0.1 && b.rho_hat > 10.0, "{} {}", f.rho_hat, b.rho_hat);
}

#[test]
fn box_faces_are_labelled() {
    let env = sample_environment(&EnvSpec::brownian(2), 0).unwrap();
    let dom = Domain::box_domain(identity_rotation(2), 1.0, 1.0, 1.0);
    let recs = simulate(&env, &[0.0, 0.0], &dom, 400, &seq(1e-3), StreamKey::new(5, 0, 0), || ()).unwrap();
    for (r, _) in &recs {
        let x = &r.exit_point;
        match r.face {
            FaceLabel::Positive => assert!(x[0] > 0.9),
            FaceLabel::Negative => assert!(x[0] < -0.9),
            FaceLabel::Lateral => assert!(x[1].abs() > 0.9),
            FaceLabel::Timeout => panic!("timeout"),
        }
    }
    let lateral = recs.iter().filter(|(r, _)| r.face == FaceLabel::Lateral).count();
    assert!((120..280).contains(&lateral), "{lateral}");
}

#[test]
fn observer_sees_the_whole_exit_time() {
    let env = sample_environment(&EnvSpec::new(2, 0.2, 0.1), 3).unwrap();
    let mut total = 0.0;
    let c = Domain::Slab { half_width: 1.5 }.compile(2).unwrap();
    let mut rng = StreamKey::new(6, 0, 0).rng(0);
    let r = run_observed(&env, &[0.0, 0.0], &c, 0.01, &mut rng, 1e4, &mut |_: &[f64], _: &[f64], dt: f64| total += dt).unwrap();
    assert!((total - r.exit_time).abs() < 1e-9, "{total} vs {}", r.exit_time);
}

#[test]
fn results_do_not_depend_on_workers() {
    let env = sample_environment(&EnvSpec::new(3, 0.2, 0.1), 8).unwrap();
    let dom = Domain::criterion_box(3, 6.0, 5.0, env.spec().range);
    let run = |w: usize| {
        let sim = Sim::new(0.02).with_exec(Exec::with_workers(w));
        simulate(&env, &[0.0; 3], &dom, 64, &sim, StreamKey::new(7, 0, 0), || ()).unwrap()
    };
    let (a, b) = (run(1), run(8));
    for ((ra, _), (rb, _)) in a.iter().zip(&b) {
        assert_eq!(ra.exit_time.to_bits(), rb.exit_time.to_bits());
        assert_eq!(ra.exit_point, rb.exit_point);
        assert_eq!(ra.face, rb.face);
    }
}

#[test]
fn timeouts_refuse_aggregation() {
    let env = sample_environment(&EnvSpec::brownian(1), 0).unwrap();
    let sim = seq(0.01).with_max_time(0.05);
    let err = mean_exit_time(&env, &[0.0], &Domain::Interval { half_width: 5.0 }, 20, &sim, StreamKey::new(8, 0, 0)).unwrap_err();
    assert!(matches!(err, ballistic::Error::Refused(_)), "{err}");
}

#[test]
fn slab_ladder_steps_are_symmetric_for_brownian_motion() {
    let env = sample_environment(&EnvSpec::brownian(2), 0).unwrap();
    let ladder = SlabLadder::new(3.0, 1.0, vec![1.0, 0.0]).unwrap();
    let key = StreamKey::new(9, 0, 0);
    let mut up = 0;
    let n = 2000;
    for i in 0..n {
        let mut rng = key.rng(i);
        let (s, r) = run_to_neighbor_slab(&env, &[0.0, 0.0], &ladder, None, 0.01, &mut rng, None).unwrap();
        assert!(ladder.in_slab(s as i64, &r.exit_point) || r.exit_time == 0.0);
        up += (s > 0) as usize;
    }
    let p = ballistic::MCEstimate::proportion(up, n as usize);
    assert!(p.within(0.5, 3.0, 0.0), "{p:?}");
}

#[test]
fn exit_time_bracket_in_weak_drift() {
    let env = sample_environment(&EnvSpec::new(2, 0.1, 0.05), 2).unwrap();
    let est = mean_exit_time(&env, &[0.5, 0.0], &Domain::Slab { half_width: 2.5 }, 600, &seq(0.01), StreamKey::new(10, 0, 0)).unwrap();
    assert!(est.bracket.unwrap().within, "{est:?}");
}
