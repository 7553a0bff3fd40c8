use balance_limits_core::lti::default_grid;
use balance_limits_core::robustness::{fragility, interpolation_check};
use balance_limits_core::{nyquist_stable, DelayLoop, Orientation, PendulumParams, RationalTF};
use balance_limits_testkit::{closed_loop_roots, stable_test_loops};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[test]
fn zero_delay_verdict_matches_closed_loop_roots() {
    let mut rng = StdRng::seed_from_u64(42);
    let mut checked = 0;
    let mut stable_seen = 0;
    while checked < 50 {
        let pp = PendulumParams {
            cart_mass: rng.random_range(1.0..20.0),
            stick_mass: rng.random_range(0.0..2.0),
            stick_length: rng.random_range(0.3..2.0),
            fixation_point: rng.random_range(0.0..2.5),
            gravity: 9.81,
        };
        let orient = if rng.random_bool(0.8) {
            Orientation::Upright
        } else {
            Orientation::Downward
        };
        // Lead-lag controllers k (s + b)² / (s + a)², mostly with negative
        // gain so the upright loop has a chance of being stabilized.
        let k = rng.random_range(-500.0..100.0);
        let a = rng.random_range(5.0..60.0);
        let b = rng.random_range(0.1..5.0);
        let c =
            RationalTF::new(vec![k, 2.0 * k * b, k * b * b], vec![1.0, 2.0 * a, a * a]).unwrap();
        let plant = pp.plant_tf(orient);
        let roots = closed_loop_roots(&plant, &c);
        if roots.iter().any(|r| r.re.abs() < 1e-3) {
            continue;
        }
        let rhp = roots.iter().filter(|r| r.re > 0.0).count() as i64;
        let lp = DelayLoop::new(plant, c, 0.0).unwrap();
        let report = nyquist_stable(&lp).unwrap();
        assert_eq!(
            report.closed_loop_rhp_poles, rhp,
            "{pp:?} {orient:?} k={k} a={a} b={b}: {roots:?}"
        );
        assert_eq!(report.stable, rhp == 0);
        stable_seen += usize::from(rhp == 0);
        checked += 1;
    }
    assert!(stable_seen > 0, "sample never produced a stable loop");
}

#[test]
fn test_loops_are_stable_and_interpolate() {
    for tl in stable_test_loops() {
        let report = nyquist_stable(&tl.lp).unwrap();
        assert!(report.stable, "{}: {report:?}", tl.name);
        let (p, q) = tl.params.rhp_pole_zero();
        let r = interpolation_check(&tl.lp, p, q).unwrap();
        assert!(r.t_deviation <= 1e-9, "{}: {r:?}", tl.name);
        if let Some(d) = r.s_deviation {
            assert!(d <= 1e-9, "{}: {r:?}", tl.name);
        }
    }
}

#[test]
fn test_loops_respect_hinf_bound() {
    let grid = default_grid();
    for tl in stable_test_loops() {
        let f = fragility(&tl.params, tl.lp.delay).unwrap().fragility;
        let (_, t) = tl.lp.loop_response(&grid).unwrap();
        let peak = t.peak().unwrap().1;
        assert!(peak.ln() >= f - 1e-6, "{}: ln {peak} < {f}", tl.name);
    }
}

#[test]
fn delay_destabilizes_test_loop() {
    let tl = &stable_test_loops()[0];
    let slow = DelayLoop::new(tl.lp.plant.clone(), tl.lp.controller.clone(), 0.3).unwrap();
    assert!(!nyquist_stable(&slow).unwrap().stable);
}
