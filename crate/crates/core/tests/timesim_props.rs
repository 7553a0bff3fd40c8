use balance_limits_core::timesim::simulate;
use balance_limits_core::{PendulumParams, RationalTF, SimConfig, Trajectory};
use balance_limits_testkit::{psd_test_loop, stable_test_loops};

fn open_loop(dt: f64, duration: f64, theta0: f64) -> SimConfig {
    SimConfig {
        params: PendulumParams::case_study(),
        controller: RationalTF::constant(0.0),
        delay: 0.3,
        dt,
        duration,
        sensor_noise_std: 0.0,
        actuation_noise_std: 0.0,
        seed: 1,
        initial_state: [0.0, 0.0, theta0, 0.0],
    }
}

/// Least-squares slope of `ln|θ|` against `t` over `[t0, t1]`.
fn growth_exponent(tr: &Trajectory, t0: f64, t1: f64) -> f64 {
    let pts: Vec<(f64, f64)> =
        tr.t.iter()
            .zip(&tr.theta)
            .filter(|(t, _)| **t >= t0 && **t <= t1)
            .map(|(&t, &th)| (t, th.abs().ln()))
            .collect();
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    sxy / sxx
}

#[test]
fn open_loop_growth_matches_pole() {
    let tr = simulate(&open_loop(1e-3, 5.0, 1e-3)).unwrap();
    assert!(!tr.diverged);
    let p = PendulumParams::case_study().pole_magnitude();
    let rate = growth_exponent(&tr, 1.0, 4.0);
    assert!((rate - p).abs() <= 0.02 * p, "rate {rate} vs p {p}");
}

#[test]
fn linear_in_initial_condition() {
    let base = simulate(&open_loop(1e-3, 2.0, 1e-3)).unwrap();
    let scaled = simulate(&open_loop(1e-3, 2.0, 3.7e-3)).unwrap();
    for (a, b) in base.z.iter().zip(&scaled.z) {
        assert!((3.7 * a - b).abs() <= 1e-9 * b.abs().max(1e-300));
    }
    let cfg = stable_test_loops()[0].clone();
    let closed = |x0: f64| {
        simulate(&SimConfig {
            params: cfg.params,
            controller: cfg.lp.controller.clone(),
            delay: cfg.lp.delay,
            dt: 1e-3,
            duration: 3.0,
            sensor_noise_std: 0.0,
            actuation_noise_std: 0.0,
            seed: 0,
            initial_state: [x0, 0.0, 0.5 * x0, 0.0],
        })
        .unwrap()
    };
    let (a, b) = (closed(0.01), closed(-0.25));
    for (u, v) in a.u.iter().zip(&b.u) {
        assert!((-25.0 * u - v).abs() <= 1e-9 * (1.0 + v.abs()));
    }
}

/// Max |Δz| between runs at `dt` and `dt/2`, compared on the coarse grid.
fn refinement_error(dt: f64) -> f64 {
    let coarse = simulate(&open_loop(dt, 2.0, 1e-3)).unwrap();
    let fine = simulate(&open_loop(dt / 2.0, 2.0, 1e-3)).unwrap();
    coarse
        .z
        .iter()
        .enumerate()
        .map(|(i, z)| (z - fine.z[2 * i]).abs())
        .fold(0.0, f64::max)
}

#[test]
fn rk4_convergence_order() {
    let (e1, e2) = (refinement_error(0.02), refinement_error(0.01));
    let order = (e1 / e2).log2();
    assert!(order >= 3.5, "order {order}: {e1} {e2}");
}

#[test]
fn deterministic_for_fixed_seed() {
    let tl = psd_test_loop();
    let cfg = SimConfig {
        params: tl.params,
        controller: tl.lp.controller.clone(),
        delay: tl.lp.delay,
        dt: 1e-3,
        duration: 5.0,
        sensor_noise_std: 1e-3,
        actuation_noise_std: 0.1,
        seed: 99,
        initial_state: [0.0; 4],
    };
    let a = simulate(&cfg).unwrap();
    let b = simulate(&cfg).unwrap();
    assert_eq!(a, b);
    let bits = |t: &Trajectory| t.z.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    let other = simulate(&SimConfig { seed: 100, ..cfg }).unwrap();
    assert_ne!(a.z, other.z);
}

#[test]
fn stabilized_loop_stays_bounded_under_noise() {
    let tl = psd_test_loop();
    let tr = simulate(&SimConfig {
        params: tl.params,
        controller: tl.lp.controller.clone(),
        delay: tl.lp.delay,
        dt: 1e-3,
        duration: 60.0,
        sensor_noise_std: 1e-3,
        actuation_noise_std: 0.0,
        seed: 5,
        initial_state: [0.0; 4],
    })
    .unwrap();
    assert!(!tr.diverged);
    assert!(tr.z.iter().all(|z| z.abs() < 1.0));
    let dt_ok =
        tr.t.windows(2)
            .all(|w| ((w[1] - w[0]) - 1e-3).abs() < 1e-12);
    assert!(dt_ok);
}
