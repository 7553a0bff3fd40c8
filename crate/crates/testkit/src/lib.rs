//! Test fixtures: pole-placement controllers for the upright plant,
//! zero-delay closed-loop roots, and seeded random oracle instances.

use balance_limits_core::lti::RationalTF;
use balance_limits_core::plant::{Orientation, PendulumParams};
use balance_limits_core::poly;
use balance_limits_core::robustness::ConstructedT;
use balance_limits_core::{Complex64, DelayLoop};
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Real monic polynomial with the given roots (conjugates must be paired).
pub fn poly_from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (i, &a) in c.iter().enumerate() {
            next[i] += a;
            next[i + 1] -= a * r;
        }
        c = next;
    }
    c.iter().map(|z| z.re).collect()
}

/// Controller `N_C/D_C` with `D_C` monic of degree `deg(D_P) − 1` such that
/// `D_P D_C + N_P N_C` has leading coefficient `lead(D_P)` and the given
/// roots. Solves the Sylvester system of the Diophantine equation.
pub fn place_poles(plant: &RationalTF, roots: &[Complex64]) -> RationalTF {
    let dp = plant.den();
    let np = plant.num();
    let n = dp.len() - 1;
    let nc = n - 1;
    let total = n + nc;
    assert_eq!(
        roots.len(),
        total,
        "need deg(D_P) + deg(D_P) - 1 closed-loop roots"
    );
    let target: Vec<f64> = poly_from_roots(roots).iter().map(|c| c * dp[0]).collect();
    // Unknowns: d_1..d_nc of D_C (monic), then n_0..n_nc of N_C.
    let unknowns = nc + nc + 1;
    let rows = total + 1;
    let mut a = DMatrix::<f64>::zeros(rows, unknowns);
    let mut b = DVector::<f64>::from_vec(target.clone());
    // Known part from the monic leading term s^nc · D_P.
    for (i, &c) in dp.iter().enumerate() {
        b[i] -= c;
    }
    for j in 0..nc {
        // s^(nc-1-j) · D_P occupies rows j+1 ..
        for (i, &c) in dp.iter().enumerate() {
            a[(i + j + 1, j)] += c;
        }
    }
    for j in 0..=nc {
        // s^(nc-j) · N_P, right-aligned.
        let shift = nc - j;
        let len = np.len();
        for (i, &c) in np.iter().enumerate() {
            let row = rows - 1 - shift - (len - 1 - i);
            a[(row, nc + j)] += c;
        }
    }
    // Row 0 is the leading coefficient, already matched.
    let a = a.rows(1, total).into_owned();
    let b = DVector::from_iterator(total, b.iter().skip(1).copied());
    let x = a
        .lu()
        .solve(&b)
        .expect("plant numerator and denominator are coprime");
    let mut den = vec![1.0];
    den.extend(x.iter().take(nc));
    let num: Vec<f64> = x.iter().skip(nc).copied().collect();
    RationalTF::new(num, den).expect("monic denominator")
}

/// Roots of a real polynomial (descending coefficients) from the companion
/// matrix eigenvalues.
pub fn roots(coeffs: &[f64]) -> Vec<Complex64> {
    let c = poly::trim(coeffs);
    let n = c.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -c[j + 1] / c[0];
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect()
}

/// Eigenvalues of a square matrix given by rows.
pub fn eigenvalues<const N: usize>(a: &[[f64; N]; N]) -> Vec<Complex64> {
    DMatrix::from_fn(N, N, |i, j| a[i][j])
        .complex_eigenvalues()
        .iter()
        .map(|z| Complex64::new(z.re, z.im))
        .collect()
}

/// Roots of `D_P D_C + N_P N_C`, the closed loop at zero delay.
pub fn closed_loop_roots(plant: &RationalTF, controller: &RationalTF) -> Vec<Complex64> {
    let cl = poly::add(
        &poly::mul(plant.den(), controller.den()),
        &poly::mul(plant.num(), controller.num()),
    );
    roots(&cl)
}

/// A delayed upright loop that passes the Nyquist test.
#[derive(Debug, Clone)]
pub struct TestLoop {
    pub name: &'static str,
    pub params: PendulumParams,
    pub lp: DelayLoop,
}

fn real_roots(rs: &[f64]) -> Vec<Complex64> {
    rs.iter().map(|&r| Complex64::new(r, 0.0)).collect()
}

fn upright_loop(
    name: &'static str,
    params: PendulumParams,
    roots: &[Complex64],
    delay: f64,
) -> TestLoop {
    let plant = params.plant_tf(Orientation::Upright);
    let controller = place_poles(&plant, roots);
    TestLoop {
        name,
        params,
        lp: DelayLoop::new(plant, controller, delay).expect("delay is nonnegative"),
    }
}

/// Stabilized case-study loops at reduced delay, one per fixation regime.
pub fn stable_test_loops() -> Vec<TestLoop> {
    let base = PendulumParams::case_study();
    vec![
        upright_loop(
            "l0 = l, tau = 0.02",
            base,
            &real_roots(&[-2.0, -3.0, -4.0, -5.0, -6.0, -7.0, -8.0]),
            0.02,
        ),
        upright_loop(
            "l0 = 1.2 l, tau = 0.02",
            base.with_fixation(1.2),
            &real_roots(&[-4.0, -5.0, -6.0, -7.0, -8.0, -9.0, -10.0]),
            0.02,
        ),
        upright_loop(
            "l0 = 0.8 l, tau = 0.01",
            base.with_fixation(0.8),
            &real_roots(&[-2.0, -3.0, -4.0, -5.0, -6.0, -7.0, -8.0]),
            0.01,
        ),
        psd_test_loop(),
    ]
}

/// Case-study loop at `τ = 0.01` with a lightly damped closed-loop pair
/// near 1.5 Hz, giving a sharp `|T|` peak.
pub fn psd_test_loop() -> TestLoop {
    let wn = std::f64::consts::TAU * 1.5;
    let zeta: f64 = 0.1;
    let wd = wn * (1.0 - zeta * zeta).sqrt();
    let mut roots = real_roots(&[-3.0, -3.5, -4.0, -4.5, -5.0]);
    roots.push(Complex64::new(-zeta * wn, wd));
    roots.push(Complex64::new(-zeta * wn, -wd));
    upright_loop(
        "resonant, l0 = l, tau = 0.01",
        PendulumParams::case_study(),
        &roots,
        0.01,
    )
}

/// Seeded random [`ConstructedT`] instances with `p ∈ [0.5, 10]`, an
/// optional RHP zero `q ∈ [0.5, 30]` kept away from `p`, `τ ∈ [0, 1]`,
/// corner `a ∈ [0.1, 100]` and order `n ∈ 1..=4`.
pub fn constructed_instances(seed: u64, count: usize) -> Vec<ConstructedT> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = rng.random_range(0.5..10.0);
        let q = if rng.random_bool(0.5) {
            let q: f64 = rng.random_range(0.5..30.0);
            if (q - p).abs() < 0.05 * p {
                continue;
            }
            Some(q)
        } else {
            None
        };
        let delay = rng.random_range(0.0..1.0);
        let corner = 10f64.powf(rng.random_range(-1.0..2.0));
        let order = rng.random_range(1..=4);
        out.push(ConstructedT::new(p, q, delay, corner, order).expect("parameters are in range"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placed_poles_are_closed_loop_roots() {
        for tl in stable_test_loops() {
            let mut got = closed_loop_roots(&tl.lp.plant, &tl.lp.controller);
            got.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
            assert_eq!(got.len(), 7, "{}", tl.name);
            assert!(got.iter().all(|r| r.re < -0.5), "{}: {got:?}", tl.name);
        }
    }

    #[test]
    fn roots_of_known_polynomial() {
        let mut r = roots(&[1.0, -6.0, 11.0, -6.0]);
        r.sort_by(|a, b| a.re.total_cmp(&b.re));
        for (z, want) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((z.re - want).abs() < 1e-10 && z.im.abs() < 1e-10);
        }
    }
}
