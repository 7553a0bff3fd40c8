//! Closed-loop stability of a delayed loop by the argument principle.
//!
//! The Nyquist contour runs up the vertical line `Re s = CONTOUR_SHIFT` from
//! `−j∞` to `+j∞` and closes through the right half plane. The shift acts
//! as a right-hand indentation of radius [`CONTOUR_SHIFT`] around every
//! imaginary-axis pole: the double pole at the origin and, for the downward
//! plant, the oscillatory pair are counted as left-half-plane poles.
//! Closed-loop poles with `0 < Re s <= CONTOUR_SHIFT` are not detected.
//!
//! Convention: `winding` is the counter-clockwise winding of `1 + L(s)` about
//! the origin along that upward traversal. With `P` open-loop poles inside
//! the contour the number of closed-loop RHP poles is `P − winding`, so the
//! loop is stable iff `winding == P`.
//!
//! `P` itself is obtained the same way from the open-loop denominator
//! `D_P D_C`, so no polynomial root finding is needed.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
// Unused only when std is linked into the build (tests).
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::lti::DelayLoop;
use crate::poly;

pub const CONTOUR_SHIFT: f64 = 1e-4;
/// Largest accepted phase change between consecutive contour samples.
pub const MAX_PHASE_STEP: f64 = 0.1;
pub const MAX_SAMPLES: usize = 10_000_000;

/// Initial samples per decade of `ω` along the contour.
const SAMPLES_PER_DECADE: usize = 200;
const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StabilityReport {
    pub stable: bool,
    /// Counter-clockwise winding of `1 + L` along the contour.
    pub winding: i64,
    /// Open-loop poles in the open right half plane (origin excluded).
    pub open_loop_rhp_poles: i64,
    /// Closed-loop poles in the open right half plane.
    pub closed_loop_rhp_poles: i64,
    pub samples: usize,
}

/// Accumulates unwrapped phase of `f` along a path, subdividing until every
/// step is below [`MAX_PHASE_STEP`].
struct PhaseTracker {
    samples: usize,
}

impl PhaseTracker {
    fn track<F, P>(
        &mut self,
        f: &F,
        path: P,
        t0: f64,
        t1: f64,
        n0: usize,
    ) -> Result<(f64, Complex64)>
    where
        F: Fn(Complex64) -> Result<Complex64>,
        P: Fn(f64) -> Complex64,
    {
        let eval = |t: f64, samples: &mut usize| -> Result<Complex64> {
            *samples += 1;
            if *samples > MAX_SAMPLES {
                return Err(Error::Inconclusive {
                    reason: alloc::format!("phase-step refinement exceeded {MAX_SAMPLES} samples"),
                });
            }
            let s = path(t);
            let v = f(s)?;
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite { omega: s.im });
            }
            if v.norm() <= ZERO_TOL {
                return Err(Error::ClosedLoopImaginaryPole { omega: s.im });
            }
            Ok(v)
        };
        let n0 = n0.max(1);
        let dt = (t1 - t0) / n0 as f64;
        let mut total = 0.0;
        let mut prev = eval(t0, &mut self.samples)?;
        for i in 0..n0 {
            let a = t0 + dt * i as f64;
            let b = if i + 1 == n0 { t1 } else { a + dt };
            let vb = eval(b, &mut self.samples)?;
            // Depth-first refinement of [a, b].
            let mut stack: Vec<(f64, f64, Complex64, Complex64)> = alloc::vec![(a, b, prev, vb)];
            while let Some((ta, tb, fa, fb)) = stack.pop() {
                let step = (fb / fa).arg();
                if step.abs() < MAX_PHASE_STEP {
                    total += step;
                    continue;
                }
                let tm = 0.5 * (ta + tb);
                if tm <= ta || tm >= tb {
                    return Err(Error::Inconclusive {
                        reason: "phase jump cannot be resolved in floating point".to_string(),
                    });
                }
                let fm = eval(tm, &mut self.samples)?;
                stack.push((tm, tb, fm, fb));
                stack.push((ta, tm, fa, fm));
            }
            prev = vb;
        }
        Ok((total, prev))
    }
}

/// Unwrapped phase change of `f` along `s = CONTOUR_SHIFT + jω`,
/// `0 <= ω <= omega_max`, and the value `f` takes at the top end. The
/// parameter is `ω = shift·sinh(t)`: linear near the real axis, logarithmic
/// beyond.
fn upper_phase<F>(tracker: &mut PhaseTracker, f: &F, omega_max: f64) -> Result<(f64, Complex64)>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let shift = CONTOUR_SHIFT;
    let t1 = (omega_max / shift).asinh();
    let decades = (t1 / core::f64::consts::LN_10).ceil().max(1.0) as usize;
    tracker.track(
        f,
        |t| Complex64::new(shift, shift * t.sinh()),
        0.0,
        t1,
        decades * SAMPLES_PER_DECADE,
    )
}

/// Bound on the modulus of every root (Cauchy).
fn root_bound(coeffs: &[f64]) -> f64 {
    let c = poly::trim(coeffs);
    if c.len() < 2 {
        return 0.0;
    }
    1.0 + c[1..].iter().map(|x| (x / c[0]).abs()).fold(0.0, f64::max)
}

/// Number of roots of `den` in the open right half plane.
fn rhp_root_count(tracker: &mut PhaseTracker, den: &[f64]) -> Result<i64> {
    let den = poly::trim(den);
    let n = den.len() - 1;
    if n == 0 {
        return Ok(0);
    }
    let r = root_bound(&den);
    // Beyond omega_max every factor (1 − r_i/s) stays within 0.5 of 1.
    let omega_max = (r / ((1.5f64).powf(1.0 / n as f64) - 1.0)).max(10.0 * CONTOUR_SHIFT);
    let f = |s: Complex64| Ok(poly::eval(&den, s));
    let (upper, end) = upper_phase(tracker, &f, omega_max)?;
    let top = Complex64::new(CONTOUR_SHIFT, omega_max);
    let lead = Complex64::new(den[0], 0.0) * top.powi(n as i32);
    let tail = -(end / lead).arg();
    // The lower half mirrors the upper half by conjugate symmetry.
    let total = 2.0 * (upper + tail);
    // Along the contour: total = nπ − 2π·(RHP roots).
    let count = (n as f64 * PI - total) / (2.0 * PI);
    let rounded = count.round();
    if (count - rounded).abs() > 0.05 {
        return Err(Error::Inconclusive {
            reason: alloc::format!("open-loop pole count {count} is not an integer"),
        });
    }
    Ok(rounded as i64)
}

/// Decides closed-loop stability of `lp` from the winding of `1 + L(s)`.
/// Requires `L = P C` strictly proper.
pub fn nyquist_stable(lp: &DelayLoop) -> Result<StabilityReport> {
    let mut tracker = PhaseTracker { samples: 0 };
    let den = poly::mul(lp.plant.den(), lp.controller.den());
    let p_count = rhp_root_count(&mut tracker, &den)?;

    if lp.controller.is_zero() || lp.plant.is_zero() {
        return Ok(StabilityReport {
            stable: p_count == 0,
            winding: 0,
            open_loop_rhp_poles: p_count,
            closed_loop_rhp_poles: p_count,
            samples: tracker.samples,
        });
    }
    let num = poly::mul(lp.plant.num(), lp.controller.num());
    let (m, n) = (poly::degree(&num), poly::degree(&den));
    if m >= n {
        return Err(Error::domain(
            "controller",
            "loop gain P*C must be strictly proper for the Nyquist test",
        ));
    }
    // |L(s)| < 0.5 for |s| >= omega_max: each root factor of num is at most
    // 1.5|s| and each factor of den at least |s|/2 once |s| >= 2R.
    let num_t = poly::trim(&num);
    let den_t = poly::trim(&den);
    let r = root_bound(&num_t).max(root_bound(&den_t)).max(1.0);
    let k = (num_t[0] / den_t[0]).abs() * 1.5f64.powi(m as i32) * 2f64.powi(n as i32);
    let omega_max = (2.0 * r).max((2.0 * k).powf(1.0 / (n - m) as f64));

    let delay = lp.delay;
    let f = |s: Complex64| -> Result<Complex64> {
        let nv = poly::eval(&num_t, s) * (-s * delay).exp();
        let dv = poly::eval(&den_t, s);
        Ok((dv + nv) / dv)
    };
    let (upper, end) = upper_phase(&mut tracker, &f, omega_max)?;
    // Tail: 1 + L stays in the disk |w − 1| < 0.5 and tends to 1.
    let total = 2.0 * (upper - end.arg());
    let winding_f = total / (2.0 * PI);
    let winding = winding_f.round();
    if (winding_f - winding).abs() > 0.05 {
        return Err(Error::Inconclusive {
            reason: alloc::format!("winding number {winding_f} is not an integer"),
        });
    }
    let winding = winding as i64;
    let closed = p_count - winding;
    Ok(StabilityReport {
        stable: closed == 0,
        winding,
        open_loop_rhp_poles: p_count,
        closed_loop_rhp_poles: closed,
        samples: tracker.samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::RationalTF;
    use crate::plant::{Orientation, PendulumParams};

    fn tf(num: &[f64], den: &[f64]) -> RationalTF {
        RationalTF::new(num.to_vec(), den.to_vec()).unwrap()
    }

    #[test]
    fn rhp_counts_of_simple_polynomials() {
        let mut t = PhaseTracker { samples: 0 };
        assert_eq!(rhp_root_count(&mut t, &[1.0, -2.0]).unwrap(), 1);
        assert_eq!(rhp_root_count(&mut t, &[1.0, 2.0]).unwrap(), 0);
        // s^2 (3.25 s^2 - 32.86): origin double root excluded, one RHP root.
        let d = PendulumParams::case_study().characteristic_den(Orientation::Upright);
        assert_eq!(rhp_root_count(&mut t, &d).unwrap(), 1);
        // (s - 1)(s - 2)(s + 3) = s^3 - 7s + 6
        assert_eq!(rhp_root_count(&mut t, &[1.0, 0.0, -7.0, 6.0]).unwrap(), 2);
    }

    #[test]
    fn no_feedback_leaves_upright_unstable() {
        let lp = DelayLoop::new(
            PendulumParams::case_study().plant_tf(Orientation::Upright),
            RationalTF::constant(0.0),
            0.0,
        )
        .unwrap();
        let r = nyquist_stable(&lp).unwrap();
        assert!(!r.stable);
        assert_eq!(r.open_loop_rhp_poles, 1);
    }

    #[test]
    fn first_order_examples() {
        // L = k/(s - 1): closed-loop pole at 1 - k.
        let lp = DelayLoop::new(tf(&[1.0], &[1.0, -1.0]), RationalTF::constant(2.0), 0.0).unwrap();
        assert!(nyquist_stable(&lp).unwrap().stable);
        let lp = DelayLoop::new(tf(&[1.0], &[1.0, -1.0]), RationalTF::constant(0.5), 0.0).unwrap();
        assert!(!nyquist_stable(&lp).unwrap().stable);
        // L = 2 e^{-τ s}/(s - 1): crossover at ω = sqrt(3) with phase margin
        // π/3, so the delay margin is π/(3 sqrt(3)) ≈ 0.6046.
        let lp = DelayLoop::new(tf(&[1.0], &[1.0, -1.0]), RationalTF::constant(2.0), 0.5).unwrap();
        assert!(nyquist_stable(&lp).unwrap().stable);
        let lp = DelayLoop::new(tf(&[1.0], &[1.0, -1.0]), RationalTF::constant(2.0), 0.7).unwrap();
        assert!(!nyquist_stable(&lp).unwrap().stable);
    }

    #[test]
    fn downward_filtered_pd_is_stable() {
        // Downward plant, l0 = l, C = (2s + 2)/(0.3s + 1)^2. The
        // characteristic polynomial D_P D_C + N_P N_C has its rightmost root
        // at Re(s) ≈ -0.0487.
        let p = PendulumParams::case_study();
        let lp = DelayLoop::new(
            p.plant_tf(Orientation::Downward),
            tf(&[2.0, 2.0], &[0.09, 0.6, 1.0]),
            0.0,
        )
        .unwrap();
        let r = nyquist_stable(&lp).unwrap();
        assert!(r.stable, "{r:?}");
        assert_eq!(r.open_loop_rhp_poles, 0);
    }

    #[test]
    fn biproper_loop_rejected() {
        let lp =
            DelayLoop::new(tf(&[1.0, 0.0], &[1.0, 1.0]), RationalTF::constant(1.0), 0.1).unwrap();
        assert!(matches!(nyquist_stable(&lp), Err(Error::Domain { .. })));
    }
}
