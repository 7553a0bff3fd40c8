//! Rational-plus-delay transfer functions: point evaluation, the sensitivity
//! pair `S`/`T` of a delayed loop, the all-pass/minimum-phase split of `T`,
//! and H∞ estimation on a frequency grid.

use alloc::vec::Vec;

use num_complex::Complex64;
// Unused only when std is linked into the build (tests).
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::poly;

/// Default grid: 2000 log-spaced points over `[1e-2, 1e3]` rad/s.
pub const DEFAULT_GRID_MIN: f64 = 1e-2;
pub const DEFAULT_GRID_MAX: f64 = 1e3;
pub const DEFAULT_GRID_POINTS: usize = 2000;

/// Golden-section tolerance in ω (rad/s) for H∞ refinement.
pub const GOLDEN_TOL: f64 = 1e-9;

const POLE_TOL: f64 = 1e-12;
const CLOSED_LOOP_TOL: f64 = 1e-12;

/// Real-coefficient rational function, coefficients in descending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalTF {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl RationalTF {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        if num.iter().chain(den.iter()).any(|c| !c.is_finite()) {
            return Err(Error::domain("coefficients", "must be finite"));
        }
        if den.is_empty() || poly::is_zero(&den) {
            return Err(Error::domain("den", "denominator is identically zero"));
        }
        let num = if num.is_empty() {
            alloc::vec![0.0]
        } else {
            poly::trim(&num)
        };
        Ok(RationalTF {
            num,
            den: poly::trim(&den),
        })
    }

    pub fn constant(k: f64) -> Self {
        RationalTF {
            num: alloc::vec![k],
            den: alloc::vec![1.0],
        }
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        poly::is_zero(&self.num)
    }

    pub fn is_proper(&self) -> bool {
        self.is_zero() || poly::degree(&self.num) <= poly::degree(&self.den)
    }

    /// Denominator degree minus numerator degree.
    pub fn relative_degree(&self) -> isize {
        poly::degree(&self.den) as isize - poly::degree(&self.num) as isize
    }

    /// `num(s)/den(s)`; fails when `s` lies within 1e-12 of a denominator root.
    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let d = poly::eval(&self.den, s);
        if let Some(root) = near_root(&self.den, s, d) {
            return Err(Error::EvaluationAtPole { s, root });
        }
        Ok(poly::eval(&self.num, s) / d)
    }
}

/// Newton-step distance estimate to the closest denominator root; returns the
/// refined root when `s` is within `POLE_TOL` of it.
fn near_root(den: &[f64], s: Complex64, d: Complex64) -> Option<Complex64> {
    if d == Complex64::new(0.0, 0.0) {
        return Some(s);
    }
    let deriv: Vec<f64> = den
        .iter()
        .enumerate()
        .take(den.len().saturating_sub(1))
        .map(|(i, &c)| c * (den.len() - 1 - i) as f64)
        .collect();
    let dp = poly::eval(&deriv, s);
    if dp.norm() == 0.0 {
        return None;
    }
    let step = d / dp;
    if step.norm() > POLE_TOL {
        return None;
    }
    let mut root = s - step;
    for _ in 0..8 {
        let dv = poly::eval(den, root);
        let dpv = poly::eval(&deriv, root);
        if dpv.norm() == 0.0 {
            break;
        }
        root -= dv / dpv;
    }
    Some(root)
}

/// Plant, controller and loop delay; `L(s) = P(s) C(s) e^{-τ s}` with the
/// controller in negative feedback.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayLoop {
    pub plant: RationalTF,
    pub controller: RationalTF,
    pub delay: f64,
}

/// Samples of a frequency response on a strictly increasing ω grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyResponse {
    omegas: Vec<f64>,
    values: Vec<Complex64>,
}

/// Split of `T(s)` into its all-pass and minimum-phase factors at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorValues {
    pub at_point: Complex64,
    pub ap_value: Complex64,
    pub mp_value: Complex64,
}

impl FrequencyResponse {
    pub fn new(omegas: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if omegas.len() != values.len() {
            return Err(Error::domain(
                "values",
                alloc::format!("{} values for {} frequencies", values.len(), omegas.len()),
            ));
        }
        check_grid(&omegas)?;
        Ok(FrequencyResponse { omegas, values })
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    /// Grid point of largest magnitude as `(ω, |value|)`.
    pub fn peak(&self) -> Option<(f64, f64)> {
        self.omegas
            .iter()
            .zip(&self.values)
            .map(|(&w, v)| (w, v.norm()))
            .fold(None, |best, (w, m)| match best {
                Some((_, bm)) if bm >= m => best,
                _ => Some((w, m)),
            })
    }
}

fn check_grid(omegas: &[f64]) -> Result<()> {
    if omegas.iter().any(|w| !w.is_finite()) {
        return Err(Error::domain("omegas", "must be finite"));
    }
    if omegas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("omegas", "must be strictly increasing"));
    }
    Ok(())
}

/// `n` logarithmically spaced points over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) {
        return Err(Error::domain("grid", "requires 0 < lo < hi"));
    }
    if n < 2 {
        return Err(Error::domain("grid", "requires at least 2 points"));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => (a + step * i as f64).exp(),
        })
        .collect())
}

pub fn default_grid() -> Vec<f64> {
    log_grid(DEFAULT_GRID_MIN, DEFAULT_GRID_MAX, DEFAULT_GRID_POINTS)
        .expect("default grid bounds are valid")
}

/// `((s − q)/(s + q)) e^{−τ s}`, or `e^{−τ s}` without a RHP zero.
pub fn allpass_factor(q: Option<f64>, delay: f64, s: Complex64) -> Complex64 {
    let delay_part = (-s * delay).exp();
    match q {
        Some(q) => (s - q) / (s + q) * delay_part,
        None => delay_part,
    }
}

impl DelayLoop {
    pub fn new(plant: RationalTF, controller: RationalTF, delay: f64) -> Result<Self> {
        if !(delay.is_finite() && delay >= 0.0) {
            return Err(Error::domain(
                "delay",
                alloc::format!("must be >= 0, got {delay}"),
            ));
        }
        Ok(DelayLoop {
            plant,
            controller,
            delay,
        })
    }

    /// `(N_P N_C e^{−τs}, D_P D_C)`, the loop gain as an unreduced fraction.
    fn loop_parts(&self, s: Complex64) -> (Complex64, Complex64) {
        let n = poly::eval(self.plant.num(), s)
            * poly::eval(self.controller.num(), s)
            * (-s * self.delay).exp();
        let d = poly::eval(self.plant.den(), s) * poly::eval(self.controller.den(), s);
        (n, d)
    }

    pub fn loop_gain(&self, s: Complex64) -> Result<Complex64> {
        let c = self.controller.eval(s)?;
        let p = self.plant.eval(s)?;
        Ok(p * c * (-s * self.delay).exp())
    }

    /// `(S(s), T(s))`. When `|L| > 1` both are formed from `1/L`, so plant
    /// poles (where `1/L = 0`) give `T = 1`, `S = 0` without overflow.
    pub fn sensitivities(&self, s: Complex64) -> Result<(Complex64, Complex64)> {
        let (n, d) = self.loop_parts(s);
        let one = Complex64::new(1.0, 0.0);
        if n.norm() > d.norm() {
            let r = d / n;
            let den = one + r;
            if den.norm() <= CLOSED_LOOP_TOL {
                return Err(Error::ClosedLoopImaginaryPole { omega: s.im });
            }
            Ok((r / den, one / den))
        } else {
            if d.norm() == 0.0 {
                return Err(Error::EvaluationAtPole { s, root: s });
            }
            let l = n / d;
            let den = one + l;
            if den.norm() <= CLOSED_LOOP_TOL {
                return Err(Error::ClosedLoopImaginaryPole { omega: s.im });
            }
            Ok((one / den, l / den))
        }
    }

    pub fn complementary_at(&self, omega: f64) -> Result<Complex64> {
        let t = self.sensitivities(Complex64::new(0.0, omega))?.1;
        if !(t.re.is_finite() && t.im.is_finite()) {
            return Err(Error::NonFinite { omega });
        }
        Ok(t)
    }

    /// `S(jω)` and `T(jω)` on `omegas`.
    pub fn loop_response(&self, omegas: &[f64]) -> Result<(FrequencyResponse, FrequencyResponse)> {
        check_grid(omegas)?;
        let mut s_vals = Vec::with_capacity(omegas.len());
        let mut t_vals = Vec::with_capacity(omegas.len());
        for &w in omegas {
            let (sv, tv) = self.sensitivities(Complex64::new(0.0, w))?;
            s_vals.push(sv);
            t_vals.push(tv);
        }
        Ok((
            FrequencyResponse {
                omegas: omegas.to_vec(),
                values: s_vals,
            },
            FrequencyResponse {
                omegas: omegas.to_vec(),
                values: t_vals,
            },
        ))
    }

    /// All-pass and minimum-phase factor values of `T` at `s`, with
    /// `mp_value = T(s) / ap_value`. At `s = p` the interpolation constraint
    /// `T(p) = 1` makes `mp_value = ap_value⁻¹`.
    pub fn allpass_minphase_at(
        &self,
        p: f64,
        q: Option<f64>,
        s: Complex64,
    ) -> Result<FactorValues> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::domain("p", "RHP pole must be positive"));
        }
        if let Some(q) = q {
            if !(q > 0.0 && q.is_finite()) {
                return Err(Error::domain("q", "RHP zero must be positive"));
            }
            if (q - p).abs() <= 1e-12 * p && (s - p).norm() <= 1e-12 * p {
                return Err(Error::FragilitySingularity { p, q });
            }
        }
        if s.re < 0.0 {
            return Err(Error::domain(
                "s",
                "evaluation point must satisfy Re(s) >= 0",
            ));
        }
        let ap_value = allpass_factor(q, self.delay, s);
        if ap_value.norm() == 0.0 {
            return Err(Error::domain(
                "s",
                "coincides with the RHP zero q where the all-pass factor vanishes",
            ));
        }
        let (_, t) = self.sensitivities(s)?;
        Ok(FactorValues {
            at_point: s,
            ap_value,
            mp_value: t / ap_value,
        })
    }
}

/// Largest sampled magnitude. A lower estimate of the H∞ norm.
pub fn hinf_estimate(resp: &FrequencyResponse) -> Result<f64> {
    resp.peak()
        .map(|(_, m)| m)
        .ok_or_else(|| Error::domain("response", "empty frequency response"))
}

/// Grid maximum of `|f(ω)|` refined by golden-section search inside the
/// grid interval bracketing it. Returns `(ω*, |f(ω*)|)`, never below the grid
/// maximum.
pub fn hinf_estimate_refined<F>(f: F, omegas: &[f64]) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<Complex64>,
{
    if omegas.is_empty() {
        return Err(Error::domain("omegas", "empty frequency grid"));
    }
    check_grid(omegas)?;
    let mags = omegas
        .iter()
        .map(|&w| f(w).map(|v| v.norm()))
        .collect::<Result<Vec<f64>>>()?;
    let (k, &gmax) =
        mags.iter().enumerate().fold(
            (0, &mags[0]),
            |best, (i, m)| if *m > *best.1 { (i, m) } else { best },
        );
    if omegas.len() < 2 {
        return Ok((omegas[0], gmax));
    }
    let lo = omegas[k.saturating_sub(1)];
    let hi = omegas[(k + 1).min(omegas.len() - 1)];
    let (w, m) = golden_max(|w| f(w).map(|v| v.norm()), lo, hi, GOLDEN_TOL)?;
    Ok(if m > gmax { (w, m) } else { (omegas[k], gmax) })
}

/// Golden-section maximization of `g` over `[a, b]`.
pub fn golden_max<G>(g: G, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    G: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut gc = g(c)?;
    let mut gd = g(d)?;
    let mut best = if gc > gd { (c, gc) } else { (d, gd) };
    let mut iters = 0;
    while (b - a).abs() > tol && iters < 200 {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c)?;
            if gc > best.1 {
                best = (c, gc);
            }
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d)?;
            if gd > best.1 {
                best = (d, gd);
            }
        }
        iters += 1;
    }
    Ok(best)
}
