//! Fragility bound, Poisson-weighted log-|T| integral, waterbed constants and
//! inequality, interpolation checks, and a constructed complementary
//! sensitivity with a known minimum-phase value at the RHP pole.
//!
//! All log-magnitudes are natural logs (nats).

use core::f64::consts::{LN_10, PI};

use num_complex::Complex64;
// Unused only when std is linked into the build (tests).
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::lti::{self, allpass_factor, DelayLoop};
use crate::plant::PendulumParams;
use crate::quadrature::{GaussLegendre, QuadratureConfig};
use crate::stability::nyquist_stable;

/// Relative tolerance for declaring `q = p`.
pub const SINGULAR_REL_TOL: f64 = 1e-12;

/// Slack on the waterbed verdict.
pub const WATERBED_TOL: f64 = 1e-9;

/// Width below `F` in which a failing waterbed verdict is reported as tight
/// rather than violated.
pub const WATERBED_TIGHT_BAND: f64 = 1e-3;

/// Magnitudes below this make `ln|T|` unusable as an integrand.
const TINY_MAGNITUDE: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `l0 >= l`: no RHP zero, `F = τ p`.
    NoRhpZero,
    /// `l0 < l`: RHP zero `q`, `F = τ p + ln|(p+q)/(p−q)|`.
    RhpZero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FragilityResult {
    /// Lower bound on `ln‖T‖∞` in nats.
    pub fragility: f64,
    pub p: f64,
    pub q: Option<f64>,
    pub delay: f64,
    pub regime: Regime,
}

impl FragilityResult {
    pub fn fragility_db(&self) -> f64 {
        self.fragility * 20.0 / LN_10
    }
}

/// `τ p`, plus `ln|(p+q)/(p−q)|` when a RHP zero is present.
pub fn fragility_bound(p: f64, q: Option<f64>, delay: f64) -> Result<f64> {
    match q {
        None => Ok(delay * p),
        Some(q) => {
            if (q - p).abs() <= SINGULAR_REL_TOL * p.max(q) {
                return Err(Error::FragilitySingularity { p, q });
            }
            Ok(delay * p + ((p + q) / (p - q)).abs().ln())
        }
    }
}

/// Closed-form fragility of the upright plant with loop delay `delay`.
pub fn fragility(params: &PendulumParams, delay: f64) -> Result<FragilityResult> {
    params.validate()?;
    if !(delay.is_finite() && delay >= 0.0) {
        return Err(Error::domain(
            "delay",
            alloc::format!("must be >= 0, got {delay}"),
        ));
    }
    let (p, q) = params.rhp_pole_zero();
    let f = fragility_bound(p, q, delay)?;
    Ok(FragilityResult {
        fragility: f,
        p,
        q,
        delay,
        regime: if q.is_some() {
            Regime::RhpZero
        } else {
            Regime::NoRhpZero
        },
    })
}

/// Poisson kernel for the RHP point `s0 = σ0 + j ω0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonKernel {
    sigma0: f64,
    omega0: f64,
}

impl PoissonKernel {
    pub fn new(sigma0: f64, omega0: f64) -> Result<Self> {
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return Err(Error::domain("sigma0", "must be finite and > 0"));
        }
        if !omega0.is_finite() {
            return Err(Error::domain("omega0", "must be finite"));
        }
        Ok(PoissonKernel { sigma0, omega0 })
    }

    /// Kernel of a real RHP pole `p`.
    pub fn at_pole(p: f64) -> Result<Self> {
        Self::new(p, 0.0)
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// `(1/π) σ0 / (σ0² + (ω − ω0)²)`.
    pub fn weight(&self, omega: f64) -> f64 {
        let d = omega - self.omega0;
        self.sigma0 / (PI * (self.sigma0 * self.sigma0 + d * d))
    }

    fn omega_at(&self, phi: f64) -> f64 {
        self.omega0 + self.sigma0 * phi.tan()
    }
}

pub fn poisson_weight(kernel: &PoissonKernel, omega: f64) -> f64 {
    kernel.weight(omega)
}

/// `∫ weight(ω) dω` over ℝ, integrating the kernel itself (not the
/// substituted measure) on the panel rule.
pub fn kernel_mass(kernel: &PoissonKernel, quad: &QuadratureConfig) -> f64 {
    quad.phi_rule()
        .into_iter()
        .map(|(phi, w)| {
            let sec = 1.0 / phi.cos();
            w * kernel.weight(kernel.omega_at(phi)) * kernel.sigma0 * sec * sec
        })
        .sum()
}

/// Kernel mass of `[lo, hi]` by Gauss–Legendre in ω on panels that double
/// in width away from the kernel centre, each of order `order`.
pub fn kernel_mass_on(kernel: &PoissonKernel, lo: f64, hi: f64, order: usize) -> f64 {
    let gl = GaussLegendre::new(order);
    let c = kernel.omega0;
    let unit = kernel.sigma0 / 8.0;
    // Breaks at c ± unit·2^k, clipped to [lo, hi].
    let mut breaks = alloc::vec![lo, hi];
    let mut step = unit;
    while step < (hi - c).abs().max((lo - c).abs()) {
        for b in [c - step, c + step] {
            if b > lo && b < hi {
                breaks.push(b);
            }
        }
        step *= 2.0;
    }
    if c > lo && c < hi {
        breaks.push(c);
    }
    breaks.sort_by(f64::total_cmp);
    breaks
        .windows(2)
        .map(|w| gl.integrate(w[0], w[1], |x| kernel.weight(x)))
        .sum()
}

/// `(1/π) ∫ ln|T(jω)| σ0/(σ0² + (ω − ω0)²) dω` via `ω = ω0 + σ0 tan φ`,
/// which makes the kernel measure `dφ/π`.
pub fn bode_integral<F>(t_eval: F, kernel: &PoissonKernel, quad: &QuadratureConfig) -> Result<f64>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let mut acc = 0.0;
    for (phi, w) in quad.phi_rule() {
        let omega = kernel.omega_at(phi);
        let v = t_eval(omega)?;
        let mag = v.norm();
        if !mag.is_finite() {
            return Err(Error::NonFinite { omega });
        }
        if mag < TINY_MAGNITUDE {
            return Err(Error::IntegrandSingular { omega });
        }
        acc += w * mag.ln();
    }
    Ok(acc / PI)
}

/// Frequency band `[ω1, ω2]`, `0 < ω1 < ω2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::domain(
                "band",
                alloc::format!("requires 0 < omega1 < omega2, got [{lo}, {hi}]"),
            ));
        }
        Ok(Band { lo, hi })
    }
}

/// Kernel mass of `[−ω2, −ω1] ∪ [ω1, ω2]` for the real pole `p`, and its
/// complement.
pub fn waterbed_constants(p: f64, band: Band) -> Result<(f64, f64)> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::domain("p", "must be finite and > 0"));
    }
    let c1 = 2.0 / PI * ((band.hi / p).atan() - (band.lo / p).atan());
    Ok((c1, 1.0 - c1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WaterbedStatus {
    Holds,
    /// `lhs` fell short of `F` by less than the tight band; `M1` and `M2` are
    /// lower estimates, so this is not evidence of a violation.
    InconclusiveTight,
    Violated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaterbedReport {
    pub band: Band,
    pub c1: f64,
    pub c2: f64,
    pub m1: f64,
    pub m2: f64,
    pub fragility: f64,
    pub lhs: f64,
    pub holds: bool,
    pub status: WaterbedStatus,
}

/// Points per band used for the `M1` search before golden refinement.
const BAND_SAMPLES: usize = 400;

/// Evaluates `c1 ln M1 + c2 ln M2 >= F`. `M1` is the refined band maximum of
/// `|T|` and `M2` the refined maximum over `omegas` (and the band).
pub fn waterbed_check<F>(
    t_eval: F,
    p: f64,
    band: Band,
    fragility: f64,
    omegas: &[f64],
) -> Result<WaterbedReport>
where
    F: Fn(f64) -> Result<Complex64>,
{
    let (c1, c2) = waterbed_constants(p, band)?;
    let band_grid = lti::log_grid(band.lo, band.hi, BAND_SAMPLES)?;
    let (_, m1) = lti::hinf_estimate_refined(&t_eval, &band_grid)?;
    let (_, m2_grid) = lti::hinf_estimate_refined(&t_eval, omegas)?;
    let m2 = m2_grid.max(m1);
    let lhs = c1 * m1.ln() + c2 * m2.ln();
    let holds = lhs >= fragility - WATERBED_TOL;
    let status = if holds {
        WaterbedStatus::Holds
    } else if lhs >= fragility - WATERBED_TIGHT_BAND {
        WaterbedStatus::InconclusiveTight
    } else {
        WaterbedStatus::Violated
    };
    Ok(WaterbedReport {
        band,
        c1,
        c2,
        m1,
        m2,
        fragility,
        lhs,
        holds,
        status,
    })
}

/// Deviations of the interpolation constraints `T(p) = 1`, `S(q) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolationReport {
    pub t_at_p: Complex64,
    pub t_deviation: f64,
    /// `None` when the plant has no RHP zero.
    pub s_at_q: Option<Complex64>,
    pub s_deviation: Option<f64>,
    pub t_at_q: Option<f64>,
}

/// Checks the interpolation constraints on a loop that passes
/// [`nyquist_stable`].
pub fn interpolation_check(lp: &DelayLoop, p: f64, q: Option<f64>) -> Result<InterpolationReport> {
    if !nyquist_stable(lp)?.stable {
        return Err(Error::InterpolationNotApplicable);
    }
    let (_, t_at_p) = lp.sensitivities(Complex64::new(p, 0.0))?;
    let at_q = q
        .map(|q| lp.sensitivities(Complex64::new(q, 0.0)))
        .transpose()?;
    Ok(InterpolationReport {
        t_at_p,
        t_deviation: (t_at_p - 1.0).norm(),
        s_at_q: at_q.map(|(s, _)| s),
        s_deviation: at_q.map(|(s, _)| (s - 1.0).norm()),
        t_at_q: at_q.map(|(_, t)| t.norm()),
    })
}

/// `T(s) = K (s/a + 1)^{−n} T_ap(s)` with `K` chosen so that `T(p) = 1`.
/// Its minimum-phase part `K (s/a + 1)^{−n}` has a known value at `p`, which
/// equals the fragility bound for `(p, q, τ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstructedT {
    pub p: f64,
    pub q: Option<f64>,
    pub delay: f64,
    pub corner: f64,
    pub order: u32,
    pub gain: f64,
}

impl ConstructedT {
    pub fn new(p: f64, q: Option<f64>, delay: f64, corner: f64, order: u32) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::domain("p", "must be finite and > 0"));
        }
        if let Some(q) = q {
            if !(q > 0.0 && q.is_finite()) {
                return Err(Error::domain("q", "must be finite and > 0"));
            }
            if (q - p).abs() <= SINGULAR_REL_TOL * p.max(q) {
                return Err(Error::FragilitySingularity { p, q });
            }
        }
        if !(delay >= 0.0 && delay.is_finite()) {
            return Err(Error::domain("delay", "must be >= 0"));
        }
        if !(corner > 0.0 && corner.is_finite()) {
            return Err(Error::domain("corner", "rolloff corner must be > 0"));
        }
        if order < 1 {
            return Err(Error::domain("order", "rolloff order must be >= 1"));
        }
        let ap_p = allpass_factor(q, delay, Complex64::new(p, 0.0)).re;
        let gain = (p / corner + 1.0).powi(order as i32) / ap_p;
        Ok(ConstructedT {
            p,
            q,
            delay,
            corner,
            order,
            gain,
        })
    }

    pub fn minphase(&self, s: Complex64) -> Complex64 {
        Complex64::new(self.gain, 0.0) / (s / self.corner + 1.0).powi(self.order as i32)
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.minphase(s) * allpass_factor(self.q, self.delay, s)
    }

    pub fn eval_axis(&self, omega: f64) -> Result<Complex64> {
        Ok(self.eval(Complex64::new(0.0, omega)))
    }

    /// `ln|T_mp(p)|`, computed from the all-pass factor.
    pub fn log_minphase_at_pole(&self) -> f64 {
        -allpass_factor(self.q, self.delay, Complex64::new(self.p, 0.0))
            .norm()
            .ln()
    }
}
