//! Seeded simulation of the upright linearized loop with loop delay, sensor
//! noise on `y` and actuation noise on `u`.
//!
//! The controller acts in negative feedback on the delayed measurement,
//! `u(t) = −C[y](t − τ)`. Plant and controller states are integrated
//! together with fixed-step RK4. Noise samples are drawn once per step and
//! held across the RK4 stages. Past measurements sit in a ring buffer and
//! are linearly interpolated at the delayed stage times; before `t = 0` the
//! measurement is the noiseless initial output `z(0)`.
//!
//! Gaussian draws come from ChaCha8 seeded with the 64-bit seed, turned into
//! normals by the Box–Muller transform. Each step draws the sensor sample
//! first, then the actuation sample.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

// Unused only when std is linked into the build (tests).
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::lti::RationalTF;
use crate::plant::{PendulumParams, StateSpaceUp};
use crate::poly;

/// `|z|` above which the run is flagged divergent and stopped.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: PendulumParams,
    pub controller: RationalTF,
    pub delay: f64,
    pub dt: f64,
    pub duration: f64,
    /// Standard deviation of `n` (m).
    pub sensor_noise_std: f64,
    /// Standard deviation of `r` (N).
    pub actuation_noise_std: f64,
    pub seed: u64,
    /// `(x, ẋ, θ, θ̇)` at `t = 0`.
    pub initial_state: [f64; 4],
}

/// Sampled run; all columns have the same length.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub diverged: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Controllable canonical realization `ẋ = A x + B e`, `v = C x + D e` of a
/// proper rational function.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerRealization {
    /// Denominator coefficients `a_1..a_n` of the monic `s^n + a_1 s^{n−1} + …`.
    den_tail: Vec<f64>,
    /// Output weights `c_1..c_n` of `(c_1 s^{n−1} + … + c_n)`.
    num_tail: Vec<f64>,
    pub feedthrough: f64,
}

impl ControllerRealization {
    pub fn new(tf: &RationalTF) -> Result<Self> {
        if !tf.is_proper() {
            return Err(Error::Realization(alloc::format!(
                "controller is improper (numerator degree {} > denominator degree {})",
                poly::degree(tf.num()),
                poly::degree(tf.den())
            )));
        }
        let lead = tf.den()[0];
        let den: Vec<f64> = tf.den().iter().map(|c| c / lead).collect();
        let n = den.len() - 1;
        let mut num = vec![0.0; n + 1 - tf.num().len().min(n + 1)];
        num.extend(tf.num().iter().map(|c| c / lead));
        let d = num[0];
        let num_tail = (1..=n).map(|i| num[i] - d * den[i]).collect();
        Ok(ControllerRealization {
            den_tail: den[1..].to_vec(),
            num_tail,
            feedthrough: d,
        })
    }

    pub fn order(&self) -> usize {
        self.den_tail.len()
    }

    /// State `x_1..x_n` with `x_{i+1} = ẋ_i`.
    fn derivative(&self, xc: &[f64], e: f64, out: &mut [f64]) {
        let n = self.order();
        if n == 0 {
            return;
        }
        out[..n - 1].copy_from_slice(&xc[1..n]);
        // ẋ_n = −a_n x_1 − … − a_1 x_n + e
        let mut acc = e;
        for (k, a) in self.den_tail.iter().enumerate() {
            acc -= a * xc[n - 1 - k];
        }
        out[n - 1] = acc;
    }

    fn output(&self, xc: &[f64], e: f64) -> f64 {
        let n = self.order();
        let mut v = self.feedthrough * e;
        for (k, c) in self.num_tail.iter().enumerate() {
            v += c * xc[n - 1 - k];
        }
        v
    }
}

/// Standard normal draws from ChaCha8 via Box–Muller.
#[derive(Debug, Clone)]
pub struct GaussianSource {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianSource {
    pub fn new(seed: u64) -> Self {
        GaussianSource {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    /// Uniform on `(0, 1]` with 53 random bits.
    fn open_unit(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_standard(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        let u1 = self.open_unit();
        let u2 = self.open_unit();
        let radius = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        self.spare = Some(radius * s);
        radius * c
    }
}

/// Measurement history indexed by global step number.
struct DelayLine {
    buf: Vec<f64>,
    before_start: f64,
}

impl DelayLine {
    fn new(capacity: usize, before_start: f64) -> Self {
        DelayLine {
            buf: vec![before_start; capacity],
            before_start,
        }
    }

    fn push(&mut self, k: usize, v: f64) {
        let cap = self.buf.len();
        self.buf[k % cap] = v;
    }

    fn at_index(&self, j: i64) -> f64 {
        if j < 0 {
            self.before_start
        } else {
            self.buf[j as usize % self.buf.len()]
        }
    }

    /// Linear interpolation at fractional step position `pos`.
    fn sample(&self, pos: f64) -> f64 {
        let j = pos.floor();
        let frac = pos - j;
        let j = j as i64;
        let a = self.at_index(j);
        if frac == 0.0 {
            return a;
        }
        a + frac * (self.at_index(j + 1) - a)
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("dt", "must be finite and > 0"));
        }
        if !(self.delay >= 0.0 && self.delay.is_finite()) {
            return Err(Error::config("delay", "must be finite and >= 0"));
        }
        if self.delay > 0.0 && self.dt > self.delay / 10.0 * (1.0 + 1e-12) {
            return Err(Error::config(
                "dt",
                alloc::format!(
                    "must be <= delay/10 = {}, got {}",
                    self.delay / 10.0,
                    self.dt
                ),
            ));
        }
        if !(self.duration.is_finite() && self.duration >= 100.0 * self.dt * (1.0 - 1e-12)) {
            return Err(Error::config("duration", "must be >= 100*dt"));
        }
        for (name, v) in [
            ("sensor_noise_std", self.sensor_noise_std),
            ("actuation_noise_std", self.actuation_noise_std),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(name, "must be finite and >= 0"));
            }
        }
        if self.initial_state.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("initial_state", "must be finite"));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}

/// Integrates the closed loop described by `cfg`.
pub fn simulate(cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let ctrl = ControllerRealization::new(&cfg.controller)?;
    let plant: StateSpaceUp = cfg.params.state_space_up();
    let nc = ctrl.order();
    let dim = 4 + nc;
    let steps = cfg.steps();
    let dt = cfg.dt;
    let lag = cfg.delay / dt;
    let delayed = cfg.delay > 0.0;

    let mut state = vec![0.0; dim];
    state[..4].copy_from_slice(&cfg.initial_state);
    let z0 = plant.output(&cfg.initial_state);
    let mut history = DelayLine::new(lag.ceil() as usize + 4, z0);
    let mut noise = GaussianSource::new(cfg.seed);

    let mut traj = Trajectory {
        t: Vec::with_capacity(steps + 1),
        x: Vec::with_capacity(steps + 1),
        theta: Vec::with_capacity(steps + 1),
        z: Vec::with_capacity(steps + 1),
        y: Vec::with_capacity(steps + 1),
        u: Vec::with_capacity(steps + 1),
        diverged: false,
    };

    let deriv = |s: &[f64], e: f64, r: f64, out: &mut [f64]| {
        let u = -ctrl.output(&s[4..], e);
        let xp = [s[0], s[1], s[2], s[3]];
        let d = plant.derivative(&xp, u + r);
        out[..4].copy_from_slice(&d);
        ctrl.derivative(&s[4..], e, &mut out[4..]);
    };

    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];

    for k in 0..=steps {
        let n_k = cfg.sensor_noise_std * noise.next_standard();
        let r_k = cfg.actuation_noise_std * noise.next_standard();
        let xp = [state[0], state[1], state[2], state[3]];
        let z = plant.output(&xp);
        let y = z + n_k;
        history.push(k, y);
        // Controller input at a stage offset c ∈ [0, 1] within step k.
        let input = |c: f64, s: &[f64]| -> f64 {
            if delayed {
                history.sample(k as f64 + c - lag)
            } else {
                plant.output(&[s[0], s[1], s[2], s[3]]) + n_k
            }
        };
        let e_k = input(0.0, &state);
        traj.t.push(k as f64 * dt);
        traj.x.push(state[0]);
        traj.theta.push(state[2]);
        traj.z.push(z);
        traj.y.push(y);
        traj.u.push(-ctrl.output(&state[4..], e_k));

        if !z.is_finite() || z.abs() > DIVERGENCE_LIMIT {
            traj.diverged = true;
            break;
        }
        if k == steps {
            break;
        }

        deriv(&state, e_k, r_k, &mut k1);
        for i in 0..dim {
            tmp[i] = state[i] + 0.5 * dt * k1[i];
        }
        deriv(&tmp, input(0.5, &tmp), r_k, &mut k2);
        for i in 0..dim {
            tmp[i] = state[i] + 0.5 * dt * k2[i];
        }
        deriv(&tmp, input(0.5, &tmp), r_k, &mut k3);
        for i in 0..dim {
            tmp[i] = state[i] + dt * k3[i];
        }
        deriv(&tmp, input(1.0, &tmp), r_k, &mut k4);
        for i in 0..dim {
            state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(traj)
}
