//! Linearized cart-pendulum plant: parameters, transfer function, poles and
//! zeros, and a state-space realization of the upright equilibrium.
//!
//! Sign convention: the upright linearization takes the top sign of the
//! `±`/`∓` pairs, so the plant is
//!
//! ```text
//! P(s) = ((l - l0) s^2 ∓ g) / (s^2 (M l s^2 ∓ (M + m) g))
//! ```

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
// Unused only when std is linked into the build (tests).
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::lti::RationalTF;

/// Default gravitational acceleration in m/s².
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Loop delay of the case-study preset, in seconds.
pub const CASE_STUDY_DELAY: f64 = 0.3;

/// Rigid-body quantities as measured: body mass, stick mass and the actual
/// stick length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawParams {
    pub human_mass: f64,
    pub stick_mass: f64,
    pub stick_length: f64,
    pub fixation_point: f64,
    pub gravity: f64,
}

impl RawParams {
    pub fn validate(&self) -> Result<()> {
        positive("human_mass", self.human_mass)?;
        positive("stick_mass", self.stick_mass)?;
        positive("stick_length_actual", self.stick_length)?;
        nonnegative("fixation_point", self.fixation_point)?;
        positive("gravity", self.gravity)
    }
}

/// Point-mass parameters of the linearized cart-pendulum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendulumParams {
    /// Effective cart mass `M` (kg).
    pub cart_mass: f64,
    /// Effective stick mass `m` (kg).
    pub stick_mass: f64,
    /// Effective stick length `l` (m).
    pub stick_length: f64,
    /// Fixation point `l0` (m), the height on the stick the sensor tracks.
    pub fixation_point: f64,
    /// Gravitational acceleration `g` (m/s²).
    pub gravity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    Upright,
    Downward,
}

impl Orientation {
    /// `+1` for the upright equilibrium, `-1` for the downward one.
    fn sign(self) -> f64 {
        match self {
            Orientation::Upright => 1.0,
            Orientation::Downward => -1.0,
        }
    }
}

/// Open-loop poles and zeros. The double pole at the origin is listed twice.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleZeroSet {
    pub poles: Vec<Complex64>,
    pub zeros: Vec<Complex64>,
}

/// State `(x, ẋ, θ, θ̇)`, input `u + r`, output `z = x + l0 θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSpaceUp {
    pub a: [[f64; 4]; 4],
    pub b: [f64; 4],
    pub c_z: [f64; 4],
}

fn positive(param: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(
            param,
            alloc::format!("must be finite and > 0, got {v}"),
        ))
    }
}

fn nonnegative(param: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(
            param,
            alloc::format!("must be finite and >= 0, got {v}"),
        ))
    }
}

/// Converts rigid-body quantities to the point-mass model:
/// `m = ¾ m′`, `M = ¼ m′ + M′`, `l = ⅔ l′`.
pub fn effective_params(raw: &RawParams) -> Result<PendulumParams> {
    raw.validate()?;
    Ok(PendulumParams {
        cart_mass: 0.25 * raw.stick_mass + raw.human_mass,
        stick_mass: 0.75 * raw.stick_mass,
        stick_length: 2.0 / 3.0 * raw.stick_length,
        fixation_point: raw.fixation_point,
        gravity: raw.gravity,
    })
}

impl PendulumParams {
    pub fn new(
        cart_mass: f64,
        stick_mass: f64,
        stick_length: f64,
        fixation_point: f64,
        gravity: f64,
    ) -> Result<Self> {
        let p = PendulumParams {
            cart_mass,
            stick_mass,
            stick_length,
            fixation_point,
            gravity,
        };
        p.validate()?;
        Ok(p)
    }

    /// `M = 3.25 kg`, `m = 0.1 kg`, `l = l0 = 1 m`, `g = 9.81 m/s²`.
    pub fn case_study() -> Self {
        PendulumParams {
            cart_mass: 3.25,
            stick_mass: 0.1,
            stick_length: 1.0,
            fixation_point: 1.0,
            gravity: STANDARD_GRAVITY,
        }
    }

    /// Case-study geometry with a 75 kg body and a 15 kg (effective) bar.
    pub fn gym_bar() -> Self {
        PendulumParams {
            cart_mass: 75.0,
            stick_mass: 15.0,
            ..Self::case_study()
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("cart_mass", self.cart_mass)?;
        // m = 0 is admitted as the mass-ratio limit.
        nonnegative("stick_mass", self.stick_mass)?;
        positive("stick_length", self.stick_length)?;
        nonnegative("fixation_point", self.fixation_point)?;
        positive("gravity", self.gravity)
    }

    pub fn with_length(self, l: f64) -> Self {
        PendulumParams {
            stick_length: l,
            ..self
        }
    }

    pub fn with_fixation(self, l0: f64) -> Self {
        PendulumParams {
            fixation_point: l0,
            ..self
        }
    }

    pub fn with_stick_mass(self, m: f64) -> Self {
        PendulumParams {
            stick_mass: m,
            ..self
        }
    }

    /// Actual stick length `l′ = 1.5 l` corresponding to the effective length.
    pub fn actual_length(&self) -> f64 {
        1.5 * self.stick_length
    }

    pub fn mass_ratio(&self) -> f64 {
        self.stick_mass / self.cart_mass
    }

    /// Fixation point at which the RHP zero coincides with the RHP pole.
    pub fn singular_fixation(&self) -> f64 {
        self.stick_length * self.stick_mass / (self.cart_mass + self.stick_mass)
    }

    /// Magnitude of the non-origin pole pair, `sqrt((M+m) g / (M l))`.
    pub fn pole_magnitude(&self) -> f64 {
        ((self.cart_mass + self.stick_mass) * self.gravity / (self.cart_mass * self.stick_length))
            .sqrt()
    }

    /// `D(s) = s²(M l s² ∓ (M+m) g)`, descending powers.
    pub fn characteristic_den(&self, orient: Orientation) -> Vec<f64> {
        let sg = orient.sign();
        vec![
            self.cart_mass * self.stick_length,
            0.0,
            -sg * (self.cart_mass + self.stick_mass) * self.gravity,
            0.0,
            0.0,
        ]
    }

    /// Open-loop plant from `u + r` to `z`.
    pub fn plant_tf(&self, orient: Orientation) -> RationalTF {
        let sg = orient.sign();
        let num = vec![
            self.stick_length - self.fixation_point,
            0.0,
            -sg * self.gravity,
        ];
        RationalTF::new(num, self.characteristic_den(orient))
            .expect("denominator leading coefficient M*l is positive")
    }

    pub fn poles_zeros(&self, orient: Orientation) -> PoleZeroSet {
        let p = self.pole_magnitude();
        let origin = Complex64::new(0.0, 0.0);
        let pair = |mag: f64, real: bool| -> [Complex64; 2] {
            if real {
                [Complex64::new(mag, 0.0), Complex64::new(-mag, 0.0)]
            } else {
                [Complex64::new(0.0, mag), Complex64::new(0.0, -mag)]
            }
        };
        let upright = orient == Orientation::Upright;
        let [p1, p2] = pair(p, upright);
        let poles = vec![origin, origin, p1, p2];

        let (l, l0, g) = (self.stick_length, self.fixation_point, self.gravity);
        let zeros = if l0 == l {
            Vec::new()
        } else {
            let mag = (g / (l - l0).abs()).sqrt();
            // Upright: real pair below the tip, imaginary above; downward swaps.
            let real = (l0 < l) == upright;
            pair(mag, real).to_vec()
        };
        PoleZeroSet { poles, zeros }
    }

    /// Upright RHP pole `p` and, when `l0 < l`, RHP zero `q = sqrt(g/(l - l0))`.
    pub fn rhp_pole_zero(&self) -> (f64, Option<f64>) {
        let p = self.pole_magnitude();
        let q = (self.fixation_point < self.stick_length)
            .then(|| (self.gravity / (self.stick_length - self.fixation_point)).sqrt());
        (p, q)
    }

    /// Realization of the upright linearization solved for the accelerations:
    ///
    /// ```text
    /// θ̈ = ((M+m) g θ − (u+r)) / (M l)
    /// ẍ = −(m/M) g θ + (u+r) / M
    /// z  = x + l0 θ
    /// ```
    pub fn state_space_up(&self) -> StateSpaceUp {
        let (big_m, m, l, l0, g) = (
            self.cart_mass,
            self.stick_mass,
            self.stick_length,
            self.fixation_point,
            self.gravity,
        );
        StateSpaceUp {
            a: [
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, -(m / big_m) * g, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [0.0, 0.0, (big_m + m) * g / (big_m * l), 0.0],
            ],
            b: [0.0, 1.0 / big_m, 0.0, -1.0 / (big_m * l)],
            c_z: [1.0, 0.0, l0, 0.0],
        }
    }
}

impl StateSpaceUp {
    /// `ẋ = A x + B (u + r)`.
    pub fn derivative(&self, state: &[f64; 4], input: f64) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (i, row) in self.a.iter().enumerate() {
            out[i] = row.iter().zip(state).map(|(a, x)| a * x).sum::<f64>() + self.b[i] * input;
        }
        out
    }

    pub fn output(&self, state: &[f64; 4]) -> f64 {
        self.c_z.iter().zip(state).map(|(c, x)| c * x).sum()
    }

    /// `C_z (sI − A)⁻¹ B` by Gaussian elimination with partial pivoting.
    pub fn transfer_at(&self, s: Complex64) -> Result<Complex64> {
        let mut m = [[Complex64::new(0.0, 0.0); 5]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (dst, &a) in row.iter_mut().zip(&self.a[i]) {
                *dst = Complex64::new(-a, 0.0);
            }
            row[i] += s;
            row[4] = Complex64::new(self.b[i], 0.0);
        }
        for col in 0..4 {
            let pivot = (col..4)
                .max_by(|&x, &y| m[x][col].norm().total_cmp(&m[y][col].norm()))
                .unwrap_or(col);
            if m[pivot][col].norm() < 1e-300 {
                return Err(Error::EvaluationAtPole { s, root: s });
            }
            m.swap(col, pivot);
            let (top, rest) = m.split_at_mut(col + 1);
            let pivot_row = &top[col];
            for row in rest.iter_mut() {
                let f = row[col] / pivot_row[col];
                for (dst, &v) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *dst -= f * v;
                }
            }
        }
        let mut x = [Complex64::new(0.0, 0.0); 4];
        for i in (0..4).rev() {
            let mut acc = m[i][4];
            for k in i + 1..4 {
                acc -= m[i][k] * x[k];
            }
            x[i] = acc / m[i][i];
        }
        Ok(self.c_z.iter().zip(x.iter()).map(|(&c, &v)| v * c).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn case() -> PendulumParams {
        PendulumParams::case_study()
    }

    #[test]
    fn effective_mass_conversion() {
        let raw = RawParams {
            human_mass: 70.0,
            stick_mass: 20.0,
            stick_length: 1.5,
            fixation_point: 1.0,
            gravity: 9.81,
        };
        let p = effective_params(&raw).unwrap();
        assert_eq!(p.stick_mass, 15.0);
        assert_eq!(p.cart_mass, 75.0);
        assert_relative_eq!(p.stick_length, 1.0, epsilon = 1e-15);
        assert_eq!(p.fixation_point, 1.0);
        assert_eq!(p.gravity, 9.81);
    }

    #[test]
    fn effective_params_rejects_nonpositive() {
        let raw = RawParams {
            human_mass: 0.0,
            stick_mass: 20.0,
            stick_length: 1.5,
            fixation_point: 1.0,
            gravity: 9.81,
        };
        match effective_params(&raw) {
            Err(Error::Domain { param, .. }) => assert_eq!(param, "human_mass"),
            other => panic!("expected domain error, got {other:?}"),
        }
        let raw = RawParams {
            fixation_point: -0.1,
            human_mass: 1.0,
            ..raw
        };
        assert!(matches!(
            effective_params(&raw),
            Err(Error::Domain {
                param: "fixation_point",
                ..
            })
        ));
    }

    #[test]
    fn case_study_plant_coefficients() {
        let tf = case().plant_tf(Orientation::Upright);
        assert_eq!(tf.num(), &[-9.81]);
        assert_eq!(tf.den().len(), 5);
        assert_eq!(tf.den()[0], 3.25);
        assert_relative_eq!(tf.den()[2], -32.8635, max_relative = 1e-14);
        let down = case().plant_tf(Orientation::Downward);
        assert_eq!(down.num(), &[9.81]);
        assert_relative_eq!(down.den()[2], 32.8635, max_relative = 1e-14);
    }

    #[test]
    fn case_study_poles_zeros() {
        let pz = case().poles_zeros(Orientation::Upright);
        assert_eq!(pz.poles[0], Complex64::new(0.0, 0.0));
        assert_eq!(pz.poles[1], Complex64::new(0.0, 0.0));
        assert_relative_eq!(pz.poles[2].re, 3.179913, epsilon = 1e-6);
        assert_relative_eq!(pz.poles[3].re, -3.179913, epsilon = 1e-6);
        assert!(pz.zeros.is_empty());

        let pz = case().with_fixation(0.8).poles_zeros(Orientation::Upright);
        assert_relative_eq!(pz.zeros[0].re, 7.00357, epsilon = 5e-6);
        assert_eq!(pz.zeros[0].im, 0.0);

        let pz = case().poles_zeros(Orientation::Downward);
        assert_eq!(pz.poles[2].re, 0.0);
        assert_relative_eq!(pz.poles[2].im, 3.179913, epsilon = 1e-6);
        assert!(pz.zeros.is_empty());
    }

    #[test]
    fn rhp_pair() {
        let (p, q) = case().rhp_pole_zero();
        assert_relative_eq!(p, 3.179913, epsilon = 1e-6);
        assert!(q.is_none());
        let (p0, _) = case().with_stick_mass(0.0).rhp_pole_zero();
        assert_relative_eq!(p0, 9.81f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(p0, 3.13209, epsilon = 5e-6);
    }

    #[test]
    fn initial_angular_acceleration() {
        let ss = case().state_space_up();
        let theta0 = 1e-4;
        let d = ss.derivative(&[0.0, 0.0, theta0, 0.0], 0.0);
        assert_relative_eq!(d[3], 3.35 * 9.81 * theta0 / 3.25, max_relative = 1e-14);
        assert_relative_eq!(d[1], -(0.1 / 3.25) * 9.81 * theta0, max_relative = 1e-14);
    }

    #[test]
    fn realization_matches_tf_at_one() {
        for l0 in [1.0, 0.8, 1.3] {
            let p = case().with_fixation(l0);
            let s = Complex64::new(1.0, 0.0);
            let ss = p.state_space_up().transfer_at(s).unwrap();
            let tf = p.plant_tf(Orientation::Upright).eval(s).unwrap();
            assert!((ss - tf).norm() <= 1e-9 * (1.0 + tf.norm()));
        }
        let tf = case().plant_tf(Orientation::Upright);
        assert_relative_eq!(
            tf.eval(Complex64::new(1.0, 0.0)).unwrap().re,
            0.3312678,
            epsilon = 1e-7
        );
    }
}
