//! Presets and the flat key-value parameter file.
//!
//! A file holds one `key = value` pair per line; blank lines and lines
//! starting with `#` are ignored. Body quantities are given raw (human mass,
//! stick mass, actual stick length) and converted to effective parameters.
//! Unknown or repeated keys are rejected. Settings resolve in the order
//! preset, then file, then command-line flags.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use balance_limits_core::plant::CASE_STUDY_DELAY;
use balance_limits_core::{PendulumParams, RationalTF};
use clap::ValueEnum;

use crate::error::{CliError, CoreContext, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// M = 3.25 kg, m = 0.1 kg, l = l0 = 1 m, g = 9.81 m/s², tau = 0.3 s
    CaseStudy,
    /// Case-study masses, gravity and delay; meant to be paired with --l/--l0
    CaseStudyMasses,
    /// M = 75 kg, m = 15 kg (70 kg person, 20 kg bar), case-study geometry
    GymBar,
}

/// Simulation settings that are not part of the plant.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSettings {
    pub dt: f64,
    pub duration: f64,
    pub sensor_noise_std: f64,
    pub actuation_noise_std: f64,
    pub seed: Option<u64>,
    /// `(x, ẋ, θ, θ̇)`.
    pub initial_state: [f64; 4],
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            dt: 1e-3,
            duration: 10.0,
            sensor_noise_std: 0.0,
            actuation_noise_std: 0.0,
            seed: None,
            initial_state: [0.0; 4],
        }
    }
}

/// Controller as descending-power coefficient lists.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerCoeffs {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

impl ControllerCoeffs {
    pub fn gain(k: f64) -> Self {
        ControllerCoeffs {
            num: vec![k],
            den: vec![1.0],
        }
    }

    pub fn to_tf(&self) -> Result<RationalTF> {
        RationalTF::new(self.num.clone(), self.den.clone()).context("controller")
    }
}

/// Everything a command may need from presets, files and flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: PendulumParams,
    pub delay: f64,
    pub controller: Option<ControllerCoeffs>,
    pub sim: SimSettings,
}

impl RunConfig {
    pub fn from_preset(preset: Preset) -> Self {
        let params = match preset {
            Preset::CaseStudy | Preset::CaseStudyMasses => PendulumParams::case_study(),
            Preset::GymBar => PendulumParams::gym_bar(),
        };
        RunConfig {
            params,
            delay: CASE_STUDY_DELAY,
            controller: None,
            sim: SimSettings::default(),
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::from_preset(Preset::CaseStudy)
    }
}

const PLANT_KEYS: [&str; 6] = [
    "human_mass",
    "stick_mass",
    "stick_length_actual",
    "fixation_point",
    "gravity",
    "delay",
];
const SIM_KEYS: [&str; 9] = [
    "dt",
    "duration",
    "sensor_noise_std",
    "actuation_noise_std",
    "seed",
    "initial_x",
    "initial_velocity",
    "initial_theta",
    "initial_angular_velocity",
];
const CONTROLLER_KEYS: [&str; 2] = ["controller_num", "controller_den"];

/// Every key the parameter file accepts.
pub fn known_keys() -> impl Iterator<Item = &'static str> {
    PLANT_KEYS
        .into_iter()
        .chain(SIM_KEYS)
        .chain(CONTROLLER_KEYS)
}

/// Parsed `key = value` pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KvFile {
    entries: BTreeMap<String, String>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::usage(
                    "config",
                    format!("line {}: expected `key = value`, got `{line}`", i + 1),
                )
            })?;
            let key = key.trim();
            if !known_keys().any(|k| k == key) {
                return Err(CliError::usage(
                    key,
                    format!("unknown key on line {}", i + 1),
                ));
            }
            if entries
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(CliError::usage(key, format!("repeated on line {}", i + 1)));
            }
        }
        Ok(KvFile { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn number(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| CliError::usage(key, format!("not a number: `{v}`")))
            })
            .transpose()
    }

    /// Overlays this file on `cfg`. Fields without a key keep their values
    /// bit for bit.
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        let p = &mut cfg.params;
        let human = self.number("human_mass")?;
        let stick = self.number("stick_mass")?;
        if human.is_some() || stick.is_some() {
            let stick_raw = stick.unwrap_or(4.0 / 3.0 * p.stick_mass);
            let human_raw = human.unwrap_or(p.cart_mass - p.stick_mass / 3.0);
            positive("human_mass", human_raw)?;
            positive("stick_mass", stick_raw)?;
            p.cart_mass = 0.25 * stick_raw + human_raw;
            p.stick_mass = 0.75 * stick_raw;
        }
        if let Some(l) = self.number("stick_length_actual")? {
            positive("stick_length_actual", l)?;
            p.stick_length = 2.0 / 3.0 * l;
        }
        if let Some(l0) = self.number("fixation_point")? {
            nonnegative("fixation_point", l0)?;
            p.fixation_point = l0;
        }
        if let Some(g) = self.number("gravity")? {
            positive("gravity", g)?;
            p.gravity = g;
        }
        if let Some(tau) = self.number("delay")? {
            nonnegative("delay", tau)?;
            cfg.delay = tau;
        }

        let s = &mut cfg.sim;
        if let Some(v) = self.number("dt")? {
            s.dt = v;
        }
        if let Some(v) = self.number("duration")? {
            s.duration = v;
        }
        if let Some(v) = self.number("sensor_noise_std")? {
            s.sensor_noise_std = v;
        }
        if let Some(v) = self.number("actuation_noise_std")? {
            s.actuation_noise_std = v;
        }
        if let Some(v) = self.get("seed") {
            s.seed =
                Some(v.parse().map_err(|_| {
                    CliError::usage("seed", format!("not a 64-bit integer: `{v}`"))
                })?);
        }
        for (i, key) in SIM_KEYS[5..].iter().enumerate() {
            if let Some(v) = self.number(key)? {
                s.initial_state[i] = v;
            }
        }

        let num = self
            .get("controller_num")
            .map(|v| parse_list("controller_num", v))
            .transpose()?;
        let den = self
            .get("controller_den")
            .map(|v| parse_list("controller_den", v))
            .transpose()?;
        match (num, den) {
            (Some(num), den) => {
                cfg.controller = Some(ControllerCoeffs {
                    num,
                    den: den.unwrap_or_else(|| vec![1.0]),
                })
            }
            (None, Some(_)) => {
                return Err(CliError::usage(
                    "controller_den",
                    "given without controller_num",
                ))
            }
            (None, None) => {}
        }
        Ok(())
    }
}

/// Renders `cfg` in the parameter-file format. Masses and length are
/// written raw, so [`KvFile::apply`] maps them back to the effective values
/// up to rounding.
pub fn to_kv_text(cfg: &RunConfig) -> String {
    let p = &cfg.params;
    let mut out = String::new();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    put("human_mass", fmt(p.cart_mass - p.stick_mass / 3.0));
    put("stick_mass", fmt(4.0 / 3.0 * p.stick_mass));
    put("stick_length_actual", fmt(1.5 * p.stick_length));
    put("fixation_point", fmt(p.fixation_point));
    put("gravity", fmt(p.gravity));
    put("delay", fmt(cfg.delay));
    let s = &cfg.sim;
    put("dt", fmt(s.dt));
    put("duration", fmt(s.duration));
    put("sensor_noise_std", fmt(s.sensor_noise_std));
    put("actuation_noise_std", fmt(s.actuation_noise_std));
    if let Some(seed) = s.seed {
        put("seed", seed.to_string());
    }
    for (key, v) in SIM_KEYS[5..].iter().zip(s.initial_state) {
        put(key, fmt(v));
    }
    if let Some(c) = &cfg.controller {
        put("controller_num", join(&c.num));
        put("controller_den", join(&c.den));
    }
    out
}

fn fmt(v: f64) -> String {
    format!("{v:?}")
}

fn join(v: &[f64]) -> String {
    v.iter().map(|c| fmt(*c)).collect::<Vec<_>>().join(", ")
}

/// Comma-separated real numbers.
pub fn parse_list(param: &str, text: &str) -> Result<Vec<f64>> {
    let items: Vec<f64> = text
        .split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .map_err(|_| CliError::usage(param, format!("not a number: `{t}`")))
        })
        .collect::<Result<_>>()?;
    if items.iter().any(|v| !v.is_finite()) {
        return Err(CliError::usage(param, "coefficients must be finite"));
    }
    Ok(items)
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::data(
            key,
            format!("must be finite and > 0, got {v}"),
        ))
    }
}

fn nonnegative(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(CliError::data(
            key,
            format!("must be finite and >= 0, got {v}"),
        ))
    }
}
