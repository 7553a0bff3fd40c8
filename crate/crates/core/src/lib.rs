//! Fundamental performance limits for delayed feedback balancing of a
//! cart-pendulum.
//!
//! The crate is `no_std` (it needs `alloc`). It covers the linearized plant
//! and its poles/zeros, rational-plus-delay loop arithmetic, the fragility
//! bound `F` together with the Poisson-weighted log-sensitivity integral and
//! waterbed diagnostics, fragility sweeps, and a seeded time-domain simulator.
//! File formats, spectral estimation and the command line live in the
//! `balance-limits` companion crate.
//!
//! Units are SI throughout. Log-magnitudes are in nats.

#![no_std]

extern crate alloc;

pub mod error;
pub mod lti;
pub mod plant;
pub mod poly;
pub mod quadrature;
pub mod robustness;
pub mod stability;
pub mod sweep;
pub mod timesim;

pub use error::{Error, Result};
pub use lti::{DelayLoop, FactorValues, FrequencyResponse, RationalTF};
pub use plant::{Orientation, PendulumParams, PoleZeroSet, RawParams, StateSpaceUp};
pub use robustness::{
    ConstructedT, FragilityResult, PoissonKernel, Regime, WaterbedReport, WaterbedStatus,
};
pub use stability::{nyquist_stable, StabilityReport};
pub use sweep::{FragilityCurve, FragilitySurface, SweepSpec, SweepVariable};
pub use timesim::{SimConfig, Trajectory};

pub use num_complex::Complex64;
