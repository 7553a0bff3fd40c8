//! Fragility sweeps over stick length, fixation point, mass ratio and delay,
//! the `(l, l0)` fragility surface, and the case-study frequency response.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lti::{DelayLoop, FrequencyResponse, RationalTF};
use crate::plant::{Orientation, PendulumParams};
use crate::robustness::fragility;

/// Relative half-width of the excluded neighbourhood of `l0 = l m/(M+m)` in
/// curves.
pub const CURVE_SINGULAR_BAND: f64 = 1e-9;
/// Relative half-width of the masked band in the heatmap.
pub const HEATMAP_SINGULAR_BAND: f64 = 1e-6;
pub const DEFAULT_HEATMAP_POINTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepVariable {
    /// Effective stick length `l` (m).
    StickLength,
    /// Fixation point `l0` (m).
    FixationPoint,
    /// `m/M`, varying `m` at fixed `M`.
    MassRatio,
    /// Loop delay `τ` (s).
    Delay,
}

/// What the emitted abscissa measures for stick-length sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Abscissa {
    #[default]
    Effective,
    /// Actual stick length `l′ = 1.5 l`.
    Actual,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub vary: SweepVariable,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub base: PendulumParams,
    pub delay: f64,
    /// Keep `l0 = l` while sweeping the stick length.
    pub couple_l0_to_l: bool,
    pub abscissa: Abscissa,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FragilityCurve {
    /// `(abscissa, F)` in sweep order.
    pub points: Vec<(f64, f64)>,
    /// Abscissae dropped at the `q = p` singularity.
    pub skipped: Vec<f64>,
}

/// Row per `l0`, column per `l`; `None` marks a masked singular cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FragilitySurface {
    pub l_axis: Vec<f64>,
    pub l0_axis: Vec<f64>,
    cells: Vec<Option<f64>>,
}

pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return alloc::vec![lo];
    }
    let step = (hi - lo) / (count - 1) as f64;
    (0..count)
        .map(|i| {
            if i == count - 1 {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect()
}

fn check_range(param: &'static str, lo: f64, hi: f64, count: usize) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::domain(
            param,
            alloc::format!("requires lo < hi, got [{lo}, {hi}]"),
        ));
    }
    if count < 2 {
        return Err(Error::domain(param, "requires count >= 2"));
    }
    Ok(())
}

fn near_singular(params: &PendulumParams, rel: f64) -> bool {
    let l0s = params.singular_fixation();
    (params.fixation_point - l0s).abs() <= rel * l0s
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        check_range("range", self.lo, self.hi, self.count)?;
        self.base.validate()?;
        if !(self.delay.is_finite() && self.delay >= 0.0) {
            return Err(Error::domain("delay", "must be >= 0"));
        }
        Ok(())
    }

    pub fn abscissae(&self) -> Vec<f64> {
        linspace(self.lo, self.hi, self.count)
    }

    /// Parameters and delay at sweep value `x`.
    pub fn params_at(&self, x: f64) -> (PendulumParams, f64) {
        let b = self.base;
        match self.vary {
            SweepVariable::StickLength => {
                let p = b.with_length(x);
                if self.couple_l0_to_l {
                    (p.with_fixation(x), self.delay)
                } else {
                    (p, self.delay)
                }
            }
            SweepVariable::FixationPoint => (b.with_fixation(x), self.delay),
            SweepVariable::MassRatio => (b.with_stick_mass(x * b.cart_mass), self.delay),
            SweepVariable::Delay => (b, x),
        }
    }

    fn reported_abscissa(&self, x: f64) -> f64 {
        match (self.vary, self.abscissa) {
            (SweepVariable::StickLength, Abscissa::Actual) => 1.5 * x,
            _ => x,
        }
    }
}

/// One `fragility` call per sweep point; singular points are skipped.
pub fn fragility_curve(spec: &SweepSpec) -> Result<FragilityCurve> {
    spec.validate()?;
    let mut curve = FragilityCurve::default();
    for x in spec.abscissae() {
        let (params, delay) = spec.params_at(x);
        let shown = spec.reported_abscissa(x);
        if near_singular(&params, CURVE_SINGULAR_BAND) {
            curve.skipped.push(shown);
            continue;
        }
        match fragility(&params, delay) {
            Ok(r) => curve.points.push((shown, r.fragility)),
            Err(Error::FragilitySingularity { .. }) => curve.skipped.push(shown),
            Err(e) => return Err(e),
        }
    }
    if curve.points.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok(curve)
}

/// Fragility of a single heatmap cell; `None` inside the masked band.
pub fn heatmap_cell(params: &PendulumParams, delay: f64, l: f64, l0: f64) -> Result<Option<f64>> {
    let cell = params.with_length(l).with_fixation(l0);
    if near_singular(&cell, HEATMAP_SINGULAR_BAND) {
        return Ok(None);
    }
    match fragility(&cell, delay) {
        Ok(r) => Ok(Some(r.fragility)),
        Err(Error::FragilitySingularity { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Dense `(l, l0)` fragility grid, row-major with one row per `l0`.
pub fn fragility_heatmap(
    l_range: (f64, f64, usize),
    l0_range: (f64, f64, usize),
    params: &PendulumParams,
    delay: f64,
) -> Result<FragilitySurface> {
    check_range("l_range", l_range.0, l_range.1, l_range.2)?;
    check_range("l0_range", l0_range.0, l0_range.1, l0_range.2)?;
    let l_axis = linspace(l_range.0, l_range.1, l_range.2);
    let l0_axis = linspace(l0_range.0, l0_range.1, l0_range.2);
    let mut cells = Vec::with_capacity(l_axis.len() * l0_axis.len());
    for &l0 in &l0_axis {
        for &l in &l_axis {
            cells.push(heatmap_cell(params, delay, l, l0)?);
        }
    }
    FragilitySurface::from_cells(l_axis, l0_axis, cells)
}

impl FragilitySurface {
    pub fn from_cells(
        l_axis: Vec<f64>,
        l0_axis: Vec<f64>,
        cells: Vec<Option<f64>>,
    ) -> Result<Self> {
        if cells.len() != l_axis.len() * l0_axis.len() {
            return Err(Error::domain("cells", "grid size does not match axes"));
        }
        Ok(FragilitySurface {
            l_axis,
            l0_axis,
            cells,
        })
    }

    pub fn get(&self, l0_index: usize, l_index: usize) -> Option<f64> {
        self.cells[l0_index * self.l_axis.len() + l_index]
    }

    pub fn is_singular(&self, l0_index: usize, l_index: usize) -> bool {
        self.get(l0_index, l_index).is_none()
    }

    pub fn cells(&self) -> &[Option<f64>] {
        &self.cells
    }

    /// `(l, l0, F)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, Option<f64>)> + '_ {
        self.l0_axis.iter().enumerate().flat_map(move |(i, &l0)| {
            self.l_axis
                .iter()
                .enumerate()
                .map(move |(j, &l)| (l, l0, self.get(i, j)))
        })
    }
}

/// `T(jω)` of the upright loop under a static gain.
pub fn freq_response_sweep(
    params: &PendulumParams,
    delay: f64,
    controller_gain: f64,
    omegas: &[f64],
) -> Result<FrequencyResponse> {
    params.validate()?;
    let lp = DelayLoop::new(
        params.plant_tf(Orientation::Upright),
        RationalTF::constant(controller_gain),
        delay,
    )?;
    Ok(lp.loop_response(omegas)?.1)
}
