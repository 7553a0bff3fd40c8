//! Cell-parallel evaluation of the `(l, l0)` fragility surface.

use balance_limits_core::sweep::{heatmap_cell, linspace};
use balance_limits_core::{FragilitySurface, PendulumParams};
use rayon::prelude::*;

use crate::error::{CliError, CoreContext, Result};

/// `(lo, hi, count)` of one heatmap axis.
pub type AxisRange = (f64, f64, usize);

/// Same cells as the sequential core routine, computed on `threads` worker
/// threads (all available cores when `None`). Output order is row-major
/// regardless of scheduling.
pub fn parallel_heatmap(
    l_range: AxisRange,
    l0_range: AxisRange,
    params: &PendulumParams,
    delay: f64,
    threads: Option<usize>,
) -> Result<FragilitySurface> {
    for (name, (lo, hi, n)) in [("l_range", l_range), ("l0_range", l0_range)] {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) || n < 2 {
            return Err(CliError::usage(
                name,
                format!("requires lo < hi and count >= 2, got {lo},{hi},{n}"),
            ));
        }
    }
    params.validate().context("heatmap parameters")?;
    let l_axis = linspace(l_range.0, l_range.1, l_range.2);
    let l0_axis = linspace(l0_range.0, l0_range.1, l0_range.2);
    let cols = l_axis.len();
    let compute = || {
        (0..l_axis.len() * l0_axis.len())
            .into_par_iter()
            .map(|k| heatmap_cell(params, delay, l_axis[k % cols], l0_axis[k / cols]))
            .collect::<std::result::Result<Vec<_>, _>>()
    };
    let cells = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::usage("threads", e.to_string()))?
            .install(compute),
        None => compute(),
    }
    .context("heatmap cell")?;
    FragilitySurface::from_cells(l_axis, l0_axis, cells).context("heatmap")
}
