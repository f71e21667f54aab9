use std::time::Instant;

use serde::Serialize;

use super::{check_nonempty, AlignmentResult, Method};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::so3::{axis_rotation, Axis, Rotation, S2PointSet};
use crate::sphere_hist::{build_axis_histograms, circular_cross_correlate, AxisHistograms};
use crate::wahba::solve_closed_form;

#[derive(Debug, Clone)]
pub struct FrsOptions {
    /// Histograms have `k · 360` bins.
    pub k: usize,
    pub max_iterations: usize,
    /// Iteration stops once all three shifts equal this value.
    pub target_shift: usize,
}

impl Default for FrsOptions {
    fn default() -> Self {
        Self {
            k: 1,
            max_iterations: 50,
            target_shift: 0,
        }
    }
}

/// Fast rotation search: iterated per-axis histogram correlation.
///
/// Each round correlates the axis-direction-angle histograms of the current
/// source estimate against the template's, turns the three shifts into
/// `R_z · R_y · R_x`, accumulates it, and re-rotates the original source.
/// The final rotation is the closed-form fit between the original and the
/// final source. Hitting `max_iterations` is reported, not an error.
pub fn frs_align<T: Real + Serialize>(
    template: &S2PointSet<T>,
    source: &S2PointSet<T>,
    opts: &FrsOptions,
) -> Result<AlignmentResult<T>> {
    let start = Instant::now();
    check_nonempty(template, source)?;
    if opts.k == 0 || opts.max_iterations == 0 {
        return Err(Error::InvalidArgument(
            "FRS needs k >= 1 and max_iterations >= 1".into(),
        ));
    }
    let fixed = build_axis_histograms(template, opts.k);
    let bins_per_degree = T::from_usize(opts.k).expect("small integer");
    let angle = |shift: usize| -T::from_usize(shift).expect("bin index") / bins_per_degree;

    let mut set_b = source.clone();
    let mut total = Rotation::identity();
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut peak = 0u64;

    while iterations < opts.max_iterations {
        iterations += 1;
        let moving = build_axis_histograms(&set_b, opts.k);
        let (sx, sy, sz, score) = correlate_axes(&fixed, &moving)?;
        trace.push([sx, sy, sz]);
        peak = score;
        if [sx, sy, sz].iter().all(|&s| s == opts.target_shift) {
            converged = true;
            break;
        }
        let step = axis_rotation(Axis::Z, angle(sz))
            * axis_rotation(Axis::Y, angle(sy))
            * axis_rotation(Axis::X, angle(sx));
        total = step * total;
        set_b = source.rotated(&total);
    }

    let rotation = match solve_closed_form(source.points(), set_b.points()) {
        Ok(r) => r,
        // A collinear source leaves the fit underdetermined; the accumulated
        // rotation is exact in that case.
        Err(Error::DegenerateConfiguration(_)) => total,
        Err(e) => return Err(e),
    };

    Ok(AlignmentResult {
        rotation,
        method: Method::Frs,
        iterations,
        converged,
        peak_correlation: peak as f64,
        shift_trace: trace,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        spmc_fallback: false,
    })
}

fn correlate_axes(fixed: &AxisHistograms, moving: &AxisHistograms) -> Result<(usize, usize, usize, u64)> {
    let x = circular_cross_correlate(&fixed.x, &moving.x)?;
    let y = circular_cross_correlate(&fixed.y, &moving.y)?;
    let z = circular_cross_correlate(&fixed.z, &moving.z)?;
    Ok((
        x.best_shift_bins,
        y.best_shift_bins,
        z.best_shift_bins,
        x.best_score + y.best_score + z.best_score,
    ))
}
