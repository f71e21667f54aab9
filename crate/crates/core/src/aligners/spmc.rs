use std::time::Instant;

use nalgebra::{Unit, Vector3};
use serde::Serialize;

use super::{check_nonempty, AlignmentResult, Method};
use crate::error::Result;
use crate::scalar::Real;
use crate::so3::{axis_rotation, mean_direction, rotation_between_vectors, Axis, Rotation, S2PointSet};
use crate::sphere_hist::{build_binary_histogram_2d, circular_cross_correlate, marginalize_azimuth};

#[derive(Debug, Clone, Default)]
pub struct SpmcOptions {
    /// Cells with more than this many points are set.
    pub binarize_threshold: u32,
    /// Flip north-aligned vectors with negative z (useful for surface normals).
    pub normalize_to_positive_z: bool,
}

/// Spherical pattern matching by correlation.
///
/// Both mean directions are rotated onto +z, after which the residual is a
/// pure z-rotation recovered from the azimuth marginals of the binary
/// histograms.
pub fn spmc_align<T: Real + Serialize>(
    template: &S2PointSet<T>,
    source: &S2PointSet<T>,
    opts: &SpmcOptions,
) -> Result<AlignmentResult<T>> {
    let start = Instant::now();
    check_nonempty(template, source)?;
    let (mean_a, _) = mean_direction(template)?;
    let (mean_b, _) = mean_direction(source)?;
    let north = Unit::new_unchecked(Vector3::z());
    let to_north_a = rotation_between_vectors(&north, &mean_a);
    let to_north_b = rotation_between_vectors(&north, &mean_b);

    let mut a_np = template.rotated(&to_north_a);
    let mut b_np = source.rotated(&to_north_b);
    if opts.normalize_to_positive_z {
        a_np = a_np.flipped_to_positive_z();
        b_np = b_np.flipped_to_positive_z();
    }
    let h_a = marginalize_azimuth(&build_binary_histogram_2d(&a_np, opts.binarize_threshold));
    let h_b = marginalize_azimuth(&build_binary_histogram_2d(&b_np, opts.binarize_threshold));
    let corr = circular_cross_correlate(&h_a, &h_b)?;

    // B_np is A_np turned by +s* about z, so undo it with R_z(-s*).
    let shift = axis_rotation(Axis::Z, -T::from_usize(corr.best_shift_bins).unwrap_or_else(T::zero));
    let rotation: Rotation<T> = to_north_a.transpose() * shift * to_north_b;

    Ok(AlignmentResult {
        rotation,
        method: Method::Spmc,
        iterations: 0,
        converged: true,
        peak_correlation: corr.best_score as f64,
        shift_trace: Vec::new(),
        elapsed_seconds: start.elapsed().as_secs_f64(),
        spmc_fallback: false,
    })
}
