use std::time::Instant;

use serde::Serialize;

use super::{check_nonempty, frs_align, spmc_align, AlignmentResult, FrsOptions, Method, SpmcOptions};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::so3::{Rotation, S2PointSet};

/// SPMC initialization refined by FRS.
///
/// When either mean direction is degenerate SPMC is skipped and FRS starts
/// from the identity; `spmc_fallback` records this.
pub fn hybrid_align<T: Real + Serialize>(
    template: &S2PointSet<T>,
    source: &S2PointSet<T>,
    spmc_opts: &SpmcOptions,
    frs_opts: &FrsOptions,
) -> Result<AlignmentResult<T>> {
    let start = Instant::now();
    check_nonempty(template, source)?;
    let (init, fallback) = match spmc_align(template, source, spmc_opts) {
        Ok(r) => (r.rotation, false),
        Err(Error::DegenerateMean { .. }) => (Rotation::identity(), true),
        Err(e) => return Err(e),
    };
    let refined = frs_align(template, &source.rotated(&init), frs_opts)?;
    Ok(AlignmentResult {
        rotation: refined.rotation * init,
        method: Method::Hybrid,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        spmc_fallback: fallback,
        ..refined
    })
}
