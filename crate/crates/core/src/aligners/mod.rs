//! Correspondence-free aligners: SPMC, FRS and their combination.
//!
//! Every aligner returns a rotation `R` with `R · source ≈ template`. Use
//! [`AlignmentResult::template_to_source`] for the opposite direction.

mod frs;
mod hybrid;
mod spmc;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::so3::{Rotation, S2PointSet};

pub use frs::{frs_align, FrsOptions};
pub use hybrid::hybrid_align;
pub use spmc::{spmc_align, SpmcOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Spmc,
    Frs,
    Hybrid,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Spmc, Method::Frs, Method::Hybrid];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Spmc => "spmc",
            Method::Frs => "frs",
            Method::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spmc" => Ok(Method::Spmc),
            "frs" => Ok(Method::Frs),
            "hybrid" | "spmc+frs" => Ok(Method::Hybrid),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

/// Estimated rotation plus diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct AlignmentResult<T: Real + Serialize> {
    /// Maps the source onto the template.
    pub rotation: Rotation<T>,
    pub method: Method,
    /// FRS correlation rounds (0 for SPMC).
    pub iterations: usize,
    /// FRS stopped on the target shift (always true for SPMC).
    pub converged: bool,
    pub peak_correlation: f64,
    /// Raw `(x, y, z)` correlation shifts in bins, one triple per FRS round.
    pub shift_trace: Vec<[usize; 3]>,
    pub elapsed_seconds: f64,
    /// The hybrid skipped SPMC because a mean direction was degenerate.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub spmc_fallback: bool,
}

impl<T: Real + Serialize> AlignmentResult<T> {
    pub fn template_to_source(&self) -> Rotation<T> {
        self.rotation.transpose()
    }
}

/// Aligner choice with its options.
#[derive(Debug, Clone, Default)]
pub struct AlignerConfig {
    pub spmc: SpmcOptions,
    pub frs: FrsOptions,
}

impl AlignerConfig {
    pub fn align<T: Real + Serialize>(
        &self,
        method: Method,
        template: &S2PointSet<T>,
        source: &S2PointSet<T>,
    ) -> Result<AlignmentResult<T>> {
        match method {
            Method::Spmc => spmc_align(template, source, &self.spmc),
            Method::Frs => frs_align(template, source, &self.frs),
            Method::Hybrid => hybrid_align(template, source, &self.spmc, &self.frs),
        }
    }
}

pub(crate) fn check_nonempty<T: Real>(template: &S2PointSet<T>, source: &S2PointSet<T>) -> Result<()> {
    if template.is_empty() {
        return Err(Error::EmptySet("template"));
    }
    if source.is_empty() {
        return Err(Error::EmptySet("source"));
    }
    Ok(())
}
