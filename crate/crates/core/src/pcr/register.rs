use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::embed::{case_embed, egi_embed, EgiOptions};
use super::translation::{estimate_translation_coarse, translation_only_icp, IcpOptions};
use super::PointCloud;
use crate::aligners::{AlignerConfig, AlignmentResult, Method, SpmcOptions};
use crate::error::{Error, Result};
use crate::so3::Rotation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Embedding {
    Egi,
    Case,
}

impl fmt::Display for Embedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Embedding::Egi => "egi",
            Embedding::Case => "case",
        })
    }
}

impl FromStr for Embedding {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "egi" => Ok(Embedding::Egi),
            "case" => Ok(Embedding::Case),
            other => Err(Error::InvalidArgument(format!("unknown embedding '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegistrationOptions {
    pub embedding: Embedding,
    pub method: Method,
    pub aligner: AlignerConfig,
    pub egi: EgiOptions,
    pub voxel_size: f64,
    pub icp: IcpOptions,
    /// The source is a partial view; CASE is refused because its centroid
    /// would not match the target's.
    pub source_is_partial: bool,
}

impl RegistrationOptions {
    /// Defaults per embedding. EGI normals carry a sign ambiguity, so SPMC
    /// flips its north-aligned vectors to +z.
    pub fn new(embedding: Embedding, method: Method) -> Self {
        let aligner = AlignerConfig {
            spmc: SpmcOptions {
                normalize_to_positive_z: embedding == Embedding::Egi,
                ..SpmcOptions::default()
            },
            ..AlignerConfig::default()
        };
        Self {
            embedding,
            method,
            aligner,
            egi: EgiOptions::default(),
            voxel_size: 0.2,
            icp: IcpOptions::default(),
            source_is_partial: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegistrationResult {
    pub rotation: Rotation<f64>,
    pub translation: [f64; 3],
    pub coarse_translation: [f64; 3],
    pub embedding: Embedding,
    pub alignment: AlignmentResult<f64>,
}

impl RegistrationResult {
    pub fn translation_vector(&self) -> Vector3<f64> {
        Vector3::from(self.translation)
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.apply(p) + self.translation_vector()
    }
}

/// Estimates `(R, t)` with `target ≈ R · source + t`.
///
/// Both clouds are embedded on S², the aligner recovers `R`, and the rotated
/// source is translated by voxel voting followed by translation-only ICP.
pub fn register(source: &PointCloud, target: &PointCloud, opts: &RegistrationOptions) -> Result<RegistrationResult> {
    if source.is_empty() {
        return Err(Error::EmptyCloud("source"));
    }
    if target.is_empty() {
        return Err(Error::EmptyCloud("target"));
    }
    let (s2_source, s2_target) = match opts.embedding {
        Embedding::Case => {
            if opts.source_is_partial {
                return Err(Error::InvalidArgument(
                    "CASE needs complete clouds; use EGI for partial views".into(),
                ));
            }
            (
                case_embed(source, &source.centroid().unwrap())?,
                case_embed(target, &target.centroid().unwrap())?,
            )
        }
        Embedding::Egi => (egi_embed(source, &opts.egi)?, egi_embed(target, &opts.egi)?),
    };
    let alignment = opts.aligner.align(opts.method, &s2_target, &s2_source)?;
    let rotation = alignment.rotation;
    let rotated = source.transformed(&rotation, &Vector3::zeros());
    let coarse = estimate_translation_coarse(&rotated, target, opts.voxel_size)?;
    let fine = translation_only_icp(&rotated, target, &coarse, &opts.icp)?;
    Ok(RegistrationResult {
        rotation,
        translation: fine.into(),
        coarse_translation: coarse.into(),
        embedding: opts.embedding,
        alignment,
    })
}
