//! Point-cloud registration through spherical embeddings.
//!
//! Rotation is estimated first, on an embedding of each cloud onto S²; the
//! translation is then found by voxel voting and refined by a
//! translation-only ICP. All results map the source into the target frame:
//! `target ≈ R · source + t`.

mod embed;
mod io;
mod register;
pub mod synth;
mod translation;

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub use embed::{case_embed, egi_embed, estimate_normals, EgiOptions, NormalEstimate};
pub use io::{read_cloud, read_ply, write_cloud, write_ply};
pub use register::{register, Embedding, RegistrationOptions, RegistrationResult};
pub use translation::{estimate_translation_coarse, translation_only_icp, IcpOptions};

/// Points with optional index-aligned unit normals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
    pub normals: Option<Vec<Vector3<f64>>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vector3<f64>>) -> Self {
        Self { points, normals: None }
    }

    pub fn with_normals(points: Vec<Vector3<f64>>, normals: Vec<Vector3<f64>>) -> Result<Self> {
        if normals.len() != points.len() {
            return Err(Error::InvalidArgument(format!(
                "{} normals for {} points",
                normals.len(),
                points.len()
            )));
        }
        if let Some(i) = normals.iter().position(|n| (n.norm() - 1.0).abs() > 1e-6) {
            return Err(Error::InvalidArgument(format!("normal {i} is not unit length")));
        }
        Ok(Self {
            points,
            normals: Some(normals),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Option<Vector3<f64>> {
        if self.points.is_empty() {
            return None;
        }
        let sum: Vector3<f64> = self.points.iter().sum();
        Some(sum / self.points.len() as f64)
    }

    /// `R · p + t` for every point; normals are rotated.
    pub fn transformed(&self, r: &crate::so3::Rotation<f64>, t: &Vector3<f64>) -> Self {
        Self {
            points: self.points.iter().map(|p| r.apply(p) + t).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|ns| ns.iter().map(|n| r.apply(n)).collect()),
        }
    }

    pub fn translated(&self, t: &Vector3<f64>) -> Self {
        Self {
            points: self.points.iter().map(|p| p + t).collect(),
            normals: self.normals.clone(),
        }
    }

    /// The points (and normals) at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|ns| indices.iter().map(|&i| ns[i]).collect()),
        }
    }

    pub(crate) fn as_arrays(&self) -> Vec<[f64; 3]> {
        self.points.iter().map(|p| [p.x, p.y, p.z]).collect()
    }
}
