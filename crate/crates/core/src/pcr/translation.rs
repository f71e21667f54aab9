use std::collections::HashMap;

use kiddo::{ImmutableKdTree, SquaredEuclidean};
use nalgebra::Vector3;
use rayon::prelude::*;

use super::PointCloud;
use crate::error::{Error, Result};

type Voxel = [i64; 3];

fn voxelize(cloud: &PointCloud, size: f64) -> HashMap<Voxel, u64> {
    let mut counts = HashMap::new();
    for p in &cloud.points {
        let v = [
            (p.x / size).floor() as i64,
            (p.y / size).floor() as i64,
            (p.z / size).floor() as i64,
        ];
        *counts.entry(v).or_insert(0u64) += 1;
    }
    counts
}

/// Voxel-pair voting for the translation taking `source_rotated` onto
/// `target`.
///
/// Every (source voxel, target voxel) pair votes for its index difference
/// with the product of the two point counts. The heaviest difference wins;
/// ties go to the lexicographically smallest difference.
pub fn estimate_translation_coarse(
    source_rotated: &PointCloud,
    target: &PointCloud,
    voxel_size: f64,
) -> Result<Vector3<f64>> {
    if source_rotated.is_empty() {
        return Err(Error::EmptyCloud("source"));
    }
    if target.is_empty() {
        return Err(Error::EmptyCloud("target"));
    }
    if !(voxel_size > 0.0 && voxel_size.is_finite()) {
        return Err(Error::InvalidArgument(format!("voxel size must be positive, got {voxel_size}")));
    }
    let src = voxelize(source_rotated, voxel_size);
    let tgt = voxelize(target, voxel_size);
    let mut votes: HashMap<Voxel, u64> = HashMap::with_capacity(src.len() * 4);
    for (v, wv) in &src {
        for (u, wu) in &tgt {
            let d = [u[0] - v[0], u[1] - v[1], u[2] - v[2]];
            *votes.entry(d).or_insert(0) += wv * wu;
        }
    }
    let (best, _) = votes
        .into_iter()
        .max_by(|(da, wa), (db, wb)| wa.cmp(wb).then_with(|| db.cmp(da)))
        .expect("both clouds are nonempty");
    Ok(Vector3::new(best[0] as f64, best[1] as f64, best[2] as f64) * voxel_size)
}

#[derive(Debug, Clone)]
pub struct IcpOptions {
    pub max_iterations: usize,
    /// Stop when the update is shorter than this.
    pub tolerance: f64,
}

impl Default for IcpOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            tolerance: 1e-6,
        }
    }
}

/// Translation-only ICP: match every shifted source point to its nearest
/// target point and move by the mean residual.
pub fn translation_only_icp(
    source: &PointCloud,
    target: &PointCloud,
    initial: &Vector3<f64>,
    opts: &IcpOptions,
) -> Result<Vector3<f64>> {
    if source.is_empty() {
        return Err(Error::EmptyCloud("source"));
    }
    if target.is_empty() {
        return Err(Error::EmptyCloud("target"));
    }
    let coords = target.as_arrays();
    let tree: ImmutableKdTree<f64, 3> = ImmutableKdTree::new_from_slice(&coords)
        .map_err(|e| Error::InvalidArgument(format!("cannot index target: {e:?}")))?;
    let mut t = *initial;
    for _ in 0..opts.max_iterations {
        let sum: Vector3<f64> = source
            .points
            .par_iter()
            .map(|p| {
                let q = p + t;
                let nn = tree
                    .query(&[q.x, q.y, q.z])
                    .nearest_one::<SquaredEuclidean<f64>>()
                    .execute();
                target.points[nn.item as usize] - q
            })
            .collect::<Vec<_>>()
            .iter()
            .sum();
        let update = sum / source.len() as f64;
        t += update;
        if update.norm() < opts.tolerance {
            break;
        }
    }
    Ok(t)
}
