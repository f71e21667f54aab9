use std::num::NonZero;

use kiddo::{ImmutableKdTree, SquaredEuclidean};
use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use petgraph::algo::min_spanning_tree;
use petgraph::data::Element;
use petgraph::graph::UnGraph;
use rayon::prelude::*;

use super::PointCloud;
use crate::error::{Error, Result};
use crate::so3::S2PointSet;

const CENTROID_EPS: f64 = 1e-9;

/// Centroid-aware spherical embedding: unit directions from `centroid`.
pub fn case_embed(cloud: &PointCloud, centroid: &Vector3<f64>) -> Result<S2PointSet<f64>> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud("case_embed input"));
    }
    let bad: Vec<usize> = cloud
        .points
        .iter()
        .enumerate()
        .filter(|(_, p)| (*p - centroid).norm() <= CENTROID_EPS)
        .map(|(i, _)| i)
        .collect();
    if !bad.is_empty() {
        return Err(Error::PointAtCentroid {
            count: bad.len(),
            indices: bad.into_iter().take(16).collect(),
        });
    }
    Ok(S2PointSet::from_unit_vectors(
        cloud
            .points
            .iter()
            .map(|p| {
                let d = p - centroid;
                d / d.norm()
            })
            .collect(),
    ))
}

#[derive(Debug, Clone)]
pub struct EgiOptions {
    /// Neighborhood search radius in scene units.
    pub radius: f64,
    pub min_neighbors: usize,
    /// k for the nearest-neighbor fallback when the radius is too small.
    pub fallback_k: usize,
    /// Fallback neighbors farther than `radius` times this are not trusted.
    pub fallback_reach: f64,
    /// Neighbors per point in the orientation graph.
    pub graph_k: usize,
    /// Orientation graph edges between normals further apart than this are
    /// cut, so signs never propagate across sharp creases.
    pub crease_angle_deg: f64,
}

impl Default for EgiOptions {
    fn default() -> Self {
        Self {
            radius: 0.08,
            min_neighbors: 8,
            fallback_k: 16,
            fallback_reach: 3.0,
            graph_k: 10,
            crease_angle_deg: 30.0,
        }
    }
}

/// Oriented normals for the points that survived estimation.
#[derive(Debug, Clone)]
pub struct NormalEstimate {
    /// Indices into the input cloud.
    pub kept: Vec<usize>,
    pub normals: Vec<Vector3<f64>>,
}

/// Plane-fit normals, consistently oriented.
///
/// Each normal is the smallest-eigenvalue eigenvector of its neighborhood
/// covariance. A cloud that carries normals (from a mesh or a scanner) only
/// lends them their signs. Otherwise signs are propagated along a minimum spanning forest of the
/// k-nearest-neighbor graph weighted by `1 − |nᵢ·nⱼ|`, with edges across
/// creases removed; each tree is then flipped so most of its normals point
/// away from the cloud centroid. Points without enough neighbors, or with collinear
/// neighborhoods, are dropped.
pub fn estimate_normals(cloud: &PointCloud, opts: &EgiOptions) -> Result<NormalEstimate> {
    if opts.min_neighbors == 0 || opts.radius <= 0.0 || !opts.radius.is_finite() {
        return Err(Error::InvalidArgument("EGI needs radius > 0 and min_neighbors >= 1".into()));
    }
    let n = cloud.len();
    if n < opts.min_neighbors + 1 {
        return Err(Error::TooSparse { dropped: n, total: n });
    }
    let coords = cloud.as_arrays();
    let tree: ImmutableKdTree<f64, 3> = ImmutableKdTree::new_from_slice(&coords)
        .map_err(|e| Error::InvalidArgument(format!("cannot index cloud: {e:?}")))?;
    let r2 = opts.radius * opts.radius;
    let reach2 = r2 * opts.fallback_reach * opts.fallback_reach;
    let fallback_k = NonZero::new(opts.fallback_k.max(opts.min_neighbors) + 1).unwrap();

    let raw: Vec<Option<Vector3<f64>>> = coords
        .par_iter()
        .map(|q| {
            let mut nbrs: Vec<usize> = tree
                .query(q)
                .within::<SquaredEuclidean<f64>>(r2)
                .execute()
                .iter()
                .map(|nn| nn.item as usize)
                .collect();
            if nbrs.len() < opts.min_neighbors + 1 {
                nbrs = tree
                    .query(q)
                    .nearest_n::<SquaredEuclidean<f64>>(fallback_k)
                    .execute()
                    .iter()
                    .filter(|nn| nn.distance <= reach2)
                    .map(|nn| nn.item as usize)
                    .collect();
            }
            if nbrs.len() < opts.min_neighbors + 1 {
                return None;
            }
            plane_normal(nbrs.iter().map(|&i| &cloud.points[i]))
        })
        .collect();

    let kept: Vec<usize> = (0..n).filter(|&i| raw[i].is_some()).collect();
    let dropped = n - kept.len();
    if dropped * 2 > n {
        return Err(Error::TooSparse { dropped, total: n });
    }
    let mut normals: Vec<Vector3<f64>> = kept.iter().map(|&i| raw[i].unwrap()).collect();
    match &cloud.normals {
        Some(hints) => {
            for (n, &i) in normals.iter_mut().zip(&kept) {
                if n.dot(&hints[i]) < 0.0 {
                    *n = -*n;
                }
            }
        }
        None => orient(cloud, &kept, &mut normals, opts.graph_k, opts.crease_angle_deg.to_radians().cos()),
    }
    Ok(NormalEstimate { kept, normals })
}

/// The oriented normals as S² points.
pub fn egi_embed(cloud: &PointCloud, opts: &EgiOptions) -> Result<S2PointSet<f64>> {
    Ok(S2PointSet::from_unit_vectors(estimate_normals(cloud, opts)?.normals))
}

fn plane_normal<'a>(pts: impl Iterator<Item = &'a Vector3<f64>> + Clone) -> Option<Vector3<f64>> {
    let count = pts.clone().count() as f64;
    let mean: Vector3<f64> = pts.clone().sum::<Vector3<f64>>() / count;
    let mut cov = Matrix3::zeros();
    for p in pts {
        let d = p - mean;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov / count);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (lo, mid, hi) = (
        eig.eigenvalues[order[0]],
        eig.eigenvalues[order[1]],
        eig.eigenvalues[order[2]],
    );
    if hi <= 0.0 || mid <= 1e-10 * hi || !lo.is_finite() {
        return None;
    }
    let v: Vector3<f64> = eig.eigenvectors.column(order[0]).into_owned();
    let norm = v.norm();
    (norm > 0.0).then(|| v / norm)
}

fn orient(cloud: &PointCloud, kept: &[usize], normals: &mut [Vector3<f64>], graph_k: usize, min_cos: f64) {
    let m = kept.len();
    if m == 0 {
        return;
    }
    let pts: Vec<[f64; 3]> = kept.iter().map(|&i| cloud.points[i].into()).collect();
    let tree: ImmutableKdTree<f64, 3> = match ImmutableKdTree::new_from_slice(&pts) {
        Ok(t) => t,
        Err(_) => return,
    };
    let k = NonZero::new(graph_k.clamp(1, m.saturating_sub(1).max(1)) + 1).unwrap();

    let mut graph = UnGraph::<(), f64>::with_capacity(m, m * graph_k);
    for _ in 0..m {
        graph.add_node(());
    }
    for (i, q) in pts.iter().enumerate() {
        for nn in tree.query(q).nearest_n::<SquaredEuclidean<f64>>(k).execute() {
            let j = nn.item as usize;
            let c = normals[i].dot(&normals[j]).abs();
            if j > i && c >= min_cos {
                let w = 1.0 - c;
                graph.add_edge((i as u32).into(), (j as u32).into(), w);
            }
        }
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m];
    for e in min_spanning_tree(&graph) {
        if let Element::Edge { source, target, .. } = e {
            adj[source].push(target);
            adj[target].push(source);
        }
    }

    let centroid = cloud.centroid().unwrap_or_else(Vector3::zeros);
    let mut component = vec![usize::MAX; m];
    let mut stack = Vec::new();
    for root in 0..m {
        if component[root] != usize::MAX {
            continue;
        }
        let mut members = vec![root];
        component[root] = root;
        stack.push(root);
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if component[v] == usize::MAX {
                    component[v] = root;
                    if normals[v].dot(&normals[u]) < 0.0 {
                        normals[v] = -normals[v];
                    }
                    members.push(v);
                    stack.push(v);
                }
            }
        }
        let outward: f64 = members
            .iter()
            .map(|&i| normals[i].dot(&(cloud.points[kept[i]] - centroid)).signum())
            .sum();
        if outward < 0.0 {
            for &i in &members {
                normals[i] = -normals[i];
            }
        }
    }
}
