//! Synthetic registration shapes: random CAD-like assemblies of plates,
//! discs, open tubes and boxes, surface-sampled and scaled into the unit
//! cube.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::PointCloud;
use crate::so3::{sample_rotations_with, Rotation};

/// How surface samples are placed within each part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// R2 quasi-random sequence with a random offset, similar in spirit to
    /// Poisson-disk mesh sampling.
    #[default]
    LowDiscrepancy,
    /// Independent uniform samples.
    Independent,
}

#[derive(Debug, Clone, Copy)]
enum Sheet {
    Rect { half_u: f64, half_v: f64 },
    Disc { radius: f64 },
    Tube { radius: f64, half_height: f64 },
}

#[derive(Debug, Clone)]
struct Part {
    sheet: Sheet,
    frame: Rotation<f64>,
    centre: Vector3<f64>,
    /// +1 or −1: which side of the sheet the normal points to.
    side: f64,
}

impl Part {
    fn area(&self) -> f64 {
        match self.sheet {
            Sheet::Rect { half_u, half_v } => 4.0 * half_u * half_v,
            Sheet::Disc { radius } => PI * radius * radius,
            Sheet::Tube { radius, half_height } => 4.0 * PI * radius * half_height,
        }
    }

    /// Area-preserving map from the unit square.
    fn at(&self, u: f64, v: f64) -> Vector3<f64> {
        let local = match self.sheet {
            Sheet::Rect { half_u, half_v } => Vector3::new((2.0 * u - 1.0) * half_u, (2.0 * v - 1.0) * half_v, 0.0),
            Sheet::Disc { radius } => {
                let (s, c) = (2.0 * PI * v).sin_cos();
                Vector3::new(radius * u.sqrt() * c, radius * u.sqrt() * s, 0.0)
            }
            Sheet::Tube { radius, half_height } => {
                let (s, c) = (2.0 * PI * u).sin_cos();
                Vector3::new(radius * c, radius * s, (2.0 * v - 1.0) * half_height)
            }
        };
        self.frame.apply(&local) + self.centre
    }

    fn normal_at(&self, u: f64) -> Vector3<f64> {
        let local = match self.sheet {
            Sheet::Tube { .. } => {
                let (s, c) = (2.0 * PI * u).sin_cos();
                Vector3::new(c, s, 0.0)
            }
            _ => Vector3::z(),
        };
        self.frame.apply(&local) * self.side
    }
}

fn box_faces(half: Vector3<f64>, frame: &Rotation<f64>, centre: Vector3<f64>) -> Vec<Part> {
    let mut faces = Vec::with_capacity(6);
    // Face normal axis, then the two in-plane half extents.
    for (axis, hu, hv) in [(0, half.y, half.z), (1, half.x, half.z), (2, half.x, half.y)] {
        let to_face = match axis {
            0 => Rotation::from_row_major(&[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]),
            1 => Rotation::from_row_major(&[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0]),
            _ => Ok(Rotation::identity()),
        }
        .expect("axis permutation");
        for sign in [1.0, -1.0] {
            let mut offset = Vector3::zeros();
            offset[axis] = sign * half[axis];
            faces.push(Part {
                sheet: Sheet::Rect { half_u: hu, half_v: hv },
                frame: *frame * to_face,
                centre: centre + frame.apply(&offset),
                side: sign,
            });
        }
    }
    faces
}

fn random_parts(rng: &mut ChaCha8Rng) -> Vec<Part> {
    let count = rng.random_range(4..=6);
    let frames = sample_rotations_with::<f64, _>(count, rng);
    let mut parts = Vec::new();
    for frame in frames {
        let centre = Vector3::from_fn(|_, _| rng.random_range(-0.35..0.35));
        let kind: f64 = rng.random();
        if kind < 0.4 {
            parts.push(Part {
                sheet: Sheet::Rect {
                    half_u: rng.random_range(0.08..0.4),
                    half_v: rng.random_range(0.03..0.3),
                },
                frame,
                centre,
                side: 1.0,
            });
        } else if kind < 0.55 {
            parts.push(Part {
                sheet: Sheet::Disc {
                    radius: rng.random_range(0.08..0.25),
                },
                frame,
                centre,
                side: 1.0,
            });
        } else if kind < 0.75 {
            parts.push(Part {
                sheet: Sheet::Tube {
                    radius: rng.random_range(0.03..0.15),
                    half_height: rng.random_range(0.1..0.35),
                },
                frame,
                centre,
                side: 1.0,
            });
        } else {
            let half = Vector3::from_fn(|_, _| rng.random_range(0.04..0.2));
            parts.extend(box_faces(half, &frame, centre));
        }
    }
    parts
}

/// Splits `n` over weights by largest remainder; the counts sum to `n`.
fn apportion(n: usize, weights: &[f64]) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / total * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let short = n - counts.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        counts[i] += 1;
    }
    counts
}

/// A random asymmetric assembly with `n_points` surface samples, scaled so
/// its bounding box fits the unit cube.
///
/// Points are ordered part by part in sampling order, so even and odd
/// indices form two interleaved samples of the same surface.
pub fn random_shape(seed: u64, n_points: usize) -> PointCloud {
    random_shape_with(seed, n_points, Sampling::default())
}

pub fn random_shape_with(seed: u64, n_points: usize, sampling: Sampling) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5348_4150_4553);
    let parts = random_parts(&mut rng);
    let areas: Vec<f64> = parts.iter().map(Part::area).collect();
    let counts = apportion(n_points, &areas);
    // Plastic-number Kronecker sequence.
    let g = 1.324_717_957_244_746_f64;
    let (a1, a2) = (1.0 / g, 1.0 / (g * g));
    let mut points = Vec::with_capacity(n_points);
    let mut normals = Vec::with_capacity(n_points);
    for (part, &m) in parts.iter().zip(&counts) {
        let (o1, o2): (f64, f64) = (rng.random(), rng.random());
        for i in 0..m {
            let (u, v) = match sampling {
                Sampling::LowDiscrepancy => ((o1 + i as f64 * a1).fract(), (o2 + i as f64 * a2).fract()),
                Sampling::Independent => (rng.random(), rng.random()),
            };
            points.push(part.at(u, v));
            normals.push(part.normal_at(u));
        }
    }
    fit_unit_cube(&mut points);
    PointCloud::with_normals(points, normals).expect("unit sheet normals")
}

fn fit_unit_cube(points: &mut [Vector3<f64>]) {
    let Some(first) = points.first().copied() else {
        return;
    };
    let (lo, hi) = points
        .iter()
        .fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p)));
    let extent = (hi - lo).max();
    if extent <= 0.0 {
        return;
    }
    for p in points.iter_mut() {
        *p = (*p - lo) / extent;
    }
}

/// Even and odd samples as two clouds sharing no points.
pub fn split_interleaved(cloud: &PointCloud) -> (PointCloud, PointCloud) {
    let pick = |parity: usize| cloud.subset(&(parity..cloud.len()).step_by(2).collect::<Vec<_>>());
    (pick(0), pick(1))
}

/// The `keep` fraction of points lying farthest along `direction` from the
/// centroid: a half-space partial view with the given overlap ratio.
pub fn partial_view(cloud: &PointCloud, direction: &Vector3<f64>, keep: f64) -> PointCloud {
    let c = cloud.centroid().unwrap_or_else(Vector3::zeros);
    let d = direction.normalize();
    let mut order: Vec<(f64, usize)> = cloud
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| ((p - c).dot(&d), i))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let n = ((keep.clamp(0.0, 1.0) * cloud.len() as f64).round() as usize).min(cloud.len());
    let mut ids: Vec<usize> = order[..n].iter().map(|&(_, i)| i).collect();
    ids.sort_unstable();
    cloud.subset(&ids)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apportion_sums_exactly() {
        assert_eq!(apportion(10, &[1.0, 1.0, 1.0]), vec![4, 3, 3]);
        assert_eq!(apportion(7, &[0.5, 0.25, 0.25]).iter().sum::<usize>(), 7);
    }

    #[test]
    fn box_faces_enclose_the_box() {
        let half = Vector3::new(0.1, 0.2, 0.3);
        let faces = box_faces(half, &Rotation::identity(), Vector3::zeros());
        assert_eq!(faces.len(), 6);
        let total: f64 = faces.iter().map(Part::area).sum();
        assert!((total - 8.0 * (0.02 + 0.06 + 0.03)).abs() < 1e-12);
        for f in &faces {
            for (u, v) in [(0.0, 0.0), (1.0, 1.0), (0.3, 0.8)] {
                let p = f.at(u, v);
                let on_face = (0..3).any(|a| (p[a].abs() - half[a]).abs() < 1e-12);
                let inside = (0..3).all(|a| p[a].abs() <= half[a] + 1e-12);
                assert!(on_face && inside, "{p:?}");
            }
        }
    }

    #[test]
    fn interleaved_halves_are_disjoint() {
        let c = random_shape(3, 1001);
        let (a, b) = split_interleaved(&c);
        assert_eq!((a.len(), b.len()), (501, 500));
        assert!(a.points.iter().all(|p| !b.points.contains(p)));
    }
}
