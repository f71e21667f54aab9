//! Correspondence-based closed-form rotation (Kabsch) and an exhaustive
//! Euler-grid search used as a correspondence-free oracle.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::so3::{compose_zyx, Rotation, S2PointSet};
use crate::sphere_hist::{build_binary_histogram_2d, flat_cell_of, CELLS};

/// Rotation `R` minimizing `Σ‖targetᵢ − R·sourceᵢ‖²` over index-aligned pairs.
///
/// SVD of the cross-covariance with a determinant correction, so the
/// result is always a proper rotation even for reflective noise.
pub fn solve_closed_form<T: Real>(source: &[Vector3<T>], target: &[Vector3<T>]) -> Result<Rotation<T>> {
    if source.len() != target.len() {
        return Err(Error::InvalidArgument(format!(
            "correspondence sets differ in length: {} vs {}",
            source.len(),
            target.len()
        )));
    }
    if source.len() < 2 {
        return Err(Error::DegenerateConfiguration(format!(
            "{} pair(s); at least two are required",
            source.len()
        )));
    }
    let h = source
        .iter()
        .zip(target)
        .fold(Matrix3::zeros(), |acc: Matrix3<T>, (s, t)| acc + s * t.transpose());
    let svd = h.svd(true, true);
    let mut sv: Vec<T> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let rel = T::lit(1e-10).max(T::default_epsilon() * T::lit(100.0));
    if !(sv[1] > rel * sv[0]) {
        return Err(Error::DegenerateConfiguration(
            "points are collinear; rotation about their common line is unidentifiable".into(),
        ));
    }
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested Vᵀ").transpose();
    let mut correction = Matrix3::identity();
    if (v * u.transpose()).determinant() < T::zero() {
        // The singular vector paired with the smallest singular value flips.
        let smallest = (0..3)
            .min_by(|&a, &b| {
                svd.singular_values[a]
                    .partial_cmp(&svd.singular_values[b])
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(2);
        correction[(smallest, smallest)] = -T::one();
    }
    Ok(Rotation::from_matrix_unchecked(v * correction * u.transpose()))
}

/// Best grid rotation found by [`brute_force_search`].
#[derive(Debug, Clone)]
pub struct GridSearchResult<T: Real> {
    /// Maps the source onto the template.
    pub rotation: Rotation<T>,
    /// Number of template cells covered by the rotated source.
    pub score: u64,
    /// `(θz, θy, θx)` of the winning grid cell, degrees.
    pub euler_zyx_deg: [f64; 3],
}

fn grid_axis(start: f64, end_inclusive: f64, step: f64, closed: bool) -> Vec<f64> {
    let mut out = Vec::new();
    let mut i = 0u32;
    loop {
        let v = start + i as f64 * step;
        if (closed && v > end_inclusive + 1e-9) || (!closed && v >= end_inclusive - 1e-9) {
            break;
        }
        out.push(v);
        i += 1;
    }
    out
}

/// Exhaustive ZYX Euler grid search scored by binary-histogram overlap.
///
/// θz and θx cover `[0, 360)`, θy covers `[-90, 90]`; together these reach
/// every rotation. Ties resolve to the lexicographically smallest
/// `(θz, θy, θx)` index.
pub fn brute_force_search<T: Real>(
    template: &S2PointSet<T>,
    source: &S2PointSet<T>,
    grid_step_deg: f64,
) -> Result<GridSearchResult<T>> {
    if !(1.0..=30.0).contains(&grid_step_deg) {
        return Err(Error::InvalidArgument(format!(
            "grid step {grid_step_deg}° outside [1, 30]"
        )));
    }
    if template.is_empty() || source.is_empty() {
        return Err(Error::EmptySet("brute-force search input"));
    }
    let reference = build_binary_histogram_2d(template, 0);
    let cells = reference.cells();
    let zs = grid_axis(0.0, 360.0, grid_step_deg, false);
    let ys = grid_axis(-90.0, 90.0, grid_step_deg, true);
    let xs = grid_axis(0.0, 360.0, grid_step_deg, false);
    let total = zs.len() * ys.len() * xs.len();
    let euler = |idx: usize| {
        let (iz, rest) = (idx / (ys.len() * xs.len()), idx % (ys.len() * xs.len()));
        [zs[iz], ys[rest / xs.len()], xs[rest % xs.len()]]
    };

    let (best_idx, score) = (0..total)
        .into_par_iter()
        .map_init(
            || (vec![0u32; CELLS], 0u32),
            |(stamp, generation), idx| {
                *generation += 1;
                let [z, y, x] = euler(idx);
                let r = compose_zyx(T::lit(z), T::lit(y), T::lit(x));
                let mut hit = 0u64;
                for p in source {
                    let c = flat_cell_of(&r.apply(p));
                    if stamp[c] != *generation {
                        stamp[c] = *generation;
                        hit += cells[c] as u64;
                    }
                }
                (idx, hit)
            },
        )
        .reduce(
            || (usize::MAX, 0),
            |a, b| {
                if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    let e = euler(best_idx);
    Ok(GridSearchResult {
        rotation: compose_zyx(T::lit(e[0]), T::lit(e[1]), T::lit(e[2])),
        score,
        euler_zyx_deg: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::{axis_rotation, geodesic_angle_deg, sample_rotations, Axis};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_unit(n: usize, seed: u64) -> Vec<Vector3<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let v = Vector3::from_fn(|_, _| StandardNormal.sample(&mut rng));
                v.normalize()
            })
            .collect()
    }

    #[test]
    fn identity_on_equal_sets() {
        let s = random_unit(50, 1);
        let r = solve_closed_form(&s, &s).unwrap();
        assert!((r.matrix() - Matrix3::identity()).amax() < 1e-12);
    }

    #[test]
    fn recovers_z_rotation() {
        let s = random_unit(100, 2);
        let truth = axis_rotation(Axis::Z, 47.0);
        let t: Vec<_> = s.iter().map(|p| truth.apply(p)).collect();
        let r = solve_closed_form(&s, &t).unwrap();
        assert!(geodesic_angle_deg(&r, &truth) < 1e-9);
    }

    #[test]
    fn tolerates_tangent_noise() {
        let s = random_unit(1000, 3);
        let truth = sample_rotations::<f64>(1, 9)[0];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let t: Vec<_> = s
            .iter()
            .map(|p| {
                let q = truth.apply(p);
                let g = Vector3::from_fn(|_, _| 0.01 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng));
                (q + (g - q * q.dot(&g))).normalize()
            })
            .collect();
        let r = solve_closed_form(&s, &t).unwrap();
        assert!(r.is_valid(1e-9));
        assert!(geodesic_angle_deg(&r, &truth) < 0.5);
    }

    #[test]
    fn reflection_dominated_input_still_gives_rotation() {
        // Targets are a mirror image of the sources.
        let s = random_unit(30, 5);
        let t: Vec<_> = s.iter().map(|p| Vector3::new(p.x, p.y, -p.z)).collect();
        let r = solve_closed_form(&s, &t).unwrap();
        assert!(r.is_valid(1e-9));
    }

    #[test]
    fn collinear_is_degenerate() {
        let s = vec![Vector3::<f64>::z(), -Vector3::z(), Vector3::z()];
        assert!(matches!(
            solve_closed_form(&s, &s),
            Err(Error::DegenerateConfiguration(_))
        ));
        assert!(solve_closed_form(&s[..1], &s[..1]).is_err());
    }

    #[test]
    fn brute_force_identity_and_grid_containment() {
        let t = S2PointSet::from_unit_vectors(random_unit(300, 6));
        // A coarse step keeps the debug-build runtime low.
        let id = brute_force_search(&t, &t, 15.0).unwrap();
        assert_eq!(id.euler_zyx_deg, [0.0, 0.0, 0.0]);
        assert_eq!(id.score as usize, build_binary_histogram_2d(&t, 0).occupied());

        let on_grid = compose_zyx(45.0, 30.0, 300.0);
        let s = t.rotated(&on_grid.transpose());
        let hit = brute_force_search(&t, &s, 15.0).unwrap();
        assert!(geodesic_angle_deg(&hit.rotation, &on_grid) < 1e-9);
    }

    /// Points scattered around a handful of random centres, ~5° spread.
    fn clustered(n: usize, seed: u64) -> S2PointSet<f64> {
        let centres = random_unit(8, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
        S2PointSet::from_unit_vectors(
            (0..n)
                .map(|i| {
                    let c = centres[i % centres.len()];
                    let g = Vector3::from_fn(|_, _| {
                        0.09 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
                    });
                    (c + g).normalize()
                })
                .collect(),
        )
    }

    #[test]
    fn brute_force_off_grid_is_within_bound() {
        let t = clustered(400, 7);
        let truth = sample_rotations::<f64>(1, 8)[0];
        let s = t.rotated(&truth.transpose());
        let hit = brute_force_search(&t, &s, 6.0).unwrap();
        assert!(geodesic_angle_deg(&hit.rotation, &truth) <= 2.0 * 3f64.sqrt() * 6.0);
    }

    #[test]
    fn brute_force_score_invariant_under_joint_grid_rotation() {
        let t = S2PointSet::from_unit_vectors(random_unit(200, 9));
        let s = t.rotated(&axis_rotation(Axis::Z, 30.0));
        let q = axis_rotation(Axis::Z, 90.0);
        let a = brute_force_search(&t, &s, 30.0).unwrap();
        let b = brute_force_search(&t.rotated(&q), &s.rotated(&q), 30.0).unwrap();
        assert_eq!(a.score, b.score);
    }

    #[test]
    fn rejects_bad_step() {
        let t = S2PointSet::from_unit_vectors(random_unit(10, 1));
        assert!(brute_force_search(&t, &t, 0.5).is_err());
        assert!(brute_force_search(&t, &t, 45.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 64, rng_seed: proptest::test_runner::RngSeed::Fixed(3), ..ProptestConfig::default() })]

        #[test]
        fn closed_form_is_left_equivariant(seed in any::<u64>()) {
            let rs = sample_rotations::<f64>(2, seed);
            let (truth, q) = (rs[0], rs[1]);
            let s = random_unit(40, seed ^ 0x55);
            let t: Vec<_> = s.iter().map(|p| truth.apply(p)).collect();
            let r = solve_closed_form(&s, &t).unwrap();
            let qs: Vec<_> = s.iter().map(|p| q.apply(p)).collect();
            let qt: Vec<_> = t.iter().map(|p| q.apply(p)).collect();
            let rq = solve_closed_form(&qs, &qt).unwrap();
            let expected = q * r * q.transpose();
            prop_assert!((rq.matrix() - expected.matrix()).amax() < 1e-9);
            prop_assert!(rq.is_valid(1e-9));
        }

        #[test]
        fn closed_form_valid_under_heavy_noise(seed in any::<u64>()) {
            let s = random_unit(8, seed);
            let t = random_unit(8, seed.wrapping_add(1));
            if let Ok(r) = solve_closed_form(&s, &t) {
                prop_assert!(r.is_valid(1e-9));
            }
        }
    }
}
