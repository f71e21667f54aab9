use super::*;
use crate::so3::mean_direction;
use crate::sphere_hist::build_binary_histogram_2d;
use proptest::prelude::*;

fn spec(family: PatternFamily, n_points: usize) -> PatternSpec {
    PatternSpec {
        family,
        n_points,
        seed: 11,
    }
}

#[test]
fn templates_are_deterministic_and_unit() {
    for family in PatternFamily::ALL {
        let a: S2PointSet<f64> = generate_template(&spec(family, 2000)).unwrap();
        let b: S2PointSet<f64> = generate_template(&spec(family, 2000)).unwrap();
        assert_eq!(a, b, "{family}");
        assert_eq!(a.len(), 2000);
        assert!(a.iter().all(|p| (p.norm() - 1.0).abs() < 1e-12));
        let c: S2PointSet<f64> = generate_template(&PatternSpec { seed: 12, ..spec(family, 2000) }).unwrap();
        assert_ne!(a, c, "{family}");
    }
}

#[test]
fn rejects_tiny_templates() {
    assert!(generate_template::<f64>(&spec(PatternFamily::SmallIslands, 99)).is_err());
    assert!(generate_template::<f64>(&spec(PatternFamily::SmallIslands, 100)).is_ok());
}

#[test]
fn sharp_trajectory_is_one_sided() {
    for seed in 0..10 {
        let s: S2PointSet<f64> = generate_template(&PatternSpec { seed, ..spec(PatternFamily::SharpTrajectory, 10_000) }).unwrap();
        let (_, r) = mean_direction(&s).unwrap();
        assert!(r > 0.3, "seed {seed}: resultant {r}");
    }
}

#[test]
fn non_uniform_density_covers_the_sphere() {
    let s: S2PointSet<f64> = generate_template(&spec(PatternFamily::NonUniformDensity, 1_000_000)).unwrap();
    let occ = build_binary_histogram_2d(&s, 0).occupancy();
    assert!(occ > 0.8, "occupancy {occ}");
    let (dir, r) = mean_direction(&s).unwrap();
    // coth(1.5) - 1/1.5
    assert!((r - 0.4381).abs() < 0.005, "resultant {r}");
    assert!(dir.z > 0.999);
}

#[test]
fn island_families_differ_in_spread() {
    let small: S2PointSet<f64> = generate_template(&spec(PatternFamily::SmallIslands, 20_000)).unwrap();
    let large: S2PointSet<f64> = generate_template(&spec(PatternFamily::LargeIslands, 20_000)).unwrap();
    let occ_small = build_binary_histogram_2d(&small, 0).occupancy();
    let occ_large = build_binary_histogram_2d(&large, 0).occupancy();
    assert!(occ_small < occ_large, "{occ_small} vs {occ_large}");
}

#[test]
fn stage_table() {
    let expected = [
        (0.0, 0.0),
        (0.01, 0.0),
        (0.01, 0.10),
        (0.01, 0.25),
        (0.01, 0.50),
        (0.01, 0.75),
        (0.01, 0.90),
    ];
    for (stage, (sigma, frac)) in Stage::ALL.iter().zip(expected) {
        let s = stage.spec();
        assert_eq!((s.noise_sigma, s.outlier_fraction), (sigma, frac), "{stage}");
    }
    assert_eq!("b5".parse::<Stage>().unwrap(), Stage::B5);
    assert!("B8".parse::<Stage>().is_err());
    assert_eq!("A3".parse::<PatternFamily>().unwrap(), PatternFamily::SmallIslands);
    assert_eq!("large-islands".parse::<PatternFamily>().unwrap(), PatternFamily::LargeIslands);
    assert_eq!(config_id(PatternFamily::SmallIslands, Stage::B5, 17), "A3B5R17");
}

#[test]
fn b1_is_identity() {
    let t: S2PointSet<f64> = generate_template(&spec(PatternFamily::LargeIslands, 500)).unwrap();
    let staged = apply_stage_with(&t, &Stage::B1.spec(), NoiseModel::default(), 3);
    assert_eq!(staged.points, t);
    assert!(staged.outliers.is_empty());
}

#[test]
fn b7_outlier_partition_and_noise_calibration() {
    let n = 20_003;
    let t: S2PointSet<f64> = generate_template(&spec(PatternFamily::SmallIslands, n)).unwrap();
    let staged = apply_stage_with(&t, &Stage::B7.spec(), NoiseModel::default(), 5);
    assert_eq!(staged.points.len(), n);
    assert_eq!(staged.outliers.len(), (0.9 * n as f64).floor() as usize);
    assert!(staged.outliers.windows(2).all(|w| w[0] < w[1]));
    let mut flags = vec![false; n];
    for &i in &staged.outliers {
        flags[i] = true;
    }
    let inliers: Vec<usize> = (0..n).filter(|&i| !flags[i]).collect();
    assert_eq!(inliers.len() + staged.outliers.len(), n);
    let mean = mean_angle(&t, &staged.points, &inliers);
    let want = expected_noise_angle_deg(0.01);
    assert!((mean / want - 1.0).abs() < 0.15, "mean {mean} vs {want}");
}

fn mean_angle(a: &S2PointSet<f64>, b: &S2PointSet<f64>, idx: &[usize]) -> f64 {
    idx.iter()
        .map(|&i| a.points()[i].angle(&b.points()[i]).to_degrees())
        .sum::<f64>()
        / idx.len() as f64
}

#[test]
fn noise_models_agree_and_match_monte_carlo_oracle() {
    let t: S2PointSet<f64> = generate_template(&spec(PatternFamily::NonUniformDensity, 40_000)).unwrap();
    let all: Vec<usize> = (0..t.len()).collect();
    let want = expected_noise_angle_deg(0.01);
    for model in [NoiseModel::AmbientRenormalize, NoiseModel::Tangent] {
        let staged = apply_stage_with(&t, &Stage::B2.spec(), model, 9);
        let mean = mean_angle(&t, &staged.points, &all);
        assert!((mean / want - 1.0).abs() < 0.03, "{model:?}: {mean} vs {want}");
    }
    // Rayleigh mean for a 2D Gaussian of per-axis sigma 0.01 rad.
    assert!((want - 0.7181).abs() < 1e-3);
}

#[test]
fn vmf_concentration_matches_expected_cosine() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mu = Vector3::new(0.0, 0.6, 0.8);
    for kappa in [0.5, 5.0, 50.0] {
        let m = 40_000;
        let mean_cos: f64 = (0..m).map(|_| sample_vmf(&mu, kappa, &mut rng).dot(&mu)).sum::<f64>() / m as f64;
        let want = 1.0 / kappa.tanh() - 1.0 / kappa;
        assert!((mean_cos - want).abs() < 0.01, "kappa {kappa}: {mean_cos} vs {want}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, rng_seed: proptest::test_runner::RngSeed::Fixed(41), ..ProptestConfig::default() })]

    #[test]
    fn staging_preserves_cardinality_and_norm(
        family in 0usize..5,
        stage in 0usize..7,
        n in 100usize..600,
        seed in any::<u64>(),
    ) {
        let t: S2PointSet<f64> = generate_template(&PatternSpec { family: PatternFamily::ALL[family], n_points: n, seed }).unwrap();
        let st = Stage::ALL[stage].spec();
        let staged = apply_stage_with(&t, &st, NoiseModel::default(), seed ^ 1);
        prop_assert_eq!(staged.points.len(), n);
        prop_assert_eq!(staged.outliers.len(), (st.outlier_fraction * n as f64 + 1e-9).floor() as usize);
        for p in staged.points.iter() {
            prop_assert!((p.norm() - 1.0).abs() < 1e-9);
        }
    }
}
