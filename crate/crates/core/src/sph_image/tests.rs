use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use super::*;
use crate::so3::{axis_rotation, geodesic_angle_deg, sample_rotations, spherical_coords, Axis};

fn runner(cases: u32, seed: u8) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            ..Config::default()
        },
        TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]),
    )
}

#[test]
fn dark_image_has_no_points() {
    let img = EquirectangularImage::filled(ROWS, COLS, 0.0).unwrap();
    assert!(matches!(sph_img_to_points(&img, 0.21), Err(Error::EmptyResult { .. })));
}

#[test]
fn threshold_must_be_inside_the_unit_interval() {
    let img = EquirectangularImage::filled(ROWS, COLS, 0.5).unwrap();
    for t in [0.0, 1.0, -0.1, f64::NAN] {
        assert!(matches!(sph_img_to_points(&img, t), Err(Error::InvalidArgument(_))));
    }
}

#[test]
fn bad_pixels_are_rejected() {
    assert!(EquirectangularImage::new(2, 2, vec![0.0, 0.5, 1.2, 0.0]).is_err());
    assert!(EquirectangularImage::new(2, 2, vec![0.0; 3]).is_err());
}

#[test]
fn corner_pixel_maps_to_its_centre() {
    let mut img = EquirectangularImage::filled(ROWS, COLS, 0.0).unwrap();
    img.set(0, 0, 1.0);
    let pts = sph_img_to_points(&img, 0.21).unwrap();
    assert_eq!(pts.len(), 1);
    let s = spherical_coords(&pts.points()[0]);
    assert!((s.alpha_deg - 0.5).abs() < 1e-9 && (s.beta_deg - 0.5).abs() < 1e-9);
}

#[test]
fn threshold_is_inclusive() {
    let mut img = EquirectangularImage::filled(ROWS, COLS, 0.0).unwrap();
    img.set(10, 20, 0.21);
    assert_eq!(sph_img_to_points(&img, 0.21).unwrap().len(), 1);
}

#[test]
fn lower_thresholds_only_add_points() {
    let img = world_map_analog(3);
    runner(64, 1)
        .run(&(0.01f64..0.99, 0.01f64..0.99), |(a, b)| {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let count = |t| sph_img_to_points(&img, t).map_or(0, |p| p.len());
            prop_assert!(count(lo) >= count(hi));
            Ok(())
        })
        .unwrap();
}

#[test]
fn pixel_lookup_inverts_pixel_centres() {
    let img = EquirectangularImage::filled(ROWS, COLS, 0.0).unwrap();
    for r in 0..ROWS {
        for c in (0..COLS).step_by(7) {
            assert_eq!(img.pixel_of(&img.pixel_direction(r, c)), (r, c));
        }
    }
}

#[test]
fn identity_rotation_is_bit_identical() {
    let img = world_map_analog(2);
    assert_eq!(rotate_image(&img, &Rotation::identity()), img);
}

#[test]
fn azimuthal_rotation_shifts_columns() {
    let img = world_map_analog(5);
    let out = rotate_image(&img, &axis_rotation(Axis::Z, 90.0));
    for r in 0..ROWS {
        for c in 0..COLS {
            assert_eq!(out.get(r, (c + 90) % COLS), img.get(r, c), "pixel ({r}, {c})");
        }
    }
}

#[test]
fn rotating_back_restores_most_pixels() {
    let img = world_map_analog(4);
    let land = EquirectangularImage::new(
        ROWS,
        COLS,
        img.data().iter().map(|&v| if v >= DEFAULT_THRESHOLD { 1.0 } else { 0.0 }).collect(),
    )
    .unwrap();
    for r in sample_rotations::<f64>(5, 21) {
        let back = rotate_image(&rotate_image(&land, &r), &r.transpose());
        let mismatch = back.fraction_changed(&land, 0.0).unwrap();
        assert!(mismatch <= 0.02, "{mismatch}");
        let back = rotate_image(&rotate_image(&img, &r), &r.transpose());
        let mismatch = back.fraction_changed(&img, CLUTTER_TOL).unwrap();
        assert!(mismatch <= 0.02, "{mismatch}");
    }
}

#[test]
fn identical_images_align_to_identity() {
    let img = world_map_analog(1);
    let res = estimate_rotation_images(&img, &img, DEFAULT_THRESHOLD).unwrap();
    assert!(geodesic_angle_deg(&res.rotation, &Rotation::identity()) < 1.0);
}

#[test]
fn rotated_point_sets_of_the_map_are_recovered() {
    let img = world_map_analog(1);
    let a = sph_img_to_points(&img, DEFAULT_THRESHOLD).unwrap();
    let cfg = AlignerConfig::default();
    let mut errs: Vec<f64> = sample_rotations::<f64>(20, 8)
        .iter()
        .map(|r| {
            let res = cfg.align(Method::Hybrid, &a, &a.rotated(r)).unwrap();
            geodesic_angle_deg(&res.rotation, &r.transpose())
        })
        .collect();
    errs.sort_by(f64::total_cmp);
    assert!(errs[10] < 2.0, "{errs:?}");
}

#[test]
fn rescaling_that_keeps_the_partition_changes_nothing() {
    let img = world_map_analog(6);
    let t = DEFAULT_THRESHOLD;
    // Bright pixels move up and dark ones down, so the partition at t holds.
    let squashed: Vec<f64> = img.data().iter().map(|&x| if x >= t { 0.5 + x / 2.0 } else { x * 0.5 }).collect();
    let other = EquirectangularImage::new(ROWS, COLS, squashed).unwrap();
    assert_eq!(
        sph_img_to_points(&img, t).unwrap().points(),
        sph_img_to_points(&other, t).unwrap().points()
    );
    let r = sample_rotations::<f64>(1, 4)[0];
    let a = estimate_rotation_images(&img, &rotate_image(&img, &r), t).unwrap();
    let b = estimate_rotation_images(&other, &rotate_image(&other, &r), t).unwrap();
    assert_eq!(a.rotation, b.rotation);
}

#[test]
fn clutter_reaches_its_coverage() {
    let img = world_map_analog(1);
    let c = add_clutter(&img, 0.0, 1).unwrap();
    assert_eq!((c.coverage, c.shapes), (0.0, 0));
    assert_eq!(c.image, img);
    for target in [0.05, 0.19] {
        let c = add_clutter(&img, target, 9).unwrap();
        let measured = c.image.fraction_changed(&img, CLUTTER_TOL).unwrap();
        assert_eq!(measured, c.coverage);
        assert!(c.coverage >= target && c.coverage < target + 0.01, "{}", c.coverage);
    }
    assert!(add_clutter(&img, 1.0, 1).is_err());
}

#[test]
fn map_analog_is_deterministic_and_sparse() {
    let a = world_map_analog(11);
    assert_eq!(a, world_map_analog(11));
    assert_ne!(a, world_map_analog(12));
    let lit = sph_img_to_points(&a, DEFAULT_THRESHOLD).unwrap().len() as f64 / (ROWS * COLS) as f64;
    assert!(lit > 0.1 && lit < 0.6, "{lit}");
}

#[test]
fn images_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let img = world_map_analog(7);
    let csv = dir.path().join("m.csv");
    write_image(&csv, &img).unwrap();
    assert_eq!(read_image(&csv).unwrap(), img);

    let quantized = EquirectangularImage::new(
        ROWS,
        COLS,
        img.data().iter().map(|v| (v * 255.0).round() / 255.0).collect(),
    )
    .unwrap();
    let pgm = dir.path().join("m.pgm");
    write_image(&pgm, &quantized).unwrap();
    assert_eq!(read_image(&pgm).unwrap(), quantized);
    let bytes = std::fs::read(&pgm).unwrap();
    write_image(&pgm, &read_image(&pgm).unwrap()).unwrap();
    assert_eq!(std::fs::read(&pgm).unwrap(), bytes);
}

#[test]
fn ascii_and_color_pnm_are_read_as_luma() {
    let dir = tempfile::tempdir().unwrap();
    let p2 = dir.path().join("a.pgm");
    std::fs::write(&p2, "P2\n3 2\n255\n0 255 51\n102 0 255\n").unwrap();
    let img = read_image(&p2).unwrap();
    assert_eq!((img.rows(), img.cols()), (2, 3));
    assert_eq!(img.data(), &[0.0, 1.0, 0.2, 0.4, 0.0, 1.0]);

    let p3 = dir.path().join("c.ppm");
    std::fs::write(&p3, "P3\n2 1\n255\n255 0 0 0 0 255\n").unwrap();
    let img = read_image(&p3).unwrap();
    assert!((img.get(0, 0) - 0.299).abs() < 1e-6 && (img.get(0, 1) - 0.114).abs() < 1e-6);
}

#[test]
fn malformed_csv_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    std::fs::write(&p, "0.1,0.2\n0.3,x\n").unwrap();
    assert!(matches!(read_image(&p), Err(Error::Parse { line: 2, .. })));
    std::fs::write(&p, "0.1,0.2\n0.3\n").unwrap();
    assert!(read_image(&p).is_err());
}
