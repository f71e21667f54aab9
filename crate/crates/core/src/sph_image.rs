//! Equirectangular spherical images as S² point sets.
//!
//! Rows run over the polar angle from the north pole, columns over the
//! azimuth. A pixel at `(row, col)` covers directions with
//! `beta ∈ [row, row + 1) · 180 / rows` and
//! `alpha ∈ [col, col + 1) · 360 / cols` degrees.

use std::f64::consts::PI;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder};
use nalgebra::Vector3;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::aligners::{AlignerConfig, AlignmentResult, Method};
use crate::error::{Error, Result};
use crate::so3::{spherical_coords, Rotation, S2PointSet, SphericalAngles};
use crate::xyz::write_atomic;

pub const ROWS: usize = 180;
pub const COLS: usize = 360;
pub const DEFAULT_THRESHOLD: f64 = 0.21;

/// Grayscale equirectangular image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EquirectangularImage {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl EquirectangularImage {
    /// Row-major intensities.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument("image must have at least one pixel".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "{} intensities for a {rows}x{cols} image",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument(format!(
                "intensity {} at pixel ({}, {}) is outside [0, 1]",
                data[i],
                i / cols,
                i % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Self::new(rows, cols, vec![value; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value.clamp(0.0, 1.0);
    }

    /// Direction through the centre of pixel `(row, col)`.
    pub fn pixel_direction(&self, row: usize, col: usize) -> Vector3<f64> {
        SphericalAngles {
            alpha_deg: (col as f64 + 0.5) * 360.0 / self.cols as f64,
            beta_deg: (row as f64 + 0.5) * 180.0 / self.rows as f64,
        }
        .to_unit_vector()
        .into_inner()
    }

    /// The pixel containing direction `d`.
    pub fn pixel_of(&self, d: &Vector3<f64>) -> (usize, usize) {
        let s = spherical_coords(d);
        let col = ((s.alpha_deg * self.cols as f64 / 360.0).floor() as usize).min(self.cols - 1);
        let row = ((s.beta_deg * self.rows as f64 / 180.0).floor().max(0.0) as usize).min(self.rows - 1);
        (row, col)
    }

    /// Nearest-neighbor resampling to `rows × cols`.
    pub fn resized(&self, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument("image must have at least one pixel".into()));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let sr = (((r as f64 + 0.5) * self.rows as f64 / rows as f64) as usize).min(self.rows - 1);
            for c in 0..cols {
                let sc = (((c as f64 + 0.5) * self.cols as f64 / cols as f64) as usize).min(self.cols - 1);
                data.push(self.get(sr, sc));
            }
        }
        Ok(Self { rows, cols, data })
    }

    /// Fraction of pixels whose intensity differs from `other` by more than
    /// `tol`.
    pub fn fraction_changed(&self, other: &Self, tol: f64) -> Result<f64> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::InvalidArgument("images differ in size".into()));
        }
        let changed = self
            .data
            .iter()
            .zip(&other.data)
            .filter(|(a, b)| (*a - *b).abs() > tol)
            .count();
        Ok(changed as f64 / self.data.len() as f64)
    }
}

/// One point per pixel with intensity `≥ threshold`, at the pixel centre.
pub fn sph_img_to_points(img: &EquirectangularImage, threshold: f64) -> Result<S2PointSet<f64>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    let mut points = Vec::new();
    for r in 0..img.rows {
        for c in 0..img.cols {
            if img.get(r, c) >= threshold {
                points.push(img.pixel_direction(r, c));
            }
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyResult { threshold });
    }
    Ok(S2PointSet::from_unit_vectors(points))
}

/// Rotation taking `source` onto `template`, by the hybrid aligner.
pub fn estimate_rotation_images(
    template: &EquirectangularImage,
    source: &EquirectangularImage,
    threshold: f64,
) -> Result<AlignmentResult<f64>> {
    estimate_rotation_images_with(template, source, threshold, &AlignerConfig::default(), Method::Hybrid)
}

pub fn estimate_rotation_images_with(
    template: &EquirectangularImage,
    source: &EquirectangularImage,
    threshold: f64,
    config: &AlignerConfig,
    method: Method,
) -> Result<AlignmentResult<f64>> {
    let a = sph_img_to_points(template, threshold)?;
    let b = sph_img_to_points(source, threshold)?;
    config.align(method, &a, &b)
}

/// The image seen after rotating the sphere by `r`: content at direction
/// `d` moves to `r · d`. Nearest-neighbor pull-back through `rᵀ`.
pub fn rotate_image(img: &EquirectangularImage, r: &Rotation<f64>) -> EquirectangularImage {
    let inv = r.transpose();
    let data: Vec<f64> = (0..img.rows)
        .into_par_iter()
        .flat_map_iter(|row| {
            let inv = &inv;
            (0..img.cols).map(move |col| {
                let (sr, sc) = img.pixel_of(&inv.apply(&img.pixel_direction(row, col)));
                img.get(sr, sc)
            })
        })
        .collect();
    EquirectangularImage {
        rows: img.rows,
        cols: img.cols,
        data,
    }
}

/// A procedural stand-in for a world map: bright irregular continents on a
/// dark ocean, with no rotational symmetry.
pub fn world_map_analog(seed: u64) -> EquirectangularImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0057_4f52_4c44);
    // Each continent is a cluster of overlapping caps around a centre.
    let mut caps: Vec<(Vector3<f64>, f64)> = Vec::new();
    let continents = 7;
    for _ in 0..continents {
        let centre = random_direction(&mut rng);
        let lobes = rng.random_range(4..10);
        let spread = rng.random_range(0.15..0.45);
        for _ in 0..lobes {
            let jitter = random_direction(&mut rng) * spread;
            let c = (centre + jitter).normalize();
            let radius: f64 = rng.random_range(4.0f64..16.0).to_radians();
            caps.push((c, radius.cos()));
        }
    }
    let shade: Vec<f64> = (0..caps.len()).map(|_| rng.random_range(0.45..0.95)).collect();
    let mut img = EquirectangularImage {
        rows: ROWS,
        cols: COLS,
        data: vec![0.0; ROWS * COLS],
    };
    for r in 0..ROWS {
        for c in 0..COLS {
            let d = img.pixel_direction(r, c);
            // Ocean brightness varies slightly but stays below the threshold.
            let mut v = 0.08 + 0.06 * (3.0 * d.x + 2.0 * d.y * d.z).sin().abs();
            for ((centre, cos_r), s) in caps.iter().zip(&shade) {
                if d.dot(centre) >= *cos_r {
                    v = v.max(*s);
                }
            }
            img.data[r * COLS + c] = v;
        }
    }
    img
}

fn random_direction(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    let s = (1.0 - z * z).max(0.0).sqrt();
    Vector3::new(s * phi.cos(), s * phi.sin(), z)
}

/// Clutter added by [`add_clutter`].
#[derive(Debug, Clone)]
pub struct Cluttered {
    pub image: EquirectangularImage,
    /// Fraction of pixels changed by more than [`CLUTTER_TOL`].
    pub coverage: f64,
    pub shapes: usize,
}

pub const CLUTTER_TOL: f64 = 0.05;

/// Paints random filled circles and rectangles of random intensity until
/// at least `target_coverage` of the pixels differ from `img`.
pub fn add_clutter(img: &EquirectangularImage, target_coverage: f64, seed: u64) -> Result<Cluttered> {
    if !(0.0..1.0).contains(&target_coverage) {
        return Err(Error::InvalidArgument(format!(
            "clutter coverage must lie in [0, 1), got {target_coverage}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x434c_5554);
    let mut out = img.clone();
    let total = img.data.len();
    let mut changed = 0usize;
    let mut shapes = 0;
    let (rows, cols) = (img.rows as i64, img.cols as i64);
    let scale = img.rows as f64 / ROWS as f64;
    while (changed as f64) < target_coverage * total as f64 {
        let value: f64 = rng.random();
        let r0 = rng.random_range(0..rows);
        let c0 = rng.random_range(0..cols);
        let circle = rng.random_bool(0.5);
        let (hr, hc) = if circle {
            let rad = (rng.random_range(2.0..10.0) * scale).max(1.0) as i64;
            (rad, rad)
        } else {
            (
                (rng.random_range(2.0..10.0) * scale).max(1.0) as i64,
                (rng.random_range(2.0..16.0) * scale).max(1.0) as i64,
            )
        };
        for dr in -hr..=hr {
            let r = r0 + dr;
            if !(0..rows).contains(&r) {
                continue;
            }
            for dc in -hc..=hc {
                if circle && dr * dr + dc * dc > hr * hr {
                    continue;
                }
                let c = (c0 + dc).rem_euclid(cols);
                let i = (r * cols + c) as usize;
                let was = (out.data[i] - img.data[i]).abs() > CLUTTER_TOL;
                out.data[i] = value;
                let now = (value - img.data[i]).abs() > CLUTTER_TOL;
                match (was, now) {
                    (false, true) => changed += 1,
                    (true, false) => changed -= 1,
                    _ => {}
                }
            }
        }
        shapes += 1;
    }
    Ok(Cluttered {
        coverage: changed as f64 / total as f64,
        image: out,
        shapes,
    })
}

/// Loads PGM/PPM (binary or ASCII) or a CSV grid of intensities. Color
/// pixels become luma `0.299 R + 0.587 G + 0.114 B`.
pub fn read_image(path: &Path) -> Result<EquirectangularImage> {
    if has_extension(path, "csv") {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        return parse_csv(&text, path);
    }
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let decoded = image::load_from_memory_with_format(&bytes, image::ImageFormat::Pnm).map_err(|e| Error::Format {
        path: path.into(),
        msg: e.to_string(),
    })?;
    let (cols, rows) = (decoded.width() as usize, decoded.height() as usize);
    let data: Vec<f64> = match &decoded {
        DynamicImage::ImageLuma8(b) => b.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(b) => b.pixels().map(|p| p.0[0] as f64 / 65535.0).collect(),
        other => other
            .to_rgb32f()
            .pixels()
            .map(|p| {
                let [r, g, b] = p.0.map(f64::from);
                (0.299 * r + 0.587 * g + 0.114 * b).clamp(0.0, 1.0)
            })
            .collect(),
    };
    EquirectangularImage::new(rows, cols, data).map_err(|e| Error::Format {
        path: path.into(),
        msg: e.to_string(),
    })
}

fn parse_csv(text: &str, path: &Path) -> Result<EquirectangularImage> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, line + 1, e.to_string()))?;
        if cols.is_some_and(|c| c != record.len()) {
            return Err(Error::parse(path, line + 1, format!("expected {} columns", cols.unwrap())));
        }
        cols = Some(record.len());
        for field in &record {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::parse(path, line + 1, format!("bad intensity '{field}'")))?;
            data.push(v);
        }
        rows += 1;
    }
    EquirectangularImage::new(rows, cols.unwrap_or(0), data).map_err(|e| Error::Format {
        path: path.into(),
        msg: e.to_string(),
    })
}

/// Writes CSV for `.csv`, otherwise an 8-bit binary PGM.
pub fn write_image(path: &Path, img: &EquirectangularImage) -> Result<()> {
    let bytes = if has_extension(path, "csv") {
        let mut s = String::with_capacity(img.data.len() * 8);
        for row in img.data.chunks(img.cols) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s.into_bytes()
    } else {
        let pixels: Vec<u8> = img.data.iter().map(|v| (v * 255.0).round() as u8).collect();
        let mut buf = Vec::new();
        PnmEncoder::new(&mut buf)
            .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
            .write_image(&pixels, img.cols as u32, img.rows as u32, ExtendedColorType::L8)
            .map_err(|e| Error::Format {
                path: path.into(),
                msg: e.to_string(),
            })?;
        buf
    };
    write_atomic(path, &bytes)
}

fn has_extension(path: &Path, ext: &str) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

#[cfg(test)]
mod tests;
