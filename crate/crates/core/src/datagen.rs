//! Procedural benchmark dataset: five template families, seven noise and
//! outlier stages, and randomly rotated source sets.
//!
//! Layout under the dataset root:
//!
//! ```text
//! A1/template.xyz
//! A1/B3/R17.xyz
//! ground_truth.csv
//! manifest.json
//! ```
//!
//! Each source is `R_true · staged(template)`, so an aligner that maps the
//! source onto the template should return `R_trueᵀ`.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::Vector3;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::so3::{sample_rotations, sample_rotations_with, Rotation, S2PointSet};
use crate::xyz::{write_atomic, write_xyz};

pub const MIN_TEMPLATE_POINTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PatternFamily {
    SimpleTrajectory,
    SharpTrajectory,
    SmallIslands,
    LargeIslands,
    NonUniformDensity,
}

impl PatternFamily {
    pub const ALL: [PatternFamily; 5] = [
        PatternFamily::SimpleTrajectory,
        PatternFamily::SharpTrajectory,
        PatternFamily::SmallIslands,
        PatternFamily::LargeIslands,
        PatternFamily::NonUniformDensity,
    ];

    /// 1-based position, as used in `A<n>` identifiers.
    pub fn number(&self) -> usize {
        Self::ALL.iter().position(|f| f == self).unwrap() + 1
    }

    pub fn id(&self) -> String {
        format!("A{}", self.number())
    }

    pub fn name(&self) -> &'static str {
        match self {
            PatternFamily::SimpleTrajectory => "simple-trajectory",
            PatternFamily::SharpTrajectory => "sharp-trajectory",
            PatternFamily::SmallIslands => "small-islands",
            PatternFamily::LargeIslands => "large-islands",
            PatternFamily::NonUniformDensity => "non-uniform-density",
        }
    }
}

impl fmt::Display for PatternFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Accepts `A3`, `3` or the kebab-case name.
impl FromStr for PatternFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let digits = t.strip_prefix('a').unwrap_or(&t);
        if let Ok(n) = digits.parse::<usize>() {
            if (1..=5).contains(&n) {
                return Ok(Self::ALL[n - 1]);
            }
        }
        Self::ALL
            .into_iter()
            .find(|f| f.name() == t || f.name().replace('-', "") == t.replace(['-', '_'], ""))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown pattern '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PatternSpec {
    pub family: PatternFamily,
    pub n_points: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    B1,
    B2,
    B3,
    B4,
    B5,
    B6,
    B7,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::B1,
        Stage::B2,
        Stage::B3,
        Stage::B4,
        Stage::B5,
        Stage::B6,
        Stage::B7,
    ];

    pub fn number(&self) -> usize {
        *self as usize + 1
    }

    pub fn spec(&self) -> StageSpec {
        let outlier_fraction = match self {
            Stage::B1 | Stage::B2 => 0.0,
            Stage::B3 => 0.10,
            Stage::B4 => 0.25,
            Stage::B5 => 0.50,
            Stage::B6 => 0.75,
            Stage::B7 => 0.90,
        };
        let noise_sigma = if *self == Stage::B1 { 0.0 } else { 0.01 };
        StageSpec {
            stage: *self,
            noise_sigma,
            outlier_fraction,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B{}", self.number())
    }
}

impl FromStr for Stage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_uppercase();
        let digits = t.strip_prefix('B').unwrap_or(&t);
        digits
            .parse::<usize>()
            .ok()
            .filter(|n| (1..=7).contains(n))
            .map(|n| Self::ALL[n - 1])
            .ok_or_else(|| Error::InvalidArgument(format!("unknown stage '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageSpec {
    pub stage: Stage,
    pub noise_sigma: f64,
    pub outlier_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    /// Isotropic 3D Gaussian, then projected back onto the sphere.
    #[default]
    AmbientRenormalize,
    /// 2D Gaussian in the tangent plane, then projected back.
    Tangent,
}

/// Mean perturbation angle in degrees predicted for inlier noise `sigma`.
pub fn expected_noise_angle_deg(sigma: f64) -> f64 {
    sigma * (PI / 2.0).sqrt() * 180.0 / PI
}

pub fn generate_template<T: Real>(spec: &PatternSpec) -> Result<S2PointSet<T>> {
    if spec.n_points < MIN_TEMPLATE_POINTS {
        return Err(Error::InvalidArgument(format!(
            "templates need at least {MIN_TEMPLATE_POINTS} points, got {}",
            spec.n_points
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix(spec.seed, fnv1a(spec.family.name().as_bytes())));
    let n = spec.n_points;
    let pts = match spec.family {
        PatternFamily::SimpleTrajectory => simple_trajectory(n, &mut rng),
        PatternFamily::SharpTrajectory => sharp_trajectory(n, &mut rng),
        PatternFamily::SmallIslands => islands(n, 40, 1500.0, &mut rng),
        PatternFamily::LargeIslands => islands(n, 6, 40.0, &mut rng),
        PatternFamily::NonUniformDensity => non_uniform_density(n, 1.5, &mut rng),
    };
    Ok(S2PointSet::from_unit_vectors(pts).cast())
}

/// A staged set and which positions hold outliers (sorted).
#[derive(Debug, Clone)]
pub struct StagedSet<T: Real> {
    pub points: S2PointSet<T>,
    pub outliers: Vec<usize>,
}

pub fn apply_stage<T: Real>(template: &S2PointSet<T>, stage: &StageSpec, seed: u64) -> S2PointSet<T> {
    apply_stage_with(template, stage, NoiseModel::default(), seed).points
}

/// Replaces `floor(f · N)` random points with uniform outliers and perturbs
/// the rest.
pub fn apply_stage_with<T: Real>(
    template: &S2PointSet<T>,
    stage: &StageSpec,
    noise: NoiseModel,
    seed: u64,
) -> StagedSet<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = template.len();
    let n_out = ((stage.outlier_fraction.clamp(0.0, 1.0) * n as f64) + 1e-9).floor() as usize;
    let n_out = n_out.min(n);
    let mut outliers = rand::seq::index::sample(&mut rng, n, n_out).into_vec();
    outliers.sort_unstable();
    let mut is_outlier = vec![false; n];
    for &i in &outliers {
        is_outlier[i] = true;
    }
    let sigma = stage.noise_sigma;
    let pts = template
        .iter()
        .zip(&is_outlier)
        .map(|(p, &out)| {
            if out {
                uniform_on_sphere(&mut rng).cast()
            } else if sigma > 0.0 {
                perturb(&p.map(|c| c.as_f64()), sigma, noise, &mut rng).cast()
            } else {
                *p
            }
        })
        .collect();
    StagedSet {
        points: S2PointSet::from_unit_vectors(pts),
        outliers,
    }
}

fn perturb(p: &Vector3<f64>, sigma: f64, model: NoiseModel, rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let g = gaussian3(rng) * sigma;
        let q = match model {
            NoiseModel::AmbientRenormalize => p + g,
            NoiseModel::Tangent => p + (g - p * p.dot(&g)),
        };
        let norm = q.norm();
        if norm > 1e-9 {
            return q / norm;
        }
    }
}

/// Configuration identifier such as `A3B5R17` (rotation index is 1-based).
pub fn config_id(family: PatternFamily, stage: Stage, rotation: usize) -> String {
    format!("{}{}R{}", family.id(), stage, rotation)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub patterns: Vec<PatternSpec>,
    pub stages: Vec<Stage>,
    pub n_rotations: usize,
    pub seed: u64,
    #[serde(default)]
    pub noise_model: NoiseModel,
}

impl DatasetConfig {
    /// All five families with per-family seeds derived from `seed`.
    pub fn standard(n_points: usize, n_rotations: usize, seed: u64) -> Self {
        Self {
            patterns: standard_patterns(&PatternFamily::ALL, n_points, seed),
            stages: Stage::ALL.to_vec(),
            n_rotations,
            seed,
            noise_model: NoiseModel::default(),
        }
    }
}

pub fn standard_patterns(families: &[PatternFamily], n_points: usize, seed: u64) -> Vec<PatternSpec> {
    families
        .iter()
        .map(|&family| PatternSpec {
            family,
            n_points,
            seed: mix(seed, family.number() as u64),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub config_id: String,
    pub pattern: PatternFamily,
    pub stage: Stage,
    /// 1-based.
    pub rotation_index: usize,
    /// Paths relative to the dataset root.
    pub template: PathBuf,
    pub source: PathBuf,
    /// `R_true`, row-major: `source = R_true · staged`.
    pub rotation: [f64; 9],
    pub n_outliers: usize,
}

impl ManifestEntry {
    pub fn true_rotation(&self) -> Result<Rotation<f64>> {
        Rotation::from_row_major(&self.rotation)
    }

    /// What a source-to-template aligner should return.
    pub fn expected_estimate(&self) -> Result<Rotation<f64>> {
        Ok(self.true_rotation()?.transpose())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config: DatasetConfig,
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.csv";

impl Manifest {
    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path,
            msg: e.to_string(),
        })
    }
}

/// Writes the whole dataset under `root` and returns its manifest.
///
/// Every configuration draws from its own RNG stream seeded by the dataset
/// seed and the configuration ID, so output does not depend on scheduling.
pub fn build_dataset(root: &Path, config: &DatasetConfig) -> Result<Manifest> {
    if config.n_rotations == 0 {
        return Err(Error::InvalidArgument("n_rotations must be at least 1".into()));
    }
    if config.patterns.is_empty() || config.stages.is_empty() {
        return Err(Error::InvalidArgument("need at least one pattern and one stage".into()));
    }
    let rotations: Vec<Rotation<f64>> = sample_rotations(config.n_rotations, mix(config.seed, 0x524f54));

    let templates: Vec<(PatternSpec, S2PointSet<f64>)> = config
        .patterns
        .iter()
        .map(|spec| Ok((*spec, generate_template(spec)?)))
        .collect::<Result<_>>()?;
    for (spec, tpl) in &templates {
        write_xyz(&root.join(spec.family.id()).join("template.xyz"), tpl.points())?;
    }

    let jobs: Vec<(usize, Stage, usize)> = (0..templates.len())
        .flat_map(|p| {
            config
                .stages
                .iter()
                .flat_map(move |&s| (1..=config.n_rotations).map(move |r| (p, s, r)))
        })
        .collect();

    let entries = jobs
        .par_iter()
        .map(|&(p, stage, r)| {
            let (spec, tpl) = &templates[p];
            let id = config_id(spec.family, stage, r);
            let staged = apply_stage_with(tpl, &stage.spec(), config.noise_model, mix(config.seed, fnv1a(id.as_bytes())));
            let rot = &rotations[r - 1];
            let source = staged.points.rotated(rot);
            let rel_source = PathBuf::from(spec.family.id())
                .join(stage.to_string())
                .join(format!("R{r}.xyz"));
            write_xyz(&root.join(&rel_source), source.points())?;
            Ok(ManifestEntry {
                config_id: id,
                pattern: spec.family,
                stage,
                rotation_index: r,
                template: PathBuf::from(spec.family.id()).join("template.xyz"),
                source: rel_source,
                rotation: rot.to_row_major(),
                n_outliers: staged.outliers.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut gt = csv::Writer::from_writer(Vec::new());
    let header = ["config_id", "r00", "r01", "r02", "r10", "r11", "r12", "r20", "r21", "r22"];
    gt.write_record(header).map_err(|e| csv_error(root, e))?;
    for e in &entries {
        let mut row = vec![e.config_id.clone()];
        row.extend(e.rotation.iter().map(|v| v.to_string()));
        gt.write_record(&row).map_err(|e| csv_error(root, e))?;
    }
    let gt = gt.into_inner().map_err(|e| csv_error(root, e.into_error().into()))?;
    write_atomic(&root.join(GROUND_TRUTH_FILE), &gt)?;

    let manifest = Manifest {
        config: config.clone(),
        entries,
    };
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_atomic(&root.join(MANIFEST_FILE), &json)?;
    Ok(manifest)
}

fn csv_error(root: &Path, e: csv::Error) -> Error {
    Error::Format {
        path: root.join(GROUND_TRUTH_FILE),
        msg: e.to_string(),
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// splitmix64 finalizer over the pair.
pub(crate) fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.rotate_left(32) ^ 0x9e37_79b9_7f4a_7c15;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn gaussian3(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    Vector3::from_fn(|_, _| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
}

pub(crate) fn uniform_on_sphere(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let g = gaussian3(rng);
        let n = g.norm();
        if n > 1e-9 {
            return g / n;
        }
    }
}

/// Orthonormal `(e1, e2)` completing `mu` to a right-handed frame.
fn tangent_frame(mu: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if mu.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = mu.cross(&helper).normalize();
    let e2 = mu.cross(&e1);
    (e1, e2)
}

/// From angles in degrees, around the local pole of `frame`.
fn from_local(frame: &Rotation<f64>, colat_deg: f64, azim_deg: f64) -> Vector3<f64> {
    let (st, ct) = colat_deg.to_radians().sin_cos();
    let (sp, cp) = azim_deg.to_radians().sin_cos();
    frame.apply(&Vector3::new(st * cp, st * sp, ct)).normalize()
}

/// von Mises-Fisher sample on S² (exact inverse CDF for the cosine).
pub(crate) fn sample_vmf(mu: &Vector3<f64>, kappa: f64, rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let u: f64 = rng.random();
    let w = if kappa < 1e-8 {
        2.0 * u - 1.0
    } else {
        (1.0 + (u + (1.0 - u) * (-2.0 * kappa).exp()).ln() / kappa).clamp(-1.0, 1.0)
    };
    let v: f64 = rng.random_range(0.0..2.0 * PI);
    let (e1, e2) = tangent_frame(mu);
    let s = (1.0 - w * w).max(0.0).sqrt();
    (mu * w + (e1 * v.cos() + e2 * v.sin()) * s).normalize()
}

fn random_frame(rng: &mut ChaCha8Rng) -> Rotation<f64> {
    sample_rotations_with(1, rng).pop().unwrap()
}

/// A band along a small-circle arc whose width and density vary along it.
fn simple_trajectory(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vector3<f64>> {
    let frame = random_frame(rng);
    let colat = rng.random_range(35.0..55.0);
    let span = rng.random_range(200.0..240.0);
    (0..n)
        .map(|_| {
            let t: f64 = rng.random::<f64>().powf(0.7);
            let width = 1.0 + 4.0 * t;
            let g: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
            from_local(&frame, colat + g * width, t * span)
        })
        .collect()
}

/// Great-circle polyline with sharp corners, all inside one hemisphere.
fn sharp_trajectory(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vector3<f64>> {
    let frame = random_frame(rng);
    let n_vertices = 6;
    let mut azim = 0.0;
    let vertices: Vec<Vector3<f64>> = (0..n_vertices)
        .map(|i| {
            let colat = if i % 2 == 0 {
                rng.random_range(15.0..35.0)
            } else {
                rng.random_range(55.0..75.0)
            };
            let v = from_local(&frame, colat, azim);
            azim += rng.random_range(40.0..80.0);
            v
        })
        .collect();
    let lengths: Vec<f64> = vertices.windows(2).map(|w| w[0].angle(&w[1])).collect();
    let total: f64 = lengths.iter().sum();
    (0..n)
        .map(|_| {
            let mut s = rng.random::<f64>() * total;
            let mut seg = 0;
            while seg + 1 < lengths.len() && s > lengths[seg] {
                s -= lengths[seg];
                seg += 1;
            }
            let (a, b) = (vertices[seg], vertices[seg + 1]);
            let t = (s / lengths[seg]).clamp(0.0, 1.0);
            let p = slerp(&a, &b, t);
            sample_vmf(&p, 1.0e5, rng)
        })
        .collect()
}

fn slerp(a: &Vector3<f64>, b: &Vector3<f64>, t: f64) -> Vector3<f64> {
    let omega = a.angle(b);
    if omega < 1e-12 {
        return *a;
    }
    let so = omega.sin();
    (a * ((1.0 - t) * omega).sin() / so + b * (t * omega).sin() / so).normalize()
}

/// Mixture of von Mises-Fisher blobs with unequal weights.
fn islands(n: usize, count: usize, kappa: f64, rng: &mut ChaCha8Rng) -> Vec<Vector3<f64>> {
    let centres: Vec<Vector3<f64>> = (0..count).map(|_| uniform_on_sphere(rng)).collect();
    let weights: Vec<f64> = (0..count).map(|_| rng.random_range(0.3..1.7)).collect();
    let total: f64 = weights.iter().sum();
    let mut cdf = Vec::with_capacity(count);
    let mut acc = 0.0;
    for w in &weights {
        acc += w / total;
        cdf.push(acc);
    }
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let k = cdf.iter().position(|&c| u <= c).unwrap_or(count - 1);
            sample_vmf(&centres[k], kappa, rng)
        })
        .collect()
}

/// Whole-sphere coverage with density proportional to `exp(kappa · z)`.
fn non_uniform_density(n: usize, kappa: f64, rng: &mut ChaCha8Rng) -> Vec<Vector3<f64>> {
    let lo = (-kappa).exp();
    let hi = kappa.exp();
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let z = ((lo + u * (hi - lo)).ln() / kappa).clamp(-1.0, 1.0);
            let phi: f64 = rng.random_range(0.0..2.0 * PI);
            let r = (1.0 - z * z).max(0.0).sqrt();
            Vector3::new(r * phi.cos(), r * phi.sin(), z)
        })
        .collect()
}

#[cfg(test)]
mod tests;
