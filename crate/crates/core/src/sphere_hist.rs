//! Spherical histograms and circular cross-correlation.
//!
//! Two histogram families share one correlation kernel: the 360×180 binary
//! azimuth/polar occupancy grid (whose azimuth marginal drives SPMC) and the
//! per-axis direction-angle histograms used by FRS.

use std::fmt::Write as _;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::so3::{axis_direction_angles, spherical_coords, S2PointSet};

pub const AZIMUTH_BINS: usize = 360;
pub const POLAR_BINS: usize = 180;
pub const CELLS: usize = AZIMUTH_BINS * POLAR_BINS;

/// Point count above which binning is split across threads.
const PARALLEL_MIN_POINTS: usize = 1 << 16;

/// Grid cell `(azimuth, polar)` for a unit vector; polar 180° lands in bin 179.
#[inline]
pub fn cell_of<T: Real>(p: &Vector3<T>) -> (usize, usize) {
    let s = spherical_coords(p);
    let a = (s.alpha_deg.as_f64().floor() as usize).min(AZIMUTH_BINS - 1);
    let b = (s.beta_deg.as_f64().floor().max(0.0) as usize).min(POLAR_BINS - 1);
    (a, b)
}

/// Flat index of a cell, polar-major (`polar * 360 + azimuth`).
#[inline]
pub fn flat_cell_of<T: Real>(p: &Vector3<T>) -> usize {
    let (a, b) = cell_of(p);
    b * AZIMUTH_BINS + a
}

/// 360×180 occupancy grid with cells in {0, 1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryHistogram2D {
    bins: Vec<u8>,
    binarize_threshold: u32,
}

impl BinaryHistogram2D {
    pub fn empty(binarize_threshold: u32) -> Self {
        Self {
            bins: vec![0; CELLS],
            binarize_threshold,
        }
    }

    pub fn binarize_threshold(&self) -> u32 {
        self.binarize_threshold
    }

    #[inline]
    pub fn get(&self, azimuth: usize, polar: usize) -> u8 {
        self.bins[polar * AZIMUTH_BINS + azimuth]
    }

    pub fn set(&mut self, azimuth: usize, polar: usize, on: bool) {
        self.bins[polar * AZIMUTH_BINS + azimuth] = on as u8;
    }

    /// Cells in polar-major order.
    pub fn cells(&self) -> &[u8] {
        &self.bins
    }

    pub fn occupied(&self) -> usize {
        self.bins.iter().map(|&b| b as usize).sum()
    }

    pub fn occupancy(&self) -> f64 {
        self.occupied() as f64 / CELLS as f64
    }

    /// One CSV row per polar bin, 360 columns each.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(CELLS * 2);
        for row in self.bins.chunks(AZIMUTH_BINS) {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push(if *v == 0 { '0' } else { '1' });
            }
            out.push_str("\r\n");
        }
        out
    }
}

/// Raw per-cell point counts.
pub fn count_cells<T: Real>(points: &S2PointSet<T>) -> Vec<u32> {
    let bin = |mut acc: Vec<u32>, p: &Vector3<T>| {
        acc[flat_cell_of(p)] += 1;
        acc
    };
    if points.len() >= PARALLEL_MIN_POINTS {
        points
            .points()
            .par_iter()
            .fold(|| vec![0u32; CELLS], bin)
            .reduce(|| vec![0u32; CELLS], add_counts)
    } else {
        points.iter().fold(vec![0u32; CELLS], bin)
    }
}

fn add_counts<C: Copy + std::ops::AddAssign>(mut a: Vec<C>, b: Vec<C>) -> Vec<C> {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

/// Cells with more than `binarize_threshold` points are set.
pub fn build_binary_histogram_2d<T: Real>(
    points: &S2PointSet<T>,
    binarize_threshold: u32,
) -> BinaryHistogram2D {
    let counts = count_cells(points);
    BinaryHistogram2D {
        bins: counts
            .iter()
            .map(|&c| (c > binarize_threshold) as u8)
            .collect(),
        binarize_threshold,
    }
}

/// Circular histogram over `k·360` bins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram1D {
    counts: Vec<u64>,
    k: usize,
}

impl Histogram1D {
    pub fn zeros(k: usize) -> Self {
        assert!(k >= 1, "bin multiplier must be at least 1");
        Self {
            counts: vec![0; k * AZIMUTH_BINS],
            k,
        }
    }

    pub fn from_counts(counts: Vec<u64>, k: usize) -> Result<Self> {
        if k == 0 || counts.len() != k * AZIMUTH_BINS {
            return Err(Error::InvalidArgument(format!(
                "histogram of length {} does not match k = {k}",
                counts.len()
            )));
        }
        Ok(Self { counts, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Bin width in degrees.
    pub fn bin_width_deg(&self) -> f64 {
        1.0 / self.k as f64
    }

    /// Circular index shift: `out[i] = self[(i - d) mod L]`.
    pub fn rotated(&self, d: usize) -> Self {
        let n = self.len();
        let mut counts = vec![0; n];
        for (i, &c) in self.counts.iter().enumerate() {
            counts[(i + d) % n] = c;
        }
        Self { counts, k: self.k }
    }

    fn add_angle(&mut self, angle_deg: f64) {
        let idx = ((angle_deg * self.k as f64).floor().max(0.0) as usize).min(self.counts.len() - 1);
        self.counts[idx] += 1;
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.counts.len() * 3);
        for (i, c) in self.counts.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{c}");
        }
        out.push_str("\r\n");
        out
    }
}

/// Sums the binary grid over polar bins.
pub fn marginalize_azimuth(h: &BinaryHistogram2D) -> Histogram1D {
    let mut counts = vec![0u64; AZIMUTH_BINS];
    for row in h.bins.chunks(AZIMUTH_BINS) {
        for (c, &v) in counts.iter_mut().zip(row) {
            *c += v as u64;
        }
    }
    Histogram1D { counts, k: 1 }
}

/// Direction-angle histograms about the x, y and z axes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxisHistograms {
    pub x: Histogram1D,
    pub y: Histogram1D,
    pub z: Histogram1D,
}

impl AxisHistograms {
    fn zeros(k: usize) -> Self {
        Self {
            x: Histogram1D::zeros(k),
            y: Histogram1D::zeros(k),
            z: Histogram1D::zeros(k),
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in [
            (&mut self.x, other.x),
            (&mut self.y, other.y),
            (&mut self.z, other.z),
        ] {
            a.counts = add_counts(std::mem::take(&mut a.counts), b.counts);
        }
        self
    }
}

/// Raw-count histograms of the three axis direction angles, `k·360` bins each.
pub fn build_axis_histograms<T: Real>(points: &S2PointSet<T>, k: usize) -> AxisHistograms {
    assert!(k >= 1, "bin multiplier must be at least 1");
    let bin = |mut acc: AxisHistograms, p: &Vector3<T>| {
        let a = axis_direction_angles(p);
        acc.x.add_angle(a.theta_x_deg.as_f64());
        acc.y.add_angle(a.theta_y_deg.as_f64());
        acc.z.add_angle(a.theta_z_deg.as_f64());
        acc
    };
    if points.len() >= PARALLEL_MIN_POINTS {
        points
            .points()
            .par_iter()
            .fold(|| AxisHistograms::zeros(k), bin)
            .reduce(|| AxisHistograms::zeros(k), AxisHistograms::merge)
    } else {
        points.iter().fold(AxisHistograms::zeros(k), bin)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrelationResult {
    pub best_shift_bins: usize,
    pub best_score: u64,
    pub scores: Vec<u64>,
}

impl CorrelationResult {
    /// Best shift mapped into `(-L/2, L/2]`.
    pub fn signed_shift(&self) -> i64 {
        let n = self.scores.len() as i64;
        let s = self.best_shift_bins as i64;
        if s > n / 2 {
            s - n
        } else {
            s
        }
    }
}

/// `C(s) = Σ_λ fixed[λ] · moving[(λ + s) mod L]`; ties go to the smallest `s`.
pub fn circular_cross_correlate(fixed: &Histogram1D, moving: &Histogram1D) -> Result<CorrelationResult> {
    let n = fixed.len();
    if n != moving.len() {
        return Err(Error::LengthMismatch {
            fixed: n,
            moving: moving.len(),
        });
    }
    let mut scores = vec![0u64; n];
    let m = &moving.counts;
    for (lambda, &f) in fixed.counts.iter().enumerate() {
        if f == 0 {
            continue;
        }
        // s in [0, n - lambda) reads m[lambda + s]; the rest wraps around.
        let split = n - lambda;
        for (score, &mv) in scores[..split].iter_mut().zip(&m[lambda..]) {
            *score += f * mv;
        }
        for (score, &mv) in scores[split..].iter_mut().zip(&m[..lambda]) {
            *score += f * mv;
        }
    }
    let (best_shift_bins, best_score) = scores
        .iter()
        .enumerate()
        .fold((0, 0), |(bi, bs), (i, &s)| if s > bs { (i, s) } else { (bi, bs) });
    Ok(CorrelationResult {
        best_shift_bins,
        best_score,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::{axis_rotation, Axis};
    use proptest::prelude::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform_points(n: usize, seed: u64) -> S2PointSet<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        S2PointSet::from_unit_vectors(
            (0..n)
                .map(|_| {
                    let z: f64 = rng.random_range(-1.0..1.0);
                    let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                    let r = (1.0 - z * z).sqrt();
                    Vector3::new(r * a.cos(), r * a.sin(), z)
                })
                .collect(),
        )
    }

    /// Direct evaluation of the correlation sum, used as the oracle.
    fn correlate_naive(f: &[u64], m: &[u64]) -> Vec<u64> {
        let n = f.len();
        (0..n)
            .map(|s| (0..n).map(|l| f[l] * m[(l + s) % n]).sum())
            .collect()
    }

    #[test]
    fn single_pole_point() {
        let s = S2PointSet::from_unit_vectors(vec![Vector3::new(0.0, 0.0, 1.0)]);
        let h = build_binary_histogram_2d(&s, 0);
        assert_eq!(h.occupied(), 1);
        assert_eq!(h.get(0, 0), 1);
        let s = S2PointSet::from_unit_vectors(vec![Vector3::new(0.0, 0.0, -1.0)]);
        assert_eq!(build_binary_histogram_2d(&s, 0).get(0, 179), 1);
    }

    #[test]
    fn duplication_does_not_change_binary_histogram() {
        let one = uniform_points(50, 1);
        let mut many = one.points().to_vec();
        for _ in 0..4 {
            many.extend_from_slice(one.points());
        }
        let many = S2PointSet::from_unit_vectors(many);
        assert_eq!(build_binary_histogram_2d(&one, 0), build_binary_histogram_2d(&many, 0));
    }

    #[test]
    fn threshold_is_strict() {
        let p = Vector3::new(0.5_f64, 0.5, 0.5_f64.sqrt());
        let s = S2PointSet::from_unit_vectors(vec![p, p]);
        assert_eq!(build_binary_histogram_2d(&s, 1).occupied(), 1);
        assert_eq!(build_binary_histogram_2d(&s, 2).occupied(), 0);
    }

    /// Expected fraction of occupied cells for `n` area-uniform points:
    /// mean over cells of `1 - (1 - p_cell)^n`, `p_cell` the cell's area share.
    fn expected_uniform_occupancy(n: usize) -> f64 {
        let band = std::f64::consts::PI / 180.0;
        (0..POLAR_BINS)
            .map(|b| {
                let (b0, b1) = ((b as f64).to_radians(), ((b + 1) as f64).to_radians());
                let p = band * (b0.cos() - b1.cos()) / (4.0 * std::f64::consts::PI);
                AZIMUTH_BINS as f64 * (1.0 - (1.0 - p).powf(n as f64))
            })
            .sum::<f64>()
            / CELLS as f64
    }

    #[test]
    fn dense_uniform_fills_grid() {
        let n = 1_000_000;
        let h = build_binary_histogram_2d(&uniform_points(n, 2), 0);
        let expected = expected_uniform_occupancy(n);
        assert!((h.occupancy() - expected).abs() < 0.005, "occupancy {} vs {expected}", h.occupancy());
        // Polar rings are tiny, so even 10^6 points leave ~2.6% of cells empty.
        assert!(h.occupancy() > 0.97);
    }

    #[test]
    fn parallel_binning_matches_sequential() {
        let pts = uniform_points(PARALLEL_MIN_POINTS + 123, 3);
        let par = count_cells(&pts);
        let seq = pts.iter().fold(vec![0u32; CELLS], |mut acc, p| {
            acc[flat_cell_of(p)] += 1;
            acc
        });
        assert_eq!(par, seq);
    }

    #[test]
    fn marginal_examples() {
        let mut h = BinaryHistogram2D::empty(0);
        assert_eq!(marginalize_azimuth(&h).total(), 0);
        h.set(17, 42, true);
        let m = marginalize_azimuth(&h);
        assert_eq!(m.counts()[17], 1);
        assert_eq!(m.total(), 1);
        let full = BinaryHistogram2D {
            bins: vec![1; CELLS],
            binarize_threshold: 0,
        };
        assert!(marginalize_azimuth(&full).counts().iter().all(|&c| c == 180));
    }

    #[test]
    fn axis_histograms_of_x_axis() {
        let s = S2PointSet::from_unit_vectors(vec![Vector3::<f64>::x(); 5]);
        let h = build_axis_histograms(&s, 1);
        assert_eq!(h.z.counts()[0], 5);
        assert_eq!(h.y.counts()[90], 5);
        // atan2(0, 0) is pinned to 0.
        assert_eq!(h.x.counts()[0], 5);
    }

    #[test]
    fn axis_histograms_shift_under_z_rotation() {
        let pts = uniform_points(2000, 4);
        let off_axis = S2PointSet::from_unit_vectors(
            pts.iter().filter(|p| p.z.abs() < 0.95).copied().collect(),
        );
        // Pin points to bin centres so the shift is exact.
        let centred: S2PointSet<f64> = off_axis
            .iter()
            .map(|p| {
                let s = spherical_coords(p);
                crate::so3::SphericalAngles {
                    alpha_deg: s.alpha_deg.floor() + 0.5,
                    beta_deg: s.beta_deg,
                }
                .to_unit_vector()
            })
            .collect();
        let before = build_axis_histograms(&centred, 1);
        let after = build_axis_histograms(&centred.rotated(&axis_rotation(Axis::Z, 30.0)), 1);
        assert_eq!(after.z, before.z.rotated(30));
        assert_eq!(after.z.total(), before.z.total());
        let k2 = build_axis_histograms(&centred, 2);
        assert_eq!(k2.z.len(), 720);
        assert_eq!(k2.z.total(), before.z.total());
    }

    #[test]
    fn correlation_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = Histogram1D::from_counts((0..360).map(|_| rng.random_range(0..20)).collect(), 1).unwrap();
        assert_eq!(circular_cross_correlate(&f, &f).unwrap().best_shift_bins, 0);
        let moved = f.rotated(37);
        assert_eq!(circular_cross_correlate(&f, &moved).unwrap().best_shift_bins, 37);

        let mut a = vec![0u64; 360];
        let mut b = vec![0u64; 360];
        a[10] = 1;
        b[50] = 1;
        let r = circular_cross_correlate(
            &Histogram1D::from_counts(a, 1).unwrap(),
            &Histogram1D::from_counts(b, 1).unwrap(),
        )
        .unwrap();
        assert_eq!(r.best_shift_bins, 40);
        assert_eq!(r.signed_shift(), 40);

        let err = circular_cross_correlate(&Histogram1D::zeros(1), &Histogram1D::zeros(2));
        assert!(matches!(err, Err(Error::LengthMismatch { fixed: 360, moving: 720 })));
    }

    #[test]
    fn ties_pick_smallest_shift() {
        let h = Histogram1D::from_counts(vec![1; 360], 1).unwrap();
        let r = circular_cross_correlate(&h, &h).unwrap();
        assert_eq!(r.best_shift_bins, 0);
        assert!(r.scores.iter().all(|&s| s == 360));
    }

    #[test]
    fn csv_shapes() {
        let h = BinaryHistogram2D::empty(0);
        let csv = h.to_csv();
        assert_eq!(csv.lines().count(), 180);
        assert_eq!(csv.lines().next().unwrap().split(',').count(), 360);
        assert_eq!(Histogram1D::zeros(2).to_csv().trim_end().split(',').count(), 720);
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 100, rng_seed: proptest::test_runner::RngSeed::Fixed(11), ..ProptestConfig::default() })]

        #[test]
        fn correlation_undoes_index_shift(d in 0..720usize, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = Histogram1D::from_counts((0..720).map(|_| rng.random_range(0..50)).collect(), 2).unwrap();
            let r = circular_cross_correlate(&f, &f.rotated(d)).unwrap();
            prop_assert_eq!(r.best_shift_bins, d);
        }

        #[test]
        fn correlation_matches_naive_and_conserves_mass(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f: Vec<u64> = (0..360).map(|_| rng.random_range(0..2)).collect();
            let m: Vec<u64> = (0..360).map(|_| rng.random_range(0..2)).collect();
            let r = circular_cross_correlate(
                &Histogram1D::from_counts(f.clone(), 1).unwrap(),
                &Histogram1D::from_counts(m.clone(), 1).unwrap(),
            ).unwrap();
            prop_assert_eq!(&r.scores, &correlate_naive(&f, &m));
            let total: u64 = r.scores.iter().sum();
            prop_assert_eq!(total, f.iter().sum::<u64>() * m.iter().sum::<u64>());
            prop_assert_eq!(r.scores[r.best_shift_bins], *r.scores.iter().max().unwrap());
        }

        #[test]
        fn marginal_total_is_occupied_cells(seed in any::<u64>(), n in 1..3000usize) {
            let h = build_binary_histogram_2d(&uniform_points(n, seed), 0);
            prop_assert_eq!(marginalize_azimuth(&h).total() as usize, h.occupied());
        }

        #[test]
        fn within_cell_jitter_is_invisible(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let centres: Vec<(f64, f64)> = (0..200)
                .map(|_| (rng.random_range(0..360) as f64 + 0.5, rng.random_range(1..179) as f64 + 0.5))
                .collect();
            let set = |jit: f64, rng: &mut ChaCha8Rng| -> S2PointSet<f64> {
                centres.iter().map(|&(a, b)| crate::so3::SphericalAngles {
                    alpha_deg: a + rng.random_range(-jit..=jit),
                    beta_deg: b + rng.random_range(-jit..=jit),
                }.to_unit_vector()).collect()
            };
            let h0 = build_binary_histogram_2d(&set(0.0, &mut rng), 0);
            let h1 = build_binary_histogram_2d(&set(0.4, &mut rng), 0);
            prop_assert_eq!(h0, h1);
        }
    }
}
