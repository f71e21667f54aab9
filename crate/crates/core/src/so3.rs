//! Rotations, unit vectors and the spherical parameterizations used by the
//! histogram kernels.
//!
//! Angles crossing the public API are in degrees. Azimuth-like angles are
//! always wrapped into `[0, 360)`.

use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix3, Quaternion, Unit, UnitQuaternion, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{wrap_deg, Real};

/// Norm below which a vector cannot be normalized.
pub const ZERO_NORM: f64 = 1e-12;
/// Resultant length below which a mean direction is meaningless.
pub const DEGENERATE_RESULTANT: f64 = 1e-6;
/// `atan2` arguments with a combined magnitude below this give angle 0.
const POLE_EPS: f64 = 1e-12;

pub type UnitVector3<T> = Unit<Vector3<T>>;

#[inline]
fn abs<T: Real>(x: T) -> T {
    if x < T::zero() {
        -x
    } else {
        x
    }
}

/// `atan2(y, x)` in degrees wrapped to `[0, 360)`, with `atan2(0, 0) = 0`.
#[inline]
pub(crate) fn atan2_deg<T: Real>(y: T, x: T) -> T {
    if (x * x + y * y).sqrt() <= T::lit(POLE_EPS) {
        return T::zero();
    }
    wrap_deg(y.atan2(x).to_degrees())
}

pub fn normalize<T: Real>(v: Vector3<T>) -> Result<UnitVector3<T>> {
    let norm = v.norm();
    if !(norm > T::lit(ZERO_NORM)) {
        return Err(Error::ZeroVector { norm: norm.as_f64() });
    }
    Ok(Unit::new_unchecked(v / norm))
}

/// Azimuth/polar angles of a point on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalAngles<T> {
    /// Azimuth in `[0, 360)`.
    pub alpha_deg: T,
    /// Polar angle from +z in `[0, 180]`.
    pub beta_deg: T,
}

impl<T: Real> SphericalAngles<T> {
    /// Unit vector `(sinβ cosα, sinβ sinα, cosβ)`.
    pub fn to_unit_vector(&self) -> UnitVector3<T> {
        let a = self.alpha_deg.to_radians();
        let b = self.beta_deg.to_radians();
        let (sb, cb) = (b.sin(), b.cos());
        Unit::new_normalize(Vector3::new(sb * a.cos(), sb * a.sin(), cb))
    }
}

pub fn spherical_coords<T: Real>(p: &Vector3<T>) -> SphericalAngles<T> {
    let z = p.z.clamp(-T::one(), T::one());
    SphericalAngles {
        alpha_deg: atan2_deg(p.y, p.x),
        beta_deg: z.acos().to_degrees(),
    }
}

/// Per-axis direction angles: the angle of the projection onto the plane
/// perpendicular to each axis, measured from the next axis in cyclic order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisDirectionAngles<T> {
    pub theta_x_deg: T,
    pub theta_y_deg: T,
    pub theta_z_deg: T,
}

pub fn axis_direction_angles<T: Real>(p: &Vector3<T>) -> AxisDirectionAngles<T> {
    AxisDirectionAngles {
        theta_x_deg: atan2_deg(p.z, p.y),
        theta_y_deg: atan2_deg(p.x, p.z),
        theta_z_deg: atan2_deg(p.y, p.x),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// A 3×3 orthonormal matrix with determinant +1.
#[derive(Clone, Copy, PartialEq)]
pub struct Rotation<T: Real> {
    m: Matrix3<T>,
}

impl<T: Real> fmt::Debug for Rotation<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Rotation").field(&self.to_row_major()).finish()
    }
}

impl<T: Real> Default for Rotation<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> Rotation<T> {
    pub fn identity() -> Self {
        Self {
            m: Matrix3::identity(),
        }
    }

    /// Validates orthonormality and orientation.
    pub fn from_matrix(m: Matrix3<T>) -> Result<Self> {
        let tol = T::invariant_tol() * T::lit(100.0);
        let gram = m.transpose() * m - Matrix3::identity();
        let worst = gram.iter().fold(T::zero(), |acc, &v| acc.max(abs(v)));
        if !(worst <= tol) {
            return Err(Error::InvalidRotation(format!(
                "|MᵀM - I| = {:e}",
                worst.as_f64()
            )));
        }
        let det = m.determinant();
        if !(abs(det - T::one()) <= tol) {
            return Err(Error::InvalidRotation(format!("det = {}", det)));
        }
        Ok(Self { m })
    }

    /// Wraps a matrix the caller knows to be a rotation.
    pub fn from_matrix_unchecked(m: Matrix3<T>) -> Self {
        Self { m }
    }

    pub fn from_row_major(v: &[T]) -> Result<Self> {
        if v.len() != 9 {
            return Err(Error::InvalidRotation(format!(
                "expected 9 entries, got {}",
                v.len()
            )));
        }
        Self::from_matrix(Matrix3::from_row_slice(v))
    }

    pub fn to_row_major(&self) -> [T; 9] {
        let m = &self.m;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
    }

    pub fn matrix(&self) -> &Matrix3<T> {
        &self.m
    }

    /// The inverse rotation.
    pub fn transpose(&self) -> Self {
        Self {
            m: self.m.transpose(),
        }
    }

    pub fn inverse(&self) -> Self {
        self.transpose()
    }

    #[inline]
    pub fn apply(&self, v: &Vector3<T>) -> Vector3<T> {
        self.m * v
    }

    pub fn trace(&self) -> T {
        self.m.trace()
    }

    pub fn cast<U: Real>(&self) -> Rotation<U> {
        Rotation {
            m: self.m.map(|v| U::lit(v.as_f64())),
        }
    }

    /// Checks the orthonormality invariants at `tol`.
    pub fn is_valid(&self, tol: T) -> bool {
        let gram = self.m.transpose() * self.m - Matrix3::identity();
        gram.iter().all(|v| abs(*v) <= tol) && abs(self.m.determinant() - T::one()) <= tol
    }

    /// Re-projects onto SO(3); removes drift after long products.
    pub fn orthonormalized(&self) -> Self {
        let q = UnitQuaternion::from_matrix(&self.m);
        Self {
            m: q.to_rotation_matrix().into_inner(),
        }
    }
}

impl<T: Real> Mul for Rotation<T> {
    type Output = Rotation<T>;
    fn mul(self, rhs: Rotation<T>) -> Rotation<T> {
        Rotation { m: self.m * rhs.m }
    }
}

impl<T: Real> Mul<&Rotation<T>> for &Rotation<T> {
    type Output = Rotation<T>;
    fn mul(self, rhs: &Rotation<T>) -> Rotation<T> {
        Rotation { m: self.m * rhs.m }
    }
}

impl<T: Real> Mul<Vector3<T>> for &Rotation<T> {
    type Output = Vector3<T>;
    fn mul(self, rhs: Vector3<T>) -> Vector3<T> {
        self.m * rhs
    }
}

impl<T: Real + Serialize> Serialize for Rotation<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_row_major().serialize(s)
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for Rotation<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<T> = Vec::deserialize(d)?;
        Rotation::from_row_major(&v).map_err(serde::de::Error::custom)
    }
}

/// Elementary rotation about a coordinate axis.
pub fn axis_rotation<T: Real>(axis: Axis, angle_deg: T) -> Rotation<T> {
    let a = angle_deg.to_radians();
    let (s, c) = (a.sin(), a.cos());
    let (o, l) = (T::zero(), T::one());
    let m = match axis {
        Axis::X => Matrix3::new(l, o, o, o, c, -s, o, s, c),
        Axis::Y => Matrix3::new(c, o, s, o, l, o, -s, o, c),
        Axis::Z => Matrix3::new(c, -s, o, s, c, o, o, o, l),
    };
    Rotation { m }
}

/// `R_z(tz) · R_y(ty) · R_x(tx)`.
pub fn compose_zyx<T: Real>(tz_deg: T, ty_deg: T, tx_deg: T) -> Rotation<T> {
    axis_rotation(Axis::Z, tz_deg) * axis_rotation(Axis::Y, ty_deg) * axis_rotation(Axis::X, tx_deg)
}

/// Rodrigues rotation taking `v2` onto `v1` (`R·v2 = v1`).
pub fn rotation_between_vectors<T: Real>(v1: &UnitVector3<T>, v2: &UnitVector3<T>) -> Rotation<T> {
    let cross = v2.cross(v1);
    let sin = cross.norm();
    let cos = v2.dot(v1);
    let eps = T::lit(1e-12);
    if sin <= eps {
        if cos > T::zero() {
            return Rotation::identity();
        }
        // Half turn about any axis perpendicular to v2.
        let (ax, ay, az) = (abs(v2.x), abs(v2.y), abs(v2.z));
        let helper = if ax <= ay && ax <= az {
            Vector3::x()
        } else if ay <= az {
            Vector3::y()
        } else {
            Vector3::z()
        };
        let v = v2.cross(&helper).normalize();
        let m = -Matrix3::identity() + (v * v.transpose()) * T::lit(2.0);
        return Rotation { m };
    }
    let v = cross / sin;
    let k = Matrix3::new(
        T::zero(),
        -v.z,
        v.y,
        v.z,
        T::zero(),
        -v.x,
        -v.y,
        v.x,
        T::zero(),
    );
    let theta = sin.atan2(cos);
    let m = Matrix3::identity() + k * theta.sin() + (k * k) * (T::one() - theta.cos());
    Rotation { m }
}

/// Rotation-space distance in `[0, 180]` degrees.
pub fn geodesic_angle_deg<T: Real>(r1: &Rotation<T>, r2: &Rotation<T>) -> T {
    let m = r1.m.transpose() * r2.m;
    let half = T::lit(0.5);
    let c = (m.trace() - T::one()) * half;
    let axis = Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]);
    (axis.norm() * half).atan2(c).to_degrees()
}

/// `n` rotations uniform on SO(3), from normalized 4D Gaussian quaternions.
pub fn sample_rotations<T: Real>(n: usize, seed: u64) -> Vec<Rotation<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_rotations_with(n, &mut rng)
}

pub fn sample_rotations_with<T: Real, R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Rotation<T>> {
    (0..n)
        .map(|_| {
            let q = loop {
                let c: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
                let q = Quaternion::new(c[0], c[1], c[2], c[3]);
                if q.norm() > 1e-9 {
                    break UnitQuaternion::from_quaternion(q);
                }
            };
            Rotation {
                m: q.to_rotation_matrix().into_inner(),
            }
            .cast()
        })
        .collect()
}

/// A set of points on the unit sphere.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct S2PointSet<T: Real> {
    points: Vec<Vector3<T>>,
}

impl<T: Real> S2PointSet<T> {
    /// Normalizes every input vector.
    pub fn new(points: Vec<Vector3<T>>) -> Result<Self> {
        let points = points
            .into_iter()
            .map(|p| normalize(p).map(Unit::into_inner))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { points })
    }

    /// Wraps vectors that are already unit length.
    pub fn from_unit_vectors(points: Vec<Vector3<T>>) -> Self {
        debug_assert!(points
            .iter()
            .all(|p| abs(p.norm() - T::one()) < T::lit(1e-6)));
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vector3<T>] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Vector3<T>> {
        self.points.iter()
    }

    pub fn into_inner(self) -> Vec<Vector3<T>> {
        self.points
    }

    pub fn rotated(&self, r: &Rotation<T>) -> Self {
        Self {
            points: self.points.iter().map(|p| r.m * p).collect(),
        }
    }

    /// Flips every vector with negative z into the upper hemisphere.
    pub fn flipped_to_positive_z(&self) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| if p.z < T::zero() { -p } else { *p })
                .collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> S2PointSet<U> {
        S2PointSet {
            points: self
                .points
                .iter()
                .map(|p| p.map(|v| U::lit(v.as_f64())))
                .collect(),
        }
    }
}

impl<T: Real> FromIterator<UnitVector3<T>> for S2PointSet<T> {
    fn from_iter<I: IntoIterator<Item = UnitVector3<T>>>(iter: I) -> Self {
        Self {
            points: iter.into_iter().map(Unit::into_inner).collect(),
        }
    }
}

impl<'a, T: Real> IntoIterator for &'a S2PointSet<T> {
    type Item = &'a Vector3<T>;
    type IntoIter = std::slice::Iter<'a, Vector3<T>>;
    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

/// Unit mean direction and resultant length `‖Σp / N‖`.
pub fn mean_direction<T: Real>(points: &S2PointSet<T>) -> Result<(UnitVector3<T>, T)> {
    if points.is_empty() {
        return Err(Error::EmptySet("mean direction of an empty set"));
    }
    let sum = points
        .iter()
        .fold(Vector3::zeros(), |acc: Vector3<T>, p| acc + p);
    let mean = sum / T::from_usize(points.len()).expect("point count fits the scalar type");
    let resultant = mean.norm();
    if !(resultant >= T::lit(DEGENERATE_RESULTANT)) {
        return Err(Error::DegenerateMean {
            resultant: resultant.as_f64(),
        });
    }
    Ok((Unit::new_unchecked(mean / resultant), resultant))
}
