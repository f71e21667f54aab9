//! Correspondence-free rotation estimation between spherical point patterns.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which the file formats and CLI use.

pub mod aligners;
pub mod datagen;
pub mod error;
pub mod pcr;
pub mod scalar;
pub mod so3;
pub mod sph_image;
pub mod sphere_hist;
pub mod wahba;
pub mod xyz;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Rotation = so3::Rotation<f64>;
pub type PointSet = so3::S2PointSet<f64>;
pub type AlignmentResult = aligners::AlignmentResult<f64>;

pub type Rotation32 = so3::Rotation<f32>;
pub type PointSet32 = so3::S2PointSet<f32>;
