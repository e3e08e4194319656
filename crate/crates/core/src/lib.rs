//! Numerics for the injective hull of the Riemannian circle.

pub mod check;
pub mod coeffs;
pub mod comass;
pub mod error;
pub mod hull;
pub mod io;
pub mod pathspace;
pub mod quadrature;
pub mod scalar;
pub mod simplex;
pub mod volumes;

pub use error::{Error, Result};
pub use hull::{random_hull_point, HullFn, SpherePoint};
pub use pathspace::{AngleField, PlanePath};
pub use quadrature::Grid;
pub use scalar::Real;

pub type HullFn64 = HullFn<f64>;
pub type HullFn32 = HullFn<f32>;
pub type SpherePoint64 = SpherePoint<f64>;
pub type SpherePoint32 = SpherePoint<f32>;
pub type AngleField64 = AngleField<f64>;
pub type PlanePath64 = PlanePath<f64>;
pub type Norm2D64 = volumes::Norm2D<f64>;
