//! Elastic functional data analysis for trajectories on the unit sphere.
//!
//! Curves are represented by their transported square-root velocity curves
//! (TSRVC): a start point together with a field of tangent vectors carried
//! back to that start. Distances, geodesics and means are computed on the
//! bundle of such representations, optionally modulo reparametrization.
//!
//! Everything is generic over the scalar type through [`Real`]; the aliases
//! below fix it to `f64` or `f32`.

pub mod baseline;
pub mod bundle;
pub mod covariance;
pub mod curves;
pub mod distance;
pub mod error;
pub mod frechet;
pub mod io;
pub mod linalg;
pub mod scalar;
pub mod simulate;
pub mod sphere;
pub mod tolerances;
pub mod warping;

pub use error::{Error, Result};
pub use scalar::Real;

pub type SpherePoint = sphere::SpherePoint<f64>;
pub type Curve = curves::Curve<f64>;
pub type Tsrvc = curves::Tsrvc<f64>;
pub type WarpingFunction = curves::WarpingFunction<f64>;
pub type TangentElement = bundle::TangentElement<f64>;
pub type GeodesicPath = bundle::GeodesicPath<f64>;
pub type MeanResult = frechet::MeanResult<f64>;
pub type CovarianceBlocks = covariance::CovarianceBlocks<f64>;

pub type SpherePointF32 = sphere::SpherePoint<f32>;
pub type CurveF32 = curves::Curve<f32>;
pub type TsrvcF32 = curves::Tsrvc<f32>;
pub type WarpingFunctionF32 = curves::WarpingFunction<f32>;
