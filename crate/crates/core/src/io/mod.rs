//! Reading and writing trajectory data: HURDAT2 best-track files, plain CSV
//! trajectories and JSON result artifacts.

mod hurdat;
mod json;
mod trajectory;

use std::path::PathBuf;

use thiserror::Error as ThisError;

use crate::error::Error;
use crate::linalg::Vec3;
use crate::scalar::Real;
use crate::sphere::SpherePoint;

pub use hurdat::{parse_hurdat2, read_hurdat2, track_to_curve, TrackPoint, TrackRecord, MIN_TRACK_POINTS};
pub use json::{
    export_json, import_json, Artifact, CovarianceJson, DistanceMatrixJson, GeodesicPathJson, MeanJson, TensorFieldJson,
};
pub use trajectory::{load_trajectory_csv, parse_trajectory_csv, write_trajectory_csv, write_warp_csv};

#[derive(Debug, ThisError)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("latitude {0} outside [-90, 90]")]
    LatOutOfRange(f64),
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("line {line}: header declares {declared} rows, found {found}")]
    RowCountMismatch { line: usize, declared: usize, found: usize },
    #[error("line {line}: bad coordinate {text:?}")]
    BadCoordinate { line: usize, text: String },
    #[error("line {line}: bad {field} field {text:?}")]
    BadField { line: usize, field: &'static str, text: String },
    #[error("line {line}: data row outside any storm block")]
    OrphanRow { line: usize },
    #[error("unrecognized header {0:?}, expected t,lat,lon or t,x,y,z")]
    BadHeader(String),
    #[error("row {row}: time is not strictly increasing")]
    NonMonotoneTime { row: usize },
    #[error("row {row}: point has norm {norm}, expected 1")]
    NonUnitVector { row: usize, norm: f64 },
    #[error("row {row}: {reason}")]
    BadRow { row: usize, reason: String },
    #[error("track {id} has {got} points, at least {needed} required")]
    TooShort { id: String, needed: usize, got: usize },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] Error),
}

impl DataError {
    /// True for failures of the filesystem rather than of the content.
    pub fn is_io(&self) -> bool {
        match self {
            DataError::Io { .. } => true,
            DataError::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(_)),
            DataError::Json(e) => e.is_io(),
            _ => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DataError::Io { path: path.into(), source }
    }
}

pub type DataResult<T> = std::result::Result<T, DataError>;

/// Maps latitude and longitude in degrees to the unit sphere.
pub fn latlon_to_sphere<T: Real>(lat: f64, lon: f64) -> DataResult<SpherePoint<T>> {
    if !(-90.0..=90.0).contains(&lat) || !lon.is_finite() {
        return Err(DataError::LatOutOfRange(lat));
    }
    let (phi, lambda) = (lat.to_radians(), lon.to_radians());
    let v = Vec3::new(phi.cos() * lambda.cos(), phi.cos() * lambda.sin(), phi.sin());
    Ok(SpherePoint::from_vec(Vec3::from_f64(v.0))?)
}

/// Inverse of [`latlon_to_sphere`], longitude in (-180, 180].
pub fn sphere_to_latlon<T: Real>(p: &SpherePoint<T>) -> (f64, f64) {
    let [x, y, z] = p.coords().to_f64();
    let lat = z.clamp(-1.0, 1.0).asin().to_degrees();
    let mut lon = y.atan2(x).to_degrees();
    if lon <= -180.0 {
        lon += 360.0;
    }
    (lat, lon)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latlon_round_trip() {
        for &(lat, lon) in &[(0.0, 0.0), (28.5, -94.8), (-45.0, 170.0), (89.0, 180.0)] {
            let p = latlon_to_sphere::<f64>(lat, lon).unwrap();
            let (a, b) = sphere_to_latlon(&p);
            assert!((a - lat).abs() < 1e-12 && (b - lon).abs() < 1e-9, "{lat} {lon} -> {a} {b}");
        }
    }

    #[test]
    fn latitude_is_checked() {
        assert!(matches!(latlon_to_sphere::<f64>(91.0, 0.0), Err(DataError::LatOutOfRange(_))));
    }

    #[test]
    fn io_classification() {
        let e = DataError::io("x", std::io::Error::other("boom"));
        assert!(e.is_io());
        assert!(!DataError::BadHeader("a".into()).is_io());
    }
}
