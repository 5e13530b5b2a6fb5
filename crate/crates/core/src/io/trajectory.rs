//! Plain CSV trajectories with a `t,lat,lon` or `t,x,y,z` header.

use std::io::Read;
use std::path::Path;

use super::{latlon_to_sphere, DataError, DataResult};
use crate::curves::{Curve, WarpingFunction};
use crate::linalg::Vec3;
use crate::scalar::Real;
use crate::sphere::SpherePoint;

const UNIT_TOL: f64 = 1e-3;

#[derive(Clone, Copy)]
enum Layout {
    LatLon,
    Xyz,
}

pub fn load_trajectory_csv<T: Real>(path: impl AsRef<Path>, n: usize) -> DataResult<Curve<T>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| DataError::io(path, e))?;
    parse_trajectory_csv(file, n)
}

/// Reads a trajectory and resamples it on `n` uniform points of `[0, 1]`
/// after mapping time affinely onto that interval.
pub fn parse_trajectory_csv<T: Real, R: Read>(reader: R, n: usize) -> DataResult<Curve<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|s| s.to_ascii_lowercase()).collect();
    let layout = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["t", "lat", "lon"] => Layout::LatLon,
        ["t", "x", "y", "z"] => Layout::Xyz,
        _ => return Err(DataError::BadHeader(header.join(","))),
    };
    let mut times = Vec::new();
    let mut points: Vec<SpherePoint<T>> = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let row = k + 1;
        let record = record?;
        let values: Vec<f64> = record
            .iter()
            .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<_>>()
            .ok_or_else(|| DataError::BadRow { row, reason: format!("non-numeric field in {:?}", record.as_slice()) })?;
        let t = values[0];
        if times.last().is_some_and(|&last| t <= last) {
            return Err(DataError::NonMonotoneTime { row });
        }
        let p = match layout {
            Layout::LatLon => latlon_to_sphere(values[1], values[2])?,
            Layout::Xyz => {
                let norm = (values[1] * values[1] + values[2] * values[2] + values[3] * values[3]).sqrt();
                if (norm - 1.0).abs() > UNIT_TOL {
                    return Err(DataError::NonUnitVector { row, norm });
                }
                SpherePoint::from_vec(Vec3::from_f64([values[1], values[2], values[3]]))?
            }
        };
        times.push(t);
        points.push(p);
    }
    if points.len() < 2 {
        return Err(DataError::TooShort { id: "trajectory".into(), needed: 2, got: points.len() });
    }
    let (t0, span) = (times[0], times[times.len() - 1] - times[0]);
    let times: Vec<T> = times.iter().map(|t| T::lit((t - t0) / span)).collect();
    Ok(Curve::from_timed(&times, &points, n)?)
}

/// Writes `t,x,y,z` rows on the uniform grid.
pub fn write_trajectory_csv<T: Real>(curve: &Curve<T>, path: impl AsRef<Path>) -> DataResult<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "x", "y", "z"])?;
    let n = curve.len();
    for (i, p) in curve.samples().iter().enumerate() {
        let t = i as f64 / (n - 1) as f64;
        let [x, y, z] = p.coords().to_f64();
        w.write_record([t, x, y, z].map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| DataError::io(path, e))
}

/// Writes `t,gamma` rows.
pub fn write_warp_csv<T: Real>(gamma: &WarpingFunction<T>, path: impl AsRef<Path>) -> DataResult<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "gamma"])?;
    let n = gamma.len();
    for (i, g) in gamma.values().iter().enumerate() {
        let t = i as f64 / (n - 1) as f64;
        w.write_record([t.to_string(), g.as_f64().to_string()])?;
    }
    w.flush().map_err(|e| DataError::io(path, e))
}
