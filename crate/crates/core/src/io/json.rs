//! JSON artifacts written by the command line tools.
//!
//! Every artifact carries a `kind` tag and the time grid it lives on. Floats
//! are written in shortest round-trip form, so import reproduces the exported
//! values bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DataError, DataResult};
use crate::bundle::GeodesicPath;
use crate::covariance::{trace_profile, CovarianceBlocks, TensorField};
use crate::curves::{uniform_grid, Curve, Tsrvc, WarpingFunction};
use crate::frechet::MeanResult;
use crate::linalg::{Mat2, Vec3};
use crate::scalar::Real;
use crate::sphere::SpherePoint;

fn v3<T: Real>(v: &Vec3<T>) -> [f64; 3] {
    v.to_f64()
}

fn pt<T: Real>(p: &SpherePoint<T>) -> [f64; 3] {
    p.coords().to_f64()
}

fn m2<T: Real>(m: &Mat2<T>) -> [[f64; 2]; 2] {
    [[m[0][0].as_f64(), m[0][1].as_f64()], [m[1][0].as_f64(), m[1][1].as_f64()]]
}

fn curve<T: Real>(c: &Curve<T>) -> Vec<[f64; 3]> {
    c.samples().iter().map(pt).collect()
}

fn field<T: Real>(q: &Tsrvc<T>) -> Vec<[f64; 3]> {
    q.field.iter().map(v3).collect()
}

fn warp<T: Real>(g: &WarpingFunction<T>) -> Vec<f64> {
    g.values().iter().map(|v| v.as_f64()).collect()
}

fn f64s<T: Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicPathJson {
    pub grid: Vec<f64>,
    pub theta: f64,
    pub dist_sq: f64,
    /// Path parameters `s_j`.
    pub params: Vec<f64>,
    /// `[S + 1][T][3]` frames reconstructed as curves.
    pub curves: Vec<Vec<[f64; 3]>>,
    /// `[S + 1][T][3]` TSRVC fields of the frames.
    pub fields: Vec<Vec<[f64; 3]>>,
    /// Warp applied to the second curve, for amplitude paths.
    pub gamma: Option<Vec<f64>>,
    pub converged: bool,
}

impl GeodesicPathJson {
    pub fn new<T: Real>(
        path: &GeodesicPath<T>,
        dist_sq: T,
        gamma: Option<&WarpingFunction<T>>,
        converged: bool,
    ) -> Self {
        let n = path.points[0].len();
        Self {
            grid: uniform_grid::<f64>(n),
            theta: path.theta.as_f64(),
            dist_sq: dist_sq.as_f64(),
            params: f64s(&path.params()),
            curves: path.curves().iter().map(curve).collect(),
            fields: path.points.iter().map(field).collect(),
            gamma: gamma.map(warp),
            converged,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanJson {
    pub grid: Vec<f64>,
    pub mean: Vec<[f64; 3]>,
    pub mean_field: Vec<[f64; 3]>,
    pub thetas: Vec<f64>,
    pub gammas: Option<Vec<Vec<f64>>>,
    pub frechet_value: f64,
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl MeanJson {
    pub fn new<T: Real>(m: &MeanResult<T>) -> Self {
        Self {
            grid: uniform_grid::<f64>(m.mean.len()),
            mean: curve(&m.mean),
            mean_field: field(&m.mean_tsrvc),
            thetas: f64s(&m.thetas),
            gammas: m.gammas.as_ref().map(|g| g.iter().map(warp).collect()),
            frechet_value: m.frechet_value.as_f64(),
            trace: f64s(&m.trace),
            iterations: m.iterations,
            converged: m.converged,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorFieldJson {
    pub grid: Vec<f64>,
    /// `[T][2][2]` tensors in the frames below.
    pub tensors: Vec<[[f64; 2]; 2]>,
    /// `[T][2][3]` orthonormal tangent frames.
    pub frames: Vec<[[f64; 3]; 2]>,
    pub trace: Vec<f64>,
}

impl TensorFieldJson {
    pub fn new<T: Real>(f: &TensorField<T>) -> Self {
        Self {
            grid: uniform_grid::<f64>(f.tensors.len()),
            tensors: f.tensors.iter().map(m2).collect(),
            frames: f.frames.iter().map(|[a, b]| [v3(a), v3(b)]).collect(),
            trace: f64s(&trace_profile(f)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceJson {
    pub grid: Vec<f64>,
    pub base: [f64; 3],
    pub basis: [[f64; 3]; 2],
    pub kappa: [[f64; 2]; 2],
    /// `[T][2][2]` cross blocks between the base direction and the field.
    pub k: Vec<[[f64; 2]; 2]>,
    /// `[T][T][2][2]` field blocks.
    pub big_k: Vec<Vec<[[f64; 2]; 2]>>,
    pub min_eigenvalue: f64,
    pub pointwise: Option<TensorFieldJson>,
    pub transported: Option<TensorFieldJson>,
}

impl CovarianceJson {
    pub fn new<T: Real>(
        c: &CovarianceBlocks<T>,
        pointwise: Option<&TensorField<T>>,
        transported: Option<&TensorField<T>>,
    ) -> Self {
        let n = c.k.len();
        Self {
            grid: uniform_grid::<f64>(n),
            base: pt(&c.base),
            basis: [v3(&c.basis[0]), v3(&c.basis[1])],
            kappa: m2(&c.kappa),
            k: c.k.iter().map(m2).collect(),
            big_k: c.big_k.chunks(n).map(|row| row.iter().map(m2).collect()).collect(),
            min_eigenvalue: c.min_eigenvalue(),
            pointwise: pointwise.map(TensorFieldJson::new),
            transported: transported.map(TensorFieldJson::new),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrixJson {
    pub grid: Vec<f64>,
    pub labels: Vec<String>,
    pub metric: String,
    /// `[n][n]` squared distances, symmetric with zero diagonal.
    pub matrix: Vec<Vec<f64>>,
    pub baseline: Option<Vec<Vec<f64>>>,
    /// `100 (d²_b − d²) / d²_b` per upper-triangle pair, when a baseline ran.
    pub improvement: Option<Vec<f64>>,
}

#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Artifact {
    GeodesicPath(GeodesicPathJson),
    Mean(MeanJson),
    TensorField(TensorFieldJson),
    DistanceMatrix(DistanceMatrixJson),
    Covariance(CovarianceJson),
}

pub fn export_json(artifact: &Artifact, path: impl AsRef<Path>) -> DataResult<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(artifact)?;
    std::fs::write(path, text).map_err(|e| DataError::io(path, e))
}

pub fn import_json(path: impl AsRef<Path>) -> DataResult<Artifact> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_exact_round_trip() {
        use rand::{Rng, SeedableRng};
        let awkward = [0.1 + 0.2, 1.0 / 3.0, f64::MIN_POSITIVE, 1e-300, -2.5e17, std::f64::consts::PI];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut grid = awkward.to_vec();
        grid.extend((0..2000).map(|k| rng.random::<f64>() * 10f64.powi(k % 40 - 20)));
        let art = Artifact::TensorField(TensorFieldJson {
            grid: grid.clone(),
            tensors: vec![[[awkward[0], awkward[1]], [awkward[1], awkward[5]]]],
            frames: vec![[[awkward[2], 0.0, 1.0], [awkward[3], awkward[4], -0.0]]],
            trace: awkward.to_vec(),
        });
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.json");
        export_json(&art, &path).unwrap();
        let back = import_json(&path).unwrap();
        assert_eq!(art, back);
        let Artifact::TensorField(t) = back else { panic!() };
        for (a, b) in t.grid.iter().zip(&grid) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"kind\": \"tensor_field\""));
    }

    #[test]
    fn malformed_json_is_not_io() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.json");
        std::fs::write(&path, "{\"kind\": \"nope\"}").unwrap();
        let e = import_json(&path).unwrap_err();
        assert!(!e.is_io());
    }
}
