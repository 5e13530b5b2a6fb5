//! Pairwise squared-distance matrices, computed in parallel over the upper
//! triangle and mirrored.

use rayon::prelude::*;

use crate::baseline::{baseline_amplitude, baseline_fit_tsrvc, BaselineParams};
use crate::bundle::optimal_theta_tsrvc;
use crate::curves::{to_tsrvc, Curve, Tsrvc};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::warping::{amplitude_geodesic, AlignOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    /// Exact bundle distance, no reparametrization.
    Bundle,
    /// Exact distance modulo reparametrization.
    Amplitude,
    /// Discretized transport and tilt grid.
    Baseline(BaselineParams),
    /// Discretized transport and tilt grid with DP alignment at each tilt.
    BaselineAmplitude(BaselineParams),
}

/// Per-pair outcome; `converged` is false when an optimizer hit its cap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairResult<T> {
    pub dist_sq: T,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix<T> {
    pub n: usize,
    /// Row-major squared distances.
    pub values: Vec<T>,
    pub all_converged: bool,
}

impl<T: Real> DistanceMatrix<T> {
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.n).map(|r| r.iter().map(|v| v.as_f64()).collect()).collect()
    }

    /// Upper-triangle entries `(i, j, d²)` with `i < j`.
    pub fn upper(&self) -> Vec<(usize, usize, T)> {
        (0..self.n).flat_map(|i| (i + 1..self.n).map(move |j| (i, j))).map(|(i, j)| (i, j, self.get(i, j))).collect()
    }
}

pub fn pair_distance<T: Real>(
    p0: &Curve<T>,
    p: &Curve<T>,
    r0: &Tsrvc<T>,
    r: &Tsrvc<T>,
    metric: Metric,
    opts: &AlignOptions<T>,
) -> Result<PairResult<T>> {
    Ok(match metric {
        Metric::Bundle => {
            let fit = optimal_theta_tsrvc(r0, r, &opts.optimizer)?;
            PairResult { dist_sq: fit.dist_sq, converged: fit.converged }
        }
        Metric::Amplitude => {
            let a = amplitude_geodesic(p0, p, opts)?;
            PairResult { dist_sq: a.dist_sq, converged: a.converged }
        }
        Metric::Baseline(b) => PairResult { dist_sq: baseline_fit_tsrvc(r0, r, &b)?.dist_sq, converged: true },
        Metric::BaselineAmplitude(b) => {
            PairResult { dist_sq: baseline_amplitude(p0, p, &b, &opts.dp)?.0.dist_sq, converged: true }
        }
    })
}

pub fn distance_matrix<T: Real>(curves: &[Curve<T>], metric: Metric, opts: &AlignOptions<T>) -> Result<DistanceMatrix<T>> {
    let n = curves.len();
    if let Some(c) = curves.iter().find(|c| c.len() != curves[0].len()) {
        return Err(Error::GridMismatch(curves[0].len(), c.len()));
    }
    let reps = curves.iter().map(to_tsrvc).collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let results = pairs
        .par_iter()
        .map(|&(i, j)| pair_distance(&curves[i], &curves[j], &reps[i], &reps[j], metric, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut values = vec![T::zero(); n * n];
    let mut all_converged = true;
    for (&(i, j), r) in pairs.iter().zip(&results) {
        values[i * n + j] = r.dist_sq;
        values[j * n + i] = r.dist_sq;
        all_converged &= r.converged;
    }
    Ok(DistanceMatrix { n, values, all_converged })
}

/// Percentage improvement `100 (d²_b − d²) / d²_b` over the upper triangle.
/// Pairs with a vanishing baseline distance contribute zero.
pub fn improvement<T: Real>(exact: &DistanceMatrix<T>, baseline: &DistanceMatrix<T>) -> Vec<f64> {
    exact
        .upper()
        .into_iter()
        .map(|(i, j, d)| {
            let b = baseline.get(i, j).as_f64();
            if b > 0.0 {
                100.0 * (b - d.as_f64()) / b
            } else {
                0.0
            }
        })
        .collect()
}
