//! Tangent-space covariance at a mean, covariance tensors along the mean
//! curve, and Gaussian sampling of random curves.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bundle::{exp_map_tsrvc, inverse_exp_tsrvc, OptimizerOptions, TangentElement};
use crate::curves::{from_tsrvc, to_tsrvc, uniform_grid, warp_curve, Curve, Tsrvc, WarpingFunction};
use crate::error::{Error, Result};
use crate::frechet::MeanResult;
use crate::linalg::{mat2_mul, mat2_transpose, sym2_eigenvalues, Mat2, Vec3};
use crate::scalar::Real;
use crate::simulate::random_warp;
use crate::sphere::{geodesic_transport_matrix, SpherePoint, TangentVector};

/// Covariance of `(u, w)` in an orthonormal basis of the tangent plane at
/// the mean start: `κ = E u uᵀ`, `k(t) = E u w(t)ᵀ`, `K(s, t) = E w(s) w(t)ᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceBlocks<T> {
    pub base: SpherePoint<T>,
    pub basis: [Vec3<T>; 2],
    pub kappa: Mat2<T>,
    pub k: Vec<Mat2<T>>,
    /// Row-major `T × T` grid of blocks; `big_k[s * T + t] = K(t_s, t_t)`.
    pub big_k: Vec<Mat2<T>>,
}

/// Coordinates `[u¹, u², w¹(t₀), w²(t₀), …]` of a tangent element.
pub fn tangent_coordinates<T: Real>(v: &TangentElement<T>, basis: &[Vec3<T>; 2]) -> Vec<T> {
    let mut z = Vec::with_capacity(2 + 2 * v.w.len());
    z.push(v.u.vec.dot(&basis[0]));
    z.push(v.u.vec.dot(&basis[1]));
    for w in &v.w {
        z.push(w.dot(&basis[0]));
        z.push(w.dot(&basis[1]));
    }
    z
}

/// Tangent element with the given coordinates.
pub fn from_coordinates<T: Real>(base: SpherePoint<T>, basis: &[Vec3<T>; 2], z: &[T]) -> TangentElement<T> {
    let vec = |a: T, b: T| basis[0] * a + basis[1] * b;
    let u = TangentVector::new(base, vec(z[0], z[1]));
    let w = z[2..].chunks(2).map(|c| vec(c[0], c[1])).collect();
    TangentElement::new(u, w)
}

impl<T: Real> CovarianceBlocks<T> {
    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    pub fn dim(&self) -> usize {
        2 + 2 * self.len()
    }

    pub fn zeros(base: SpherePoint<T>, n: usize) -> Self {
        let z = [[T::zero(); 2]; 2];
        Self { base, basis: base.tangent_basis(), kappa: z, k: vec![z; n], big_k: vec![z; n * n] }
    }

    /// `(1/(n−1)) Σ z zᵀ` over coordinate vectors `z`.
    pub fn from_coordinates(base: SpherePoint<T>, basis: [Vec3<T>; 2], coords: &[Vec<T>]) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::TooFewCurves { needed: 2, got: coords.len() });
        }
        let dim = coords[0].len();
        if dim < 2 || !dim.is_multiple_of(2) || coords.iter().any(|z| z.len() != dim) {
            return Err(Error::InvalidOption("coordinate vectors must share an even length".into()));
        }
        let n = (dim - 2) / 2;
        let scale = T::one() / T::count(coords.len() - 1);
        let block = |a: usize, b: usize| -> Mat2<T> {
            let mut m = [[T::zero(); 2]; 2];
            for z in coords {
                for i in 0..2 {
                    for j in 0..2 {
                        m[i][j] = m[i][j] + z[a + i] * z[b + j];
                    }
                }
            }
            m.map(|row| row.map(|v| v * scale))
        };
        let kappa = block(0, 0);
        let k = (0..n).map(|t| block(0, 2 + 2 * t)).collect();
        let big_k = (0..n * n).into_par_iter().map(|idx| block(2 + 2 * (idx / n), 2 + 2 * (idx % n))).collect();
        Ok(Self { base, basis, kappa, k, big_k })
    }

    /// The full `(2 + 2T) × (2 + 2T)` matrix in `f64`.
    pub fn assembled(&self) -> DMatrix<f64> {
        let n = self.len();
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        let mut put = |r: usize, c: usize, b: &Mat2<T>| {
            for i in 0..2 {
                for j in 0..2 {
                    m[(r + i, c + j)] = b[i][j].as_f64();
                }
            }
        };
        put(0, 0, &self.kappa);
        for t in 0..n {
            put(0, 2 + 2 * t, &self.k[t]);
            put(2 + 2 * t, 0, &mat2_transpose(&self.k[t]));
            for s in 0..n {
                put(2 + 2 * s, 2 + 2 * t, &self.big_k[s * n + t]);
            }
        }
        m
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.assembled()).eigenvalues.min()
    }

    /// Frobenius norm of the assembled matrix.
    pub fn frobenius(&self) -> f64 {
        self.assembled().norm()
    }

    /// Factor `L` with `L Lᵀ` equal to the assembled matrix after clipping
    /// negative eigenvalues at zero.
    pub fn factor(&self) -> Result<DMatrix<f64>> {
        let eig = SymmetricEigen::new(self.assembled());
        let min = eig.eigenvalues.min();
        if min < -1e-6 {
            return Err(Error::NotPsd(min));
        }
        let roots = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()));
        Ok(eig.eigenvectors * DMatrix::from_diagonal(&roots))
    }
}

/// Inverse exponential maps of the curves at the mean representation.
pub fn tangent_elements<T: Real>(
    curves: &[Curve<T>],
    mean: &Tsrvc<T>,
    opts: &OptimizerOptions<T>,
) -> Result<Vec<TangentElement<T>>> {
    curves
        .par_iter()
        .map(|c| {
            let r = to_tsrvc(c)?;
            Ok(inverse_exp_tsrvc(mean, &r, opts)?.0)
        })
        .collect()
}

fn mean_inputs<'a, T: Real>(curves: &'a [Curve<T>], mean: &'a MeanResult<T>, aligned: bool) -> Result<&'a [Curve<T>]> {
    if !aligned {
        return Ok(curves);
    }
    mean.aligned
        .as_deref()
        .ok_or_else(|| Error::InvalidOption("aligned covariance needs a mean computed with alignment".into()))
}

/// Sample covariance `(1/(n−1)) Σ v_i ⊗ v_i` of `v_i = exp⁻¹_{mean} p_i`.
pub fn sample_covariance<T: Real>(
    curves: &[Curve<T>],
    mean: &Tsrvc<T>,
    opts: &OptimizerOptions<T>,
) -> Result<CovarianceBlocks<T>> {
    if curves.len() < 2 {
        return Err(Error::TooFewCurves { needed: 2, got: curves.len() });
    }
    let basis = mean.start.tangent_basis();
    let elems = tangent_elements(curves, mean, opts)?;
    let coords: Vec<_> = elems.iter().map(|v| tangent_coordinates(v, &basis)).collect();
    CovarianceBlocks::from_coordinates(mean.start, basis, &coords)
}

/// Field of 2×2 tensors along a curve, each expressed in its own
/// orthonormal frame.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorField<T> {
    pub tensors: Vec<Mat2<T>>,
    pub frames: Vec<[Vec3<T>; 2]>,
}

impl<T: Real> TensorField<T> {
    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// The same tensors re-expressed in other frames spanning the same planes.
    pub fn in_frames(&self, frames: Vec<[Vec3<T>; 2]>) -> Self {
        let tensors = self
            .tensors
            .iter()
            .zip(&self.frames)
            .zip(&frames)
            .map(|((m, old), new)| {
                let r = [[new[0].dot(&old[0]), new[0].dot(&old[1])], [new[1].dot(&old[0]), new[1].dot(&old[1])]];
                mat2_mul(&mat2_mul(&r, m), &mat2_transpose(&r))
            })
            .collect();
        Self { tensors, frames }
    }

    pub fn eigenvalues(&self) -> Vec<[T; 2]> {
        self.tensors.iter().map(sym2_eigenvalues).collect()
    }
}

/// `K_μ(t) = (1/(n−1)) Σ w_j(t) w_j(t)ᵀ` in the basis at the mean start.
/// With `aligned`, the warped curves stored in `mean` are used.
pub fn pointwise_covariance<T: Real>(
    curves: &[Curve<T>],
    mean: &MeanResult<T>,
    aligned: bool,
    opts: &OptimizerOptions<T>,
) -> Result<TensorField<T>> {
    let inputs = mean_inputs(curves, mean, aligned)?;
    if inputs.len() < 2 {
        return Err(Error::TooFewCurves { needed: 2, got: inputs.len() });
    }
    let basis = mean.mean_tsrvc.start.tangent_basis();
    let elems = tangent_elements(inputs, &mean.mean_tsrvc, opts)?;
    let scale = T::one() / T::count(inputs.len() - 1);
    let n = mean.mean_tsrvc.len();
    let tensors = (0..n)
        .map(|t| {
            let mut m = [[T::zero(); 2]; 2];
            for v in &elems {
                let c = [v.w[t].dot(&basis[0]), v.w[t].dot(&basis[1])];
                for i in 0..2 {
                    for j in 0..2 {
                        m[i][j] = m[i][j] + c[i] * c[j] * scale;
                    }
                }
            }
            m
        })
        .collect();
    Ok(TensorField { tensors, frames: vec![basis; n] })
}

/// Frames at the mean samples obtained by chaining geodesic transports of
/// the start basis along the curve.
fn transported_frames<T: Real>(mean: &Curve<T>) -> Result<Vec<[Vec3<T>; 2]>> {
    let samples = mean.samples();
    let mut frame = samples[0].tangent_basis();
    let mut frames = vec![frame];
    for pair in samples.windows(2) {
        let p = geodesic_transport_matrix(&pair[0], &pair[1])?;
        frame = [pair[1].project(&p.apply(&frame[0])), pair[1].project(&p.apply(&frame[1]))];
        frames.push(frame);
    }
    Ok(frames)
}

fn check_field_grid<T: Real>(field: &TensorField<T>, mean: &Curve<T>) -> Result<()> {
    if field.len() != mean.len() {
        return Err(Error::GridMismatch(field.len(), mean.len()));
    }
    Ok(())
}

/// Parallel transport of a field given at the mean start to `T_{p_μ(t)}S²`,
/// expressed in the canonical tangent basis at each sample.
pub fn transport_covariance_along_mean<T: Real>(field: &TensorField<T>, mean: &Curve<T>) -> Result<TensorField<T>> {
    check_field_grid(field, mean)?;
    let start = mean.start().tangent_basis();
    let at_start = field.in_frames(vec![start; field.len()]);
    let carried = TensorField { tensors: at_start.tensors, frames: transported_frames(mean)? };
    Ok(carried.in_frames(mean.samples().iter().map(|p| p.tangent_basis()).collect()))
}

/// Inverse of [`transport_covariance_along_mean`].
pub fn transport_covariance_to_start<T: Real>(field: &TensorField<T>, mean: &Curve<T>) -> Result<TensorField<T>> {
    check_field_grid(field, mean)?;
    let along = field.in_frames(transported_frames(mean)?);
    Ok(TensorField { tensors: along.tensors, frames: vec![mean.start().tangent_basis(); field.len()] })
}

/// `ρ(t) = trace K(t)`.
pub fn trace_profile<T: Real>(field: &TensorField<T>) -> Vec<T> {
    field.tensors.iter().map(|m| m[0][0] + m[1][1]).collect()
}

/// Random stream for sample `index` under `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `count` coordinate vectors drawn from `N(0, Σ)`, one random stream per draw.
pub fn gaussian_coordinates<T: Real>(blocks: &CovarianceBlocks<T>, count: usize, seed: u64) -> Result<Vec<Vec<T>>> {
    let factor = blocks.factor()?;
    let d = blocks.dim();
    Ok((0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let xi = DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(&mut rng)));
            (&factor * xi).iter().map(|v| T::lit(*v)).collect()
        })
        .collect())
}

/// Random curves `exp_{mean}(v_i)` with `v_i ~ N(0, Σ)`.
pub fn gp_sample<T: Real>(
    mean: &Tsrvc<T>,
    blocks: &CovarianceBlocks<T>,
    count: usize,
    seed: u64,
    opts: &OptimizerOptions<T>,
) -> Result<Vec<Curve<T>>> {
    if blocks.len() != mean.len() {
        return Err(Error::GridMismatch(blocks.len(), mean.len()));
    }
    let coords = gaussian_coordinates(blocks, count, seed)?;
    coords
        .par_iter()
        .map(|z| {
            let v = from_coordinates(mean.start, &blocks.basis, z);
            Ok(from_tsrvc(&exp_map_tsrvc(mean, &v, opts)?.endpoint))
        })
        .collect()
}

/// Parameters of the random covariance generator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockGenerator {
    /// Number of smooth loading functions.
    pub rank: usize,
    /// Width of the squared-exponential bumps, in units of `t`.
    pub length_scale: f64,
    /// Standard deviation scale of `u`.
    pub u_scale: f64,
    /// Standard deviation scale of `w(t)`.
    pub w_scale: f64,
    /// Strength of the `u`–`w` coupling.
    pub coupling: f64,
}

impl Default for BlockGenerator {
    fn default() -> Self {
        Self { rank: 8, length_scale: 0.2, u_scale: 0.15, w_scale: 0.25, coupling: 0.3 }
    }
}

/// Random blocks `Σ = A Aᵀ` with `u = a ξ₀` and
/// `w(t) = c b(t) ξ₀ + Σ_r e_r exp(−(t − c_r)²/(2ℓ²)) ξ_r`, which is PSD by
/// construction and smooth in `t`.
pub fn random_blocks<T: Real, R: Rng + ?Sized>(
    base: SpherePoint<T>,
    n: usize,
    gen: &BlockGenerator,
    rng: &mut R,
) -> CovarianceBlocks<T> {
    let m = gen.rank;
    let cols = 2 + m;
    let d = 2 + 2 * n;
    let mut a = DMatrix::<f64>::zeros(d, cols);
    let mut normal = || -> f64 { StandardNormal.sample(&mut *rng) };
    for i in 0..2 {
        for j in 0..2 {
            a[(i, j)] = gen.u_scale * normal() / 2f64.sqrt();
        }
    }
    let grid: Vec<f64> = uniform_grid::<f64>(n);
    let drift = [[normal(), normal()], [normal(), normal()]];
    let loads: Vec<(f64, [f64; 2])> = (0..m).map(|r| ((r as f64 + 0.5) / m as f64, [normal(), normal()])).collect();
    for (k, t) in grid.iter().enumerate() {
        let row = 2 + 2 * k;
        let s = (std::f64::consts::PI * t).sin();
        for i in 0..2 {
            for j in 0..2 {
                a[(row + i, j)] = gen.coupling * gen.w_scale * s * drift[i][j];
            }
        }
        for (r, (c, e)) in loads.iter().enumerate() {
            let bump = (-(t - c).powi(2) / (2.0 * gen.length_scale.powi(2))).exp();
            for i in 0..2 {
                a[(row + i, 2 + r)] = gen.w_scale * bump * e[i] / (m as f64).sqrt();
            }
        }
    }
    let sigma = &a * a.transpose();
    let basis = base.tangent_basis();
    let block = |r: usize, c: usize| -> Mat2<T> {
        [[T::lit(sigma[(r, c)]), T::lit(sigma[(r, c + 1)])], [T::lit(sigma[(r + 1, c)]), T::lit(sigma[(r + 1, c + 1)])]]
    };
    CovarianceBlocks {
        base,
        basis,
        kappa: block(0, 0),
        k: (0..n).map(|t| block(0, 2 + 2 * t)).collect(),
        big_k: (0..n * n).map(|idx| block(2 + 2 * (idx / n), 2 + 2 * (idx % n))).collect(),
    }
}

/// Composes every curve with an independent random warp of the given
/// strength (see [`random_warp`]); curve `i` draws from stream `i` of `seed`.
pub fn add_phase_variability<T: Real>(
    curves: &[Curve<T>],
    strength: f64,
    seed: u64,
) -> Result<(Vec<Curve<T>>, Vec<WarpingFunction<T>>)> {
    curves
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let mut rng = stream_rng(seed, i as u64);
            let g = random_warp(&mut rng, c.len(), strength);
            Ok((warp_curve(c, &g)?, g))
        })
        .collect::<Result<Vec<_>>>()
        .map(|pairs| pairs.into_iter().unzip())
}
