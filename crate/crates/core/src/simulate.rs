//! Synthetic curves: smooth random trajectories and random phase warps.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bundle::OptimizerOptions;
use crate::covariance::{add_phase_variability, gp_sample, random_blocks, stream_rng, BlockGenerator};
use crate::curves::{to_tsrvc, Curve, WarpingFunction};
use crate::error::Result;
use crate::scalar::Real;
use crate::sphere::{exp_sphere, SpherePoint};

/// Uniformly distributed point on the sphere.
pub fn random_point<T: Real, R: Rng + ?Sized>(rng: &mut R) -> SpherePoint<T> {
    loop {
        let v: [f64; 3] = [StandardNormal.sample(rng), StandardNormal.sample(rng), StandardNormal.sample(rng)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-6 {
            return SpherePoint::new(T::lit(v[0]), T::lit(v[1]), T::lit(v[2]));
        }
    }
}

/// Smooth curve `exp_{x₀}(u(t))` whose tangent-plane trace
/// `u(t) = a t + b sin(πt) + c (1 − cos(πt))/2` has a drift of norm `length`
/// and wiggles of relative size `wiggle`.
pub fn random_smooth_curve<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize, length: f64, wiggle: f64) -> Curve<T> {
    let x0 = random_point::<T, R>(rng);
    random_smooth_curve_at(rng, x0, n, length, wiggle)
}

pub fn random_smooth_curve_at<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    x0: SpherePoint<T>,
    n: usize,
    length: f64,
    wiggle: f64,
) -> Curve<T> {
    let dir: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let a = [length * dir.cos(), length * dir.sin()];
    let mut normal = || -> f64 { StandardNormal.sample(&mut *rng) };
    let b = [wiggle * length * normal(), wiggle * length * normal()];
    let c = [wiggle * length * normal(), wiggle * length * normal()];
    smooth_curve(x0, n, a, b, c)
}

/// Deterministic member of the family used by [`random_smooth_curve`].
pub fn smooth_curve<T: Real>(x0: SpherePoint<T>, n: usize, a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Curve<T> {
    let [e1, e2] = x0.tangent_basis();
    let pi = std::f64::consts::PI;
    Curve::from_fn(n, |t: T| {
        let t = t.as_f64();
        let coord = |i: usize| a[i] * t + b[i] * (pi * t).sin() + c[i] * (1.0 - (pi * t).cos()) / 2.0;
        let v = e1 * T::lit(coord(0)) + e2 * T::lit(coord(1));
        exp_sphere(&x0, &v).coords()
    })
    .expect("at least two samples")
}

/// Random warp `γ(t) = t + Σ_{j=1..3} a_j sin(jπt)/(jπ)` with `Σ|a_j| ≤ strength`,
/// so `γ̇ ≥ 1 − strength`. `strength` is capped at 0.95.
pub fn random_warp<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize, strength: f64) -> WarpingFunction<T> {
    let strength = strength.clamp(0.0, 0.95);
    let raw: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
    let total: f64 = raw.iter().map(|a| a.abs()).sum();
    let scale = if total > 0.0 { strength / total } else { 0.0 };
    let coeffs = raw.map(|a| a * scale);
    sine_warp(n, &coeffs)
}

pub fn sine_warp<T: Real>(n: usize, coeffs: &[f64]) -> WarpingFunction<T> {
    let pi = std::f64::consts::PI;
    WarpingFunction::from_fn(n, |t: T| {
        let t = t.as_f64();
        let g = t + coeffs.iter().enumerate().map(|(j, a)| {
            let k = (j + 1) as f64 * pi;
            a * (k * t).sin() / k
        }).sum::<f64>();
        T::lit(g.clamp(0.0, 1.0))
    })
    .expect("sine warps are monotone")
}

/// Seed of the sub-stream `name` derived from a master seed (FNV-1a over the
/// name, mixed with the seed).
pub fn substream_seed(seed: u64, name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes().chain(seed.to_le_bytes()) {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Shape of a simulated data set: `n_means` random mean curves, each with
/// `per_mean` Gaussian samples around it, optionally time-warped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimulationParams {
    pub n_means: usize,
    pub per_mean: usize,
    pub grid: usize,
    pub warp_strength: f64,
    pub mean_length: f64,
    pub wiggle: f64,
    pub blocks: BlockGenerator,
}

impl Default for SimulationParams {
    fn default() -> Self {
        Self {
            n_means: 8,
            per_mean: 10,
            grid: 200,
            warp_strength: 0.5,
            mean_length: 1.0,
            wiggle: 0.3,
            blocks: BlockGenerator::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulatedSet<T> {
    pub means: Vec<Curve<T>>,
    pub curves: Vec<Curve<T>>,
    /// Index of the generating mean for every curve.
    pub labels: Vec<usize>,
    /// Warps applied to the curves; `None` when the strength is zero.
    pub warps: Option<Vec<WarpingFunction<T>>>,
}

/// Draws a data set from the `"means"`, `"blocks"`, `"samples"` and `"warps"`
/// sub-streams of `seed`.
pub fn simulate_design<T: Real>(params: &SimulationParams, seed: u64, opts: &OptimizerOptions<T>) -> Result<SimulatedSet<T>> {
    let mut mean_rng = stream_rng(substream_seed(seed, "means"), 0);
    let means: Vec<Curve<T>> =
        (0..params.n_means).map(|_| random_smooth_curve(&mut mean_rng, params.grid, params.mean_length, params.wiggle)).collect();
    let mut curves = Vec::with_capacity(params.n_means * params.per_mean);
    let mut labels = Vec::with_capacity(curves.capacity());
    for (m, mean) in means.iter().enumerate() {
        let rep = to_tsrvc(mean)?;
        let mut block_rng = stream_rng(substream_seed(seed, "blocks"), m as u64);
        let blocks = random_blocks(rep.start, params.grid, &params.blocks, &mut block_rng);
        let samples = gp_sample(&rep, &blocks, params.per_mean, substream_seed(seed, &format!("samples/{m}")), opts)?;
        curves.extend(samples);
        labels.extend(std::iter::repeat_n(m, params.per_mean));
    }
    let warps = if params.warp_strength > 0.0 {
        let (warped, warps) = add_phase_variability(&curves, params.warp_strength, substream_seed(seed, "warps"))?;
        curves = warped;
        Some(warps)
    } else {
        None
    };
    Ok(SimulatedSet { means, curves, labels, warps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn warps_are_valid_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let g: WarpingFunction<f64> = random_warp(&mut rng, 100, 0.6);
            let d = g.derivative();
            assert!(d.iter().all(|v| *v > 0.35));
            assert_eq!(g.values()[0], 0.0);
            assert_eq!(g.values()[99], 1.0);
        }
    }

    #[test]
    fn design_shape_and_determinism() {
        let params = SimulationParams { n_means: 2, per_mean: 3, grid: 30, ..Default::default() };
        let opts = OptimizerOptions::default();
        let a = simulate_design::<f64>(&params, 9, &opts).unwrap();
        assert_eq!(a.curves.len(), 6);
        assert_eq!(a.labels, vec![0, 0, 0, 1, 1, 1]);
        assert_eq!(a.warps.as_ref().unwrap().len(), 6);
        assert_eq!(a, simulate_design::<f64>(&params, 9, &opts).unwrap());
        let still = simulate_design::<f64>(&SimulationParams { warp_strength: 0.0, ..params }, 9, &opts).unwrap();
        assert!(still.warps.is_none());
        assert_ne!(substream_seed(1, "means"), substream_seed(1, "warps"));
        assert_eq!(SimulationParams::default().n_means * SimulationParams::default().per_mean, 80);
    }

    #[test]
    fn smooth_curve_starts_at_base() {
        let x0 = SpherePoint::new(0.0, 0.0, 1.0);
        let c: Curve<f64> = smooth_curve(x0, 50, [1.0, 0.0], [0.0, 0.2], [0.1, 0.0]);
        assert!(c.start().coords().max_abs_diff(&x0.coords()) < 1e-15);
        assert!((c.samples()[49].distance(&x0) - 1.1).abs() < 1e-12);
    }
}
