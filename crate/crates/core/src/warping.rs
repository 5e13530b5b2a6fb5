//! Dynamic-programming time alignment and the amplitude geodesic, found by
//! alternating alignment with the tilt search.

use crate::bundle::{optimal_theta_tsrvc, OptimizerOptions, ThetaObjective};
use crate::curves::{to_tsrvc, trapezoid_weights, warp_curve, Curve, WarpingFunction};
use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::scalar::Real;
use crate::sphere::arc_between;

/// Lattice used by [`dp_align`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DpOptions {
    /// Number of lattice nodes per axis; `None` uses the curve grid.
    pub grid_size: Option<usize>,
    /// Moves `(i, j)` with `1 ≤ i, j ≤ max_slope` and `gcd(i, j) = 1`.
    pub max_slope: usize,
}

impl Default for DpOptions {
    fn default() -> Self {
        Self { grid_size: None, max_slope: 7 }
    }
}

impl DpOptions {
    pub fn moves(&self) -> Vec<(usize, usize)> {
        let k = self.max_slope.max(1);
        let mut out = Vec::new();
        for di in 1..=k {
            for dj in 1..=k {
                if gcd(di, dj) == 1 {
                    out.push((di, dj));
                }
            }
        }
        out
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

fn lerp_index<T: Real>(field: &[Vec3<T>], tau: T) -> Vec3<T> {
    let last = field.len() - 1;
    let lo = tau.floor().to_usize().unwrap_or(0).min(last);
    if lo == last {
        return field[last];
    }
    let f = tau - T::count(lo);
    field[lo] * (T::one() - f) + field[lo + 1] * f
}

/// Cost of the straight lattice segment `(i, j) → (i + di, j + dj)`, summed
/// over destination samples `i ≤ k < i + di` (also `k = n − 1` when the
/// segment ends at the final corner).
pub fn segment_cost<T: Real>(
    src: &[Vec3<T>],
    dst: &[Vec3<T>],
    weights: &[T],
    (i, j): (usize, usize),
    (di, dj): (usize, usize),
) -> T {
    let n = dst.len();
    let end = if i + di == n - 1 && j + dj == n - 1 { i + di } else { i + di - 1 };
    let slope = T::count(dj) / T::count(di);
    let scale = slope.sqrt();
    let mut cost = T::zero();
    for k in i..=end {
        let tau = T::count(j) + T::count(k - i) * slope;
        let d = lerp_index(src, tau) * scale - dst[k];
        cost = cost + weights[k] * d.norm_sq();
    }
    cost
}

fn resample_field<T: Real>(field: &[Vec3<T>], n: usize) -> Vec<Vec3<T>> {
    if field.len() == n {
        return field.to_vec();
    }
    let scale = T::count(field.len() - 1) / T::count(n - 1);
    (0..n).map(|k| lerp_index(field, T::count(k) * scale)).collect()
}

/// Warp `γ` and lattice cost of the best monotone path aligning `src ∘ γ`
/// (with the `√γ̇` factor) to `dst`.
pub fn dp_align_with_cost<T: Real>(src: &[Vec3<T>], dst: &[Vec3<T>], opts: &DpOptions) -> Result<(WarpingFunction<T>, T)> {
    if src.len() != dst.len() {
        return Err(Error::GridMismatch(src.len(), dst.len()));
    }
    let full = dst.len();
    let n = opts.grid_size.unwrap_or(full).min(full);
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let src = resample_field(src, n);
    let dst = resample_field(dst, n);
    let weights = trapezoid_weights::<T>(n);
    let moves = opts.moves();

    let mut cost = vec![T::infinity(); n * n];
    let mut pred: Vec<Option<usize>> = vec![None; n * n];
    cost[0] = T::zero();
    for i in 0..n {
        for j in 0..n {
            let here = cost[i * n + j];
            if !here.is_finite() {
                continue;
            }
            for (m, &(di, dj)) in moves.iter().enumerate() {
                let (ni, nj) = (i + di, j + dj);
                if ni >= n || nj >= n {
                    continue;
                }
                let cand = here + segment_cost(&src, &dst, &weights, (i, j), (di, dj));
                if cand < cost[ni * n + nj] {
                    cost[ni * n + nj] = cand;
                    pred[ni * n + nj] = Some(m);
                }
            }
        }
    }
    let total = cost[n * n - 1];

    let mut nodes = vec![(n - 1, n - 1)];
    let (mut i, mut j) = (n - 1, n - 1);
    while let Some(m) = pred[i * n + j] {
        let (di, dj) = moves[m];
        i -= di;
        j -= dj;
        nodes.push((i, j));
    }
    nodes.reverse();
    debug_assert_eq!(nodes[0], (0, 0));

    let mut lattice = vec![T::zero(); n];
    for pair in nodes.windows(2) {
        let ((i0, j0), (i1, j1)) = (pair[0], pair[1]);
        for (k, slot) in lattice.iter_mut().enumerate().take(i1 + 1).skip(i0) {
            let tau = T::count(j0) + T::count(k - i0) * T::count(j1 - j0) / T::count(i1 - i0);
            *slot = tau / T::count(n - 1);
        }
    }
    let values = if n == full {
        lattice
    } else {
        let scale = T::count(n - 1) / T::count(full - 1);
        (0..full)
            .map(|k| {
                let tau = T::count(k) * scale;
                let lo = tau.floor().to_usize().unwrap_or(0).min(n - 2);
                let f = tau - T::count(lo);
                lattice[lo] * (T::one() - f) + lattice[lo + 1] * f
            })
            .collect()
    };
    Ok((WarpingFunction::new(values)?, total))
}

/// Warp `γ` minimizing `Σ_k w_k |src(γ(t_k)) √γ̇ − dst(t_k)|²` over lattice paths.
pub fn dp_align<T: Real>(src: &[Vec3<T>], dst: &[Vec3<T>], opts: &DpOptions) -> Result<WarpingFunction<T>> {
    Ok(dp_align_with_cost(src, dst, opts)?.0)
}

/// Outcome of the amplitude geodesic search between `p0` and `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentResult<T> {
    pub theta_star: T,
    pub gamma_star: WarpingFunction<T>,
    pub dist_sq: T,
    pub iterations: usize,
    pub converged: bool,
    /// Best squared distance after each round, starting with the unwarped value.
    pub trace: Vec<T>,
}

/// Options of the alternating search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlignOptions<T> {
    pub optimizer: OptimizerOptions<T>,
    pub dp: DpOptions,
    pub max_rounds: usize,
}

impl<T: Real> Default for AlignOptions<T> {
    fn default() -> Self {
        Self { optimizer: OptimizerOptions::default(), dp: DpOptions::default(), max_rounds: 20 }
    }
}

/// Alternates `γ ← DP` at fixed `θ` with `θ ← optimal tilt` at fixed `γ`,
/// warping `p0` only. Only rounds that lower the squared distance are kept.
pub fn amplitude_geodesic<T: Real>(p0: &Curve<T>, p: &Curve<T>, opts: &AlignOptions<T>) -> Result<AlignmentResult<T>> {
    if p0.len() != p.len() {
        return Err(Error::GridMismatch(p0.len(), p.len()));
    }
    let r0 = to_tsrvc(p0)?;
    let r = to_tsrvc(p)?;
    let start = optimal_theta_tsrvc(&r0, &r, &opts.optimizer)?;
    let mut best = AlignmentResult {
        theta_star: start.theta,
        gamma_star: WarpingFunction::identity(p0.len()),
        dist_sq: start.dist_sq,
        iterations: 0,
        converged: start.converged,
        trace: vec![start.dist_sq],
    };
    let mut theta = start.theta;
    for round in 1..=opts.max_rounds {
        best.iterations = round;
        let transport = arc_between(&r0.start, &r.start, theta).transport_matrix(T::one());
        let moved: Vec<_> = r0.field.iter().map(|q| transport.apply(q)).collect();
        let gamma = dp_align(&moved, &r.field, &opts.dp)?;
        let warped = to_tsrvc(&warp_curve(p0, &gamma)?)?;
        let fit = optimal_theta_tsrvc(&warped, &r, &opts.optimizer.with_theta0(theta))?;
        let improved = fit.dist_sq < best.dist_sq;
        if improved {
            best.theta_star = fit.theta;
            best.gamma_star = gamma;
            best.dist_sq = fit.dist_sq;
            best.converged = fit.converged;
            best.trace.push(fit.dist_sq);
        }
        let settled = (fit.theta - theta).abs() < T::lit(1e-9);
        theta = fit.theta;
        if !improved || settled {
            break;
        }
    }
    Ok(best)
}

/// `√` of the amplitude geodesic's squared distance.
pub fn dist_amplitude<T: Real>(p0: &Curve<T>, p: &Curve<T>, opts: &AlignOptions<T>) -> Result<T> {
    Ok(amplitude_geodesic(p0, p, opts)?.dist_sq.sqrt())
}

/// Squared distance between `p0 ∘ γ` and `p` along the arc with tilt `theta`.
pub fn warped_dist_sq<T: Real>(p0: &Curve<T>, p: &Curve<T>, gamma: &WarpingFunction<T>, theta: T) -> Result<T> {
    let warped = to_tsrvc(&warp_curve(p0, gamma)?)?;
    Ok(ThetaObjective::new(&warped, &to_tsrvc(p)?)?.value(theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{dist_beta_squared, dist_bundle};
    use crate::curves::warp_tsrvc;
    use crate::simulate::{random_smooth_curve, random_warp};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec3<f64>> {
        (0..n).map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0)).collect()
    }

    fn brute_force(src: &[Vec3<f64>], dst: &[Vec3<f64>], moves: &[(usize, usize)]) -> f64 {
        let n = dst.len();
        let w = trapezoid_weights::<f64>(n);
        fn walk(
            node: (usize, usize),
            acc: f64,
            ctx: &(&[Vec3<f64>], &[Vec3<f64>], &[f64], &[(usize, usize)]),
            best: &mut f64,
            paths: &mut usize,
        ) {
            let n = ctx.1.len();
            if node == (n - 1, n - 1) {
                *paths += 1;
                if acc < *best {
                    *best = acc;
                }
                return;
            }
            for &(di, dj) in ctx.3 {
                if node.0 + di < n && node.1 + dj < n {
                    let c = segment_cost(ctx.0, ctx.1, ctx.2, node, (di, dj));
                    walk((node.0 + di, node.1 + dj), acc + c, ctx, best, paths);
                }
            }
        }
        let mut best = f64::INFINITY;
        let mut paths = 0;
        walk((0, 0), 0.0, &(src, dst, &w, moves), &mut best, &mut paths);
        assert!(paths > 100);
        best
    }

    #[test]
    fn moves_are_coprime() {
        let m = DpOptions { max_slope: 3, ..Default::default() }.moves();
        assert_eq!(m.len(), 7);
        assert_eq!(DpOptions::default().moves().len(), 35);
        assert!(!m.contains(&(2, 2)));
        assert_eq!(DpOptions { max_slope: 1, ..Default::default() }.moves(), vec![(1, 1)]);
    }

    #[test]
    fn dp_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let src = random_field(&mut rng, 10);
            let dst = random_field(&mut rng, 10);
            let opts = DpOptions::default();
            let (_, cost) = dp_align_with_cost(&src, &dst, &opts).unwrap();
            assert_eq!(cost, brute_force(&src, &dst, &opts.moves()));
        }
    }

    #[test]
    fn identical_fields_give_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_field(&mut rng, 40);
        let (g, cost) = dp_align_with_cost(&f, &f, &DpOptions::default()).unwrap();
        assert_eq!(cost, 0.0);
        assert!(g.sup_distance(&WarpingFunction::identity(40)) < 1e-15);
    }

    #[test]
    fn recovers_lattice_warp() {
        let n = 61;
        let knots = [(0usize, 0usize), (20, 10), (40, 40), (60, 60)];
        let values: Vec<f64> = (0..n)
            .map(|k| {
                let seg = knots.windows(2).find(|w| k <= w[1].0).unwrap();
                let (a, b) = (seg[0], seg[1]);
                (a.1 as f64 + (k - a.0) as f64 * (b.1 - a.1) as f64 / (b.0 - a.0) as f64) / 60.0
            })
            .collect();
        let g0 = WarpingFunction::new(values).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = random_smooth_curve::<f64, _>(&mut rng, n, 1.2, 0.4);
        let dst = to_tsrvc(&c).unwrap();
        let src = warp_tsrvc(&dst, &g0).unwrap();
        let g = dp_align(&src.field, &dst.field, &DpOptions::default()).unwrap();
        let cell = 1.0 / 60.0;
        assert!(g.sup_distance(&g0.inverse()) <= cell + 1e-12, "{}", g.sup_distance(&g0.inverse()));
    }

    #[test]
    fn coarse_lattice_produces_valid_warp() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_field(&mut rng, 100);
        let b = random_field(&mut rng, 100);
        let g = dp_align(&a, &b, &DpOptions { grid_size: Some(25), max_slope: 3 }).unwrap();
        assert_eq!(g.len(), 100);
        assert!(g.values().windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn same_orbit_pair_collapses() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p0 = random_smooth_curve::<f64, _>(&mut rng, 200, 1.2, 0.3);
        let g0 = random_warp::<f64, _>(&mut rng, 200, 0.5);
        let p = warp_curve(&p0, &g0).unwrap();
        let res = amplitude_geodesic(&p0, &p, &AlignOptions::default()).unwrap();
        assert!(res.dist_sq <= 1e-3, "{}", res.dist_sq);
        assert!(res.gamma_star.sup_distance(&g0) <= 2.0 / 199.0, "{}", res.gamma_star.sup_distance(&g0));
        let direct = dist_beta_squared(&warp_curve(&p0, &res.gamma_star).unwrap(), &p, res.theta_star).unwrap();
        assert!((direct - res.dist_sq).abs() < 1e-8);
    }

    #[test]
    fn amplitude_never_exceeds_bundle_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..4 {
            let a = random_smooth_curve::<f64, _>(&mut rng, 80, 1.0, 0.3);
            let b = random_smooth_curve::<f64, _>(&mut rng, 80, 1.0, 0.3);
            let opts = AlignOptions::default();
            let res = amplitude_geodesic(&a, &b, &opts).unwrap();
            let bundle = dist_bundle(&a, &b, &opts.optimizer).unwrap();
            assert!(res.dist_sq <= bundle * bundle + 1e-8);
            assert!(res.trace.windows(2).all(|w| w[1] <= w[0]));
            assert!((warped_dist_sq(&a, &b, &res.gamma_star, res.theta_star).unwrap() - res.dist_sq).abs() < 1e-8);
        }
    }
}
