//! Sample Fréchet means on the bundle and on its quotient by time warping.

use std::f64::consts::FRAC_PI_2;

use log::warn;
use rayon::prelude::*;

use crate::bundle::{fd_derivative, OptimizerOptions, StepControl};
use crate::curves::{from_tsrvc, to_tsrvc, trapezoid_weights, warp_curve, Curve, Tsrvc, WarpingFunction};
use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3};
use crate::scalar::{clamp, Real};
use crate::sphere::{arc_between, exp_sphere, SpherePoint, TangentVector};
use crate::tolerances::TOL;
use crate::warping::{dp_align, DpOptions};

/// Step sizes and tolerances of the mean iterations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanOptions<T> {
    /// `λ₁`, `ε₁` and the iteration cap of the joint tilt descent.
    pub theta: OptimizerOptions<T>,
    /// `λ₂`.
    pub x_step: T,
    /// `ε₂`.
    pub x_tol: T,
    pub max_iter: usize,
    pub dp: DpOptions,
    /// Alignment rounds per tilt optimization in the amplitude mean.
    pub max_rounds: usize,
}

impl<T: Real> Default for MeanOptions<T> {
    fn default() -> Self {
        Self {
            theta: OptimizerOptions::default(),
            x_step: T::lit(0.1),
            x_tol: T::lit(1e-5),
            max_iter: 200,
            dp: DpOptions::default(),
            max_rounds: 20,
        }
    }
}

impl<T: Real> MeanOptions<T> {
    pub fn validate(&self) -> Result<()> {
        self.theta.validate()?;
        if !(self.x_step > T::zero()) || !(self.x_tol > T::zero()) || self.max_iter == 0 {
            return Err(Error::InvalidOption("mean step, tolerance and max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeanResult<T> {
    pub mean: Curve<T>,
    pub mean_tsrvc: Tsrvc<T>,
    pub thetas: Vec<T>,
    pub gammas: Option<Vec<WarpingFunction<T>>>,
    /// The inputs composed with `gammas`, when aligned.
    pub aligned: Option<Vec<Curve<T>>>,
    pub frechet_value: T,
    /// `F_n` after every accepted step, starting at the initialization.
    pub trace: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

/// Pointwise average of fields sharing one base point.
pub fn mean_tsrvc<T: Real>(fields: &[Tsrvc<T>]) -> Result<Tsrvc<T>> {
    let first = fields.first().ok_or(Error::TooFewCurves { needed: 1, got: 0 })?;
    for f in fields {
        if f.len() != first.len() {
            return Err(Error::GridMismatch(first.len(), f.len()));
        }
        if f.start.coords().max_abs_diff(&first.start.coords()) > T::tol(1e-9) {
            return Err(Error::BaseMismatch);
        }
    }
    let inv = T::one() / T::count(fields.len());
    let field = (0..first.len())
        .map(|k| fields.iter().fold(Vec3::zero(), |acc, f| acc + f.field[k]) * inv)
        .collect();
    Ok(Tsrvc::new(first.start, field))
}

/// `F_n` as a function of the mean start `x` and the tilts, for fixed fields.
///
/// With `G_ji = ∫ q_j q_iᵀ`, `n·F_n = Σ ℓ_i² + Σ E_i − (1/n) Σ_i ⟨P_i, Σ_j P_j G_ji⟩_F`.
#[derive(Clone, Debug)]
pub struct FrechetProblem<T> {
    reps: Vec<Tsrvc<T>>,
    energies: Vec<T>,
    gram: Vec<Mat3<T>>,
}

impl<T: Real> FrechetProblem<T> {
    pub fn new(reps: Vec<Tsrvc<T>>) -> Result<Self> {
        let n = reps.len();
        if n == 0 {
            return Err(Error::TooFewCurves { needed: 1, got: 0 });
        }
        let len = reps[0].len();
        if let Some(bad) = reps.iter().find(|r| r.len() != len) {
            return Err(Error::GridMismatch(len, bad.len()));
        }
        let w = trapezoid_weights::<T>(len);
        let energies = reps.iter().map(|r| r.energy()).collect();
        let gram = (0..n * n)
            .into_par_iter()
            .map(|idx| {
                let (j, i) = (idx / n, idx % n);
                let mut g = Mat3::zero();
                for k in 0..len {
                    g = g.add(&Mat3::outer(&reps[j].field[k], &reps[i].field[k]).scaled(w[k]));
                }
                g
            })
            .collect();
        Ok(Self { reps, energies, gram })
    }

    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn reps(&self) -> &[Tsrvc<T>] {
        &self.reps
    }

    fn arcs(&self, x: &SpherePoint<T>, thetas: &[T]) -> Vec<(T, Mat3<T>)> {
        self.reps
            .iter()
            .zip(thetas)
            .map(|(r, t)| {
                let arc = arc_between(&r.start, x, *t);
                (arc.length(), arc.transport_matrix(T::one()))
            })
            .collect()
    }

    /// `C_i = Σ_{j≠i} P_j G_ji`.
    fn couplings(&self, arcs: &[(T, Mat3<T>)]) -> Vec<Mat3<T>> {
        let n = self.len();
        (0..n)
            .map(|i| {
                (0..n).filter(|j| *j != i).fold(Mat3::zero(), |acc, j| acc.add(&arcs[j].1.matmul(&self.gram[j * n + i])))
            })
            .collect()
    }

    fn value_from(&self, arcs: &[(T, Mat3<T>)]) -> T {
        let n = self.len();
        let nt = T::count(n);
        let mut total: T = arcs.iter().map(|(l, _)| *l * *l).sum::<T>() + self.energies.iter().copied().sum::<T>();
        let mut cross = T::zero();
        for i in 0..n {
            let c = (0..n).fold(Mat3::zero(), |acc, j| acc.add(&arcs[j].1.matmul(&self.gram[j * n + i])));
            cross = cross + arcs[i].1.frobenius_dot(&c);
        }
        total = total - cross / nt;
        (total / nt).max(T::zero())
    }

    pub fn value(&self, x: &SpherePoint<T>, thetas: &[T]) -> T {
        self.value_from(&self.arcs(x, thetas))
    }

    /// Components `∂d²_i/∂θ_i` with the mean field held fixed (equal to
    /// `n ∂F_n/∂θ_i`), by central differences.
    pub fn theta_gradient(&self, x: &SpherePoint<T>, thetas: &[T]) -> Vec<T> {
        let arcs = self.arcs(x, thetas);
        let couplings = self.couplings(&arcs);
        let two_over_n = T::lit(2.0) / T::count(self.len());
        let half_pi = T::lit(FRAC_PI_2);
        self.reps
            .iter()
            .zip(thetas)
            .zip(&couplings)
            .map(|((r, t), c)| {
                let f = |th: T| {
                    let arc = arc_between(&r.start, x, th);
                    arc.length().powi(2) - two_over_n * arc.transport_matrix(T::one()).frobenius_dot(c)
                };
                fd_derivative(f, *t, -half_pi, half_pi, T::lit(TOL.fd_step))
            })
            .collect()
    }

    /// Riemannian gradient of `F_n` in `x` at fixed tilts, by central
    /// differences along the tangent basis.
    pub fn x_gradient(&self, x: &SpherePoint<T>, thetas: &[T]) -> TangentVector<T> {
        let h = T::lit(TOL.fd_step);
        let grad = x.tangent_basis().iter().fold(Vec3::zero(), |acc, e| {
            let plus = self.value(&exp_sphere(x, &(*e * h)), thetas);
            let minus = self.value(&exp_sphere(x, &(*e * -h)), thetas);
            acc + *e * ((plus - minus) / (h + h))
        });
        TangentVector::new(*x, grad)
    }

    /// `(1/n) Σ P_i q_i` at `x`.
    pub fn mean_field(&self, x: &SpherePoint<T>, thetas: &[T]) -> Tsrvc<T> {
        let arcs = self.arcs(x, thetas);
        let inv = T::one() / T::count(self.len());
        let len = self.reps[0].len();
        let field = (0..len)
            .map(|k| self.reps.iter().zip(&arcs).fold(Vec3::zero(), |acc, (r, (_, p))| acc + p.apply(&r.field[k])) * inv)
            .collect();
        Tsrvc::new(*x, field)
    }

    /// Squared distance of curve `i` to the field `mean` at `x` along its arc.
    pub fn term(&self, i: usize, x: &SpherePoint<T>, theta: T, mean: &[Vec3<T>]) -> T {
        term_for(&self.reps[i], x, theta, mean)
    }
}

fn term_for<T: Real>(r: &Tsrvc<T>, x: &SpherePoint<T>, theta: T, mean: &[Vec3<T>]) -> T {
    let arc = arc_between(&r.start, x, theta);
    let p = arc.transport_matrix(T::one());
    let w = trapezoid_weights::<T>(mean.len());
    let field: T = r.field.iter().zip(mean).zip(&w).map(|((q, m), w)| (p.apply(q) - *m).norm_sq() * *w).sum();
    arc.length().powi(2) + field
}

/// Result of the joint tilt descent.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaDescent<T> {
    pub thetas: Vec<T>,
    pub value: T,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<T>,
}

fn projected_norm<T: Real>(thetas: &[T], grad: &[T]) -> T {
    let half_pi = T::lit(FRAC_PI_2);
    grad.iter()
        .zip(thetas)
        .map(|(g, t)| {
            let blocked = (*t <= -half_pi && *g > T::zero()) || (*t >= half_pi && *g < T::zero());
            if blocked { T::zero() } else { *g * *g }
        })
        .sum::<T>()
        .sqrt()
}

/// Joint gradient descent on the tilts with backtracking; iterates are
/// clamped to `[−π/2, π/2]` and a step is kept only if `F_n` decreases.
pub fn descend_thetas<T: Real>(
    problem: &FrechetProblem<T>,
    x: &SpherePoint<T>,
    start: &[T],
    opts: &OptimizerOptions<T>,
) -> ThetaDescent<T> {
    let half_pi = T::lit(FRAC_PI_2);
    let mut thetas: Vec<T> = start.iter().map(|t| clamp(*t, -half_pi, half_pi)).collect();
    let mut value = problem.value(x, &thetas);
    let mut trace = vec![value];
    let mut step = StepControl::new(opts.step);
    let mut converged = false;
    let mut iterations = 0;
    let mut grad = problem.theta_gradient(x, &thetas);
    while iterations < opts.max_iter {
        if projected_norm(&thetas, &grad) < opts.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let cand: Vec<T> = thetas.iter().zip(&grad).map(|(t, g)| clamp(*t - step.lambda * *g, -half_pi, half_pi)).collect();
        let cand_value = problem.value(x, &cand);
        if cand_value < value {
            thetas = cand;
            value = cand_value;
            trace.push(value);
            grad = problem.theta_gradient(x, &thetas);
            step.accept();
        } else if !step.reject() {
            break;
        }
    }
    if !converged && projected_norm(&thetas, &grad) < opts.tol {
        converged = true;
    }
    ThetaDescent { thetas, value, iterations, converged, trace }
}

fn representations<T: Real>(curves: &[Curve<T>]) -> Result<Vec<Tsrvc<T>>> {
    curves.par_iter().map(to_tsrvc).collect()
}

/// `F_n(x, θ)` for the given curves.
pub fn frechet_function<T: Real>(curves: &[Curve<T>], x: &SpherePoint<T>, thetas: &[T]) -> Result<T> {
    check_thetas(curves.len(), thetas)?;
    Ok(FrechetProblem::new(representations(curves)?)?.value(x, thetas))
}

/// Tilts minimizing `F_n` at fixed `x`, starting from zero.
pub fn optimal_thetas<T: Real>(curves: &[Curve<T>], x: &SpherePoint<T>, opts: &OptimizerOptions<T>) -> Result<ThetaDescent<T>> {
    opts.validate()?;
    let problem = FrechetProblem::new(representations(curves)?)?;
    Ok(descend_thetas(&problem, x, &vec![opts.theta0; curves.len()], opts))
}

pub fn grad_x_frechet<T: Real>(curves: &[Curve<T>], x: &SpherePoint<T>, thetas: &[T]) -> Result<TangentVector<T>> {
    check_thetas(curves.len(), thetas)?;
    Ok(FrechetProblem::new(representations(curves)?)?.x_gradient(x, thetas))
}

fn check_thetas<T>(n: usize, thetas: &[T]) -> Result<()> {
    if thetas.len() != n {
        return Err(Error::InvalidOption(format!("expected {n} tilts, got {}", thetas.len())));
    }
    Ok(())
}

/// Normalized sum of the start points, or the first start when the sum vanishes.
pub fn initial_base<T: Real>(starts: &[SpherePoint<T>]) -> SpherePoint<T> {
    let sum = starts.iter().fold(Vec3::zero(), |acc, s| acc + s.coords());
    if sum.norm() < T::lit(1e-9) {
        warn!("start points sum to zero; initializing the mean at the first start");
        return starts[0];
    }
    SpherePoint::from_vec(sum).expect("nonzero sum")
}

/// Sample Fréchet mean on the bundle: alternate the joint tilt descent with
/// gradient steps `x ← exp_x(−λ₂ ∇_x F_n)`.
pub fn frechet_mean_bundle<T: Real>(curves: &[Curve<T>], opts: &MeanOptions<T>) -> Result<MeanResult<T>> {
    opts.validate()?;
    let problem = FrechetProblem::new(representations(curves)?)?;
    let starts: Vec<_> = problem.reps().iter().map(|r| r.start).collect();
    let mut x = initial_base(&starts);
    let mut state = descend_thetas(&problem, &x, &vec![opts.theta.theta0; curves.len()], &opts.theta);
    let mut trace = vec![state.value];
    let mut step = StepControl::new(opts.x_step);
    let mut converged = false;
    let mut iterations = 0;
    let mut grad = problem.x_gradient(&x, &state.thetas);
    while iterations < opts.max_iter {
        if grad.norm() < opts.x_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let cand_x = exp_sphere(&x, &(grad.vec * -step.lambda));
        let cand = descend_thetas(&problem, &cand_x, &state.thetas, &opts.theta);
        if cand.value < state.value {
            x = cand_x;
            state = cand;
            trace.push(state.value);
            grad = problem.x_gradient(&x, &state.thetas);
            step.accept();
        } else if !step.reject() {
            break;
        }
    }
    let mean_tsrvc = problem.mean_field(&x, &state.thetas);
    Ok(MeanResult {
        mean: from_tsrvc(&mean_tsrvc),
        mean_tsrvc,
        thetas: state.thetas,
        gammas: None,
        aligned: None,
        frechet_value: state.value,
        trace,
        iterations,
        converged: converged && state.converged,
    })
}

/// State of the aligned tilt optimization.
#[derive(Clone, Debug)]
pub struct AlignedThetas<T> {
    pub thetas: Vec<T>,
    pub gammas: Vec<WarpingFunction<T>>,
    pub aligned: Vec<Curve<T>>,
    pub problem: FrechetProblem<T>,
    pub value: T,
    pub converged: bool,
    pub trace: Vec<T>,
}

/// Tilts and warps at fixed `x`: the joint tilt descent alternates with a
/// Procrustes step aligning every curve to the current mean field. A new warp
/// is kept only if it lowers that curve's distance to the mean.
pub fn aligned_optimal_thetas<T: Real>(
    curves: &[Curve<T>],
    originals: &[Tsrvc<T>],
    x: &SpherePoint<T>,
    thetas: &[T],
    gammas: &[WarpingFunction<T>],
    opts: &MeanOptions<T>,
) -> Result<AlignedThetas<T>> {
    let mut gammas = gammas.to_vec();
    let mut aligned: Vec<Curve<T>> =
        curves.par_iter().zip(&gammas).map(|(c, g)| warp_curve(c, g)).collect::<Result<_>>()?;
    let mut problem = FrechetProblem::new(representations(&aligned)?)?;
    let mut state = descend_thetas(&problem, x, thetas, &opts.theta);
    let mut trace = state.trace.clone();
    for _ in 0..opts.max_rounds {
        let mean = problem.mean_field(x, &state.thetas).field;
        let proposals: Vec<Option<(WarpingFunction<T>, Curve<T>, Tsrvc<T>)>> = (0..curves.len())
            .into_par_iter()
            .map(|i| -> Result<_> {
                let theta = state.thetas[i];
                let p = arc_between(&originals[i].start, x, theta).transport_matrix(T::one());
                let moved: Vec<_> = originals[i].field.iter().map(|q| p.apply(q)).collect();
                let gamma = dp_align(&moved, &mean, &opts.dp)?;
                let warped = warp_curve(&curves[i], &gamma)?;
                let rep = to_tsrvc(&warped)?;
                let old = problem.term(i, x, theta, &mean);
                let new = term_for(&rep, x, theta, &mean);
                Ok((new < old - T::tol(1e-12)).then_some((gamma, warped, rep)))
            })
            .collect::<Result<_>>()?;
        if proposals.iter().all(Option::is_none) {
            break;
        }
        let mut reps = problem.reps().to_vec();
        for (i, prop) in proposals.into_iter().enumerate() {
            if let Some((g, c, r)) = prop {
                gammas[i] = g;
                aligned[i] = c;
                reps[i] = r;
            }
        }
        problem = FrechetProblem::new(reps)?;
        let before = state.value;
        state = descend_thetas(&problem, x, &state.thetas, &opts.theta);
        trace.extend(state.trace.iter().copied());
        if before - state.value <= T::tol(1e-12) {
            break;
        }
    }
    Ok(AlignedThetas {
        thetas: state.thetas,
        gammas,
        aligned,
        value: state.value,
        converged: state.converged,
        problem,
        trace,
    })
}

/// Sample Fréchet mean on the quotient by time warping.
pub fn frechet_mean_amplitude<T: Real>(curves: &[Curve<T>], opts: &MeanOptions<T>) -> Result<MeanResult<T>> {
    opts.validate()?;
    let originals = representations(curves)?;
    let n = curves.len();
    let len = curves.first().map(Curve::len).ok_or(Error::TooFewCurves { needed: 1, got: 0 })?;
    let starts: Vec<_> = originals.iter().map(|r| r.start).collect();
    let mut x = initial_base(&starts);
    let identity = vec![WarpingFunction::identity(len); n];
    let mut state = aligned_optimal_thetas(curves, &originals, &x, &vec![opts.theta.theta0; n], &identity, opts)?;
    let mut trace = vec![state.value];
    let mut step = StepControl::new(opts.x_step);
    let mut converged = false;
    let mut iterations = 0;
    let mut grad = state.problem.x_gradient(&x, &state.thetas);
    while iterations < opts.max_iter {
        if grad.norm() < opts.x_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let cand_x = exp_sphere(&x, &(grad.vec * -step.lambda));
        let cand = aligned_optimal_thetas(curves, &originals, &cand_x, &state.thetas, &state.gammas, opts)?;
        if cand.value < state.value {
            x = cand_x;
            state = cand;
            trace.push(state.value);
            grad = state.problem.x_gradient(&x, &state.thetas);
            step.accept();
        } else if !step.reject() {
            break;
        }
    }
    let mean_tsrvc = state.problem.mean_field(&x, &state.thetas);
    Ok(MeanResult {
        mean: from_tsrvc(&mean_tsrvc),
        mean_tsrvc,
        thetas: state.thetas,
        gammas: Some(state.gammas),
        aligned: Some(state.aligned),
        frechet_value: state.value,
        trace,
        iterations,
        converged: converged && state.converged,
    })
}
