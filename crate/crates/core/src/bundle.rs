//! Geodesics on the bundle of representations `(x, q)`: distances along
//! circular base-curves, the optimal tilt search, geodesic paths, and the
//! exponential and inverse exponential maps.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use crate::curves::{from_tsrvc, l2_distance_sq, to_tsrvc, trapezoid_weights, Curve, Tsrvc};
use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3};
use crate::scalar::{clamp, Real};
use crate::sphere::{arc_between, arc_from_direction, CircularArc, SpherePoint, TangentVector};
use crate::tolerances::TOL;

/// Inputs of the tilt search: initial value, gradient step, accuracy and an
/// iteration cap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerOptions<T> {
    pub theta0: T,
    pub step: T,
    pub tol: T,
    pub max_iter: usize,
    /// Also descend from `{−π/4, 0, π/4}` and from the best point of a coarse
    /// scan, keeping the lowest result.
    pub multi_start: bool,
}

impl<T: Real> Default for OptimizerOptions<T> {
    fn default() -> Self {
        Self { theta0: T::zero(), step: T::lit(0.1), tol: T::lit(1e-5), max_iter: 200, multi_start: true }
    }
}

impl<T: Real> OptimizerOptions<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > T::zero()) {
            return Err(Error::InvalidOption("step must be positive".into()));
        }
        if !(self.tol > T::zero()) {
            return Err(Error::InvalidOption("tolerance must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidOption("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_theta0(mut self, theta0: T) -> Self {
        self.theta0 = theta0;
        self
    }
}

/// An element `(u, w)` of the tangent space at `(x, q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentElement<T> {
    pub u: TangentVector<T>,
    pub w: Vec<Vec3<T>>,
}

impl<T: Real> TangentElement<T> {
    pub fn new(u: TangentVector<T>, w: Vec<Vec3<T>>) -> Self {
        let base = u.base;
        Self { u, w: w.iter().map(|v| base.project(v)).collect() }
    }

    pub fn zero(base: SpherePoint<T>, n: usize) -> Self {
        Self { u: TangentVector::zero(base), w: vec![Vec3::zero(); n] }
    }

    pub fn base(&self) -> SpherePoint<T> {
        self.u.base
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { u: TangentVector { base: self.u.base, vec: self.u.vec * s }, w: self.w.iter().map(|v| *v * s).collect() }
    }

    pub fn norm_sq(&self) -> T {
        inner_product(self, self).expect("same base")
    }
}

/// `⟨u₁, u₂⟩ + ∫ ⟨w₁(t), w₂(t)⟩ dt`.
pub fn inner_product<T: Real>(a: &TangentElement<T>, b: &TangentElement<T>) -> Result<T> {
    if a.w.len() != b.w.len() || a.base().coords().max_abs_diff(&b.base().coords()) > T::tol(1e-12) {
        return Err(Error::BaseMismatch);
    }
    let w = trapezoid_weights::<T>(a.w.len());
    let field: T = a.w.iter().zip(&b.w).zip(&w).map(|((x, y), w)| x.dot(y) * *w).sum();
    Ok(a.u.vec.dot(&b.u.vec) + field)
}

fn check_grid<T: Real>(a: &Tsrvc<T>, b: &Tsrvc<T>) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(a.len(), b.len()));
    }
    Ok(())
}

/// Squared path length along the arc with tilt `theta`:
/// `ℓ² + ∫ |P q₀ − q|² dt`, evaluated sample by sample.
pub fn dist_beta_squared_tsrvc<T: Real>(r0: &Tsrvc<T>, r: &Tsrvc<T>, theta: T) -> Result<T> {
    check_grid(r0, r)?;
    let arc = arc_between(&r0.start, &r.start, theta);
    let p = arc.transport_matrix(T::one());
    let moved: Vec<_> = r0.field.iter().map(|q| p.apply(q)).collect();
    Ok(arc.length().powi(2) + l2_distance_sq(&moved, &r.field))
}

pub fn dist_beta_squared<T: Real>(p0: &Curve<T>, p: &Curve<T>, theta: T) -> Result<T> {
    dist_beta_squared_tsrvc(&to_tsrvc(p0)?, &to_tsrvc(p)?, theta)
}

/// `d²(θ)` for a fixed pair, reduced to constant cost per evaluation.
///
/// With `X = ∫ q q₀ᵀ dt`, the integral term is
/// `∫|q₀|² + ∫|q|² − 2 ⟨P, X⟩_F` because transport is a rotation.
#[derive(Clone, Debug)]
pub struct ThetaObjective<T> {
    pub x0: SpherePoint<T>,
    pub x: SpherePoint<T>,
    energy0: T,
    energy1: T,
    cross: Mat3<T>,
}

impl<T: Real> ThetaObjective<T> {
    pub fn new(r0: &Tsrvc<T>, r: &Tsrvc<T>) -> Result<Self> {
        check_grid(r0, r)?;
        let w = trapezoid_weights::<T>(r.len());
        let mut cross = Mat3::zero();
        for ((q0, q), w) in r0.field.iter().zip(&r.field).zip(&w) {
            cross = cross.add(&Mat3::outer(q, q0).scaled(*w));
        }
        Ok(Self { x0: r0.start, x: r.start, energy0: r0.energy(), energy1: r.energy(), cross })
    }

    pub fn arc(&self, theta: T) -> CircularArc<T> {
        arc_between(&self.x0, &self.x, theta)
    }

    /// Whether the endpoints coincide, making every tilt equivalent.
    pub fn is_degenerate(&self) -> bool {
        self.arc(T::zero()).is_degenerate()
    }

    pub fn value(&self, theta: T) -> T {
        let arc = self.arc(theta);
        self.value_on(&arc)
    }

    pub fn value_on(&self, arc: &CircularArc<T>) -> T {
        self.value_with(arc.length(), &arc.transport_matrix(T::one()))
    }

    /// `ℓ² + ∫|P q₀ − q|²` for an arbitrary base-curve length and transport.
    pub fn value_with(&self, length: T, transport: &Mat3<T>) -> T {
        let v = length.powi(2) + self.energy0 + self.energy1 - T::lit(2.0) * transport.frobenius_dot(&self.cross);
        v.max(T::zero())
    }

    pub fn gradient(&self, theta: T) -> T {
        let half_pi = T::lit(FRAC_PI_2);
        fd_derivative(|t| self.value(t), theta, -half_pi, half_pi, T::lit(TOL.fd_step))
    }
}

/// Step length of the descents: halved after a rejected step, doubled after
/// an accepted one, never above `1024 λ₀`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct StepControl<T> {
    pub lambda: T,
    max: T,
}

impl<T: Real> StepControl<T> {
    pub fn new(lambda: T) -> Self {
        Self { lambda, max: lambda * T::lit(1024.0) }
    }

    pub fn accept(&mut self) {
        self.lambda = (self.lambda + self.lambda).min(self.max);
    }

    /// Returns `false` once the step falls below the floor.
    pub fn reject(&mut self) -> bool {
        self.lambda = self.lambda * T::lit(0.5);
        self.lambda >= T::lit(TOL.min_step)
    }
}

/// Central finite difference, falling back to one-sided differences within
/// `h` of the interval ends.
pub(crate) fn fd_derivative<T: Real>(f: impl Fn(T) -> T, x: T, lo: T, hi: T, h: T) -> T {
    if x - h < lo {
        (f(x + h) - f(x)) / h
    } else if x + h > hi {
        (f(x) - f(x - h)) / h
    } else {
        (f(x + h) - f(x - h)) / (h + h)
    }
}

/// `∂d²/∂θ` by central finite differences.
pub fn grad_theta<T: Real>(p0: &Curve<T>, p: &Curve<T>, theta: T) -> Result<T> {
    Ok(ThetaObjective::new(&to_tsrvc(p0)?, &to_tsrvc(p)?)?.gradient(theta))
}

/// Outcome of a one-dimensional descent.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaFit<T> {
    pub theta: T,
    pub dist_sq: T,
    pub grad: T,
    pub iterations: usize,
    /// `false` when the iteration cap or step floor ended the search before
    /// the gradient fell below the tolerance.
    pub converged: bool,
    /// Objective value after every accepted step, starting with the initial value.
    pub trace: Vec<T>,
}

/// Gradient descent with backtracking on `[lo, hi]`: a step is accepted only
/// if it stays in the interval and strictly decreases `f`.
pub(crate) fn descend_1d<T: Real>(
    f: &impl Fn(T) -> T,
    x0: T,
    lo: T,
    hi: T,
    step: T,
    tol: T,
    max_iter: usize,
) -> ThetaFit<T> {
    let h = T::lit(TOL.fd_step);
    let mut x = clamp(x0, lo, hi);
    let mut value = f(x);
    let mut step = StepControl::new(step);
    let mut trace = vec![value];
    let mut converged = false;
    let mut grad = fd_derivative(f, x, lo, hi, h);
    let mut iterations = 0;
    while iterations < max_iter {
        if grad.abs() < tol {
            converged = true;
            break;
        }
        iterations += 1;
        let cand = x - step.lambda * grad;
        let cand_value = if cand >= lo && cand <= hi { f(cand) } else { T::infinity() };
        if cand_value < value {
            x = cand;
            value = cand_value;
            trace.push(value);
            grad = fd_derivative(f, x, lo, hi, h);
            step.accept();
        } else if !step.reject() {
            break;
        }
    }
    if !converged && grad.abs() < tol {
        converged = true;
    }
    ThetaFit { theta: x, dist_sq: value, grad, iterations, converged, trace }
}

/// Starting points used by the multi-start search: the caller's value, the
/// fixed seeds `{−π/4, 0, π/4}`, and the best node of a coarse scan.
pub(crate) fn seeds<T: Real>(f: &impl Fn(T) -> T, first: T, lo: T, hi: T, scan: usize) -> Vec<T> {
    let mut out = vec![first];
    for s in [-FRAC_PI_4, 0.0, FRAC_PI_4] {
        let s = T::lit(s);
        if s > lo && s < hi {
            out.push(s);
        }
    }
    let best = (0..=scan)
        .map(|i| lo + (hi - lo) * T::count(i) / T::count(scan))
        .map(|t| (t, f(t)))
        .fold((first, T::infinity()), |a, b| if b.1 < a.1 { b } else { a });
    out.push(best.0);
    out.dedup();
    out
}

/// Finds the tilt minimizing `d²(θ)` between two representations.
pub fn optimal_theta_tsrvc<T: Real>(r0: &Tsrvc<T>, r: &Tsrvc<T>, opts: &OptimizerOptions<T>) -> Result<ThetaFit<T>> {
    opts.validate()?;
    let objective = ThetaObjective::new(r0, r)?;
    Ok(minimize_objective(&objective, opts))
}

pub(crate) fn minimize_objective<T: Real>(objective: &ThetaObjective<T>, opts: &OptimizerOptions<T>) -> ThetaFit<T> {
    let half_pi = T::lit(FRAC_PI_2);
    let theta0 = clamp(opts.theta0, -half_pi, half_pi);
    if objective.is_degenerate() {
        let value = objective.value(theta0);
        return ThetaFit { theta: theta0, dist_sq: value, grad: T::zero(), iterations: 0, converged: true, trace: vec![value] };
    }
    let f = |t: T| objective.value(t);
    let run = |start: T| descend_1d(&f, start, -half_pi, half_pi, opts.step, opts.tol, opts.max_iter);
    let first = run(theta0);
    let near_pole = objective.x0.dot(&objective.x).abs() > T::lit(0.999);
    if !(opts.multi_start || near_pole || !first.converged) {
        return first;
    }
    let mut best = first;
    for s in seeds(&f, theta0, -half_pi, half_pi, 36).into_iter().skip(1) {
        let fit = run(s);
        if fit.dist_sq < best.dist_sq {
            best = fit;
        }
    }
    best
}

pub fn optimal_theta<T: Real>(p0: &Curve<T>, p: &Curve<T>, opts: &OptimizerOptions<T>) -> Result<ThetaFit<T>> {
    optimal_theta_tsrvc(&to_tsrvc(p0)?, &to_tsrvc(p)?, opts)
}

/// Geodesic distance `min_θ √d²(θ)`.
pub fn dist_bundle<T: Real>(p0: &Curve<T>, p: &Curve<T>, opts: &OptimizerOptions<T>) -> Result<T> {
    Ok(optimal_theta(p0, p, opts)?.dist_sq.sqrt())
}

pub fn dist_bundle_tsrvc<T: Real>(r0: &Tsrvc<T>, r: &Tsrvc<T>, opts: &OptimizerOptions<T>) -> Result<T> {
    Ok(optimal_theta_tsrvc(r0, r, opts)?.dist_sq.sqrt())
}

/// A sampled geodesic `s ↦ (β(s), q(s, ·))`: the base-curve is the arc and
/// the field interpolates covariantly linearly between the endpoint fields.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicPath<T> {
    pub arc: CircularArc<T>,
    pub theta: T,
    pub points: Vec<Tsrvc<T>>,
}

impl<T: Real> GeodesicPath<T> {
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    /// Path parameters `s_j = j / S`.
    pub fn params(&self) -> Vec<T> {
        let s = T::count(self.steps());
        (0..self.points.len()).map(|j| T::count(j) / s).collect()
    }

    /// `∫ |∂_s|² ds` summed over consecutive frames along sub-arcs.
    pub fn energy(&self) -> T {
        let s = self.params();
        let total: T = self
            .points
            .windows(2)
            .zip(s.windows(2))
            .map(|(pair, ss)| {
                let sub = self.arc.sub_arc(ss[0], ss[1]);
                let p = sub.transport_matrix(T::one());
                let moved: Vec<_> = pair[0].field.iter().map(|q| p.apply(q)).collect();
                sub.length().powi(2) + l2_distance_sq(&moved, &pair[1].field)
            })
            .sum();
        total * T::count(self.steps())
    }

    /// Each frame reconstructed as a curve on the sphere.
    pub fn curves(&self) -> Vec<Curve<T>> {
        self.points.iter().map(from_tsrvc).collect()
    }
}

pub fn geodesic_path_tsrvc<T: Real>(r0: &Tsrvc<T>, r: &Tsrvc<T>, theta: T, steps: usize) -> Result<GeodesicPath<T>> {
    check_grid(r0, r)?;
    if steps == 0 {
        return Err(Error::InvalidOption("geodesic path needs at least one step".into()));
    }
    let arc = arc_between(&r0.start, &r.start, theta);
    let back = arc.transport_matrix(T::one()).transpose();
    let pulled: Vec<_> = r.field.iter().map(|q| back.apply(q)).collect();
    let points = (0..=steps)
        .map(|j| {
            let s = T::count(j) / T::count(steps);
            let p = arc.transport_matrix(s);
            let base = if j == steps && !arc.perturbed { r.start } else { arc.evaluate(s) };
            let field = r0.field.iter().zip(&pulled).map(|(q0, q1)| base.project(&p.apply(&(*q0 + (*q1 - *q0) * s)))).collect();
            Tsrvc { start: base, field }
        })
        .collect();
    Ok(GeodesicPath { arc, theta, points })
}

pub fn geodesic_path<T: Real>(p0: &Curve<T>, p: &Curve<T>, theta: T, steps: usize) -> Result<GeodesicPath<T>> {
    geodesic_path_tsrvc(&to_tsrvc(p0)?, &to_tsrvc(p)?, theta, steps)
}

/// Inverse exponential map at `r0` together with the tilt fit it used.
pub fn inverse_exp_tsrvc<T: Real>(
    r0: &Tsrvc<T>,
    r: &Tsrvc<T>,
    opts: &OptimizerOptions<T>,
) -> Result<(TangentElement<T>, ThetaFit<T>)> {
    let fit = optimal_theta_tsrvc(r0, r, opts)?;
    Ok((log_along(r0, r, fit.theta), fit))
}

/// `(β̇(0), P⁻¹q − q₀)` for the arc at tilt `theta`.
pub(crate) fn log_along<T: Real>(r0: &Tsrvc<T>, r: &Tsrvc<T>, theta: T) -> TangentElement<T> {
    let arc = arc_between(&r0.start, &r.start, theta);
    let back = arc.transport_matrix(T::one()).transpose();
    let w = r0.field.iter().zip(&r.field).map(|(q0, q)| r0.start.project(&(back.apply(q) - *q0))).collect();
    TangentElement { u: arc.velocity(T::zero()), w }
}

pub fn inverse_exp<T: Real>(p0: &Curve<T>, p: &Curve<T>, opts: &OptimizerOptions<T>) -> Result<TangentElement<T>> {
    Ok(inverse_exp_tsrvc(&to_tsrvc(p0)?, &to_tsrvc(p)?, opts)?.0)
}

/// Result of the exponential map on representations.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpOutcome<T> {
    pub endpoint: Tsrvc<T>,
    pub arc: CircularArc<T>,
    pub vartheta: Option<T>,
    /// `|v|² − d²_𝔹(start, endpoint)`: zero when the arc is the optimal
    /// base-curve between its endpoints.
    pub gap: T,
    pub converged: bool,
}

/// Tilt of the endpoint-parameterized arc that coincides with the
/// direction-parameterized arc of tilt `vartheta` ending at `x`.
pub fn theta_of_vartheta<T: Real>(x0: &SpherePoint<T>, x: &SpherePoint<T>, vartheta: T) -> T {
    let s = (T::lit(2.0) / (T::one() + x0.dot(x))).sqrt() * vartheta.cos();
    clamp(s, -T::one(), T::one()).asin()
}

/// Exponential map at `r0`.
///
/// Every arc leaving `x₀` with velocity `u` is a candidate base-curve; the
/// tilt `ϑ` is chosen so the arc is the optimal base-curve between `r0` and
/// the endpoint it produces, i.e. so that the gap `|v|² − d²_𝔹(r0, end(ϑ))`
/// vanishes.
pub fn exp_map_tsrvc<T: Real>(r0: &Tsrvc<T>, v: &TangentElement<T>, opts: &OptimizerOptions<T>) -> Result<ExpOutcome<T>> {
    opts.validate()?;
    if v.w.len() != r0.len() || v.base().coords().max_abs_diff(&r0.start.coords()) > T::tol(1e-9) {
        return Err(Error::BaseMismatch);
    }
    let x0 = r0.start;
    let u = x0.project(&v.u.vec);
    let speed = u.norm();
    if speed > T::PI() {
        return Err(Error::SpeedTooLarge(speed.as_f64()));
    }
    let shifted: Vec<_> = r0.field.iter().zip(&v.w).map(|(q0, w)| *q0 + *w).collect();
    if speed < T::lit(1e-12) {
        return Ok(ExpOutcome {
            endpoint: Tsrvc::new(x0, shifted),
            arc: CircularArc::constant(x0),
            vartheta: None,
            gap: T::zero(),
            converged: true,
        });
    }
    let norm_sq = v.norm_sq();
    let (lo, hi) = crate::sphere::arc::vartheta_domain(speed);
    let margin = T::lit(TOL.domain_margin);
    let (lo, hi) = (lo + margin, hi - margin);
    let inner = OptimizerOptions { tol: opts.tol.min(T::lit(1e-8)), ..*opts };
    let candidate = |vt: T| {
        let arc = arc_from_direction(&x0, &u, clamp(vt, lo, hi)).expect("vartheta inside domain");
        let p = arc.transport_matrix(T::one());
        let end = arc.endpoint();
        let field = shifted.iter().map(|q| end.project(&p.apply(q))).collect();
        (arc, Tsrvc { start: end, field })
    };
    let gap = |vt: T| {
        let (arc, end) = candidate(vt);
        let objective = ThetaObjective::new(r0, &end).expect("same grid");
        let theta = theta_of_arc(&arc).unwrap_or_else(|| theta_of_vartheta(&x0, &arc.endpoint(), vt));
        let fit = minimize_objective(&objective, &inner.with_theta0(theta));
        (norm_sq - fit.dist_sq).max(T::zero())
    };
    // First-order condition: the candidate's own arc is stationary in θ.
    let stationarity = |vt: T| {
        let (arc, end) = candidate(vt);
        let theta = theta_of_arc(&arc)?;
        let objective = ThetaObjective::new(r0, &end).expect("same grid");
        Some(objective.gradient(theta))
    };

    let nodes = 32;
    let grid: Vec<T> = (0..=nodes).map(|i| lo + (hi - lo) * T::count(i) / T::count(nodes)).collect();
    let gaps: Vec<T> = grid.iter().map(|vt| gap(*vt)).collect();
    let slopes: Vec<Option<T>> = grid.iter().map(|vt| stationarity(*vt)).collect();
    let mut roots = Vec::new();
    for i in 0..nodes {
        if let (Some(a), Some(b)) = (slopes[i], slopes[i + 1]) {
            if a == T::zero() {
                roots.push(grid[i]);
            } else if a * b < T::zero() {
                roots.push(bisect(&stationarity, grid[i], grid[i + 1], a));
            }
        }
    }
    let mut best = (T::infinity(), T::zero());
    for vt in roots {
        let g = gap(vt);
        if g < best.0 {
            best = (g, vt);
        }
    }
    let scan_best = gaps.iter().zip(&grid).fold((T::infinity(), T::zero()), |acc, (g, vt)| if *g < acc.0 { (*g, *vt) } else { acc });
    let mut converged = best.0 <= T::tol(1e-10);
    if !converged {
        let start = if best.0 < scan_best.0 { best.1 } else { scan_best.1 };
        let fit = descend_1d(&gap, start, lo, hi, opts.step, opts.tol, opts.max_iter);
        if fit.dist_sq < best.0 {
            best = (fit.dist_sq, fit.theta);
        }
        converged = fit.converged || best.0 <= T::tol(1e-10);
    }
    let (arc, endpoint) = candidate(best.1);
    Ok(ExpOutcome { endpoint, arc, vartheta: Some(best.1), gap: best.0, converged })
}

/// Tilt `θ` of an arc read off its axis, `atan2(⟨n, m⟩, ⟨n, k⟩)` with `m` the
/// chord midpoint direction and `k` the chord normal.
pub fn theta_of_arc<T: Real>(arc: &CircularArc<T>) -> Option<T> {
    let x0 = arc.start.coords();
    let x = arc.endpoint().coords();
    let m = (x0 + x).normalized()?;
    let cross = x0.cross(&x);
    if cross.norm() < T::lit(TOL.degenerate_cross) {
        return None;
    }
    let k = cross * (T::one() / cross.norm());
    Some(arc.axis.dot(&m).atan2(arc.axis.dot(&k)))
}

/// Root of `f` in `[a, b]` given `f(a) = fa` and a sign change across the bracket.
fn bisect<T: Real>(f: &impl Fn(T) -> Option<T>, mut a: T, mut b: T, mut fa: T) -> T {
    for _ in 0..80 {
        let mid = (a + b) * T::lit(0.5);
        if mid <= a || mid >= b {
            break;
        }
        match f(mid) {
            Some(fm) if fm == T::zero() => return mid,
            Some(fm) if fm * fa < T::zero() => b = mid,
            Some(fm) => {
                a = mid;
                fa = fm;
            }
            None => break,
        }
    }
    (a + b) * T::lit(0.5)
}

pub fn exp_map<T: Real>(p0: &Curve<T>, v: &TangentElement<T>, opts: &OptimizerOptions<T>) -> Result<Curve<T>> {
    Ok(from_tsrvc(&exp_map_tsrvc(&to_tsrvc(p0)?, v, opts)?.endpoint))
}
