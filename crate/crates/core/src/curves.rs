//! Sampled trajectories on S², their transported square-root velocity
//! representation, and the reparameterization (time-warping) action.
//!
//! All curves in one computation share the uniform grid `t_k = k/(T−1)`.
//! Integrals over time use the trapezoidal rule.

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3};
use crate::scalar::{clamp, Real};
use crate::sphere::{exp_sphere, log_sphere, slerp, SpherePoint};
use crate::tolerances::TOL;

/// Uniform grid on `[0, 1]` with `n` points.
pub fn uniform_grid<T: Real>(n: usize) -> Vec<T> {
    let last = T::count(n - 1);
    (0..n).map(|k| T::count(k) / last).collect()
}

/// Trapezoidal quadrature weights on the uniform grid with `n` points.
pub fn trapezoid_weights<T: Real>(n: usize) -> Vec<T> {
    let dt = T::count(n - 1).recip();
    let mut w = vec![dt; n];
    w[0] = dt * T::lit(0.5);
    w[n - 1] = dt * T::lit(0.5);
    w
}

/// Locates `t ∈ [0, 1]` on a uniform grid of `n` points: bracketing index and
/// fractional offset.
#[inline]
fn locate<T: Real>(t: T, n: usize) -> (usize, T) {
    let mut pos = clamp(t, T::zero(), T::one()) * T::count(n - 1);
    let node = pos.round();
    if (pos - node).abs() <= T::tol(0.0) * T::count(n) {
        pos = node;
    }
    let k = pos.floor().to_usize().unwrap_or(0).min(n - 2);
    (k, pos - T::count(k))
}

/// A trajectory sampled on the uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve<T> {
    samples: Vec<SpherePoint<T>>,
}

impl<T: Real> Curve<T> {
    pub fn new(samples: Vec<SpherePoint<T>>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: samples.len() });
        }
        Ok(Self { samples })
    }

    /// Samples a parametric curve `f: [0, 1] → R³` (normalized onto S²).
    pub fn from_fn(n: usize, f: impl Fn(T) -> Vec3<T>) -> Result<Self> {
        let samples = uniform_grid(n)
            .into_iter()
            .map(|t| SpherePoint::from_vec(f(t)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(samples)
    }

    /// The curve that stays at `x`.
    pub fn constant(x: SpherePoint<T>, n: usize) -> Self {
        Self { samples: vec![x; n.max(2)] }
    }

    /// Resamples observations at strictly increasing (not necessarily
    /// uniform) times onto the uniform grid with `n` points. Times are mapped
    /// affinely onto `[0, 1]` first.
    pub fn from_timed(times: &[T], points: &[SpherePoint<T>], n: usize) -> Result<Self> {
        if times.len() != points.len() {
            return Err(Error::GridMismatch(times.len(), points.len()));
        }
        if points.len() < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: points.len() });
        }
        let (t0, t1) = (times[0], times[times.len() - 1]);
        let span = t1 - t0;
        let mut j = 0;
        let samples = uniform_grid::<T>(n)
            .into_iter()
            .map(|u| {
                let t = t0 + u * span;
                while j + 2 < times.len() && times[j + 1] < t {
                    j += 1;
                }
                let dt = times[j + 1] - times[j];
                let tau = if dt > T::zero() { clamp((t - times[j]) / dt, T::zero(), T::one()) } else { T::zero() };
                slerp(&points[j], &points[j + 1], tau)
            })
            .collect();
        Self::new(samples)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[SpherePoint<T>] {
        &self.samples
    }

    pub fn start(&self) -> SpherePoint<T> {
        self.samples[0]
    }

    pub fn grid(&self) -> Vec<T> {
        uniform_grid(self.len())
    }

    /// Value at time `t` by geodesic interpolation between samples.
    pub fn point_at(&self, t: T) -> SpherePoint<T> {
        let (k, tau) = locate(t, self.len());
        if tau == T::zero() {
            return self.samples[k];
        }
        if tau == T::one() {
            return self.samples[k + 1];
        }
        slerp(&self.samples[k], &self.samples[k + 1], tau)
    }

    /// Largest great-circle distance between corresponding samples.
    pub fn sup_distance(&self, other: &Self) -> T {
        self.samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.distance(b))
            .fold(T::zero(), T::max)
    }

    /// Length of the sampled path (sum of great-circle segment lengths).
    pub fn path_length(&self) -> T {
        self.samples.windows(2).map(|w| w[0].distance(&w[1])).sum()
    }

    /// Distance from `p` to the image of the curve, taken as the chain of
    /// great-circle segments between consecutive samples.
    pub fn distance_to_path(&self, p: &SpherePoint<T>) -> T {
        self.samples.windows(2).map(|w| segment_distance(p, &w[0], &w[1])).fold(T::infinity(), T::min)
    }

    /// Symmetric Hausdorff distance between the image sets, with samples
    /// joined by great-circle segments.
    pub fn hausdorff(&self, other: &Self) -> T {
        let one_side = |a: &Self, b: &Self| a.samples.iter().map(|p| b.distance_to_path(p)).fold(T::zero(), T::max);
        one_side(self, other).max(one_side(other, self))
    }
}

fn segment_distance<T: Real>(p: &SpherePoint<T>, a: &SpherePoint<T>, b: &SpherePoint<T>) -> T {
    let ends = p.distance(a).min(p.distance(b));
    let Some(n) = a.coords().cross(&b.coords()).normalized() else {
        return ends;
    };
    let x = p.coords();
    let Some(foot) = (x - n * x.dot(&n)).normalized() else {
        return ends;
    };
    let inside = a.coords().cross(&foot).dot(&n) >= T::zero() && foot.cross(&b.coords()).dot(&n) >= T::zero();
    if inside {
        clamp(x.dot(&n).abs(), T::zero(), T::one()).asin().min(ends)
    } else {
        ends
    }
}

/// A trajectory in its transported square-root velocity form `(x, q)`: the
/// start point and the velocity field scaled by the inverse square root of
/// the speed, parallel-transported back along the curve into `T_x S²`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tsrvc<T> {
    pub start: SpherePoint<T>,
    pub field: Vec<Vec3<T>>,
}

impl<T: Real> Tsrvc<T> {
    /// Builds a representation, projecting the field onto `T_start S²`.
    pub fn new(start: SpherePoint<T>, field: Vec<Vec3<T>>) -> Self {
        let field = field.iter().map(|q| start.project(q)).collect();
        Self { start, field }
    }

    pub fn zero(start: SpherePoint<T>, n: usize) -> Self {
        Self { start, field: vec![Vec3::zero(); n] }
    }

    pub fn len(&self) -> usize {
        self.field.len()
    }

    pub fn is_empty(&self) -> bool {
        self.field.is_empty()
    }

    /// `∫ |q(t)|² dt`, which equals the length of the curve.
    pub fn energy(&self) -> T {
        let w = trapezoid_weights::<T>(self.len());
        self.field.iter().zip(&w).map(|(q, w)| q.norm_sq() * *w).sum()
    }

    /// Linear interpolation of the field at time `t`.
    pub fn field_at(&self, t: T) -> Vec3<T> {
        interpolate_field(&self.field, t)
    }
}

pub(crate) fn interpolate_field<T: Real>(field: &[Vec3<T>], t: T) -> Vec3<T> {
    let (k, tau) = locate(t, field.len());
    field[k] * (T::one() - tau) + field[k + 1] * tau
}

/// `∫ |a(t) − b(t)|² dt` for two fields on the same grid.
pub fn l2_distance_sq<T: Real>(a: &[Vec3<T>], b: &[Vec3<T>]) -> T {
    let w = trapezoid_weights::<T>(a.len());
    a.iter().zip(b).zip(&w).map(|((x, y), w)| (*x - *y).norm_sq() * *w).sum()
}

/// A boundary-preserving, non-decreasing reparameterization of `[0, 1]`,
/// sampled on the uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct WarpingFunction<T> {
    values: Vec<T>,
}

impl<T: Real> WarpingFunction<T> {
    /// Validates and wraps samples `γ(t_k)`. Endpoints within `1e-9` of 0 and
    /// 1 are snapped.
    pub fn new(mut values: Vec<T>) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::InvalidWarping("fewer than two samples".into()));
        }
        let eps = T::tol(1e-9);
        if values[0].abs() > eps || (values[n - 1] - T::one()).abs() > eps {
            return Err(Error::InvalidWarping("endpoints must be 0 and 1".into()));
        }
        values[0] = T::zero();
        values[n - 1] = T::one();
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidWarping("values decrease".into()));
        }
        if values.iter().any(|v| !(*v >= T::zero() && *v <= T::one())) {
            return Err(Error::InvalidWarping("values outside [0, 1]".into()));
        }
        Ok(Self { values })
    }

    pub fn identity(n: usize) -> Self {
        Self { values: uniform_grid(n) }
    }

    /// Samples `f` on the uniform grid with `n` points.
    pub fn from_fn(n: usize, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(uniform_grid(n).into_iter().map(f).collect())
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `γ(t)` by linear interpolation.
    pub fn eval(&self, t: T) -> T {
        let (k, tau) = locate(t, self.len());
        self.values[k] * (T::one() - tau) + self.values[k + 1] * tau
    }

    /// `γ̇(t_k)` by central differences (one-sided at the ends).
    pub fn derivative(&self) -> Vec<T> {
        let n = self.len();
        let dt = T::count(n - 1).recip();
        (0..n)
            .map(|k| {
                let (a, b) = (k.saturating_sub(1), (k + 1).min(n - 1));
                ((self.values[b] - self.values[a]) / (T::count(b - a) * dt)).max(T::zero())
            })
            .collect()
    }

    /// `self ∘ inner`, i.e. `t ↦ self(inner(t))`.
    pub fn compose(&self, inner: &Self) -> Self {
        Self { values: inner.values.iter().map(|&t| self.eval(t)).collect() }
    }

    /// Numerical inverse of the monotone map, sampled on the same grid.
    pub fn inverse(&self) -> Self {
        let n = self.len();
        let mut j = 0;
        let values = uniform_grid::<T>(n)
            .into_iter()
            .map(|y| {
                while j + 2 < n && self.values[j + 1] < y {
                    j += 1;
                }
                let (a, b) = (self.values[j], self.values[j + 1]);
                let tau = if b > a { clamp((y - a) / (b - a), T::zero(), T::one()) } else { T::zero() };
                let dt = T::count(n - 1).recip();
                (T::count(j) + tau) * dt
            })
            .collect();
        Self { values }
    }

    /// Largest deviation from another warp on the same grid.
    pub fn sup_distance(&self, other: &Self) -> T {
        self.values.iter().zip(&other.values).map(|(a, b)| (*a - *b).abs()).fold(T::zero(), T::max)
    }
}

/// Intrinsic derivative estimate at every sample: central differences of the
/// logarithm map in the interior, one-sided at the ends.
fn velocities<T: Real>(p: &Curve<T>) -> Vec<Vec3<T>> {
    let s = p.samples();
    let n = s.len();
    let inv_dt = T::count(n - 1);
    let log = |a: &SpherePoint<T>, b: &SpherePoint<T>| log_sphere(a, b).map(|v| v.vec).unwrap_or_else(|_| Vec3::zero());
    (0..n)
        .map(|k| {
            if k == 0 {
                log(&s[0], &s[1]) * inv_dt
            } else if k == n - 1 {
                -log(&s[n - 1], &s[n - 2]) * inv_dt
            } else {
                (log(&s[k], &s[k + 1]) - log(&s[k], &s[k - 1])) * (inv_dt * T::lit(0.5))
            }
        })
        .collect()
}

/// The square-root scaling `v ↦ v / √|v|`, extended by zero.
#[inline]
pub(crate) fn sqrt_scale<T: Real>(v: Vec3<T>) -> Vec3<T> {
    let speed = v.norm();
    if speed < T::lit(TOL.zero_speed) {
        Vec3::zero()
    } else {
        v * speed.sqrt().recip()
    }
}

/// Forward transform to the transported square-root velocity representation.
/// Transport back to the start chains great-circle transports between
/// consecutive samples.
pub fn to_tsrvc<T: Real>(p: &Curve<T>) -> Result<Tsrvc<T>> {
    if p.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: p.len() });
    }
    let s = p.samples();
    let x = s[0];
    let vel = velocities(p);
    let mut to_start = Mat3::identity();
    let mut field = Vec::with_capacity(s.len());
    for k in 0..s.len() {
        if k > 0 {
            let step = Mat3::rotation_between(&s[k].coords(), &s[k - 1].coords());
            to_start = to_start.matmul(&step);
        }
        field.push(x.project(&to_start.apply(&sqrt_scale(vel[k]))));
    }
    Ok(Tsrvc { start: x, field })
}

/// Inverse transform by forward-Euler covariant integration: the speed is
/// recovered as `|q|²`, and the field is carried along the partially built
/// curve by chained great-circle transport.
pub fn from_tsrvc<T: Real>(r: &Tsrvc<T>) -> Curve<T> {
    let n = r.len();
    let dt = T::count(n - 1).recip();
    let mut samples = Vec::with_capacity(n);
    let mut current = r.start;
    let mut from_start = Mat3::identity();
    samples.push(current);
    for q in r.field.iter().take(n - 1) {
        let v = current.project(&from_start.apply(q));
        let next = exp_sphere(&current, &(v * (v.norm() * dt)));
        from_start = Mat3::rotation_between(&current.coords(), &next.coords()).matmul(&from_start);
        samples.push(next);
        current = next;
    }
    Curve { samples }
}

/// Reparameterization `p ∘ γ`.
pub fn warp_curve<T: Real>(p: &Curve<T>, g: &WarpingFunction<T>) -> Result<Curve<T>> {
    if p.len() != g.len() {
        return Err(Error::GridMismatch(p.len(), g.len()));
    }
    Ok(Curve { samples: g.values().iter().map(|&t| p.point_at(t)).collect() })
}

/// The warping action on the representation: `q ↦ (q ∘ γ) √γ̇`.
pub fn warp_tsrvc<T: Real>(r: &Tsrvc<T>, g: &WarpingFunction<T>) -> Result<Tsrvc<T>> {
    if r.len() != g.len() {
        return Err(Error::GridMismatch(r.len(), g.len()));
    }
    let dg = g.derivative();
    let field = g.values().iter().zip(&dg).map(|(&t, &d)| r.field_at(t) * d.sqrt()).collect();
    Ok(Tsrvc { start: r.start, field })
}

/// Resamples onto a uniform grid with `n` points.
pub fn resample_uniform<T: Real>(p: &Curve<T>, n: usize) -> Result<Curve<T>> {
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    if n == p.len() {
        return Ok(p.clone());
    }
    Ok(Curve { samples: uniform_grid::<T>(n).into_iter().map(|t| p.point_at(t)).collect() })
}
