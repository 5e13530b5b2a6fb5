//! Piecewise-geodesic comparator: arcs sampled at `N + 1` points, transport
//! chained along the resulting polygon, and an exhaustive search over `M`
//! tilts.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::bundle::ThetaObjective;
use crate::curves::{to_tsrvc, warp_curve, Curve, Tsrvc, WarpingFunction};
use crate::error::{Error, Result};
use crate::linalg::Mat3;
use crate::scalar::Real;
use crate::sphere::{arc_between, geodesic_transport_matrix, SpherePoint};
use crate::warping::{dp_align, DpOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BaselineParams {
    pub n_segments: usize,
    pub n_angles: usize,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self { n_segments: 60, n_angles: 120 }
    }
}

impl BaselineParams {
    pub fn new(n_segments: usize, n_angles: usize) -> Result<Self> {
        let p = Self { n_segments, n_angles };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_segments < 2 || self.n_angles < 2 {
            return Err(Error::InvalidOption(format!(
                "baseline needs N >= 2 and M >= 2, got N = {}, M = {}",
                self.n_segments, self.n_angles
            )));
        }
        Ok(())
    }

    /// Tilts `θ_j = −π/2 + π j / M`, `j = 0..M`. The grid is half-open, so the
    /// grid for `M` is contained in the grid for any multiple of `M`.
    pub fn angles<T: Real>(&self) -> Vec<T> {
        (0..self.n_angles).map(|j| T::lit(-FRAC_PI_2 + PI * j as f64 / self.n_angles as f64)).collect()
    }
}

/// Polygon approximation of the arc with tilt `theta`: its length and the
/// chained geodesic transport from `x0` to the last vertex.
pub fn polygon_transport<T: Real>(x0: &SpherePoint<T>, x: &SpherePoint<T>, theta: T, n_segments: usize) -> (T, Mat3<T>) {
    let arc = arc_between(x0, x, theta);
    if arc.is_degenerate() {
        return (T::zero(), Mat3::identity());
    }
    let mut length = T::zero();
    let mut transport = Mat3::identity();
    let mut prev = arc.evaluate(T::zero());
    for i in 1..=n_segments {
        let next = arc.evaluate(T::count(i) / T::count(n_segments));
        length = length + prev.distance(&next);
        let step = geodesic_transport_matrix(&prev, &next).expect("short polygon edges");
        transport = step.matmul(&transport);
        prev = next;
    }
    (length, transport)
}

/// Best tilt and squared distance found by the baseline search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaselineFit<T> {
    pub theta: T,
    pub dist_sq: T,
}

pub fn baseline_fit_tsrvc<T: Real>(r0: &Tsrvc<T>, r: &Tsrvc<T>, params: &BaselineParams) -> Result<BaselineFit<T>> {
    params.validate()?;
    let objective = ThetaObjective::new(r0, r)?;
    let mut best = BaselineFit { theta: T::zero(), dist_sq: T::infinity() };
    for theta in params.angles::<T>() {
        let (length, transport) = polygon_transport(&r0.start, &r.start, theta, params.n_segments);
        let value = objective.value_with(length, &transport);
        if value < best.dist_sq {
            best = BaselineFit { theta, dist_sq: value };
        }
    }
    Ok(best)
}

/// Squared baseline distance `min_j d²_poly(θ_j)`.
pub fn baseline_dist<T: Real>(p0: &Curve<T>, p: &Curve<T>, params: &BaselineParams) -> Result<T> {
    Ok(baseline_fit_tsrvc(&to_tsrvc(p0)?, &to_tsrvc(p)?, params)?.dist_sq)
}

/// Baseline amplitude distance: at every tilt of the grid, `p0` is aligned
/// to `p` by dynamic programming against the polygon-transported field, and
/// the smallest resulting squared distance is kept.
pub fn baseline_amplitude<T: Real>(
    p0: &Curve<T>,
    p: &Curve<T>,
    params: &BaselineParams,
    dp: &DpOptions,
) -> Result<(BaselineFit<T>, WarpingFunction<T>)> {
    params.validate()?;
    let r0 = to_tsrvc(p0)?;
    let r = to_tsrvc(p)?;
    let mut best = (BaselineFit { theta: T::zero(), dist_sq: T::infinity() }, WarpingFunction::identity(p0.len()));
    let identity = baseline_fit_tsrvc(&r0, &r, params)?;
    if identity.dist_sq < best.0.dist_sq {
        best.0 = identity;
    }
    for theta in params.angles::<T>() {
        let (length, transport) = polygon_transport(&r0.start, &r.start, theta, params.n_segments);
        let moved: Vec<_> = r0.field.iter().map(|q| transport.apply(q)).collect();
        let gamma = dp_align(&moved, &r.field, dp)?;
        let warped = to_tsrvc(&warp_curve(p0, &gamma)?)?;
        let value = ThetaObjective::new(&warped, &r)?.value_with(length, &transport);
        if value < best.0.dist_sq {
            best = (BaselineFit { theta, dist_sq: value }, gamma);
        }
    }
    Ok(best)
}
