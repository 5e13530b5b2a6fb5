//! Exact geometry on the unit sphere S²: points, tangent vectors, the
//! exponential and logarithm maps, and parallel transport along great circles
//! and circular arcs.

pub(crate) mod arc;

pub use arc::{arc_between, arc_from_direction, arc_from_theta, CircularArc};

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3};
use crate::scalar::{clamp, Real};
use crate::tolerances::TOL;

/// A point on the unit sphere, stored as a unit 3-vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpherePoint<T> {
    coords: Vec3<T>,
}

impl<T: Real> SpherePoint<T> {
    /// Normalizes `(x, y, z)` onto the sphere. Panics on the zero vector.
    pub fn new(x: T, y: T, z: T) -> Self {
        Self::from_vec(Vec3::new(x, y, z)).expect("non-zero vector")
    }

    pub fn from_vec(v: Vec3<T>) -> Result<Self> {
        v.normalized().map(|coords| Self { coords }).ok_or(Error::ZeroVector)
    }

    /// Wraps a vector that is already unit length up to round-off.
    #[inline]
    pub(crate) fn from_unit(v: Vec3<T>) -> Self {
        debug_assert!((v.norm() - T::one()).abs() < T::tol(1e-6));
        Self { coords: v }
    }

    #[inline]
    pub fn coords(&self) -> Vec3<T> {
        self.coords
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> T {
        self.coords.dot(&other.coords)
    }

    /// Great-circle distance.
    pub fn distance(&self, other: &Self) -> T {
        let s = self.coords.cross(&other.coords).norm();
        s.atan2(self.dot(other))
    }

    /// Projection of an ambient vector onto the tangent plane at this point.
    #[inline]
    pub fn project(&self, v: &Vec3<T>) -> Vec3<T> {
        v.reject(&self.coords)
    }

    /// Deterministic orthonormal basis of the tangent plane: the first
    /// coordinate axis projected and normalized, then `x × e₁`. Falls back to
    /// the second axis when the first is nearly normal to the plane.
    pub fn tangent_basis(&self) -> [Vec3<T>; 2] {
        let pick = if self.coords.x().abs() < T::lit(0.9) { 0 } else { 1 };
        let e1 = self.project(&Vec3::axis(pick)).normalized().expect("axis not parallel");
        let e2 = self.coords.cross(&e1);
        [e1, e2]
    }
}

/// A tangent vector together with its base point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentVector<T> {
    pub base: SpherePoint<T>,
    pub vec: Vec3<T>,
}

impl<T: Real> TangentVector<T> {
    /// Projects `vec` onto the tangent plane at `base`.
    pub fn new(base: SpherePoint<T>, vec: Vec3<T>) -> Self {
        Self { base, vec: base.project(&vec) }
    }

    pub fn zero(base: SpherePoint<T>) -> Self {
        Self { base, vec: Vec3::zero() }
    }

    #[inline]
    pub fn norm(&self) -> T {
        self.vec.norm()
    }
}

/// Exponential map: follows the great circle from `x` with initial velocity
/// `v` (a tangent vector at `x`) for unit time.
pub fn exp_sphere<T: Real>(x: &SpherePoint<T>, v: &Vec3<T>) -> SpherePoint<T> {
    let v = x.project(v);
    let len = v.norm();
    if len < T::lit(TOL.zero_vector) {
        return *x;
    }
    let (s, c) = len.sin_cos();
    let y = x.coords * c + v * (s / len);
    // re-normalize against round-off drift over long chains of steps
    SpherePoint::from_vec(y).unwrap_or(*x)
}

/// Logarithm map: the tangent vector at `x` pointing along the minimizing
/// great circle towards `y`, with length equal to their distance.
pub fn log_sphere<T: Real>(x: &SpherePoint<T>, y: &SpherePoint<T>) -> Result<TangentVector<T>> {
    let c = x.dot(y);
    if c <= -T::one() + T::lit(TOL.antipodal) {
        return Err(Error::AntipodalPoints);
    }
    let w = y.coords - x.coords * c;
    let s = w.norm();
    if s < T::lit(TOL.zero_vector) {
        return Ok(TangentVector::zero(*x));
    }
    let angle = s.atan2(clamp(c, -T::one(), T::one()));
    Ok(TangentVector { base: *x, vec: w * (angle / s) })
}

/// Parallel transport of `v ∈ T_x S²` to `T_y S²` along the minimizing great
/// circle from `x` to `y`.
pub fn transport_geodesic<T: Real>(
    x: &SpherePoint<T>,
    y: &SpherePoint<T>,
    v: &Vec3<T>,
) -> Result<Vec3<T>> {
    Ok(geodesic_transport_matrix(x, y)?.apply(v))
}

/// The rotation implementing [`transport_geodesic`] as a linear map on R³.
pub fn geodesic_transport_matrix<T: Real>(x: &SpherePoint<T>, y: &SpherePoint<T>) -> Result<Mat3<T>> {
    if x.dot(y) <= -T::one() + T::lit(TOL.antipodal) {
        return Err(Error::AntipodalPoints);
    }
    Ok(Mat3::rotation_between(&x.coords, &y.coords))
}

/// Geodesic interpolation between two points, `tau ∈ [0, 1]`.
pub fn slerp<T: Real>(a: &SpherePoint<T>, b: &SpherePoint<T>, tau: T) -> SpherePoint<T> {
    if tau <= T::zero() {
        return *a;
    }
    if tau >= T::one() {
        return *b;
    }
    match log_sphere(a, b) {
        Ok(v) => exp_sphere(a, &(v.vec * tau)),
        Err(_) => {
            let mix = a.coords * (T::one() - tau) + b.coords * tau;
            SpherePoint::from_vec(mix).unwrap_or(*a)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn p(x: f64, y: f64, z: f64) -> SpherePoint<f64> {
        SpherePoint::new(x, y, z)
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let x = p(1.0, 0.0, 0.0);
        assert_eq!(exp_sphere(&x, &Vec3::zero()), x);
    }

    #[test]
    fn exp_quarter_great_circle() {
        let y = exp_sphere(&p(1.0, 0.0, 0.0), &Vec3::new(0.0, FRAC_PI_2, 0.0));
        assert!(y.coords().max_abs_diff(&Vec3::new(0.0, 1.0, 0.0)) < 1e-15);
    }

    #[test]
    fn log_quarter_great_circle() {
        let v = log_sphere(&p(1.0, 0.0, 0.0), &p(0.0, 1.0, 0.0)).unwrap();
        assert!(v.vec.max_abs_diff(&Vec3::new(0.0, FRAC_PI_2, 0.0)) < 1e-15);
    }

    #[test]
    fn log_of_same_point_is_zero() {
        let x = p(0.3, -0.2, 0.9);
        assert_eq!(log_sphere(&x, &x).unwrap().vec, Vec3::zero());
    }

    #[test]
    fn log_rejects_antipodes() {
        let x = p(0.0, 0.0, 1.0);
        let y = p(0.0, 0.0, -1.0);
        assert_eq!(log_sphere(&x, &y), Err(Error::AntipodalPoints));
        assert_eq!(transport_geodesic(&x, &y, &Vec3::new(1.0, 0.0, 0.0)), Err(Error::AntipodalPoints));
    }

    #[test]
    fn transport_to_same_point_is_identity() {
        let x = p(0.2, 0.4, 0.5);
        let v = x.project(&Vec3::new(1.0, -2.0, 0.5));
        let w = transport_geodesic(&x, &x, &v).unwrap();
        assert!(w.max_abs_diff(&v) < 1e-15);
    }

    #[test]
    fn transport_carries_velocity_of_geodesic() {
        let x = p(1.0, 0.0, 0.0);
        let y = p(0.0, 0.0, 1.0);
        let v = log_sphere(&x, &y).unwrap().vec;
        let w = transport_geodesic(&x, &y, &v).unwrap();
        let back = log_sphere(&y, &x).unwrap().vec;
        assert!((w + back).max_abs_diff(&Vec3::zero()) < 1e-14);
    }

    #[test]
    fn tangent_basis_is_orthonormal() {
        for x in [p(1.0, 0.0, 0.0), p(0.0, 1.0, 0.0), p(0.3, 0.4, -0.2)] {
            let [e1, e2] = x.tangent_basis();
            assert!(e1.dot(&x.coords()).abs() < 1e-15);
            assert!(e2.dot(&x.coords()).abs() < 1e-15);
            assert!(e1.dot(&e2).abs() < 1e-15);
            assert!((e1.norm() - 1.0).abs() < 1e-15 && (e2.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let x = SpherePoint::<f32>::new(1.0, 0.0, 0.0);
        let y = exp_sphere(&x, &Vec3::new(0.0, std::f32::consts::FRAC_PI_2, 0.0));
        assert!(y.coords().max_abs_diff(&Vec3::new(0.0, 1.0, 0.0)) < 1e-6);
    }
}
