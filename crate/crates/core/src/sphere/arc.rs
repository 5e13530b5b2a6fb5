//! Circular arcs on S² (intersections of the sphere with a plane) and closed
//! form parallel transport along them.

use log::warn;

use super::{SpherePoint, TangentVector};
use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3};
use crate::scalar::Real;
use crate::tolerances::TOL;

/// A circular arc `β(s)`, `s ∈ [0, 1]`, obtained by rotating `start` about
/// the unit `axis` through the angle `s · turn`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircularArc<T> {
    pub start: SpherePoint<T>,
    pub axis: Vec3<T>,
    pub turn: T,
    /// Tilt parameter when the arc was built from two endpoints.
    pub theta: Option<T>,
    /// Tilt parameter when the arc was built from an initial direction.
    pub vartheta: Option<T>,
    /// Set when an antipodal endpoint had to be nudged to build the arc.
    pub perturbed: bool,
}

impl<T: Real> CircularArc<T> {
    pub fn new(start: SpherePoint<T>, axis: Vec3<T>, turn: T) -> Self {
        let axis = axis.normalized().unwrap_or_else(|| start.tangent_basis()[0]);
        Self { start, axis, turn, theta: None, vartheta: None, perturbed: false }
    }

    /// Zero-length arc sitting at `x`.
    pub fn constant(x: SpherePoint<T>) -> Self {
        Self::new(x, x.tangent_basis()[0], T::zero())
    }

    /// `⟨n, x₀⟩`: cosine of the angular radius of the circle about its axis.
    #[inline]
    pub fn tilt(&self) -> T {
        self.axis.dot(&self.start.coords())
    }

    pub fn is_degenerate(&self) -> bool {
        self.turn == T::zero()
    }

    pub fn evaluate(&self, s: T) -> SpherePoint<T> {
        let x0 = self.start.coords();
        let (sn, cs) = (s * self.turn).sin_cos();
        let b = x0 * cs + self.axis.cross(&x0) * sn + self.axis * (self.tilt() * (T::one() - cs));
        SpherePoint::from_unit(b)
    }

    pub fn endpoint(&self) -> SpherePoint<T> {
        self.evaluate(T::one())
    }

    /// `dβ/ds`; constant in magnitude along the arc.
    pub fn velocity(&self, s: T) -> TangentVector<T> {
        let b = self.evaluate(s);
        TangentVector { base: b, vec: self.axis.cross(&b.coords()) * self.turn }
    }

    /// `turn · √(1 − ⟨n, x₀⟩²)`.
    pub fn length(&self) -> T {
        let c = self.tilt();
        self.turn * (T::one() - c * c).max(T::zero()).sqrt()
    }

    /// Linear map of parallel transport from `T_{β(0)}` to `T_{β(s)}`.
    ///
    /// Rotating about the axis carries the tangent plane along the arc but
    /// spins it against the parallel frame at the rate `turn · ⟨n, x₀⟩`; the
    /// second rotation about `β(s)` undoes that spin.
    pub fn transport_matrix(&self, s: T) -> Mat3<T> {
        let angle = s * self.turn;
        if angle == T::zero() {
            return Mat3::identity();
        }
        let carry = Mat3::rotation(&self.axis, angle);
        let spin = Mat3::rotation(&self.evaluate(s).coords(), -angle * self.tilt());
        spin.matmul(&carry)
    }

    pub fn transport(&self, v: &TangentVector<T>, s: T) -> TangentVector<T> {
        let base = self.evaluate(s);
        TangentVector { base, vec: self.transport_matrix(s).apply(&v.vec) }
    }

    /// The piece of this arc between parameters `a` and `b`, reparameterized
    /// over `[0, 1]`.
    pub fn sub_arc(&self, a: T, b: T) -> Self {
        Self::new(self.evaluate(a), self.axis, (b - a) * self.turn)
    }

    /// The same arc traversed from its endpoint back to its start.
    pub fn reversed(&self) -> Self {
        Self::new(self.endpoint(), -self.axis, self.turn)
    }
}

/// The circular arc from `x0` to `x` whose plane normal makes the angle
/// `theta ∈ [−π/2, π/2]` with `x0 × x`. `theta = 0` is the minimizing great
/// circle.
pub fn arc_from_theta<T: Real>(x0: &SpherePoint<T>, x: &SpherePoint<T>, theta: T) -> Result<CircularArc<T>> {
    let cross = x0.coords().cross(&x.coords());
    let cross_norm = cross.norm();
    if cross_norm < T::lit(TOL.degenerate_cross) {
        return Err(Error::DegenerateEndpoints);
    }
    let sum = x0.coords() + x.coords();
    let mid = sum * sum.norm().recip();
    let (st, ct) = theta.sin_cos();
    let axis = mid * st + cross * (ct / cross_norm);
    let c = axis.dot(&x0.coords());
    // same angle as 2·asin(½·chord/radius), but well conditioned near π
    let turn = axis.dot(&cross).max(T::zero()).atan2(x0.dot(x) - c * c);
    let mut arc = CircularArc::new(*x0, axis, turn);
    arc.theta = Some(theta);
    Ok(arc)
}

/// Builds the arc from `x0` to `x` at tilt `theta`, resolving degenerate
/// endpoints: coincident points give a zero-length arc with identity
/// transport; antipodal points nudge `x` slightly along a fixed tangent
/// direction at `x0` (the returned arc is flagged `perturbed`).
pub fn arc_between<T: Real>(x0: &SpherePoint<T>, x: &SpherePoint<T>, theta: T) -> CircularArc<T> {
    let c = x0.dot(x);
    if c > T::one() - T::tol(TOL.coincident) {
        let mut arc = CircularArc::constant(*x0);
        arc.theta = Some(theta);
        return arc;
    }
    match arc_from_theta(x0, x, theta) {
        Ok(arc) => arc,
        Err(_) => {
            let dir = x0.tangent_basis()[0];
            let nudged = SpherePoint::from_vec(x.coords() + dir * T::tol(TOL.antipodal_nudge))
                .expect("nudged point is non-zero");
            warn!("antipodal arc endpoints; nudging endpoint to build the arc");
            let mut arc = arc_from_theta(x0, &nudged, theta).unwrap_or_else(|_| CircularArc::constant(*x0));
            arc.perturbed = true;
            arc
        }
    }
}

/// The admissible open interval for the direction tilt `vartheta` given the
/// initial speed.
pub(crate) fn vartheta_domain<T: Real>(speed: T) -> (T, T) {
    let lo = (speed / T::PI()).min(T::one()).asin();
    (lo, T::PI() - lo)
}

/// The circular arc leaving `x0` with initial velocity `u` whose plane normal
/// is tilted by `vartheta` from `x0`. `vartheta = π/2` is the great circle.
pub fn arc_from_direction<T: Real>(x0: &SpherePoint<T>, u: &Vec3<T>, vartheta: T) -> Result<CircularArc<T>> {
    let u = x0.project(u);
    let speed = u.norm();
    if speed < T::lit(1e-12) {
        return Err(Error::ZeroVelocity);
    }
    let (lo, hi) = vartheta_domain(speed);
    if !(vartheta > lo && vartheta < hi) {
        return Err(Error::OutOfDomain { value: vartheta.as_f64(), lo: lo.as_f64(), hi: hi.as_f64() });
    }
    let side = x0.coords().cross(&u) * speed.recip();
    let (sv, cv) = vartheta.sin_cos();
    let axis = x0.coords() * cv + side * sv;
    let mut arc = CircularArc::new(*x0, axis, speed / sv);
    arc.vartheta = Some(vartheta);
    Ok(arc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{exp_sphere, log_sphere};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn random_point(rng: &mut ChaCha8Rng) -> SpherePoint<f64> {
        loop {
            let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if v.norm() > 0.1 && v.norm() < 1.0 {
                return SpherePoint::from_vec(v).unwrap();
            }
        }
    }

    /// RK4 integration of `v' = −⟨v, β'⟩ β` along the arc.
    fn ode_transport(arc: &CircularArc<f64>, v: Vec3<f64>, s_end: f64, steps: usize) -> Vec3<f64> {
        let h = s_end / steps as f64;
        let f = |s: f64, v: Vec3<f64>| {
            let b = arc.evaluate(s).coords();
            let db = arc.velocity(s).vec;
            b * (-v.dot(&db))
        };
        let mut v = v;
        for i in 0..steps {
            let s = i as f64 * h;
            let k1 = f(s, v);
            let k2 = f(s + h / 2.0, v + k1 * (h / 2.0));
            let k3 = f(s + h / 2.0, v + k2 * (h / 2.0));
            let k4 = f(s + h, v + k3 * h);
            v += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        v
    }

    #[test]
    fn great_circle_arc_at_zero_tilt() {
        let arc = arc_from_theta(&SpherePoint::new(1.0, 0.0, 0.0), &SpherePoint::new(0.0, 1.0, 0.0), 0.0).unwrap();
        assert!(arc.axis.max_abs_diff(&Vec3::new(0.0, 0.0, 1.0)) < 1e-15);
        assert!((arc.turn - FRAC_PI_2).abs() < 1e-15);
        assert!((arc.velocity(0.0).norm() - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn half_turn_at_extreme_tilt() {
        let x0 = SpherePoint::new(1.0, 0.0, 0.0);
        let x = SpherePoint::new(0.0, 1.0, 0.0);
        for theta in [FRAC_PI_2, -FRAC_PI_2] {
            let arc = arc_from_theta(&x0, &x, theta).unwrap();
            assert!((arc.turn - PI).abs() < 1e-7, "turn {}", arc.turn);
            assert!(arc.endpoint().coords().max_abs_diff(&x.coords()) < 1e-9);
        }
    }

    #[test]
    fn evaluate_at_zero_is_start_exactly() {
        let x0 = SpherePoint::new(0.3, 0.1, -0.7);
        let arc = arc_from_theta(&x0, &SpherePoint::new(-0.2, 0.5, 0.1), 0.7).unwrap();
        assert_eq!(arc.evaluate(0.0), x0);
    }

    #[test]
    fn endpoints_and_unit_norm_over_random_arcs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let (x0, x) = (random_point(&mut rng), random_point(&mut rng));
            let theta = rng.random_range(-FRAC_PI_2..FRAC_PI_2);
            let arc = arc_from_theta(&x0, &x, theta).unwrap();
            assert!(arc.endpoint().coords().max_abs_diff(&x.coords()) < 1e-9);
            let s = rng.random_range(0.0..1.0);
            assert!((arc.evaluate(s).coords().norm() - 1.0).abs() < 1e-10);
            let expected = arc.turn * (1.0 - arc.tilt().powi(2)).sqrt();
            assert!((arc.length() - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_speed_and_tangency() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let arc = arc_from_theta(&random_point(&mut rng), &random_point(&mut rng), rng.random_range(-1.5..1.5)).unwrap();
            let v0 = arc.velocity(0.0);
            assert!(v0.vec.dot(&arc.start.coords()).abs() < 1e-10);
            let s = rng.random_range(0.0..1.0);
            assert!((arc.velocity(s).norm() - v0.norm()).abs() < 1e-10);
            assert!((v0.norm() - arc.length()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_tilt_arc_matches_geodesic() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let (x0, x) = (random_point(&mut rng), random_point(&mut rng));
            let arc = arc_from_theta(&x0, &x, 0.0).unwrap();
            let log = log_sphere(&x0, &x).unwrap().vec;
            for s in [0.1, 0.5, 0.9] {
                let g = exp_sphere(&x0, &(log * s));
                assert!(arc.evaluate(s).coords().max_abs_diff(&g.coords()) < 1e-9);
            }
        }
    }

    #[test]
    fn transport_matches_ode() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..20 {
            let arc = arc_from_theta(&random_point(&mut rng), &random_point(&mut rng), rng.random_range(-1.5..1.5)).unwrap();
            let v = arc.start.project(&Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let closed = arc.transport_matrix(1.0).apply(&v);
            let ode = ode_transport(&arc, v, 1.0, 10_000);
            assert!(closed.max_abs_diff(&ode) < 1e-6, "{:?} vs {:?}", closed, ode);
        }
    }

    #[test]
    fn great_circle_transports_its_own_velocity() {
        let arc = arc_from_theta(&SpherePoint::new(1.0, 0.0, 0.0), &SpherePoint::new(0.0, 0.6, 0.8), 0.0).unwrap();
        let v0 = arc.velocity(0.0);
        for s in [0.25, 0.5, 1.0] {
            let moved = arc.transport(&v0, s);
            assert!(moved.vec.max_abs_diff(&arc.velocity(s).vec) < 1e-14);
        }
    }

    #[test]
    fn identity_transport_at_zero() {
        let arc = arc_from_theta(&SpherePoint::new(1.0, 0.2, 0.0), &SpherePoint::new(0.0, 0.6, 0.8), 0.4).unwrap();
        assert_eq!(arc.transport_matrix(0.0), Mat3::identity());
    }

    #[test]
    fn arc_between_handles_degenerate_endpoints() {
        let x0 = SpherePoint::new(0.0, 0.0, 1.0);
        let same = arc_between(&x0, &x0, 0.3);
        assert!(same.is_degenerate());
        assert_eq!(same.transport_matrix(1.0), Mat3::identity());
        let anti = arc_between(&x0, &SpherePoint::new(0.0, 0.0, -1.0), 0.0);
        assert!(anti.perturbed);
        assert!(anti.endpoint().coords().max_abs_diff(&Vec3::new(0.0, 0.0, -1.0)) < 1e-6);
        assert_eq!(arc_from_theta(&x0, &x0, 0.0), Err(Error::DegenerateEndpoints));
    }

    #[test]
    fn direction_arc_at_right_angle_is_great_circle() {
        let x0 = SpherePoint::new(1.0, 0.0, 0.0);
        let u = Vec3::new(0.0, 0.7, 0.0);
        let arc = arc_from_direction(&x0, &u, FRAC_PI_2).unwrap();
        assert!(arc.tilt().abs() < 1e-15);
        assert!((arc.turn - 0.7).abs() < 1e-15);
        assert!(arc.endpoint().coords().max_abs_diff(&exp_sphere(&x0, &u).coords()) < 1e-14);
    }

    #[test]
    fn direction_arc_initial_velocity() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..200 {
            let x0 = random_point(&mut rng);
            let u = x0.project(&Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let (lo, hi) = vartheta_domain(u.norm());
            let vt = lo + (hi - lo) * rng.random_range(0.01..0.99);
            let arc = arc_from_direction(&x0, &u, vt).unwrap();
            assert!(arc.velocity(0.0).vec.max_abs_diff(&u) < 1e-9);
            assert!(arc.turn <= PI + 1e-12);
        }
    }

    #[test]
    fn direction_arc_domain_errors() {
        let x0 = SpherePoint::new(1.0, 0.0, 0.0);
        let u = Vec3::new(0.0, 1.0, 0.0);
        assert_eq!(arc_from_direction(&x0, &Vec3::zero(), 1.0), Err(Error::ZeroVelocity));
        assert!(matches!(arc_from_direction(&x0, &u, 0.1), Err(Error::OutOfDomain { .. })));
        let (lo, _) = vartheta_domain(1.0_f64);
        let near = arc_from_direction(&x0, &u, lo + 1e-9).unwrap();
        assert!((near.turn - PI).abs() < 1e-6);
    }
}
