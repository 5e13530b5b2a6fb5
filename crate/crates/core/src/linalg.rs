//! Fixed-size vectors and matrices for the embedded sphere.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// A vector in R³.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3<T>(pub [T; 3]);

impl<T: Real> Vec3<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        Self([x, y, z])
    }

    #[inline]
    pub fn zero() -> Self {
        Self([T::zero(); 3])
    }

    /// The `i`-th standard basis vector.
    pub fn axis(i: usize) -> Self {
        let mut v = Self::zero();
        v.0[i] = T::one();
        v
    }

    #[inline]
    pub fn x(&self) -> T {
        self.0[0]
    }

    #[inline]
    pub fn y(&self) -> T {
        self.0[1]
    }

    #[inline]
    pub fn z(&self) -> T {
        self.0[2]
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> T {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    #[inline]
    pub fn cross(&self, other: &Self) -> Self {
        let [a1, a2, a3] = self.0;
        let [b1, b2, b3] = other.0;
        Self([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1])
    }

    #[inline]
    pub fn norm_sq(&self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    /// Unit vector in the same direction, or `None` for (near) zero input.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        if n > T::min_positive_value().sqrt() {
            Some(*self * n.recip())
        } else {
            None
        }
    }

    /// Component orthogonal to the unit vector `n`.
    #[inline]
    pub fn reject(&self, n: &Self) -> Self {
        *self - *n * self.dot(n)
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        (0..3).fold(T::zero(), |m, i| m.max((self.0[i] - other.0[i]).abs()))
    }

    pub fn to_f64(&self) -> [f64; 3] {
        [self.0[0].as_f64(), self.0[1].as_f64(), self.0[2].as_f64()]
    }

    pub fn from_f64(v: [f64; 3]) -> Self {
        Self([T::lit(v[0]), T::lit(v[1]), T::lit(v[2])])
    }
}

impl<T: Real> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl<T: Real> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl<T: Real> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl<T: Real> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl<T: Real> AddAssign for Vec3<T> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> SubAssign for Vec3<T> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T> Index<usize> for Vec3<T> {
    type Output = T;
    #[inline]
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

/// Row-major 3×3 matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mat3<T>(pub [[T; 3]; 3]);

impl<T: Real> Mat3<T> {
    pub fn zero() -> Self {
        Self([[T::zero(); 3]; 3])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            m.0[i][i] = T::one();
        }
        m
    }

    /// Outer product `a bᵀ`.
    pub fn outer(a: &Vec3<T>, b: &Vec3<T>) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = a.0[i] * b.0[j];
            }
        }
        m
    }

    /// Rotation by `angle` about the unit `axis` (right-hand rule).
    pub fn rotation(axis: &Vec3<T>, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let t = T::one() - c;
        let [x, y, z] = axis.0;
        Self([
            [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
            [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
            [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
        ])
    }

    /// The rotation carrying the unit vector `from` to the unit vector `to`
    /// about their common normal. Undefined for antipodal input.
    pub fn rotation_between(from: &Vec3<T>, to: &Vec3<T>) -> Self {
        let c = from.dot(to);
        let w = from.cross(to);
        let k = (T::one() + c).recip();
        let [x, y, z] = w.0;
        Self([
            [c + x * x * k, x * y * k - z, x * z * k + y],
            [y * x * k + z, c + y * y * k, y * z * k - x],
            [z * x * k - y, z * y * k + x, c + z * z * k],
        ])
    }

    #[inline]
    pub fn apply(&self, v: &Vec3<T>) -> Vec3<T> {
        let m = &self.0;
        Vec3([
            m[0][0] * v.0[0] + m[0][1] * v.0[1] + m[0][2] * v.0[2],
            m[1][0] * v.0[0] + m[1][1] * v.0[1] + m[1][2] * v.0[2],
            m[2][0] * v.0[0] + m[2][1] * v.0[1] + m[2][2] * v.0[2],
        ])
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    pub fn matmul(&self, o: &Self) -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[i][0] * o.0[0][j] + self.0[i][1] * o.0[1][j] + self.0[i][2] * o.0[2][j];
            }
        }
        m
    }

    /// Frobenius inner product `Σ aᵢⱼ bᵢⱼ`.
    pub fn frobenius_dot(&self, o: &Self) -> T {
        let mut acc = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                acc = acc + self.0[i][j] * o.0[i][j];
            }
        }
        acc
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut m = *self;
        for row in m.0.iter_mut() {
            for v in row.iter_mut() {
                *v = *v * s;
            }
        }
        m
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut m = *self;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = m.0[i][j] + o.0[i][j];
            }
        }
        m
    }
}

/// Symmetric-or-not 2×2 matrix in tangent-plane coordinates, row-major.
pub type Mat2<T> = [[T; 2]; 2];

pub(crate) fn mat2_mul<T: Real>(a: &Mat2<T>, b: &Mat2<T>) -> Mat2<T> {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

pub(crate) fn mat2_transpose<T: Real>(a: &Mat2<T>) -> Mat2<T> {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

/// Eigenvalues of a symmetric 2×2 matrix, ascending.
pub fn sym2_eigenvalues<T: Real>(a: &Mat2<T>) -> [T; 2] {
    let half = T::lit(0.5);
    let m = (a[0][0] + a[1][1]) * half;
    let off = (a[0][1] + a[1][0]) * half;
    let d = (a[0][0] - a[1][1]) * half;
    let r = (d * d + off * off).sqrt();
    [m - r, m + r]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_between_maps_endpoints() {
        let a = Vec3::new(1.0, 0.0, 0.0);
        let b = Vec3::new(0.0, 0.6, 0.8);
        let r = Mat3::rotation_between(&a, &b);
        assert!(r.apply(&a).max_abs_diff(&b) < 1e-15);
        let rt_r = r.transpose().matmul(&r);
        for i in 0..3 {
            for j in 0..3 {
                let e: f64 = if i == j { 1.0 } else { 0.0 };
                assert!((rt_r.0[i][j] - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rotation_about_z_quarter_turn() {
        let r = Mat3::rotation(&Vec3::new(0.0, 0.0, 1.0), std::f64::consts::FRAC_PI_2);
        let v = r.apply(&Vec3::new(1.0, 0.0, 0.0));
        assert!(v.max_abs_diff(&Vec3::new(0.0, 1.0, 0.0)) < 1e-15);
    }

    #[test]
    fn sym2_eigen_of_diagonal() {
        let e = sym2_eigenvalues(&[[3.0, 0.0], [0.0, -1.0]]);
        assert_eq!(e, [-1.0, 3.0]);
    }
}
