use core::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use crate::math;

/// A 3-vector of `f64`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0; 3]);

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    /// Unit vector along axis `k` (0, 1 or 2).
    #[inline]
    pub fn axis(k: usize) -> Self {
        let mut v = [0.0; 3];
        v[k] = 1.0;
        Vec3(v)
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    /// Cross product `self ∧ o`.
    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        let [a1, a2, a3] = self.0;
        let [b1, b2, b3] = o.0;
        Vec3([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1])
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        math::sqrt(self.norm_sq())
    }

    #[inline]
    pub fn max_abs(self) -> f64 {
        math::abs(self.0[0]).max(math::abs(self.0[1])).max(math::abs(self.0[2]))
    }

    /// Matrix of `v ↦ self ∧ v`, row-major.
    #[inline]
    pub fn cross_matrix(self) -> [[f64; 3]; 3] {
        let [a1, a2, a3] = self.0;
        [[0.0, -a3, a2], [a3, 0.0, -a1], [-a2, a1, 0.0]]
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl SubAssign for Vec3 {
    #[inline]
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    #[inline]
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(v: [f64; 3]) -> Self {
        Vec3(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_matrix_matches_cross() {
        let a = Vec3::new(0.3, -1.2, 2.0);
        let b = Vec3::new(-0.7, 0.4, 1.1);
        let m = a.cross_matrix();
        let mb = Vec3([
            m[0][0] * b[0] + m[0][1] * b[1] + m[0][2] * b[2],
            m[1][0] * b[0] + m[1][1] * b[1] + m[1][2] * b[2],
            m[2][0] * b[0] + m[2][1] * b[1] + m[2][2] * b[2],
        ]);
        assert!((mb - a.cross(b)).norm() < 1e-15);
    }

    #[test]
    fn right_handed() {
        assert_eq!(Vec3::axis(0).cross(Vec3::axis(1)), Vec3::axis(2));
    }
}
