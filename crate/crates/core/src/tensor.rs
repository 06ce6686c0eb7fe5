use crate::math;

/// Symmetric 2×2 tensor with components `xx = ·₁₁`, `xy = ·₁₂ = ·₂₁`, `yy = ·₂₂`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 { xx: 0.0, xy: 0.0, yy: 0.0 };

    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Sym2 { xx, xy, yy }
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Sym2 { xx: a, xy: 0.0, yy: b }
    }

    pub const fn offdiag(c: f64) -> Self {
        Sym2 { xx: 0.0, xy: c, yy: 0.0 }
    }

    /// Vectorization `(·₁₁, √2·₁₂, ·₂₂)`; its Euclidean norm is the Frobenius norm.
    pub fn to_weighted(self) -> [f64; 3] {
        [self.xx, core::f64::consts::SQRT_2 * self.xy, self.yy]
    }

    pub fn from_weighted(v: [f64; 3]) -> Self {
        Sym2 { xx: v[0], xy: v[1] / core::f64::consts::SQRT_2, yy: v[2] }
    }

    pub fn frobenius(self) -> f64 {
        math::sqrt(self.xx * self.xx + 2.0 * self.xy * self.xy + self.yy * self.yy)
    }

    pub fn det(self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn trace(self) -> f64 {
        self.xx + self.yy
    }

    /// Adjugate `[[yy, −xy], [−xy, xx]]`.
    pub fn adjugate(self) -> Sym2 {
        Sym2 { xx: self.yy, xy: -self.xy, yy: self.xx }
    }

    /// `tr(self · other)` for two symmetric matrices.
    pub fn trace_product(self, other: Sym2) -> f64 {
        self.xx * other.xx + 2.0 * self.xy * other.xy + self.yy * other.yy
    }

    pub fn scale(self, s: f64) -> Sym2 {
        Sym2 { xx: self.xx * s, xy: self.xy * s, yy: self.yy * s }
    }

    pub fn add(self, o: Sym2) -> Sym2 {
        Sym2 { xx: self.xx + o.xx, xy: self.xy + o.xy, yy: self.yy + o.yy }
    }

    pub fn sub(self, o: Sym2) -> Sym2 {
        self.add(o.scale(-1.0))
    }

    /// Congruence `Mᵀ · self · M` with `m` row-major.
    pub fn congruence(self, m: [[f64; 2]; 2]) -> Sym2 {
        let a = [[self.xx, self.xy], [self.xy, self.yy]];
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, o) in row.iter_mut().enumerate() {
                let mut s = 0.0;
                for k in 0..2 {
                    for l in 0..2 {
                        s += m[k][i] * a[k][l] * m[l][j];
                    }
                }
                *o = s;
            }
        }
        Sym2 { xx: out[0][0], xy: 0.5 * (out[0][1] + out[1][0]), yy: out[1][1] }
    }

    /// Angle θ of the first principal axis `(cos θ, sin θ)`.
    ///
    /// For a diagonal tensor with `xx ≥ yy` this is 0, so the parameter axes are kept.
    pub fn principal_angle(self) -> f64 {
        0.5 * math::atan2(2.0 * self.xy, self.xx - self.yy)
    }

    /// Components in the basis rotated by `theta`.
    pub fn rotated(self, theta: f64) -> Sym2 {
        let (s, c) = (math::sin(theta), math::cos(theta));
        self.congruence([[c, -s], [s, c]])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjugate_trace_equals_index_form() {
        let e = Sym2::new(1.3, -0.4, 0.7);
        let c = Sym2::new(-0.2, 0.9, 2.1);
        let index_form = e.xx * c.yy - 2.0 * e.xy * c.xy + e.yy * c.xx;
        assert!((e.adjugate().trace_product(c) - index_form).abs() < 1e-15);
    }

    #[test]
    fn principal_rotation_diagonalizes() {
        let e = Sym2::new(0.3, 0.8, -1.1);
        let d = e.rotated(e.principal_angle());
        assert!(d.xy.abs() < 1e-14);
        assert!(d.xx >= d.yy);
        assert!((d.trace() - e.trace()).abs() < 1e-14);
    }

    #[test]
    fn weighted_norm_is_frobenius() {
        let e = Sym2::new(1.0, 2.0, 3.0);
        let v = e.to_weighted();
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        assert!((n - e.frobenius()).abs() < 1e-14);
        let back = Sym2::from_weighted(v);
        assert!(back.sub(e).frobenius() < 1e-15);
    }
}
