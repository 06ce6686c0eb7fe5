//! Effective strains of rotation modes, strain-space dimensions, the
//! orthogonality relation between membrane and bending strains, and Poisson
//! coefficients.

use alloc::vec::Vec;

use faer::Mat;

use crate::chart::PeriodGeometry;
use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;
use crate::math;
use crate::solver::{DeflectionField, ModeClass, RotationMode, ThresholdPolicy};
use crate::tensor::Sym2;
use crate::vec3::Vec3;

/// Relative size of `W` up to which a mode still counts as periodic.
pub const PERIODIC_TOL: f64 = 1e-6;

/// Effective membrane strain `E` in the parameter basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveStrain {
    pub e: Sym2,
}

/// Effective bending strain `χ` in the parameter basis, with the normal used.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveBending {
    pub chi: Sym2,
    pub normal_used: Vec3,
}

/// Spans of the effective strains of a set of modes.
#[derive(Clone, Debug, PartialEq)]
pub struct StrainSpaces {
    /// Orthonormal weighted vectors `(·₁₁, √2·₁₂, ·₂₂)` spanning the membrane strains.
    pub e_basis: Vec<[f64; 3]>,
    pub chi_basis: Vec<[f64; 3]>,
    /// `(dim E, dim χ)`.
    pub dims: (usize, usize),
    /// Singular values of each stack, descending.
    pub e_singular: Vec<f64>,
    pub chi_singular: Vec<f64>,
}

/// `ṗ_α`: means of `w∧x_α` over the bilinear interpolant, where the rotation at
/// wrapped cell corners includes the growth `Ŵ`.
pub fn mean_rotation_cross(mode: &RotationMode, grid: &PeriodicGrid) -> Result<[Vec3; 2]> {
    if mode.w.len() != grid.len() {
        return Err(Error::FieldSize { expected: grid.len(), got: mode.w.len() });
    }
    let mut pdot = [Vec3::ZERO; 2];
    for cell in grid.cells() {
        let w: [Vec3; 4] = core::array::from_fn(|k| {
            let (id, shift) = cell.corners[k];
            let mut v = mode.w[id];
            for d in 0..2 {
                if shift[d] != 0 {
                    v += mode.growth[d] * shift[d] as f64;
                }
            }
            v
        });
        for gp in grid.gauss_points(&cell) {
            let mut wg = Vec3::ZERO;
            for k in 0..4 {
                wg += w[k] * gp.shape[k];
            }
            for (d, acc) in pdot.iter_mut().enumerate() {
                *acc += wg.cross(gp.partials[d]) * gp.weight;
            }
        }
    }
    Ok(pdot)
}

fn symmetric_pairing(p: [Vec3; 2], q: [Vec3; 2]) -> Sym2 {
    let c = |m: usize, n: usize| 0.5 * (p[m].dot(q[n]) + p[n].dot(q[m]));
    Sym2::new(c(0, 0), c(0, 1), c(1, 1))
}

/// Mean stretch `½(⟨p_μ,ṗ_ν⟩ + ⟨p_ν,ṗ_μ⟩)` of any mode, periodic or not.
pub fn mean_stretch(mode: &RotationMode, grid: &PeriodicGrid, geometry: &PeriodGeometry) -> Result<Sym2> {
    let pdot = mean_rotation_cross(mode, grid)?;
    Ok(symmetric_pairing([geometry.p1, geometry.p2], pdot))
}

/// Effective membrane strain of a periodic mode.
pub fn effective_membrane_strain(
    mode: &RotationMode,
    grid: &PeriodicGrid,
    geometry: &PeriodGeometry,
) -> Result<EffectiveStrain> {
    if !mode.is_periodic(PERIODIC_TOL) {
        let w = mode.rate(0).norm().max(mode.rate(1).norm());
        return Err(Error::NotMembrane(w));
    }
    Ok(EffectiveStrain { e: mean_stretch(mode, grid, geometry)? })
}

/// Effective bending strain `χ_{μν} = ½⟨W_ν∧p_μ + W_μ∧p_ν, n⟩`.
pub fn effective_bending_strain(mode: &RotationMode, geometry: &PeriodGeometry) -> EffectiveBending {
    let n = geometry.normal;
    let w = [mode.rate(0), mode.rate(1)];
    let c = |m: usize, k: usize| 0.5 * (w[k].cross(geometry.p(m)).dot(n) + w[m].cross(geometry.p(k)).dot(n));
    EffectiveBending { chi: Sym2::new(c(0, 0), c(0, 1), c(1, 1)), normal_used: n }
}

/// Pointwise infinitesimal strain `ε_{μν} = ½(⟨ẋ_μ,x_ν⟩ + ⟨ẋ_ν,x_μ⟩)` of a deflection.
pub fn membrane_strain_field(deflection: &DeflectionField, grid: &PeriodicGrid) -> Vec<Sym2> {
    let d = [deflection.derivative(grid, 0), deflection.derivative(grid, 1)];
    grid.partials()
        .iter()
        .enumerate()
        .map(|(i, x)| symmetric_pairing(*x, [d[0][i], d[1][i]]))
        .collect()
}

/// `E₁₁χ₂₂ − 2E₁₂χ₁₂ + E₂₂χ₁₁`.
pub fn orthogonality_residual(e: Sym2, chi: Sym2) -> f64 {
    e.xx * chi.yy - 2.0 * e.xy * chi.xy + e.yy * chi.xx
}

/// The same quantity as `tr(adj(E) χ)`.
pub fn orthogonality_residual_adj(e: Sym2, chi: Sym2) -> f64 {
    e.adjugate().trace_product(chi)
}

/// Numerical rank of descending singular values under a gap policy.
fn numerical_rank(singular: &[f64], policy: ThresholdPolicy) -> Result<usize> {
    let top = match singular.first() {
        Some(&s) if s > 0.0 => s,
        _ => return Ok(0),
    };
    let rel: Vec<f64> = singular.iter().map(|s| s / top).collect();
    match policy {
        ThresholdPolicy::Fixed(tau) => Ok(rel.iter().filter(|r| **r > tau).count()),
        ThresholdPolicy::Auto { min_gap, .. } => {
            let mut best = (1.0, rel.len());
            for k in 1..rel.len() {
                let ratio = rel[k - 1] / rel[k].max(f64::MIN_POSITIVE);
                if ratio > best.0 {
                    best = (ratio, k);
                }
            }
            if best.0 >= min_gap {
                Ok(best.1)
            } else if rel.last().is_some_and(|r| *r * min_gap >= 1.0) {
                // no gap at all and nothing small: full rank
                Ok(rel.len())
            } else {
                Err(Error::AmbiguousGap { spectrum: rel })
            }
        }
    }
}

fn span(vectors: &[[f64; 3]], policy: ThresholdPolicy) -> Result<(Vec<[f64; 3]>, Vec<f64>)> {
    if vectors.is_empty() {
        return Ok((Vec::new(), Vec::new()));
    }
    // Gram of the 3-dimensional strain space avoids the tall stack
    let mut gram = Mat::<f64>::zeros(3, 3);
    for v in vectors {
        for a in 0..3 {
            for b in 0..3 {
                gram[(a, b)] += v[a] * v[b];
            }
        }
    }
    let evd = gram
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Factorization(alloc::format!("{e:?}")))?;
    let count = vectors.len().min(3);
    let singular: Vec<f64> = (0..count).map(|k| math::sqrt(evd.S()[2 - k].max(0.0))).collect();
    let rank = numerical_rank(&singular, policy)?;
    let u = evd.U();
    let basis = (0..rank)
        .map(|k| {
            let c = 2 - k;
            let mut v = [u[(0, c)], u[(1, c)], u[(2, c)]];
            let big = v.iter().copied().fold(0.0, |m: f64, x| if x.abs() > m.abs() { x } else { m });
            if big < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();
    Ok((basis, singular))
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = math::sqrt(v.iter().map(|x| x * x).sum());
    if n > 0.0 {
        v.map(|x| x / n)
    } else {
        v
    }
}

/// Strain-space dimensions of a mode set. Membrane strains come from periodic
/// non-constant modes; bending strains from all modes with growth.
pub fn strain_space_dims(
    modes: &[RotationMode],
    grid: &PeriodicGrid,
    geometry: &PeriodGeometry,
    policy: ThresholdPolicy,
) -> Result<StrainSpaces> {
    let mut es = Vec::new();
    let mut chis = Vec::new();
    for m in modes {
        if m.class == ModeClass::Constant {
            continue;
        }
        if m.is_periodic(PERIODIC_TOL) {
            es.push(unit(effective_membrane_strain(m, grid, geometry)?.e.to_weighted()));
        } else {
            chis.push(unit(effective_bending_strain(m, geometry).chi.to_weighted()));
        }
    }
    let (e_basis, e_singular) = span(&es, policy)?;
    let (chi_basis, chi_singular) = span(&chis, policy)?;
    Ok(StrainSpaces { dims: (e_basis.len(), chi_basis.len()), e_basis, chi_basis, e_singular, chi_singular })
}

/// A ratio of principal strains, or the reason it is undefined.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ratio {
    Value(f64),
    /// The denominator is below tolerance relative to the tensor's size.
    Undefined { numerator: f64, denominator: f64 },
}

impl Ratio {
    fn of(num: f64, den: f64, scale: f64) -> Ratio {
        if math::abs(den) > 1e-9 * scale {
            Ratio::Value(-num / den)
        } else {
            Ratio::Undefined { numerator: num, denominator: den }
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Ratio::Value(v) => Some(v),
            Ratio::Undefined { .. } => None,
        }
    }
}

/// Poisson coefficients in an orthonormal principal frame of `E`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoissonRatios {
    /// `−E₂₂/E₁₁`.
    pub in_plane: Ratio,
    /// `−χ₂₂/χ₁₁`.
    pub out_of_plane: Ratio,
    /// Angle of the first principal axis from `p₁/‖p₁‖` in the period plane.
    pub angle: f64,
    pub e_principal: Sym2,
    pub chi_principal: Sym2,
}

/// Poisson coefficients of a membrane/bending pair. The first principal axis
/// is the one with the larger `|E|` eigenvalue.
pub fn poisson_ratios(e: Sym2, chi: Sym2, geometry: &PeriodGeometry) -> Result<PoissonRatios> {
    let (eo, co) = (geometry.to_orthonormal(e), geometry.to_orthonormal(chi));
    if !(eo.frobenius() > 0.0) {
        return Err(Error::DegenerateGeometry);
    }
    let mut angle = eo.principal_angle();
    let mut ep = eo.rotated(angle);
    if math::abs(ep.yy) > math::abs(ep.xx) {
        angle += 0.5 * math::PI;
        ep = eo.rotated(angle);
    }
    let cp = co.rotated(angle);
    Ok(PoissonRatios {
        in_plane: Ratio::of(ep.yy, ep.xx, ep.frobenius()),
        out_of_plane: Ratio::of(cp.yy, cp.xx, cp.frobenius()),
        angle,
        e_principal: ep,
        chi_principal: cp,
    })
}

/// One membrane/bending pair and its orthogonality residual.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairResidual {
    pub membrane: usize,
    pub bending: usize,
    pub e: Sym2,
    pub chi: Sym2,
    pub residual: f64,
    /// `|residual| / (‖E‖_F ‖χ‖_F)`.
    pub relative: f64,
}

/// Orthogonality residuals over all (membrane, bending) pairs of a mode set,
/// indexed into `modes`.
pub fn pair_residuals(modes: &[RotationMode], grid: &PeriodicGrid, geometry: &PeriodGeometry) -> Result<Vec<PairResidual>> {
    let mut out = Vec::new();
    for (i, m) in modes.iter().enumerate() {
        if m.class != ModeClass::Membrane {
            continue;
        }
        let e = effective_membrane_strain(m, grid, geometry)?.e;
        for (j, b) in modes.iter().enumerate() {
            if !matches!(b.class, ModeClass::Bending | ModeClass::Mixed) {
                continue;
            }
            let chi = effective_bending_strain(b, geometry).chi;
            let residual = orthogonality_residual(e, chi);
            let scale = e.frobenius() * chi.frobenius();
            let relative = if scale > 0.0 { math::abs(residual) / scale } else { 0.0 };
            out.push(PairResidual { membrane: i, bending: j, e, chi, residual, relative });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{Profile, SurfaceChart};
    use crate::math::TAU;
    use crate::solver::recover_deflection;
    use alloc::vec;
    use proptest::prelude::*;

    fn sgn() -> Profile {
        Profile::sgn_cos(1.0, TAU).unwrap()
    }

    fn mode_from(grid: &PeriodicGrid, f: impl Fn(usize) -> Vec3, growth: [Vec3; 2]) -> RotationMode {
        RotationMode::new((0..grid.len()).map(f).collect(), growth, grid.chart().period())
    }

    #[test]
    fn corrugation_membrane_mode() {
        let f = sgn();
        let chart = SurfaceChart::simple_corrugation(f.clone(), TAU).unwrap();
        let g = PeriodicGrid::build(&chart, [32, 8]).unwrap();
        let geo = chart.period_geometry().unwrap();
        let nodes = g.nodes();
        let m = mode_from(&g, |i| Vec3::new(0.0, f.slope(nodes[i].xi[0], nodes[i].sel.0), 0.0), [Vec3::ZERO; 2]);
        let e = effective_membrane_strain(&m, &g, &geo).unwrap().e;
        assert!(e.sub(Sym2::diag(1.0, 0.0)).frobenius() < 1e-13, "{e:?}");
    }

    #[test]
    fn constant_rotation_has_no_strain() {
        let chart = SurfaceChart::double_corrugation(sgn(), sgn()).unwrap();
        let g = PeriodicGrid::build(&chart, [16, 16]).unwrap();
        let geo = chart.period_geometry().unwrap();
        let m = mode_from(&g, |_| Vec3::new(0.3, -1.2, 0.7), [Vec3::ZERO; 2]);
        assert!(effective_membrane_strain(&m, &g, &geo).unwrap().e.frobenius() < 1e-14);
        assert_eq!(effective_bending_strain(&m, &geo).chi, Sym2::ZERO);
    }

    #[test]
    fn growing_mode_is_not_membrane() {
        let chart = SurfaceChart::plane([TAU, TAU]).unwrap();
        let g = PeriodicGrid::build(&chart, [8, 8]).unwrap();
        let geo = chart.period_geometry().unwrap();
        let m = mode_from(&g, |_| Vec3::ZERO, [Vec3::new(0.0, -TAU, 0.0), Vec3::ZERO]);
        assert!(matches!(effective_membrane_strain(&m, &g, &geo), Err(Error::NotMembrane(_))));
    }

    #[test]
    fn plane_bending_example() {
        // w = (0, −ξ₁, 0)
        let geo = SurfaceChart::plane([TAU, TAU]).unwrap().period_geometry().unwrap();
        let m = RotationMode::new(vec![], [Vec3::new(0.0, -TAU, 0.0), Vec3::ZERO], [TAU, TAU]);
        let b = effective_bending_strain(&m, &geo);
        assert!(b.chi.sub(Sym2::diag(1.0, 0.0)).frobenius() < 1e-15);
        assert_eq!(b.normal_used, Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn residual_examples() {
        assert_eq!(orthogonality_residual(Sym2::diag(1.0, -1.0), Sym2::diag(1.0, 1.0)), 0.0);
        assert_eq!(orthogonality_residual(Sym2::diag(1.0, 0.0), Sym2::diag(0.0, 1.0)), 1.0);
        assert_eq!(orthogonality_residual(Sym2::diag(1.0, 1.0), Sym2::offdiag(1.0)), 0.0);
    }

    #[test]
    fn rigid_rotation_deflection_is_unstrained() {
        let chart = SurfaceChart::double_corrugation(sgn(), sgn()).unwrap();
        let g = PeriodicGrid::build(&chart, [16, 16]).unwrap();
        let m = mode_from(&g, |_| Vec3::new(0.2, 0.5, -0.1), [Vec3::ZERO; 2]);
        let d = recover_deflection(&m, &g).unwrap();
        let worst = membrane_strain_field(&d, &g).iter().map(|e| e.frobenius()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn poisson_examples() {
        let geo = SurfaceChart::plane([TAU, TAU]).unwrap().period_geometry().unwrap();
        let r = poisson_ratios(Sym2::diag(1.0, -1.0), Sym2::diag(1.0, 1.0), &geo).unwrap();
        assert!((r.in_plane.value().unwrap() - 1.0).abs() < 1e-14);
        assert!((r.out_of_plane.value().unwrap() + 1.0).abs() < 1e-14);
        let r = poisson_ratios(Sym2::diag(1.0, 0.0), Sym2::diag(1.0, 0.0), &geo).unwrap();
        assert_eq!(r.in_plane.value(), Some(0.0));
        assert_eq!(r.out_of_plane.value(), Some(0.0));
        let r = poisson_ratios(Sym2::diag(1.0, 0.0), Sym2::diag(0.0, 1.0), &geo).unwrap();
        assert!(r.out_of_plane.value().is_none());
    }

    #[test]
    fn rank_policy() {
        let p = ThresholdPolicy::default();
        assert_eq!(numerical_rank(&[], p).unwrap(), 0);
        assert_eq!(numerical_rank(&[1.0, 0.5, 1e-9], p).unwrap(), 2);
        assert_eq!(numerical_rank(&[1.0, 0.5, 0.2], p).unwrap(), 3);
        assert!(numerical_rank(&[1.0, 0.1, 0.003], p).is_err());
        assert_eq!(numerical_rank(&[1.0, 0.1, 0.003], ThresholdPolicy::Fixed(0.01)).unwrap(), 2);
    }

    proptest! {
        #[test]
        fn residual_forms_agree(e in prop::array::uniform3(-10.0..10.0f64), c in prop::array::uniform3(-10.0..10.0f64)) {
            let (e, c) = (Sym2::new(e[0], e[1], e[2]), Sym2::new(c[0], c[1], c[2]));
            let a = orthogonality_residual(e, c);
            let b = orthogonality_residual_adj(e, c);
            prop_assert!((a - b).abs() <= 1e-14 * (1.0 + e.frobenius() * c.frobenius()));
        }

        #[test]
        fn residual_is_congruence_covariant(
            e in prop::array::uniform3(-3.0..3.0f64),
            c in prop::array::uniform3(-3.0..3.0f64),
            m in prop::array::uniform4(-2.0..2.0f64),
        ) {
            // tr(adj(SᵀES) SᵀχS) = det(S)² tr(adj(E)χ)
            let s = [[m[0], m[1]], [m[2], m[3]]];
            let det = m[0] * m[3] - m[1] * m[2];
            let (e, c) = (Sym2::new(e[0], e[1], e[2]), Sym2::new(c[0], c[1], c[2]));
            let lhs = orthogonality_residual(e.congruence(s), c.congruence(s));
            prop_assert!((lhs - det * det * orthogonality_residual(e, c)).abs() < 1e-10);
        }

        #[test]
        fn flipping_normal_flips_chi(w in prop::array::uniform3(-2.0..2.0f64), v in prop::array::uniform3(-2.0..2.0f64)) {
            let geo = PeriodGeometry::new(Vec3::new(1.0, 0.0, 0.3), Vec3::new(0.1, 1.0, -0.2)).unwrap();
            let flipped = PeriodGeometry { normal: -geo.normal, ..geo };
            let m = RotationMode::new(vec![], [Vec3::from(w), Vec3::from(v)], [1.0, 2.0]);
            let a = effective_bending_strain(&m, &geo).chi;
            let b = effective_bending_strain(&m, &flipped).chi;
            prop_assert!(a.add(b).frobenius() < 1e-14);
        }
    }
}
