//! Closed-form modes of the classical examples and independent checks: the
//! symmetry of `⟨ω, D_x w⟩` by quadrature, the scaling limit of bending
//! deflections, and the shear reparametrization of the eggbox strains.
//!
//! Integrals of profiles use exact piecewise antiderivatives; nothing here goes
//! through the grid stencils or the solver.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chart::{Family, PanelSelector, Profile, Side, SpaceCurve, SurfaceChart};
use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;
use crate::math;
use crate::solver::{DeflectionField, RotationMode};
use crate::strains::orthogonality_residual;
use crate::tensor::Sym2;
use crate::vec3::Vec3;

/// The closed-form modes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Example {
    /// Plane, `ẋ = (0, 0, ½χ_{μν}ξ_μξ_ν)`.
    PlaneBend(Sym2),
    /// Simple corrugation, `ẋ = (∫f′², 0, −f)`.
    CorrugationMembrane,
    /// Double corrugation, `ẋ = (∫f′², −∫g′², g − f)`.
    EggboxMembrane,
    /// Miura-like, `ẋ = (∫f′², ξ₂ − f, −∫1/g′)`.
    MiuraMembrane,
    /// Any surface of translation `α(ξ₁) + β(ξ₂)`, `w = α − β`.
    TranslationTwist,
    /// Sheared double corrugation, the eggbox mode in sheared coordinates.
    ShearedMembrane,
}

impl Example {
    pub fn name(self) -> &'static str {
        match self {
            Example::PlaneBend(_) => "plane-bend",
            Example::CorrugationMembrane => "corrugation-membrane",
            Example::EggboxMembrane => "eggbox-membrane",
            Example::MiuraMembrane => "miura-membrane",
            Example::TranslationTwist => "translation-twist",
            Example::ShearedMembrane => "sheared-membrane",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Data {
    Plane(Sym2),
    Corrugation(Profile),
    Eggbox(Profile, Profile),
    Miura(Profile, Profile),
    Twist { alpha: SpaceCurve, beta: SpaceCurve, moments: [Vec3; 2] },
    Sheared(Profile, Profile, f64),
}

/// A closed-form infinitesimal isometry with its predicted effective strains.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticMode {
    pub example: Example,
    pub predicted_e: Option<Sym2>,
    pub predicted_chi: Option<Sym2>,
    chart: SurfaceChart,
    data: Data,
}

fn unsupported(example: Example, reason: &'static str) -> Error {
    Error::UnsupportedExample { example: example.name(), reason }
}

/// Builds the closed-form mode of `example` on `chart`.
pub fn analytic_mode(example: Example, chart: &SurfaceChart) -> Result<AnalyticMode> {
    let family = chart.family();
    let (f, g) = chart.profiles();
    let (data, e, chi) = match example {
        Example::PlaneBend(chi) => {
            if family != Family::Plane {
                return Err(unsupported(example, "needs the plane"));
            }
            (Data::Plane(chi), None, Some(chi))
        }
        Example::CorrugationMembrane => {
            let f = f.filter(|_| family == Family::SimpleCorrugation);
            let f = f.ok_or_else(|| unsupported(example, "needs a simple corrugation"))?;
            (Data::Corrugation(f.clone()), Some(Sym2::diag(f.mean_slope_sq(), 0.0)), None)
        }
        Example::EggboxMembrane => match (family, f, g) {
            (Family::DoubleCorrugation, Some(f), Some(g)) => {
                let e = Sym2::diag(f.mean_slope_sq(), -g.mean_slope_sq());
                (Data::Eggbox(f.clone(), g.clone()), Some(e), None)
            }
            _ => return Err(unsupported(example, "needs a double corrugation")),
        },
        Example::MiuraMembrane => match (family, f, g) {
            (Family::MiuraLike, Some(f), Some(g)) => {
                // the deflection needs ∫1/g′, finite only for slopes bounded away from 0
                g.recip_slope_integral(g.period())?;
                let e = Sym2::diag(f.mean_slope_sq(), 1.0);
                (Data::Miura(f.clone(), g.clone()), Some(e), None)
            }
            _ => return Err(unsupported(example, "needs a Miura-like surface")),
        },
        Example::TranslationTwist => {
            let (alpha, beta) =
                chart.as_translation().ok_or_else(|| unsupported(example, "needs a surface of translation"))?;
            let (p1, p2) = (alpha.mean_tangent(), beta.mean_tangent());
            let chi = Sym2::offdiag(p1.cross(p2).norm());
            let moments = [curve_moment_period(&alpha), curve_moment_period(&beta)];
            (Data::Twist { alpha, beta, moments }, None, Some(chi))
        }
        Example::ShearedMembrane => match (family, f, g, chart.gamma()) {
            (Family::ShearedDoubleCorrugation, Some(f), Some(g), Some(gamma)) => {
                let e = sheared_strain(f.mean_slope_sq(), g.mean_slope_sq(), gamma);
                (Data::Sheared(f.clone(), g.clone(), gamma), Some(e), None)
            }
            _ => return Err(unsupported(example, "needs a sheared double corrugation")),
        },
    };
    Ok(AnalyticMode { example, predicted_e: e, predicted_chi: chi, chart: chart.clone(), data })
}

/// `Sᵀ diag(F, −G) S` with `S = [[1, 0], [γ, 1]]`.
pub fn sheared_strain(f_sq: f64, g_sq: f64, gamma: f64) -> Sym2 {
    Sym2::diag(f_sq, -g_sq).congruence([[1.0, 0.0], [gamma, 1.0]])
}

// 5-point Gauss-Legendre on [0, 1].
const GL_NODES: [f64; 5] = [
    0.046_910_077_030_668_0,
    0.230_765_344_947_158_5,
    0.5,
    0.769_234_655_052_841_5,
    0.953_089_922_969_332,
];
const GL_WEIGHTS: [f64; 5] = [
    0.118_463_442_528_094_5,
    0.239_314_335_249_683_2,
    0.284_444_444_444_444_4,
    0.239_314_335_249_683_2,
    0.118_463_442_528_094_5,
];

/// Subintervals per period for smooth pieces of a curve.
const MOMENT_SUBDIVISION: usize = 32;

/// `∫_a^b α∧α′` on a span where `α` is smooth.
fn moment_span(curve: &SpaceCurve, a: f64, b: f64) -> Vec3 {
    let mut acc = Vec3::ZERO;
    let steps = 1 + ((b - a) / curve.period() * MOMENT_SUBDIVISION as f64) as usize;
    let h = (b - a) / steps as f64;
    for s in 0..steps {
        for (t, wgt) in GL_NODES.iter().zip(GL_WEIGHTS) {
            let x = a + h * (s as f64 + t);
            acc += curve.point(x).cross(curve.tangent(x, Side::Plus)) * (wgt * h);
        }
    }
    acc
}

/// `∫_0^r α∧α′` for `0 ≤ r ≤ T`, split at the curve's junctions.
fn moment_in_period(curve: &SpaceCurve, r: f64) -> Vec3 {
    let mut cuts: Vec<f64> = curve.junctions().iter().map(|j| j.coord).filter(|c| *c > 0.0 && *c < r).collect();
    cuts.sort_by(f64::total_cmp);
    let mut acc = Vec3::ZERO;
    let mut a = 0.0;
    for c in cuts.into_iter().chain(core::iter::once(r)) {
        if c > a {
            acc += moment_span(curve, a, c);
        }
        a = c;
    }
    acc
}

fn curve_moment_period(curve: &SpaceCurve) -> Vec3 {
    moment_in_period(curve, curve.period())
}

/// `∫_0^ξ α∧α′` for any `ξ`, using `∫_0^{nT+r} = nP + ∫_0^r + n D∧(α(r) − α(0))`
/// with `P` the moment over one period and `D = α(T) − α(0)`.
fn curve_moment(curve: &SpaceCurve, period_moment: Vec3, xi: f64) -> Vec3 {
    let t = curve.period();
    let n = math::floor(xi / t);
    let r = xi - n * t;
    let d = curve.point(t) - curve.point(0.0);
    period_moment * n + moment_in_period(curve, r) + d.cross(curve.point(r) - curve.point(0.0)) * n
}

impl AnalyticMode {
    pub fn chart(&self) -> &SurfaceChart {
        &self.chart
    }

    /// Rotation field `w(ξ)` on the panel picked by `sel`.
    pub fn rotation(&self, xi: [f64; 2], sel: PanelSelector) -> Vec3 {
        let [a, b] = xi;
        let PanelSelector(s1, s2) = sel;
        match &self.data {
            Data::Plane(c) => Vec3::new(c.xy * a + c.yy * b, -c.xx * a - c.xy * b, 0.0),
            Data::Corrugation(f) => Vec3::new(0.0, f.slope(a, s1), 0.0),
            Data::Eggbox(f, g) => {
                let (fp, gp) = (f.slope(a, s1), g.slope(b, s2));
                Vec3::new(gp, fp, fp * gp)
            }
            Data::Miura(f, g) => {
                let (fp, gp) = (f.slope(a, s1), g.slope(b, s2));
                Vec3::new(-1.0 / gp, -fp / gp, -fp)
            }
            Data::Twist { alpha, beta, .. } => alpha.point(a) - beta.point(b),
            Data::Sheared(f, g, gamma) => {
                let (fp, gp) = (f.slope(a, s1), g.slope(b + gamma * a, s2));
                Vec3::new(gp, fp, fp * gp)
            }
        }
    }

    /// Deflection `ẋ(ξ)`, with `ẋ(0) = 0` for the membrane examples.
    pub fn deflection(&self, xi: [f64; 2]) -> Result<Vec3> {
        let [a, b] = xi;
        Ok(match &self.data {
            Data::Plane(c) => Vec3::new(0.0, 0.0, 0.5 * (c.xx * a * a + 2.0 * c.xy * a * b + c.yy * b * b)),
            Data::Corrugation(f) => Vec3::new(f.slope_sq_integral(a), 0.0, -f.value(a)),
            Data::Eggbox(f, g) => {
                Vec3::new(f.slope_sq_integral(a), -g.slope_sq_integral(b), g.value(b) - f.value(a))
            }
            Data::Miura(f, g) => {
                Vec3::new(f.slope_sq_integral(a), b - f.value(a), -g.recip_slope_integral(b)?)
            }
            Data::Twist { alpha, beta, moments } => {
                // ∂₁ = α′∧β + α∧α′ = w∧α′, ∂₂ = α∧β′ − β∧β′ = w∧β′
                alpha.point(a).cross(beta.point(b)) + curve_moment(alpha, moments[0], a)
                    - curve_moment(beta, moments[1], b)
            }
            Data::Sheared(f, g, gamma) => {
                let eta = b + gamma * a;
                Vec3::new(f.slope_sq_integral(a), -g.slope_sq_integral(eta), g.value(eta) - f.value(a))
            }
        })
    }

    /// Growth of `w` over one period along each axis, `Ŵ_α = w(ξ + T_α e_α) − w(ξ)`.
    pub fn rotation_growth(&self) -> [Vec3; 2] {
        let [t1, t2] = self.chart.period();
        let probe = [0.37 * t1, 0.61 * t2];
        let w0 = self.rotation(probe, PanelSelector::PLUS);
        [
            self.rotation([probe[0] + t1, probe[1]], PanelSelector::PLUS) - w0,
            self.rotation([probe[0], probe[1] + t2], PanelSelector::PLUS) - w0,
        ]
    }

    /// `W_α = Ŵ_α / T_α`.
    pub fn rotation_rate(&self) -> [Vec3; 2] {
        let t = self.chart.period();
        let g = self.rotation_growth();
        [g[0] * (1.0 / t[0]), g[1] * (1.0 / t[1])]
    }

    /// The rotation field sampled at the grid nodes, each on its own panel.
    pub fn sample_rotation(&self, grid: &PeriodicGrid) -> RotationMode {
        let w = grid.nodes().iter().map(|n| self.rotation(n.xi, n.sel)).collect();
        RotationMode::new(w, self.rotation_growth(), self.chart.period())
    }

    /// The deflection sampled at the grid nodes with its quasi-periodicity data.
    pub fn sample_deflection(&self, grid: &PeriodicGrid) -> Result<DeflectionField> {
        let values = grid.nodes().iter().map(|n| self.deflection(n.xi)).collect::<Result<Vec<_>>>()?;
        let [t1, t2] = self.chart.period();
        let growth = self.rotation_growth();
        let probe = [0.37 * t1, 0.61 * t2];
        let (x0, d0) = (self.chart.position(probe), self.deflection(probe)?);
        let offsets = [
            self.deflection([probe[0] + t1, probe[1]])? - d0 - growth[0].cross(x0),
            self.deflection([probe[0], probe[1] + t2])? - d0 - growth[1].cross(x0),
        ];
        let lattice = [self.chart.lattice_vector(0), self.chart.lattice_vector(1)];
        Ok(DeflectionField { values, growth, offsets, lattice })
    }
}

/// One harmonic `a cos(k·ξ) + b sin(k·ξ)` with `k = 2π(m₁/T₁, m₂/T₂)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Harmonic {
    pub m: [i32; 2],
    pub a: f64,
    pub b: f64,
}

/// A periodic vector field given by a truncated trigonometric series per component.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigField {
    pub period: [f64; 2],
    pub components: [Vec<Harmonic>; 3],
}

impl TrigField {
    pub fn constant(c: Vec3, period: [f64; 2]) -> Self {
        let h = |v: f64| alloc::vec![Harmonic { m: [0, 0], a: v, b: 0.0 }];
        TrigField { period, components: [h(c[0]), h(c[1]), h(c[2])] }
    }

    /// `harmonics` random harmonics per component with wave numbers `|m_i| ≤ 3`
    /// and coefficients uniform in `[−1, 1]`.
    pub fn random(rng: &mut ChaCha8Rng, harmonics: usize, period: [f64; 2]) -> Self {
        let mut comp = || {
            (0..harmonics)
                .map(|_| Harmonic {
                    m: [rng.random_range(-3..=3), rng.random_range(-3..=3)],
                    a: rng.random_range(-1.0..=1.0),
                    b: rng.random_range(-1.0..=1.0),
                })
                .collect::<Vec<_>>()
        };
        TrigField { period, components: [comp(), comp(), comp()] }
    }

    fn phase(&self, h: &Harmonic, xi: [f64; 2]) -> (f64, [f64; 2]) {
        let k = [
            math::TAU * h.m[0] as f64 / self.period[0],
            math::TAU * h.m[1] as f64 / self.period[1],
        ];
        (k[0] * xi[0] + k[1] * xi[1], k)
    }

    pub fn value(&self, xi: [f64; 2]) -> Vec3 {
        let mut v = Vec3::ZERO;
        for (c, comp) in self.components.iter().enumerate() {
            for h in comp {
                let (p, _) = self.phase(h, xi);
                v.0[c] += h.a * math::cos(p) + h.b * math::sin(p);
            }
        }
        v
    }

    pub fn derivative(&self, xi: [f64; 2], direction: usize) -> Vec3 {
        let mut v = Vec3::ZERO;
        for (c, comp) in self.components.iter().enumerate() {
            for h in comp {
                let (p, k) = self.phase(h, xi);
                v.0[c] += k[direction] * (h.b * math::cos(p) - h.a * math::sin(p));
            }
        }
        v
    }
}

/// Both sides of the symmetry identity and the scale they are compared at.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LemmaSides {
    /// Mean of `⟨ω, D_x w⟩`.
    pub lhs: f64,
    /// Mean of `⟨w, D_x ω⟩`.
    pub rhs: f64,
    /// Mean of `|ω||D_x w| + |w||D_x ω|`.
    pub scale: f64,
}

fn d_x(field: &TrigField, xi: [f64; 2], x: [Vec3; 2]) -> Vec3 {
    field.derivative(xi, 1).cross(x[0]) - field.derivative(xi, 0).cross(x[1])
}

/// Evaluates `⟨ω, D_x w⟩` and `⟨w, D_x ω⟩` by the trapezoid rule on an `n × n`
/// grid of one period of a crease-free chart.
pub fn symmetry_lemma_check(chart: &SurfaceChart, omega: &TrigField, w: &TrigField, n: usize) -> Result<LemmaSides> {
    if !chart.crease_lines()?.is_empty() {
        return Err(Error::UnsupportedExample {
            example: "symmetry-lemma",
            reason: "random fields are admissible only on crease-free charts",
        });
    }
    let [t1, t2] = chart.period();
    let (mut lhs, mut rhs, mut scale) = (0.0, 0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            let xi = [t1 * i as f64 / n as f64, t2 * j as f64 / n as f64];
            let x = chart.partials(xi, PanelSelector::PLUS)?;
            let (o, v) = (omega.value(xi), w.value(xi));
            let (dw, dom) = (d_x(w, xi, x), d_x(omega, xi, x));
            lhs += o.dot(dw);
            rhs += v.dot(dom);
            scale += o.norm() * dw.norm() + v.norm() * dom.norm();
        }
    }
    let q = 1.0 / (n * n) as f64;
    Ok(LemmaSides { lhs: lhs * q, rhs: rhs * q, scale: scale * q })
}

/// Runs the symmetry check on `pairs` seeded random field pairs.
pub fn seeded_lemma_checks(chart: &SurfaceChart, seed: u64, pairs: usize, harmonics: usize, n: usize) -> Result<Vec<LemmaSides>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let period = chart.period();
    (0..pairs)
        .map(|_| {
            let omega = TrigField::random(&mut rng, harmonics, period);
            let w = TrigField::random(&mut rng, harmonics, period);
            symmetry_lemma_check(chart, &omega, &w, n)
        })
        .collect()
}

/// The scaling sequence `e(ε) = max_ξ ‖ε²(ẋ(ξ/ε) − ẋ(0)) − ½ξ_μξ_ν W_ν∧p_μ‖`
/// over the probe points, one entry per `ε`.
pub fn scaling_limit_check(mode: &AnalyticMode, probes: &[[f64; 2]], epsilons: &[f64]) -> Result<Vec<f64>> {
    let geo = mode.chart.period_geometry()?;
    let w = mode.rotation_rate();
    let origin = mode.deflection([0.0, 0.0])?;
    epsilons
        .iter()
        .map(|&eps| {
            let mut worst: f64 = 0.0;
            for xi in probes {
                let far = mode.deflection([xi[0] / eps, xi[1] / eps])?;
                let scaled = (far - origin) * (eps * eps);
                let mut limit = Vec3::ZERO;
                for mu in 0..2 {
                    for nu in 0..2 {
                        limit += w[nu].cross(geo.p(mu)) * (0.5 * xi[mu] * xi[nu]);
                    }
                }
                worst = worst.max((scaled - limit).norm());
            }
            Ok(worst)
        })
        .collect()
}

/// Least-squares slope of `ln e` against `ln ε`.
pub fn fitted_rate(epsilons: &[f64], errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = epsilons.iter().zip(errors).map(|(e, r)| (math::ln(*e), math::ln(*r))).collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Membrane strain of the eggbox written in sheared coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ReparametrizationCheck {
    /// Componentwise closed form `[[F − γ²G, −γG], [−γG, −G]]`.
    pub e_components: Sym2,
    /// `Sᵀ diag(F, −G) S`.
    pub e_congruence: Sym2,
    pub congruence_error: f64,
    /// Per transformed bending strain: `(χ′, expanded residual, index-form residual)`.
    pub residuals: Vec<(Sym2, f64, f64)>,
}

/// `F χ₂₂ − G(γ²χ₂₂ − 2γχ₁₂ + χ₁₁)`.
pub fn sheared_residual(f_sq: f64, g_sq: f64, gamma: f64, chi: Sym2) -> f64 {
    f_sq * chi.yy - g_sq * (gamma * gamma * chi.yy - 2.0 * gamma * chi.xy + chi.xx)
}

/// Transforms the eggbox strains to sheared coordinates and checks the
/// orthogonality relation there. The bending strains used are the dome
/// `diag(F, G)` and the twist, each mapped by `χ′ = SᵀχS`.
pub fn reparametrization_check(f: &Profile, g: &Profile, gamma: f64) -> ReparametrizationCheck {
    let (fs, gs) = (f.mean_slope_sq(), g.mean_slope_sq());
    let s = [[1.0, 0.0], [gamma, 1.0]];
    let e_components = Sym2::new(fs - gamma * gamma * gs, -gamma * gs, -gs);
    let e_congruence = sheared_strain(fs, gs, gamma);
    let congruence_error = e_components.sub(e_congruence).frobenius();
    let residuals = [Sym2::diag(fs, gs), Sym2::offdiag(1.0)]
        .into_iter()
        .map(|chi| {
            let c = chi.congruence(s);
            (c, sheared_residual(fs, gs, gamma, c), orthogonality_residual(e_congruence, c))
        })
        .collect();
    ReparametrizationCheck { e_components, e_congruence, congruence_error, residuals }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::TAU;
    use crate::strains::{effective_bending_strain, effective_membrane_strain, membrane_strain_field};
    use proptest::prelude::*;

    fn sgn() -> Profile {
        Profile::sgn_cos(1.0, TAU).unwrap()
    }

    fn max_strain(mode: &AnalyticMode, n: usize) -> f64 {
        let g = PeriodicGrid::build(mode.chart(), [n, n]).unwrap();
        let d = mode.sample_deflection(&g).unwrap();
        membrane_strain_field(&d, &g).iter().map(|e| e.frobenius()).fold(0.0, f64::max)
    }

    fn charts() -> Vec<(Example, SurfaceChart)> {
        let pq = Profile::triangle_slope(1.0, TAU).unwrap();
        let cs = Profile::cosine(0.5, TAU).unwrap();
        alloc::vec![
            (Example::PlaneBend(Sym2::new(1.0, 0.5, -0.25)), SurfaceChart::plane([TAU, TAU]).unwrap()),
            (Example::CorrugationMembrane, SurfaceChart::simple_corrugation(sgn(), TAU).unwrap()),
            (Example::CorrugationMembrane, SurfaceChart::simple_corrugation(cs.clone(), TAU).unwrap()),
            (Example::EggboxMembrane, SurfaceChart::double_corrugation(sgn(), sgn()).unwrap()),
            (Example::EggboxMembrane, SurfaceChart::double_corrugation(pq.clone(), sgn()).unwrap()),
            (Example::MiuraMembrane, SurfaceChart::miura_like(sgn(), sgn()).unwrap()),
            (Example::MiuraMembrane, SurfaceChart::miura_like(pq, sgn()).unwrap()),
            (Example::TranslationTwist, SurfaceChart::double_corrugation(sgn(), cs.clone()).unwrap()),
            (Example::TranslationTwist, SurfaceChart::miura_like(sgn(), sgn()).unwrap()),
            (Example::ShearedMembrane, SurfaceChart::sheared_double_corrugation(cs.clone(), cs, 1.0).unwrap()),
        ]
    }

    #[test]
    fn rotation_reproduces_deflection_derivatives() {
        // ẋ_μ = w∧x_μ by central differences of the closed forms away from creases
        for (ex, chart) in charts() {
            let mode = analytic_mode(ex, &chart).unwrap();
            let h = 1e-6;
            for &xi in &[[0.3, 0.4], [2.0, 1.1], [4.0, 5.5], [-7.3, 11.9]] {
                let x = chart.partials(xi, PanelSelector::PLUS).unwrap();
                let w = mode.rotation(xi, PanelSelector::PLUS);
                for d in 0..2 {
                    let mut a = xi;
                    let mut b = xi;
                    a[d] -= h;
                    b[d] += h;
                    let fd = (mode.deflection(b).unwrap() - mode.deflection(a).unwrap()) * (0.5 / h);
                    let err = (fd - w.cross(x[d])).norm();
                    assert!(err < 1e-6, "{} at {xi:?} dir {d}: {err}", ex.name());
                }
            }
        }
    }

    #[test]
    fn deflections_are_isometric_under_refinement() {
        for (ex, chart) in charts() {
            let mode = analytic_mode(ex, &chart).unwrap();
            let (a, b) = (max_strain(&mode, 16), max_strain(&mode, 32));
            assert!(b < 1e-9 || b < 0.3 * a, "{}: {a} -> {b}", ex.name());
        }
    }

    #[test]
    fn predicted_strains_match_definitions() {
        for (ex, chart) in charts() {
            let mode = analytic_mode(ex, &chart).unwrap();
            let g = PeriodicGrid::build(&chart, [64, 64]).unwrap();
            let geo = chart.period_geometry().unwrap();
            let sampled = mode.sample_rotation(&g);
            if let Some(e) = mode.predicted_e {
                let got = effective_membrane_strain(&sampled, &g, &geo).unwrap().e;
                // exact for piecewise-linear profiles, O(h²) for smooth ones
                let h = chart.period()[0].max(chart.period()[1]) / 64.0;
                assert!(got.sub(e).frobenius() < h * h * e.frobenius(), "{}: {got:?} vs {e:?}", ex.name());
            }
            if let Some(chi) = mode.predicted_chi {
                let got = effective_bending_strain(&sampled, &geo).chi;
                assert!(got.sub(chi).frobenius() < 1e-12, "{}: {got:?} vs {chi:?}", ex.name());
            }
        }
    }

    #[test]
    fn example_values() {
        let egg = analytic_mode(Example::EggboxMembrane, &SurfaceChart::double_corrugation(sgn(), sgn()).unwrap()).unwrap();
        assert_eq!(egg.predicted_e, Some(Sym2::diag(1.0, -1.0)));
        let miura = analytic_mode(Example::MiuraMembrane, &SurfaceChart::miura_like(sgn(), sgn()).unwrap()).unwrap();
        assert_eq!(miura.predicted_e, Some(Sym2::diag(1.0, 1.0)));
        let twist = analytic_mode(Example::TranslationTwist, &SurfaceChart::double_corrugation(sgn(), sgn()).unwrap()).unwrap();
        assert!(twist.predicted_chi.unwrap().sub(Sym2::offdiag(1.0)).frobenius() < 1e-15);
    }

    #[test]
    fn wrong_family_is_rejected() {
        let plane = SurfaceChart::plane([1.0, 1.0]).unwrap();
        assert!(matches!(analytic_mode(Example::EggboxMembrane, &plane), Err(Error::UnsupportedExample { .. })));
        let smooth_g = SurfaceChart::miura_like(sgn(), Profile::cosine(0.5, TAU).unwrap()).unwrap();
        assert!(matches!(analytic_mode(Example::MiuraMembrane, &smooth_g), Err(Error::VanishingSlope)));
    }

    #[test]
    fn twist_deflection_is_quasi_periodic() {
        let chart = SurfaceChart::miura_like(Profile::triangle_slope(1.0, TAU).unwrap(), sgn()).unwrap();
        let mode = analytic_mode(Example::TranslationTwist, &chart).unwrap();
        let g = PeriodicGrid::build(&chart, [8, 8]).unwrap();
        let d = mode.sample_deflection(&g).unwrap();
        for &xi in &[[0.1, 0.2], [3.0, 4.5]] {
            let x = chart.position(xi);
            for a in 0..2 {
                let mut far = xi;
                far[a] += TAU;
                let expect = mode.deflection(xi).unwrap() + d.growth[a].cross(x) + d.offsets[a];
                assert!((mode.deflection(far).unwrap() - expect).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn lemma_sides_agree_on_smooth_corrugation() {
        let chart = SurfaceChart::simple_corrugation(Profile::cosine(0.5, TAU).unwrap(), TAU).unwrap();
        for s in seeded_lemma_checks(&chart, 7, 4, 5, 64).unwrap() {
            assert!((s.lhs - s.rhs).abs() <= 1e-10 * s.scale, "{s:?}");
        }
    }

    #[test]
    fn constant_omega_sees_mean_of_dxw() {
        let chart = SurfaceChart::double_corrugation(Profile::cosine(0.3, TAU).unwrap(), Profile::cosine(0.2, TAU).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = TrigField::random(&mut rng, 5, chart.period());
        let omega = TrigField::constant(Vec3::new(0.4, -1.0, 0.3), chart.period());
        let s = symmetry_lemma_check(&chart, &omega, &w, 64).unwrap();
        assert_eq!(s.rhs, 0.0);
        assert!(s.lhs.abs() < 1e-12 * s.scale.max(1.0));
    }

    #[test]
    fn lemma_rejects_creased_charts() {
        let chart = SurfaceChart::simple_corrugation(sgn(), TAU).unwrap();
        let f = TrigField::constant(Vec3::ZERO, chart.period());
        assert!(symmetry_lemma_check(&chart, &f, &f, 8).is_err());
    }

    #[test]
    fn plane_scaling_is_exact() {
        let mode = analytic_mode(Example::PlaneBend(Sym2::new(1.0, 0.5, -0.25)), &SurfaceChart::plane([1.0, 1.0]).unwrap()).unwrap();
        let e = scaling_limit_check(&mode, &[[0.75, 0.5], [-0.5, 0.25]], &[0.25, 0.125, 0.0625, 0.03125]).unwrap();
        assert!(e.iter().all(|x| *x == 0.0), "{e:?}");
    }

    #[test]
    fn corrugation_twist_scaling_is_first_order() {
        let chart = SurfaceChart::simple_corrugation(sgn(), TAU).unwrap();
        let mode = analytic_mode(Example::TranslationTwist, &chart).unwrap();
        let eps = [0.25, 0.125, 0.0625, 0.03125];
        let e = scaling_limit_check(&mode, &[[1.3, 0.7], [-0.4, 2.1], [2.2, -1.6]], &eps).unwrap();
        assert!(e.windows(2).all(|p| p[1] < p[0]), "{e:?}");
        assert!(fitted_rate(&eps, &e) >= 0.9, "{e:?}");
    }

    #[test]
    fn membrane_mode_scaling_has_no_quadratic_term() {
        let chart = SurfaceChart::double_corrugation(sgn(), sgn()).unwrap();
        let mode = analytic_mode(Example::EggboxMembrane, &chart).unwrap();
        assert_eq!(mode.rotation_rate(), [Vec3::ZERO; 2]);
        let e = scaling_limit_check(&mode, &[[1.0, 1.0]], &[0.25, 0.0625]).unwrap();
        assert!(e[1] < e[0]);
    }

    #[test]
    fn shear_examples() {
        let r = reparametrization_check(&sgn(), &sgn(), 1.0);
        assert_eq!(r.e_congruence, Sym2::new(0.0, -1.0, -1.0));
        assert!(r.congruence_error < 1e-12);
        let r0 = reparametrization_check(&sgn(), &sgn(), 0.0);
        assert_eq!(r0.e_congruence, Sym2::diag(1.0, -1.0));
    }

    proptest! {
        #[test]
        fn sheared_residual_vanishes(amp_f in 0.2..3.0f64, amp_g in 0.2..3.0f64, gamma in -3.0..3.0f64) {
            let f = Profile::cosine(amp_f, TAU).unwrap();
            let g = Profile::triangle_slope(amp_g, 2.0).unwrap();
            let r = reparametrization_check(&f, &g, gamma);
            let scale = r.e_congruence.frobenius();
            prop_assert!(r.congruence_error <= 1e-12 * scale);
            for (chi, expanded, index) in r.residuals {
                let tol = 1e-12 * scale * chi.frobenius();
                prop_assert!(expanded.abs() <= tol && index.abs() <= tol);
            }
        }

        #[test]
        fn curve_moment_is_additive(xi in -40.0..40.0f64, k in -3i32..3) {
            let curve = SpaceCurve::lifted(0, 2, Profile::triangle_slope(1.0, TAU).unwrap()).unwrap();
            let p = curve_moment_period(&curve);
            let a = curve_moment(&curve, p, xi + k as f64 * TAU);
            let d = curve.point(TAU) - curve.point(0.0);
            // shifting the upper limit by kT adds kP + k D∧(α(ξ) − α(0))
            let expect = curve_moment(&curve, p, xi) + p * k as f64 + d.cross(curve.point(xi) - curve.point(0.0)) * k as f64;
            prop_assert!((a - expect).norm() < 1e-9 * (1.0 + xi.abs()).powi(2));
        }
    }
}
