//! Verification suites: the quantitative checks behind `corruga verify` and the
//! acceptance test target.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::str::FromStr;

use corruga_core::oracle::{
    analytic_mode, fitted_rate, reparametrization_check, scaling_limit_check, seeded_lemma_checks, sheared_residual,
    sheared_strain, Example,
};
use corruga_core::strains::{effective_bending_strain, effective_membrane_strain, orthogonality_residual, orthogonality_residual_adj};
use corruga_core::warping::{dislocation, warping_function, SectionCurve};
use corruga_core::{Profile, Sym2, SurfaceChart};
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{analyze, Analysis, AnalysisOptions, LEMMA_HARMONICS, LEMMA_PAIRS, LEMMA_QUADRATURE};
use crate::config::builtin;
use crate::CliError;

/// Values below this are rounding noise; refinement trends are not measurable there.
pub const ROUNDOFF_FLOOR: f64 = 1e-10;

/// Surfaces the solver-based criteria run on.
const SOLVED: [&str; 7] = ["plane", "corrugation", "eggbox", "hybrid", "miura", "translation", "smooth-eggbox"];
/// The five families of the worked examples.
const FAMILIES: [&str; 5] = ["plane", "corrugation", "eggbox", "miura", "translation"];
const COARSE: usize = 32;
const FINE: usize = 64;
const FINEST: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Examples,
    Lemma,
    Scaling,
    Warping,
    All,
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "examples" => Suite::Examples,
            "lemma" => Suite::Lemma,
            "scaling" => Suite::Scaling,
            "warping" => Suite::Warping,
            "all" => Suite::All,
            _ => return Err(CliError::Usage(format!("unknown suite `{s}` (examples, lemma, scaling, warping, all)"))),
        })
    }
}

impl Suite {
    pub fn criteria(self) -> &'static [u8] {
        match self {
            Suite::Examples => &[1, 2, 3, 4, 5, 6, 7, 8, 12, 13],
            Suite::Lemma => &[9],
            Suite::Scaling => &[10],
            Suite::Warping => &[11],
            Suite::All => &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13],
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!("criterion {:2} {} {}: {}", self.id, if self.passed { "PASS" } else { "FAIL" }, self.title, self.detail)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub criteria: Vec<CriterionResult>,
}

/// Analyses shared between criteria, keyed by surface name and resolution.
pub struct Lab {
    runs: HashMap<(&'static str, usize), Analysis>,
}

impl Lab {
    /// Runs the analyses needed by `ids` in parallel.
    pub fn prepare(ids: &[u8], seed: u64) -> Result<Self, CliError> {
        let mut jobs: Vec<(&'static str, usize)> = Vec::new();
        let solver_based = ids.iter().any(|i| matches!(i, 1..=8 | 12));
        if solver_based {
            for name in SOLVED {
                jobs.push((name, COARSE));
                jobs.push((name, FINE));
            }
        }
        if ids.contains(&2) {
            jobs.push(("corrugation", FINEST));
        }
        let runs = jobs
            .into_par_iter()
            .map(|(name, n)| {
                let chart = surface(name);
                let options = AnalysisOptions { resolution: [n, n], seed, ..Default::default() };
                analyze(&chart, options).map(|a| ((name, n), a))
            })
            .collect::<Result<HashMap<_, _>, _>>()?;
        Ok(Lab { runs })
    }

    fn get(&self, name: &str, n: usize) -> &Analysis {
        self.runs.iter().find(|((k, m), _)| *k == name && *m == n).map(|(_, a)| a).expect("analysis was prepared")
    }

    fn fine(&self) -> impl Iterator<Item = (&'static str, &Analysis)> {
        SOLVED.into_iter().map(|name| (name, self.get(name, FINE)))
    }
}

fn surface(name: &str) -> SurfaceChart {
    builtin(name).expect("built-in surface").to_chart().expect("built-in surface builds")
}

fn unit(v: [f64; 3]) -> [f64; 3] {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.map(|x| x / n)
}

/// Distance between the directions of two vectors, ignoring sign.
fn direction_error(a: [f64; 3], b: [f64; 3]) -> f64 {
    let (a, b) = (unit(a), unit(b));
    let d = |s: f64| a.iter().zip(&b).map(|(x, y)| (x - s * y).powi(2)).sum::<f64>().sqrt();
    d(1.0).min(d(-1.0))
}

fn relative_error(measured: Sym2, predicted: Sym2) -> f64 {
    measured.sub(predicted).frobenius() / predicted.frobenius()
}

/// `χ₂₂/χ₁₁` of the twist-free element of a bending space.
fn twist_free_ratio(basis: &[[f64; 3]]) -> Option<f64> {
    let c = match basis {
        [b] => *b,
        [a, b] => [b[1] * a[0] - a[1] * b[0], 0.0, b[1] * a[2] - a[1] * b[2]],
        _ => return None,
    };
    (c[0].abs() > 0.0).then(|| c[2] / c[0])
}

/// Refinement trend: passes when the finer value is at roundoff level or the
/// sequence decreases by at least `factor` per step.
fn decreasing(seq: &[f64], factor: f64) -> bool {
    seq.last().is_some_and(|v| *v <= ROUNDOFF_FLOOR) || seq.windows(2).all(|w| w[1] * factor <= w[0])
}

fn fmt_seq(seq: &[f64]) -> String {
    seq.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>().join(" -> ")
}

fn result(id: u8, title: &'static str, passed: bool, detail: String) -> CriterionResult {
    CriterionResult { id, title, passed, detail }
}

fn dims_text(a: &Analysis) -> String {
    a.dims().map_or_else(|| "ambiguous".into(), |(e, c)| format!("({e},{c})"))
}

fn worst_pair(a: &Analysis) -> f64 {
    a.pairs.iter().map(|p| p.relative).fold(0.0, f64::max)
}

fn plane(lab: &Lab) -> CriterionResult {
    let a = lab.get("plane", FINE);
    let worst = worst_pair(a);
    let ok = a.dims() == Some((0, 3)) && worst < 1e-8;
    result(1, "plane", ok, format!("dims {} (want (0,3)); {} pairs, worst residual {worst:.1e}", dims_text(a), a.pairs.len()))
}

fn corrugation(lab: &Lab) -> CriterionResult {
    let a = lab.get("corrugation", FINE);
    let predicted = Sym2::diag(1.0, 0.0);
    let dir = a.spaces.as_ref().and_then(|s| s.e_basis.first()).map(|e| direction_error(*e, predicted.to_weighted()));
    let mag = a.comparison(Example::CorrugationMembrane).and_then(|c| c.measured_e).map(|e| relative_error(e, predicted));
    let chi22 = |a: &Analysis| {
        a.bending_modes()
            .map(|m| {
                let chi = effective_bending_strain(m, &a.nullspace.as_ref().unwrap().geometry).chi;
                chi.yy.abs() / chi.frobenius()
            })
            .fold(0.0, f64::max)
    };
    let seq: Vec<f64> = [COARSE, FINE, FINEST].iter().map(|n| chi22(lab.get("corrugation", *n))).collect();
    let ok = a.dims().is_some_and(|d| d.0 == 1)
        && dir.is_some_and(|d| d <= 0.02)
        && mag.is_some_and(|m| m <= 0.02)
        && seq[1] <= 1e-2
        && decreasing(&seq, 1.0);
    result(
        2,
        "simple corrugation",
        ok,
        format!(
            "dim E {}; E direction error {:.1e}, oracle E error {:.1e}; max |chi22|/|chi| over n=32,64,128: {}",
            a.dims().map_or(0, |d| d.0),
            dir.unwrap_or(f64::NAN),
            mag.unwrap_or(f64::NAN),
            fmt_seq(&seq)
        ),
    )
}

fn profile_ratio(chart: &SurfaceChart) -> f64 {
    let (f, g) = chart.profiles();
    g.unwrap().mean_slope_sq() / f.unwrap().mean_slope_sq()
}

fn eggbox(lab: &Lab) -> CriterionResult {
    let a = lab.get("eggbox", FINE);
    let h = lab.get("hybrid", FINE);
    let predicted = Sym2::diag(1.0, -1.0);
    let dir = a.spaces.as_ref().and_then(|s| s.e_basis.first()).map(|e| direction_error(*e, predicted.to_weighted()));
    let mag = a.comparison(Example::EggboxMembrane).and_then(|c| c.measured_e).map(|e| relative_error(e, predicted));
    let ratio = a.spaces.as_ref().and_then(|s| twist_free_ratio(&s.chi_basis));
    let hybrid = h.spaces.as_ref().and_then(|s| twist_free_ratio(&s.chi_basis));
    let hybrid_oracle = profile_ratio(&h.chart);
    let ok = dir.is_some_and(|d| d <= 0.02)
        && mag.is_some_and(|m| m <= 0.02)
        && ratio.is_some_and(|r| (r - 1.0).abs() <= 0.05)
        && hybrid.is_some_and(|r| (r - 3.0).abs() <= 0.05 * 3.0);
    result(
        3,
        "eggbox",
        ok,
        format!(
            "E direction error {:.1e}, oracle E error {:.1e}; chi22/chi11 = {:.4} (want 1); hybrid {:.4} (want 3, profile integrals give {hybrid_oracle:.4})",
            dir.unwrap_or(f64::NAN),
            mag.unwrap_or(f64::NAN),
            ratio.unwrap_or(f64::NAN),
            hybrid.unwrap_or(f64::NAN)
        ),
    )
}

fn miura(lab: &Lab) -> CriterionResult {
    let a = lab.get("miura", FINE);
    let ratio = a.spaces.as_ref().and_then(|s| twist_free_ratio(&s.chi_basis));
    let geo = &a.nullspace.as_ref().unwrap().geometry;
    let dets: Vec<f64> = a.bending_modes().map(|m| effective_bending_strain(m, geo).chi.det()).collect();
    let ok = ratio.is_some_and(|r| (r + 1.0).abs() <= 0.05) && !dets.is_empty() && dets.iter().all(|d| *d < 0.0);
    result(
        4,
        "miura-like",
        ok,
        format!("chi22/chi11 = {:.4} (want -1); det chi of {} bending modes: [{}]", ratio.unwrap_or(f64::NAN), dets.len(), fmt_seq(&dets).replace(" -> ", ", ")),
    )
}

fn twist(lab: &Lab) -> CriterionResult {
    let mut ok = true;
    let mut detail = String::new();
    for name in ["corrugation", "eggbox", "miura", "translation"] {
        let a = lab.get(name, FINE);
        let Some(c) = a.comparison(Example::TranslationTwist) else {
            ok = false;
            continue;
        };
        let chi = c.measured_chi;
        let want = c.predicted_chi.unwrap().xy;
        let diag = chi.xx.abs().max(chi.yy.abs()) / chi.xy.abs();
        let err = (chi.xy - want).abs() / want.abs();
        ok &= diag <= 1e-2 && err <= 0.02;
        let _ = write!(detail, "{name}: chi12 error {err:.1e}, diag/chi12 {diag:.1e}; ");
    }
    let shear = lab
        .fine()
        .flat_map(|(_, a)| {
            let geo = a.nullspace.as_ref().map(|ns| ns.geometry);
            a.membrane_modes()
                .filter_map(move |m| effective_membrane_strain(m, &a.grid, geo.as_ref()?).ok())
                .map(|e| e.e.xy.abs() / e.e.frobenius())
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max);
    ok &= shear <= 1e-6;
    let _ = write!(detail, "max |E12|/|E| over membrane modes {shear:.1e}");
    result(5, "translation twist", ok, detail)
}

fn theorem_sweep(lab: &Lab) -> CriterionResult {
    let mut ok = true;
    let mut detail = String::new();
    for name in FAMILIES.into_iter().chain(["hybrid"]) {
        let seq = [worst_pair(lab.get(name, COARSE)), worst_pair(lab.get(name, FINE))];
        ok &= seq[1] <= 1e-2 && decreasing(&seq, 3.0);
        let _ = write!(detail, "{name} {}; ", fmt_seq(&seq));
    }
    let mut agree: f64 = 0.0;
    for a in lab.runs.values() {
        for p in &a.pairs {
            let scale = p.e.frobenius() * p.chi.frobenius();
            agree = agree.max((orthogonality_residual(p.e, p.chi) - orthogonality_residual_adj(p.e, p.chi)).abs() / scale);
        }
    }
    ok &= agree <= 1e-14;
    let _ = write!(detail, "index vs adjugate form {agree:.1e}");
    result(6, "orthogonality sweep", ok, detail)
}

fn corollary(lab: &Lab) -> CriterionResult {
    let mut ok = true;
    for a in lab.runs.values() {
        ok &= a.dims().is_some_and(|(e, c)| e + c <= 3);
    }
    let mut detail = String::new();
    for name in FAMILIES {
        let a = lab.get(name, FINE);
        ok &= a.dims().is_some_and(|(e, c)| e + c == 3);
        let _ = write!(detail, "{name} {} ", dims_text(a));
    }
    result(7, "dimension bound", ok, detail.trim_end().into())
}

fn proof_identity(lab: &Lab) -> CriterionResult {
    let (mut sym, mut normal, mut count): (f64, f64, usize) = (0.0, 0.0, 0);
    for (_, a) in lab.fine() {
        let geo = a.nullspace.as_ref().unwrap().geometry;
        let p = geo.p1.norm().max(geo.p2.norm());
        for m in a.bending_modes() {
            let w = [m.rate(0), m.rate(1)];
            let wn = w[0].norm().max(w[1].norm());
            sym = sym.max((w[1].cross(geo.p1) - w[0].cross(geo.p2)).norm() / (wn * p));
            normal = normal.max(w[0].dot(geo.normal).abs().max(w[1].dot(geo.normal).abs()) / wn);
            count += 1;
        }
    }
    let ok = count > 0 && sym <= 1e-2 && normal <= 1e-2;
    result(8, "growth identity", ok, format!("{count} bending modes: max |W2^p1 - W1^p2|/(|W||p|) {sym:.1e}, max |<W,n>|/|W| {normal:.1e}"))
}

fn lemma(seed: u64) -> Result<CriterionResult, CliError> {
    let chart = surface("smooth-corrugation");
    let sides = seeded_lemma_checks(&chart, seed, LEMMA_PAIRS, LEMMA_HARMONICS, LEMMA_QUADRATURE)?;
    let worst = sides.iter().map(|s| (s.lhs - s.rhs).abs() / s.scale).fold(0.0, f64::max);
    let ok = sides.len() == LEMMA_PAIRS && worst <= 1e-6;
    Ok(result(9, "symmetry lemma", ok, format!("{} field pairs, seed {seed}, N={LEMMA_QUADRATURE}: max |lhs-rhs|/scale {worst:.1e}", sides.len())))
}

fn scaling() -> Result<CriterionResult, CliError> {
    let eps = [0.25, 0.125, 0.0625, 0.03125];
    let probes = [[1.3, 0.7], [-0.4, 2.1], [2.2, -1.6], [0.9, 0.0]];
    let corr = analytic_mode(Example::TranslationTwist, &surface("corrugation"))?;
    let seq = scaling_limit_check(&corr, &probes, &eps)?;
    let rate = fitted_rate(&eps, &seq);
    let plane = analytic_mode(Example::PlaneBend(Sym2::new(1.0, 0.5, -0.25)), &SurfaceChart::plane([1.0, 1.0])?)?;
    let exact = scaling_limit_check(&plane, &[[0.75, 0.5], [-0.5, 0.25]], &eps)?;
    let ok = seq.windows(2).all(|w| w[1] < w[0]) && rate >= 0.9 && exact.iter().all(|e| *e == 0.0);
    Ok(result(10, "scaling limit", ok, format!("corrugation e(eps) {} (rate {rate:.3}); plane max {:.1e}", fmt_seq(&seq), exact.iter().fold(0.0f64, |m, e| m.max(*e)))))
}

fn warping() -> Result<CriterionResult, CliError> {
    let circle: Vec<[f64; 2]> = (0..1024)
        .map(|k| {
            let t = TAU * k as f64 / 1024.0;
            [t.cos(), t.sin()]
        })
        .collect();
    let d_circle = dislocation(&SectionCurve::closed(circle)?, 1.0)?;
    let circle_err = (d_circle + TAU).abs() / TAU;
    let square = SectionCurve::closed(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])?;
    let d_square = dislocation(&square, 1.0)?;
    let (a, alpha) = (2.0, 0.7);
    let ys = [0.0, 0.3, 0.8, 1.5];
    let mut pts = vec![[0.0, 0.0], [0.5, 0.0], [1.2, 0.0]];
    pts.extend(ys.iter().map(|y| [a, *y]));
    let w = warping_function(&SectionCurve::open(pts)?, alpha)?;
    // first leg lies on y = 0; on the second leg x = a, so w = −α a y
    let mut hand = vec![0.0; 3];
    hand.extend(ys.iter().map(|y| -alpha * a * y));
    let l_err = w.w.iter().zip(&hand).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let ok = circle_err <= 1e-3 && (d_square + 2.0).abs() <= 4.0 * f64::EPSILON && l_err <= 1e-6;
    Ok(result(11, "warping", ok, format!("circle {d_circle:.6} (rel. error {circle_err:.1e}); square {d_square}; L-section max error {l_err:.1e}")))
}

fn cross_validation(lab: &Lab) -> CriterionResult {
    let mut ok = true;
    let mut detail = String::new();
    for name in SOLVED {
        let (coarse, fine) = (lab.get(name, COARSE), lab.get(name, FINE));
        for c in &fine.oracle {
            let Some(prev) = coarse.comparison(c.example) else { continue };
            let seq = [prev.projection_distance, c.projection_distance];
            ok &= seq[1] <= 1e-2 && decreasing(&seq, 1.0);
            let _ = write!(detail, "{name}/{} {}; ", c.example.name(), fmt_seq(&seq));
        }
        ok &= !fine.oracle.is_empty();
    }
    result(12, "oracle cross-validation", ok, detail.trim_end_matches("; ").into())
}

fn reparametrization() -> Result<CriterionResult, CliError> {
    let sgn = Profile::sgn_cos(1.0, TAU)?;
    let mut worst: f64 = 0.0;
    let r = reparametrization_check(&sgn, &sgn, 1.0);
    let example = r.e_congruence.sub(Sym2::new(0.0, -1.0, -1.0)).frobenius();
    let identity = reparametrization_check(&sgn, &sgn, 0.0).e_congruence.sub(Sym2::diag(1.0, -1.0)).frobenius();
    let profiles = [
        (sgn.clone(), sgn.clone()),
        (Profile::triangle_slope(1.0, TAU)?, sgn.clone()),
        (Profile::cosine(0.5, TAU)?, Profile::cosine(0.3, TAU)?),
    ];
    for (f, g) in &profiles {
        for gamma in [-2.0, -0.5, 0.0, 1.0, 3.0] {
            let r = reparametrization_check(f, g, gamma);
            let scale = r.e_congruence.frobenius();
            worst = worst.max(r.congruence_error / scale);
            for (chi, expanded, index) in &r.residuals {
                worst = worst.max(expanded.abs().max(index.abs()) / (scale * chi.frobenius()));
            }
            // a non-orthogonal pair keeps its residual under the shear (det S = 1)
            let (fs, gs) = (f.mean_slope_sq(), g.mean_slope_sq());
            let chi = Sym2::diag(0.0, 1.0);
            let s = [[1.0, 0.0], [gamma, 1.0]];
            let before = orthogonality_residual(Sym2::diag(fs, -gs), chi);
            let after = sheared_residual(fs, gs, gamma, chi.congruence(s));
            worst = worst.max((before - after).abs() / (scale * chi.congruence(s).frobenius()));
            worst = worst.max(sheared_strain(fs, gs, gamma).sub(r.e_components).frobenius() / scale);
        }
    }
    let ok = example <= 1e-12 && identity <= 1e-12 && worst <= 1e-12;
    Ok(result(
        13,
        "shear reparametrization",
        ok,
        format!("gamma=1 example error {example:.1e}; gamma=0 error {identity:.1e}; worst relative identity error {worst:.1e}"),
    ))
}

/// Runs the criteria of a suite.
pub fn run(suite: Suite, seed: u64) -> Result<Summary, CliError> {
    let ids = suite.criteria();
    let lab = Lab::prepare(ids, seed)?;
    let mut criteria = Vec::new();
    for id in ids {
        criteria.push(match id {
            1 => plane(&lab),
            2 => corrugation(&lab),
            3 => eggbox(&lab),
            4 => miura(&lab),
            5 => twist(&lab),
            6 => theorem_sweep(&lab),
            7 => corollary(&lab),
            8 => proof_identity(&lab),
            9 => lemma(seed)?,
            10 => scaling()?,
            11 => warping()?,
            12 => cross_validation(&lab),
            _ => reparametrization()?,
        });
    }
    let name = format!("{suite:?}").to_lowercase();
    Ok(Summary { suite: name, seed, passed: criteria.iter().all(|c| c.passed), criteria })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_of_twist_free_element() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(twist_free_ratio(&[[s, 0.0, s], [0.0, 1.0, 0.0]]), Some(1.0));
        let r = twist_free_ratio(&[[0.6, 0.8, 0.0], [0.0, 0.6, 0.8]]).unwrap();
        assert!((r + 0.8 * 0.8 / (0.6 * 0.6)).abs() < 1e-12, "{r}");
        assert_eq!(twist_free_ratio(&[]), None);
    }

    #[test]
    fn direction_error_ignores_sign() {
        assert_eq!(direction_error([1.0, 0.0, -1.0], [-2.0, 0.0, 2.0]), 0.0);
        assert!((direction_error([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn refinement_trend() {
        assert!(decreasing(&[1e-3, 2e-4], 3.0));
        assert!(!decreasing(&[1e-3, 5e-4], 3.0));
        assert!(decreasing(&[1e-14, 3e-14], 3.0));
    }

    #[test]
    fn suite_names() {
        assert_eq!("all".parse::<Suite>().unwrap().criteria().len(), 13);
        assert!("everything".parse::<Suite>().is_err());
    }

    #[test]
    fn analytic_suites_pass() {
        for suite in [Suite::Lemma, Suite::Scaling, Suite::Warping] {
            let s = run(suite, 2024).unwrap();
            assert!(s.passed, "{:#?}", s.criteria);
        }
    }
}
