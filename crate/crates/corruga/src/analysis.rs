//! One full analysis run: grid, constraint system, effective modes, strain
//! spaces, orthogonality pairs, Poisson ratios and oracle comparisons.

use std::time::Instant;

use corruga_core::oracle::{analytic_mode, seeded_lemma_checks, Example};
use corruga_core::solver::{nullspace, NullSpace, RowKind, SolverOptions};
use corruga_core::strains::{
    effective_bending_strain, mean_stretch, pair_residuals, poisson_ratios, strain_space_dims,
    PairResidual, PoissonRatios,
};
use corruga_core::{
    assemble_system, Error, Family, ModeClass, PeriodicGrid, StrainSpaces, Sym2, SurfaceChart, ThresholdPolicy,
};

use crate::CliError;

/// Random field pairs and harmonics per component for the symmetry check.
pub const LEMMA_PAIRS: usize = 20;
pub const LEMMA_HARMONICS: usize = 5;
pub const LEMMA_QUADRATURE: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalysisOptions {
    pub resolution: [usize; 2],
    pub threshold: ThresholdPolicy,
    pub seed: u64,
    pub delta: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            resolution: [32, 32],
            threshold: ThresholdPolicy::default(),
            seed: 2024,
            delta: SolverOptions::default().delta,
        }
    }
}

/// Where an ambiguous rank decision happened.
#[derive(Clone, Debug, PartialEq)]
pub struct Ambiguity {
    pub stage: &'static str,
    pub spectrum: Vec<f64>,
}

/// A closed-form mode compared against the computed null space.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleComparison {
    pub example: Example,
    pub predicted_e: Option<Sym2>,
    pub predicted_chi: Option<Sym2>,
    /// Strains of the analytic mode after projection onto the kernel.
    pub measured_e: Option<Sym2>,
    pub measured_chi: Sym2,
    /// `‖u − Pu‖_M / ‖u‖_M`.
    pub projection_distance: f64,
    /// Distance of the predicted strain direction from the computed strain space.
    pub span_residual: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LemmaSummary {
    pub pairs: usize,
    pub worst_relative: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Timings {
    pub grid: f64,
    pub assembly: f64,
    pub solve: f64,
    pub strains: f64,
    pub oracle: f64,
}

pub struct Analysis {
    pub chart: SurfaceChart,
    pub options: AnalysisOptions,
    pub grid: PeriodicGrid,
    pub rows: Vec<(RowKind, usize)>,
    pub unknowns: usize,
    pub nullspace: Option<NullSpace>,
    pub spaces: Option<StrainSpaces>,
    pub ambiguity: Option<Ambiguity>,
    pub pairs: Vec<PairResidual>,
    pub poisson: Vec<(usize, usize, Result<PoissonRatios, Error>)>,
    pub oracle: Vec<OracleComparison>,
    pub lemma: Option<LemmaSummary>,
    pub timings: Timings,
}

/// The closed-form modes that apply to a chart.
pub fn examples_for(chart: &SurfaceChart) -> Vec<Example> {
    match chart.family() {
        Family::Plane => vec![
            Example::PlaneBend(Sym2::diag(1.0, 0.0)),
            Example::PlaneBend(Sym2::diag(0.0, 1.0)),
            Example::PlaneBend(Sym2::offdiag(1.0)),
        ],
        Family::SimpleCorrugation => vec![Example::CorrugationMembrane, Example::TranslationTwist],
        Family::DoubleCorrugation => vec![Example::EggboxMembrane, Example::TranslationTwist],
        Family::MiuraLike => vec![Example::MiuraMembrane, Example::TranslationTwist],
        Family::TranslationSurface => vec![Example::TranslationTwist],
        Family::ShearedDoubleCorrugation => vec![Example::ShearedMembrane],
    }
}

/// Distance of the unit vector along `v` from the span of an orthonormal basis.
pub fn span_residual(basis: &[[f64; 3]], v: [f64; 3]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        return 0.0;
    }
    let mut r = v.map(|x| x / n);
    for b in basis {
        let c: f64 = r.iter().zip(b).map(|(a, b)| a * b).sum();
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri -= c * bi;
        }
    }
    r.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn seconds(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

pub fn analyze(chart: &SurfaceChart, options: AnalysisOptions) -> Result<Analysis, CliError> {
    let mut timings = Timings::default();
    let t = Instant::now();
    let grid = PeriodicGrid::build(chart, options.resolution)?;
    timings.grid = seconds(t);

    let t = Instant::now();
    let system = assemble_system(&grid)?;
    timings.assembly = seconds(t);
    let kinds = [RowKind::Pde, RowKind::Crease, RowKind::CornerCrease, RowKind::Seam];
    let rows = kinds.iter().map(|k| (*k, system.count_rows(*k))).collect();
    let unknowns = system.ncols();

    let t = Instant::now();
    let solver = SolverOptions { threshold: options.threshold, delta: options.delta };
    let mut ambiguity = None;
    let ns = match nullspace(&grid, &system, solver) {
        Ok(ns) => Some(ns),
        Err(Error::AmbiguousGap { spectrum }) => {
            ambiguity = Some(Ambiguity { stage: "solver", spectrum });
            None
        }
        Err(e) => return Err(e.into()),
    };
    timings.solve = seconds(t);

    let mut analysis = Analysis {
        chart: chart.clone(),
        options,
        grid,
        rows,
        unknowns,
        nullspace: None,
        spaces: None,
        ambiguity,
        pairs: Vec::new(),
        poisson: Vec::new(),
        oracle: Vec::new(),
        lemma: None,
        timings,
    };
    let Some(ns) = ns else { return Ok(analysis) };

    let t = Instant::now();
    let geometry = ns.geometry;
    match strain_space_dims(&ns.modes, &analysis.grid, &geometry, options.threshold) {
        Ok(s) => analysis.spaces = Some(s),
        Err(Error::AmbiguousGap { spectrum }) => analysis.ambiguity = Some(Ambiguity { stage: "strain-space", spectrum }),
        Err(e) => return Err(e.into()),
    }
    analysis.pairs = pair_residuals(&ns.modes, &analysis.grid, &geometry)?;
    analysis.poisson =
        analysis.pairs.iter().map(|p| (p.membrane, p.bending, poisson_ratios(p.e, p.chi, &geometry))).collect();
    analysis.timings.strains = seconds(t);

    let t = Instant::now();
    for example in examples_for(chart) {
        let Ok(mode) = analytic_mode(example, chart) else { continue };
        let (projected, dist) = ns.project(&mode.sample_rotation(&analysis.grid));
        // discretization error can leave a small growth in the projection, so
        // the stretch is measured without the periodicity check
        let measured_e = mode.predicted_e.map(|_| mean_stretch(&projected, &analysis.grid, &geometry)).transpose()?;
        let span = analysis.spaces.as_ref().and_then(|s| match (mode.predicted_e, mode.predicted_chi) {
            (Some(e), _) => Some(span_residual(&s.e_basis, e.to_weighted())),
            (None, Some(c)) => Some(span_residual(&s.chi_basis, c.to_weighted())),
            _ => None,
        });
        analysis.oracle.push(OracleComparison {
            example,
            predicted_e: mode.predicted_e,
            predicted_chi: mode.predicted_chi,
            measured_e,
            measured_chi: effective_bending_strain(&projected, &geometry).chi,
            projection_distance: dist,
            span_residual: span,
        });
    }
    if chart.crease_lines()?.is_empty() {
        let sides = seeded_lemma_checks(chart, options.seed, LEMMA_PAIRS, LEMMA_HARMONICS, LEMMA_QUADRATURE)?;
        let worst = sides.iter().map(|s| (s.lhs - s.rhs).abs() / s.scale.max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
        analysis.lemma = Some(LemmaSummary { pairs: sides.len(), worst_relative: worst });
    }
    analysis.timings.oracle = seconds(t);
    analysis.nullspace = Some(ns);
    Ok(analysis)
}

impl Analysis {
    pub fn modes(&self) -> &[corruga_core::RotationMode] {
        self.nullspace.as_ref().map_or(&[], |ns| &ns.modes)
    }

    pub fn dims(&self) -> Option<(usize, usize)> {
        self.spaces.as_ref().map(|s| s.dims)
    }

    /// Modes with linearly growing rotations.
    pub fn bending_modes(&self) -> impl Iterator<Item = &corruga_core::RotationMode> {
        self.modes().iter().filter(|m| matches!(m.class, ModeClass::Bending | ModeClass::Mixed))
    }

    pub fn membrane_modes(&self) -> impl Iterator<Item = &corruga_core::RotationMode> {
        self.modes().iter().filter(|m| m.class == ModeClass::Membrane)
    }

    pub fn comparison(&self, example: Example) -> Option<&OracleComparison> {
        self.oracle.iter().find(|c| c.example == example)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::builtin;

    #[test]
    fn span_residual_examples() {
        let basis = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        assert_eq!(span_residual(&basis, [3.0, 4.0, 0.0]), 0.0);
        assert_eq!(span_residual(&basis, [0.0, 0.0, -2.0]), 1.0);
        assert_eq!(span_residual(&[], [0.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn eggbox_analysis() {
        let chart = builtin("eggbox").unwrap().to_chart().unwrap();
        let a = analyze(&chart, AnalysisOptions { resolution: [16, 16], ..Default::default() }).unwrap();
        assert_eq!(a.dims(), Some((1, 2)));
        assert!(a.ambiguity.is_none());
        assert_eq!(a.pairs.len(), 2);
        assert!(a.lemma.is_none());
        let egg = a.comparison(Example::EggboxMembrane).unwrap();
        let e = egg.measured_e.unwrap();
        assert!(e.sub(Sym2::diag(1.0, -1.0)).frobenius() < 1e-10, "{e:?}");
    }

    #[test]
    fn coarse_smooth_grid_measures_the_oracle_strain() {
        let chart = builtin("smooth-eggbox").unwrap().to_chart().unwrap();
        let a = analyze(&chart, AnalysisOptions { resolution: [8, 8], ..Default::default() }).unwrap();
        let egg = a.comparison(Example::EggboxMembrane).unwrap();
        assert!(egg.measured_e.unwrap().sub(egg.predicted_e.unwrap()).frobenius() < 0.1);
    }

    #[test]
    fn smooth_chart_runs_the_symmetry_check() {
        let chart = builtin("smooth-corrugation").unwrap().to_chart().unwrap();
        let a = analyze(&chart, AnalysisOptions { resolution: [16, 16], ..Default::default() }).unwrap();
        let lemma = a.lemma.unwrap();
        assert_eq!(lemma.pairs, LEMMA_PAIRS);
        assert!(lemma.worst_relative < 1e-10);
    }
}
