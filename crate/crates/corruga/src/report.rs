//! JSON analysis report.

use corruga_core::solver::Candidate;
use corruga_core::strains::{effective_bending_strain, effective_membrane_strain, orthogonality_residual_adj, Ratio};
use corruga_core::{Sym2, ThresholdPolicy, Vec3};
use serde::Serialize;

use crate::analysis::Analysis;
use crate::config::SurfaceConfig;

pub const SPECTRUM_FILE: &str = "spectrum.csv";

const FLOAT_NOTE: &str = "values are deterministic for a given build and platform; \
    sparse factorization may change the last bits of sigma values across platforms";

type Matrix = [[f64; 2]; 2];

fn matrix(s: Sym2) -> Matrix {
    [[s.xx, s.xy], [s.xy, s.yy]]
}

fn vec3(v: Vec3) -> [f64; 3] {
    v.0
}

#[derive(Serialize)]
pub struct GridReport {
    pub resolution: [usize; 2],
    pub nodes: usize,
    pub h: f64,
    pub crease_pairs: usize,
    pub rows: Vec<(String, usize)>,
    pub unknowns: usize,
}

#[derive(Serialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum PolicyReport {
    Auto { min_gap: f64, cap: f64 },
    Fixed { tau: f64 },
}

impl From<ThresholdPolicy> for PolicyReport {
    fn from(p: ThresholdPolicy) -> Self {
        match p {
            ThresholdPolicy::Auto { min_gap, cap } => PolicyReport::Auto { min_gap, cap },
            ThresholdPolicy::Fixed(tau) => PolicyReport::Fixed { tau },
        }
    }
}

#[derive(Serialize)]
pub struct SolverReport {
    pub delta: f64,
    pub sigma_max: Option<f64>,
    pub threshold: PolicyReport,
    pub cut: Option<f64>,
    pub gap: Option<f64>,
    /// Stage that found no clear gap, with the spectrum it saw.
    pub ambiguous: Option<(String, Vec<f64>)>,
}

#[derive(Serialize)]
pub struct ModeReport {
    pub index: usize,
    pub class: String,
    pub sigma: f64,
    #[serde(rename = "W1")]
    pub w1: [f64; 3],
    #[serde(rename = "W2")]
    pub w2: [f64; 3],
    #[serde(rename = "E")]
    pub e: Option<Matrix>,
    pub chi: Matrix,
}

#[derive(Serialize)]
pub struct PairReport {
    pub membrane: usize,
    pub bending: usize,
    #[serde(rename = "E")]
    pub e: Matrix,
    pub chi: Matrix,
    pub residual: f64,
    pub residual_adj: f64,
    pub relative: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioReport {
    Value(f64),
    Undefined { numerator: f64, denominator: f64 },
}

impl From<Ratio> for RatioReport {
    fn from(r: Ratio) -> Self {
        match r {
            Ratio::Value(v) => RatioReport::Value(v),
            Ratio::Undefined { numerator, denominator } => RatioReport::Undefined { numerator, denominator },
        }
    }
}

#[derive(Serialize)]
pub struct PoissonReport {
    pub membrane: usize,
    pub bending: usize,
    pub in_plane: Option<RatioReport>,
    pub out_of_plane: Option<RatioReport>,
    pub angle: Option<f64>,
    pub error: Option<String>,
}

#[derive(Serialize)]
pub struct ComparisonReport {
    pub example: String,
    pub predicted_e: Option<Matrix>,
    pub measured_e: Option<Matrix>,
    pub predicted_chi: Option<Matrix>,
    pub measured_chi: Matrix,
    pub projection_distance: f64,
    pub span_residual: Option<f64>,
}

#[derive(Serialize)]
pub struct OracleReport {
    pub seed: u64,
    pub comparisons: Vec<ComparisonReport>,
    /// Worst `|lhs − rhs| / scale` of the symmetry check (crease-free charts only).
    pub lemma_worst_relative: Option<f64>,
    pub lemma_pairs: Option<usize>,
}

#[derive(Serialize, Default)]
pub struct ExportReport {
    pub obj_amplitude: Option<f64>,
    pub files: Vec<String>,
}

#[derive(Serialize)]
pub struct TimingReport {
    pub grid_s: f64,
    pub assembly_s: f64,
    pub solve_s: f64,
    pub strains_s: f64,
    pub oracle_s: f64,
}

#[derive(Serialize)]
pub struct AnalysisReport {
    pub surface: SurfaceConfig,
    pub grid: GridReport,
    pub solver: SolverReport,
    pub sigma_spectrum_ref: String,
    pub null_dimension: usize,
    pub modes: Vec<ModeReport>,
    pub dims: Option<[usize; 2]>,
    #[serde(rename = "E_basis")]
    pub e_basis: Vec<Matrix>,
    pub chi_basis: Vec<Matrix>,
    #[serde(rename = "E_singular")]
    pub e_singular: Vec<f64>,
    pub chi_singular: Vec<f64>,
    pub pairs: Vec<PairReport>,
    pub poisson: Vec<PoissonReport>,
    pub oracle: OracleReport,
    pub export: ExportReport,
    pub timings: TimingReport,
    pub notes: Vec<String>,
}

impl AnalysisReport {
    pub fn new(analysis: &Analysis, surface: &SurfaceConfig) -> Self {
        let ns = analysis.nullspace.as_ref();
        let grid = &analysis.grid;
        let modes = ns
            .map(|ns| {
                ns.modes
                    .iter()
                    .enumerate()
                    .map(|(index, m)| ModeReport {
                        index,
                        class: m.class.name().into(),
                        sigma: m.sigma,
                        w1: vec3(m.rate(0)),
                        w2: vec3(m.rate(1)),
                        e: effective_membrane_strain(m, grid, &ns.geometry).ok().map(|e| matrix(e.e)),
                        chi: matrix(effective_bending_strain(m, &ns.geometry).chi),
                    })
                    .collect()
            })
            .unwrap_or_default();
        let basis = |v: &[[f64; 3]]| v.iter().map(|w| matrix(Sym2::from_weighted(*w))).collect::<Vec<_>>();
        let spaces = analysis.spaces.as_ref();
        AnalysisReport {
            surface: surface.clone(),
            grid: GridReport {
                resolution: grid.dims(),
                nodes: grid.len(),
                h: grid.h(),
                crease_pairs: grid.crease_pairs().count(),
                rows: analysis.rows.iter().map(|(k, n)| (format!("{k:?}").to_lowercase(), *n)).collect(),
                unknowns: analysis.unknowns,
            },
            solver: SolverReport {
                delta: analysis.options.delta,
                sigma_max: ns.map(|ns| ns.sigma_max),
                threshold: analysis.options.threshold.into(),
                cut: ns.map(|ns| ns.decision.cut),
                gap: ns.and_then(|ns| ns.decision.gap),
                ambiguous: analysis.ambiguity.as_ref().map(|a| (a.stage.to_string(), a.spectrum.clone())),
            },
            sigma_spectrum_ref: SPECTRUM_FILE.into(),
            null_dimension: analysis.modes().len(),
            modes,
            dims: spaces.map(|s| [s.dims.0, s.dims.1]),
            e_basis: spaces.map(|s| basis(&s.e_basis)).unwrap_or_default(),
            chi_basis: spaces.map(|s| basis(&s.chi_basis)).unwrap_or_default(),
            e_singular: spaces.map(|s| s.e_singular.clone()).unwrap_or_default(),
            chi_singular: spaces.map(|s| s.chi_singular.clone()).unwrap_or_default(),
            pairs: analysis
                .pairs
                .iter()
                .map(|p| PairReport {
                    membrane: p.membrane,
                    bending: p.bending,
                    e: matrix(p.e),
                    chi: matrix(p.chi),
                    residual: p.residual,
                    residual_adj: orthogonality_residual_adj(p.e, p.chi),
                    relative: p.relative,
                })
                .collect(),
            poisson: analysis
                .poisson
                .iter()
                .map(|(m, b, r)| match r {
                    Ok(r) => PoissonReport {
                        membrane: *m,
                        bending: *b,
                        in_plane: Some(r.in_plane.into()),
                        out_of_plane: Some(r.out_of_plane.into()),
                        angle: Some(r.angle),
                        error: None,
                    },
                    Err(e) => PoissonReport {
                        membrane: *m,
                        bending: *b,
                        in_plane: None,
                        out_of_plane: None,
                        angle: None,
                        error: Some(e.to_string()),
                    },
                })
                .collect(),
            oracle: OracleReport {
                seed: analysis.options.seed,
                comparisons: analysis
                    .oracle
                    .iter()
                    .map(|c| ComparisonReport {
                        example: c.example.name().into(),
                        predicted_e: c.predicted_e.map(matrix),
                        measured_e: c.measured_e.map(matrix),
                        predicted_chi: c.predicted_chi.map(matrix),
                        measured_chi: matrix(c.measured_chi),
                        projection_distance: c.projection_distance,
                        span_residual: c.span_residual,
                    })
                    .collect(),
                lemma_worst_relative: analysis.lemma.map(|l| l.worst_relative),
                lemma_pairs: analysis.lemma.map(|l| l.pairs),
            },
            export: ExportReport::default(),
            timings: TimingReport {
                grid_s: analysis.timings.grid,
                assembly_s: analysis.timings.assembly,
                solve_s: analysis.timings.solve,
                strains_s: analysis.timings.strains,
                oracle_s: analysis.timings.oracle,
            },
            notes: vec![FLOAT_NOTE.into()],
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Spectrum rows: index, kind, strain-revealing value, operator residual,
/// accepted flag and the strain direction.
pub fn spectrum_rows(analysis: &Analysis) -> Vec<SpectrumRow> {
    if let Some(ns) = &analysis.nullspace {
        let mut c: Vec<&Candidate> = ns.candidates.iter().collect();
        c.sort_by(|a, b| a.sigma.total_cmp(&b.sigma));
        return c
            .into_iter()
            .enumerate()
            .map(|(index, c)| SpectrumRow {
                index,
                kind: format!("{:?}", c.kind).to_lowercase(),
                sigma: c.sigma,
                sigma_over_cut: c.sigma / ns.decision.cut,
                residual: Some(c.residual),
                accepted: Some(c.accepted),
                d11: Some(c.direction[0]),
                d12: Some(c.direction[1] / std::f64::consts::SQRT_2),
                d22: Some(c.direction[2]),
            })
            .collect();
    }
    let spectrum = analysis.ambiguity.as_ref().map(|a| a.spectrum.as_slice()).unwrap_or_default();
    spectrum
        .iter()
        .enumerate()
        .map(|(index, s)| SpectrumRow {
            index,
            kind: "unknown".into(),
            sigma: *s,
            sigma_over_cut: f64::NAN,
            residual: None,
            accepted: None,
            d11: None,
            d12: None,
            d22: None,
        })
        .collect()
}

#[derive(Serialize, Debug, PartialEq)]
pub struct SpectrumRow {
    pub index: usize,
    pub kind: String,
    pub sigma: f64,
    pub sigma_over_cut: f64,
    pub residual: Option<f64>,
    pub accepted: Option<bool>,
    pub d11: Option<f64>,
    pub d12: Option<f64>,
    pub d22: Option<f64>,
}
