//! Discrete rotation-field system and extraction of effective null modes.
//!
//! Unknowns are the rotation vector `w` at every grid node followed by the
//! growth vectors `Ŵ₁, Ŵ₂` (growth of `w` over one full period). Fields and the
//! chart are interpolated bilinearly on each panel. One group of three rows per
//! node tests `D_x w = w₂∧x₁ − w₁∧x₂` against that node's hat function on its
//! own panel, integrated exactly; further rows impose `(w⁺ − w⁻)∧t = 0` across
//! creases and `w⁺ = w⁻` across seams. Cells that wrap around the period pick
//! up `Ŵ_α` by substitution.
//!
//! With this weak form the integration by parts behind the pairing
//! `⟨ω, D_x w⟩ = ⟨w, D_x ω⟩` holds for the discrete fields themselves, so exact
//! discrete membrane and bending modes satisfy the orthogonality relation
//! `tr(adj(E) χ) = 0` up to rounding on piecewise-flat surfaces.
//!
//! The continuum kernel is infinite dimensional (any isometric bump of a flat
//! panel is in it), so the solver does not enumerate it. Instead it asks which
//! effective strains can be realized by nearly-null fields: for the linear maps
//! `L_E` and `L_χ` from fields to strains it minimizes `‖Au‖² + δ‖u‖²_M` subject
//! to a prescribed strain, once per eigendirection of `L G⁻¹ Lᵀ` with
//! `G = AᵀA + δM`. Realizable strains cost about `δ`, the others stay at the
//! discretization scale; the square root of the cost is the candidate's
//! strain-revealing value and a gap policy separates the two groups.

use alloc::vec;
use alloc::vec::Vec;

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::Llt;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Mat};

use crate::chart::{JunctionKind, PeriodGeometry};
use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;
use crate::math;
use crate::vec3::Vec3;

/// Provenance of a constraint row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RowKind {
    Pde,
    Crease,
    /// Crease row at a node where two crease lines meet.
    CornerCrease,
    Seam,
}

/// Sparse row-major system `A u = 0` with per-unknown mass weights.
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    n_nodes: usize,
    period: [f64; 2],
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    kinds: Vec<RowKind>,
    mass: Vec<f64>,
    /// Per node `(ξ_α − c_α)/T_α` about the mass-weighted centre `c`.
    ramp: Vec<[f64; 2]>,
}

impl ConstraintSystem {
    pub fn nrows(&self) -> usize {
        self.kinds.len()
    }

    /// `3·nodes + 6`.
    pub fn ncols(&self) -> usize {
        3 * self.n_nodes + 6
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn period(&self) -> [f64; 2] {
        self.period
    }

    pub fn row_kinds(&self) -> &[RowKind] {
        &self.kinds
    }

    pub fn count_rows(&self, kind: RowKind) -> usize {
        self.kinds.iter().filter(|k| **k == kind).count()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Diagonal quadrature mass of the unknowns.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        (0..self.nrows()).map(|r| self.row(r).map(|(c, v)| v * u[c]).sum()).collect()
    }

    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ncols()];
        for (r, &yr) in y.iter().enumerate() {
            for (c, v) in self.row(r) {
                out[c] += v * yr;
            }
        }
        out
    }

    /// `‖A u‖` restricted to rows of one kind.
    pub fn residual_by_kind(&self, u: &[f64], kind: RowKind) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.nrows() {
            if self.kinds[r] == kind {
                let v: f64 = self.row(r).map(|(c, v)| v * u[c]).sum();
                acc += v * v;
            }
        }
        math::sqrt(acc)
    }

    pub fn mass_norm(&self, u: &[f64]) -> f64 {
        math::sqrt(u.iter().zip(&self.mass).map(|(x, m)| m * x * x).sum())
    }

    /// Lower triangle of `AᵀA + shift·R`, optionally restricted to the `w` block,
    /// where `R` is the mass of `(w − r_α Ŵ_α, Ŵ)`; on the `w` block `R = M`.
    fn normal_matrix(&self, shift: f64, w_only: bool) -> Result<SparseColMat<usize, f64>> {
        let n = if w_only { 3 * self.n_nodes } else { self.ncols() };
        let mut trips = Vec::with_capacity(self.nnz() * 8 + n);
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for r in 0..self.nrows() {
            entries.clear();
            entries.extend(self.row(r).filter(|(c, _)| *c < n));
            for &(i, vi) in &entries {
                for &(j, vj) in &entries {
                    if i >= j {
                        trips.push(Triplet::new(i, j, vi * vj));
                    }
                }
            }
        }
        for (i, m) in self.mass.iter().take(n).enumerate() {
            trips.push(Triplet::new(i, i, shift * m));
        }
        if !w_only {
            // regularize w − r_α Ŵ_α rather than w, so a growing mode's minimal
            // representative is not pulled toward the grid-scale kernel patterns
            // (checkerboards and stripes) that its linear ramp overlaps
            let g = 3 * self.n_nodes;
            let mut ww = [[0.0; 2]; 2];
            for (node, r) in self.ramp.iter().enumerate() {
                let m = self.mass[3 * node];
                for k in 0..3 {
                    for a in 0..2 {
                        trips.push(Triplet::new(g + 3 * a + k, 3 * node + k, -shift * m * r[a]));
                    }
                }
                for a in 0..2 {
                    for b in 0..2 {
                        ww[a][b] += m * r[a] * r[b];
                    }
                }
            }
            for k in 0..3 {
                for a in 0..2 {
                    for b in 0..=a {
                        trips.push(Triplet::new(g + 3 * a + k, g + 3 * b + k, shift * ww[a][b]));
                    }
                }
            }
        }
        SparseColMat::try_new_from_triplets(n, n, &trips)
            .map_err(|e| Error::Factorization(alloc::format!("{e:?}")))
    }

    /// Largest generalized singular value `max ‖Au‖/‖u‖_M`, by power iteration.
    pub fn sigma_max(&self) -> f64 {
        let n = self.ncols();
        let inv_sqrt: Vec<f64> = self.mass.iter().map(|m| 1.0 / math::sqrt(*m)).collect();
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 13) as f64 * 0.1).collect();
        let mut lambda = 0.0;
        for _ in 0..200 {
            let norm = math::sqrt(v.iter().map(|x| x * x).sum());
            for x in &mut v {
                *x /= norm;
            }
            let scaled: Vec<f64> = v.iter().zip(&inv_sqrt).map(|(x, s)| x * s).collect();
            let back = self.apply_transpose(&self.apply(&scaled));
            let next: Vec<f64> = back.iter().zip(&inv_sqrt).map(|(x, s)| x * s).collect();
            let l: f64 = next.iter().zip(&v).map(|(a, b)| a * b).sum();
            v = next;
            if (l - lambda).abs() <= 1e-6 * l {
                lambda = l;
                break;
            }
            lambda = l;
        }
        math::sqrt(lambda)
    }
}

struct RowBuilder {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    kinds: Vec<RowKind>,
    scratch: Vec<(usize, f64)>,
}

impl RowBuilder {
    fn add(&mut self, col: usize, v: f64) {
        if v != 0.0 {
            self.scratch.push((col, v));
        }
    }

    /// Adds `coef · [a]× · (block at column base)`.
    fn add_cross(&mut self, row: usize, a: Vec3, coef: f64, base: usize) {
        let m = a.cross_matrix();
        for (k, v) in m[row].iter().enumerate() {
            self.add(base + k, coef * v);
        }
    }

    fn finish(&mut self, kind: RowKind, weight: f64) {
        self.scratch.sort_by_key(|e| e.0);
        let mut last: Option<usize> = None;
        for &(c, v) in &self.scratch {
            if last == Some(c) {
                *self.vals.last_mut().unwrap() += weight * v;
            } else {
                self.cols.push(c);
                self.vals.push(weight * v);
                last = Some(c);
            }
        }
        self.scratch.clear();
        self.kinds.push(kind);
        self.row_ptr.push(self.cols.len());
    }
}

/// Builds the discrete system for a grid.
pub fn assemble_system(grid: &PeriodicGrid) -> Result<ConstraintSystem> {
    let n = grid.len();
    let growth = [3 * n, 3 * n + 3];
    let mut b = RowBuilder {
        row_ptr: vec![0],
        cols: Vec::new(),
        vals: Vec::new(),
        kinds: Vec::new(),
        scratch: Vec::new(),
    };
    // Galerkin rows ∫ φ_j (x₂∧w₁ − x₁∧w₂) over the bilinear interpolant, one
    // broken hat φ_j per node.
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); 3 * n];
    let mut hat_mass = vec![0.0; n];
    for cell in grid.cells() {
        for gp in grid.gauss_points(&cell) {
            let [x1, x2] = gp.partials;
            for (k, &(test, _)) in cell.corners.iter().enumerate() {
                let phi = gp.weight * gp.shape[k];
                hat_mass[test] += phi;
                for (i, &(node, shift)) in cell.corners.iter().enumerate() {
                    let m = (x2.cross_matrix(), x1.cross_matrix());
                    let (c1, c2) = (phi * gp.grad[0][i], -phi * gp.grad[1][i]);
                    for r in 0..3 {
                        let out = &mut rows[3 * test + r];
                        for c in 0..3 {
                            let v = c1 * m.0[r][c] + c2 * m.1[r][c];
                            out.push((3 * node + c, v));
                            for d in 0..2 {
                                if shift[d] != 0 {
                                    out.push((growth[d] + c, v * shift[d] as f64));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    for (r, entries) in rows.into_iter().enumerate() {
        for (c, v) in entries {
            b.add(c, v);
        }
        b.finish(RowKind::Pde, 1.0 / math::sqrt(hat_mass[r / 3]));
    }
    let area = grid.chart().period()[0] * grid.chart().period()[1];
    for (k, p) in grid.junction_pairs().iter().enumerate() {
        let h = grid.axis(p.direction).max_spacing();
        let weight = math::sqrt(p.along / (area * h));
        match p.kind {
            JunctionKind::Crease => {
                if !(p.tangent.norm() > 0.0) {
                    return Err(Error::DegenerateCreaseTangent(k));
                }
                let kind = if p.corner { RowKind::CornerCrease } else { RowKind::Crease };
                for row in 0..3 {
                    b.add_cross(row, p.tangent, 1.0, 3 * p.plus);
                    b.add_cross(row, p.tangent, -1.0, 3 * p.minus);
                    if p.shift != 0 {
                        b.add_cross(row, p.tangent, p.shift as f64, growth[p.direction]);
                    }
                    b.finish(kind, weight);
                }
            }
            JunctionKind::Seam => {
                for row in 0..3 {
                    b.add(3 * p.plus + row, 1.0);
                    b.add(3 * p.minus + row, -1.0);
                    if p.shift != 0 {
                        b.add(growth[p.direction] + row, p.shift as f64);
                    }
                    b.finish(RowKind::Seam, weight);
                }
            }
        }
    }
    let mut mass: Vec<f64> = grid.weights().iter().flat_map(|q| [*q; 3]).collect();
    mass.extend([1.0; 6]);
    let period = grid.chart().period();
    let total: f64 = grid.weights().iter().sum();
    let centre = [0, 1].map(|a| grid.nodes().iter().zip(grid.weights()).map(|(p, q)| q * p.xi[a]).sum::<f64>() / total);
    let ramp = grid.nodes().iter().map(|p| [0, 1].map(|a| (p.xi[a] - centre[a]) / period[a])).collect();
    Ok(ConstraintSystem {
        n_nodes: n,
        period: grid.chart().period(),
        row_ptr: b.row_ptr,
        cols: b.cols,
        vals: b.vals,
        kinds: b.kinds,
        mass,
        ramp,
    })
}

/// Kind of an extracted mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModeClass {
    /// `w` constant: a rigid rotation.
    Constant,
    /// Periodic `w` with a nonzero effective membrane strain.
    Membrane,
    /// Linearly growing `w` with no membrane strain left after removing membrane modes.
    Bending,
    /// Growing `w` that still carries a membrane strain.
    Mixed,
}

impl ModeClass {
    pub fn name(self) -> &'static str {
        match self {
            ModeClass::Constant => "constant",
            ModeClass::Membrane => "membrane",
            ModeClass::Bending => "bending",
            ModeClass::Mixed => "mixed",
        }
    }
}

/// A discrete rotation field `w` with its growth per period `Ŵ_α`.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationMode {
    pub w: Vec<Vec3>,
    /// `Ŵ_α = T_α W_α`.
    pub growth: [Vec3; 2],
    pub period: [f64; 2],
    /// Normalized residual `‖Au‖ / (σ_max ‖u‖_M)`.
    pub sigma: f64,
    pub class: ModeClass,
}

impl RotationMode {
    pub fn new(w: Vec<Vec3>, growth: [Vec3; 2], period: [f64; 2]) -> Self {
        RotationMode { w, growth, period, sigma: f64::NAN, class: ModeClass::Mixed }
    }

    /// Constant rotation `w ≡ c`.
    pub fn constant(c: Vec3, n_nodes: usize, period: [f64; 2]) -> Self {
        let mut m = Self::new(vec![c; n_nodes], [Vec3::ZERO; 2], period);
        m.sigma = 0.0;
        m.class = ModeClass::Constant;
        m
    }

    /// Growth per unit parameter `W_α = Ŵ_α / T_α`.
    pub fn rate(&self, alpha: usize) -> Vec3 {
        self.growth[alpha] * (1.0 / self.period[alpha])
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.w.iter().flat_map(|x| x.0).collect();
        v.extend(self.growth[0].0);
        v.extend(self.growth[1].0);
        v
    }

    pub fn from_vector(v: &[f64], period: [f64; 2]) -> Self {
        let n = (v.len() - 6) / 3;
        let w = (0..n).map(|i| Vec3::new(v[3 * i], v[3 * i + 1], v[3 * i + 2])).collect();
        let g = |o: usize| Vec3::new(v[3 * n + o], v[3 * n + o + 1], v[3 * n + o + 2]);
        Self::new(w, [g(0), g(3)], period)
    }

    pub fn euclidean_norm(&self) -> f64 {
        math::sqrt(self.w.iter().map(|x| x.norm_sq()).sum::<f64>() + self.growth[0].norm_sq() + self.growth[1].norm_sq())
    }

    /// Scales to unit Euclidean norm over `(w, Ŵ₁, Ŵ₂)` with a deterministic sign
    /// (largest-magnitude entry positive).
    pub fn normalized(mut self) -> Self {
        let norm = self.euclidean_norm();
        if norm == 0.0 {
            return self;
        }
        let v = self.to_vector();
        let mut big = 0.0;
        for x in &v {
            if math::abs(*x) > math::abs(big) * (1.0 + 1e-9) {
                big = *x;
            }
        }
        let s = if big < 0.0 { -1.0 / norm } else { 1.0 / norm };
        for x in &mut self.w {
            *x = *x * s;
        }
        self.growth = [self.growth[0] * s, self.growth[1] * s];
        self
    }

    pub fn is_periodic(&self, tol: f64) -> bool {
        let scale = self.euclidean_norm().max(f64::MIN_POSITIVE);
        self.growth[0].norm() <= tol * scale && self.growth[1].norm() <= tol * scale
    }
}

/// Rule separating realizable strain directions from the rest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThresholdPolicy {
    /// Cut at the largest ratio between consecutive sorted strain-revealing
    /// values whose lower end lies below `cap`; the ratio must be at least
    /// `min_gap`.
    Auto { min_gap: f64, cap: f64 },
    /// Accept candidates with strain-revealing value at most `tau`.
    Fixed(f64),
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        ThresholdPolicy::Auto { min_gap: 100.0, cap: 1e-2 }
    }
}

/// The cut actually applied.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdDecision {
    pub policy: ThresholdPolicy,
    pub cut: f64,
    /// Ratio across the chosen cut (auto policy only).
    pub gap: Option<f64>,
    /// Sorted strain-revealing values of the six candidates.
    pub spectrum: Vec<f64>,
}

/// Which strain map a candidate was extracted for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CandidateKind {
    Membrane,
    Bending,
}

/// A strain-revealing candidate mode before thresholding.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub kind: CandidateKind,
    /// Unit strain direction in weighted components `(·₁₁, √2·₁₂, ·₂₂)`.
    pub direction: [f64; 3],
    /// Strain-revealing singular value: the square root of the minimal
    /// `(‖Au‖² + δσ_max²‖u‖²_R)/σ_max²` per unit strain, times the strain
    /// functional's geometric scale. `∞` when no field produces the strain.
    pub sigma: f64,
    /// Operator residual `‖Au‖/(σ_max‖u‖_M)` of the minimizing field.
    pub residual: f64,
    pub accepted: bool,
}

/// Solver settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub threshold: ThresholdPolicy,
    /// Regularization relative to `σ_max²`.
    pub delta: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { threshold: ThresholdPolicy::default(), delta: 1e-12 }
    }
}

/// Effective null modes of a system together with the machinery to project onto
/// the (regularized) kernel.
pub struct NullSpace {
    pub modes: Vec<RotationMode>,
    pub candidates: Vec<Candidate>,
    pub decision: ThresholdDecision,
    pub sigma_max: f64,
    pub delta: f64,
    pub geometry: PeriodGeometry,
    system: ConstraintSystem,
    full: Llt<usize, f64>,
}

impl core::fmt::Debug for NullSpace {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("NullSpace")
            .field("modes", &self.modes.len())
            .field("candidates", &self.candidates)
            .field("decision", &self.decision)
            .field("sigma_max", &self.sigma_max)
            .finish()
    }
}

impl NullSpace {
    pub fn system(&self) -> &ConstraintSystem {
        &self.system
    }

    pub fn of_class(&self, class: ModeClass) -> impl Iterator<Item = &RotationMode> {
        self.modes.iter().filter(move |m| m.class == class)
    }

    /// Normalized residual of an arbitrary field.
    pub fn residual(&self, mode: &RotationMode) -> f64 {
        normalized_residual(&self.system, &mode.to_vector(), self.sigma_max)
    }

    /// Regularized projection `δ G⁻¹ M u` onto the kernel and the relative
    /// distance `‖u − Pu‖_M / ‖u‖_M`. The difference is formed directly as
    /// `G⁻¹AᵀAu`, which keeps it accurate for fields already in the kernel.
    pub fn project(&self, mode: &RotationMode) -> (RotationMode, f64) {
        let u = mode.to_vector();
        let ata = self.system.apply_transpose(&self.system.apply(&u));
        let mut rhs = Mat::<f64>::zeros(u.len(), 1);
        for (i, x) in ata.iter().enumerate() {
            rhs[(i, 0)] = *x;
        }
        self.full.solve_in_place_with_conj(Conj::No, rhs.as_mut());
        let diff: Vec<f64> = (0..u.len()).map(|i| rhs[(i, 0)]).collect();
        let p: Vec<f64> = u.iter().zip(&diff).map(|(a, b)| a - b).collect();
        let dist = self.system.mass_norm(&diff) / self.system.mass_norm(&u);
        let mut out = RotationMode::from_vector(&p, mode.period);
        out.sigma = normalized_residual(&self.system, &p, self.sigma_max);
        out.class = mode.class;
        (out, dist)
    }
}

fn normalized_residual(system: &ConstraintSystem, u: &[f64], sigma_max: f64) -> f64 {
    let norm = system.mass_norm(u);
    if !(norm > 0.0) {
        return f64::INFINITY;
    }
    let r = system.apply(u);
    math::sqrt(r.iter().map(|x| x * x).sum()) / (sigma_max * norm)
}

/// Dual norm of a strain functional, relative to its geometric scale, below
/// which the functional is treated as identically zero.
const MIN_FUNCTIONAL: f64 = 1e-10;

/// Residual of a candidate, or `∞` when the strain direction is not attained
/// by any field at all (the functional vanishes along it).
fn candidate_residual(
    system: &ConstraintSystem,
    rows: &[Vec<f64>; 3],
    scale: f64,
    dir: [f64; 3],
    u: &[f64],
    sigma_max: f64,
) -> f64 {
    let mass = system.mass();
    let dual = math::sqrt(
        (0..mass.len())
            .map(|i| {
                let l: f64 = (0..3).map(|k| rows[k][i] * dir[k]).sum();
                l * l / mass[i]
            })
            .sum(),
    );
    let norm = system.mass_norm(u);
    if !(dual > MIN_FUNCTIONAL * scale) || !(norm > 0.0) {
        return f64::INFINITY;
    }
    normalized_residual(system, u, sigma_max)
}

fn revealing_value(residual: f64, mu: f64, sigma_max: f64, scale: f64) -> f64 {
    if residual.is_finite() && mu > 0.0 {
        scale / (math::sqrt(mu) * sigma_max)
    } else {
        f64::INFINITY
    }
}

/// Weighted membrane strain functional rows over all unknowns,
/// `E_{μν} = ½(⟨p_μ, ṗ_ν⟩ + ⟨p_ν, ṗ_μ⟩)` with `ṗ_α` the mean of `w∧x_α` over
/// the bilinear interpolant.
pub(crate) fn membrane_functionals(grid: &PeriodicGrid, g: &PeriodGeometry) -> [Vec<f64>; 3] {
    let n = grid.len();
    let growth = [3 * n, 3 * n + 3];
    let mut rows = [vec![0.0; 3 * n + 6], vec![0.0; 3 * n + 6], vec![0.0; 3 * n + 6]];
    let comps = [(0, 0, 1.0), (0, 1, core::f64::consts::SQRT_2), (1, 1, 1.0)];
    for cell in grid.cells() {
        for gp in grid.gauss_points(&cell) {
            let x = gp.partials;
            for (r, &(mu, nu, s)) in comps.iter().enumerate() {
                let c = x[nu].cross(g.p(mu)) + x[mu].cross(g.p(nu));
                for (i, &(node, shift)) in cell.corners.iter().enumerate() {
                    let v = c * (0.5 * s * gp.weight * gp.shape[i]);
                    for k in 0..3 {
                        rows[r][3 * node + k] += v.0[k];
                        for d in 0..2 {
                            rows[r][growth[d] + k] += shift[d] as f64 * v.0[k];
                        }
                    }
                }
            }
        }
    }
    rows
}

/// Weighted bending strain functional rows over all unknowns:
/// `χ_{μν} = ½(⟨W_ν, p_μ∧n⟩ + ⟨W_μ, p_ν∧n⟩)`.
fn bending_functionals(n_nodes: usize, period: [f64; 2], g: &PeriodGeometry) -> [Vec<f64>; 3] {
    let ncols = 3 * n_nodes + 6;
    let mut rows = [vec![0.0; ncols], vec![0.0; ncols], vec![0.0; ncols]];
    let comps = [(0, 0, 1.0), (0, 1, core::f64::consts::SQRT_2), (1, 1, 1.0)];
    for (r, &(mu, nu, s)) in comps.iter().enumerate() {
        for (a, b) in [(nu, mu), (mu, nu)] {
            // coefficient of W_a is ½ p_b∧n
            let c = g.p(b).cross(g.normal) * (0.5 * s / period[a]);
            for k in 0..3 {
                rows[r][3 * n_nodes + 3 * a + k] += c.0[k];
            }
        }
    }
    rows
}

fn factor(m: &SparseColMat<usize, f64>) -> Result<Llt<usize, f64>> {
    m.sp_cholesky(faer::Side::Lower).map_err(|e| Error::Factorization(alloc::format!("{e:?}")))
}

/// Candidate fields `u_k = G⁻¹Lᵀv_k` for the eigenvectors `v_k` of `L G⁻¹ Lᵀ`.
fn strain_candidates(llt: &Llt<usize, f64>, rows: &[Vec<f64>; 3], ncols: usize) -> Result<Vec<([f64; 3], f64, Vec<f64>)>> {
    let n = rows[0].len();
    let mut z = Mat::<f64>::zeros(n, 3);
    for (k, r) in rows.iter().enumerate() {
        for (i, v) in r.iter().enumerate() {
            z[(i, k)] = *v;
        }
    }
    llt.solve_in_place_with_conj(Conj::No, z.as_mut());
    let mut gram = Mat::<f64>::zeros(3, 3);
    for a in 0..3 {
        for b in 0..3 {
            gram[(a, b)] = (0..n).map(|i| rows[a][i] * z[(i, b)]).sum();
        }
    }
    for a in 0..3 {
        for b in 0..a {
            let s = 0.5 * (gram[(a, b)] + gram[(b, a)]);
            gram[(a, b)] = s;
            gram[(b, a)] = s;
        }
    }
    let evd = gram
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Factorization(alloc::format!("{e:?}")))?;
    let u = evd.U();
    let mut out = Vec::with_capacity(3);
    for k in (0..3).rev() {
        let dir = [u[(0, k)], u[(1, k)], u[(2, k)]];
        let mut field = vec![0.0; ncols];
        for (i, f) in field.iter_mut().enumerate().take(n) {
            *f = (0..3).map(|a| z[(i, a)] * dir[a]).sum();
        }
        out.push((dir, evd.S()[k], field));
    }
    Ok(out)
}

fn decide(policy: ThresholdPolicy, sigmas: &[f64]) -> Result<ThresholdDecision> {
    let mut spectrum = sigmas.to_vec();
    spectrum.sort_by(f64::total_cmp);
    match policy {
        ThresholdPolicy::Fixed(tau) => Ok(ThresholdDecision { policy, cut: tau, gap: None, spectrum }),
        ThresholdPolicy::Auto { min_gap, cap } => {
            let mut best: Option<(f64, f64)> = None;
            for k in 1..spectrum.len() {
                let (lo, hi) = (spectrum[k - 1].max(f64::MIN_POSITIVE), spectrum[k]);
                if lo > cap {
                    break;
                }
                let ratio = hi / lo;
                if best.is_none_or(|(r, _)| ratio > r) {
                    let cut = if hi.is_finite() { math::sqrt(lo * hi) } else { cap.max(lo) };
                    best = Some((ratio, cut));
                }
            }
            match best {
                Some((ratio, cut)) if ratio >= min_gap => {
                    Ok(ThresholdDecision { policy, cut, gap: Some(ratio), spectrum })
                }
                // nothing realizable at all
                _ if spectrum.first().is_some_and(|s| *s > cap) => {
                    Ok(ThresholdDecision { policy, cut: cap, gap: None, spectrum })
                }
                _ => Err(Error::AmbiguousGap { spectrum }),
            }
        }
    }
}

fn weighted_dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Extracts constant, membrane and bending modes.
pub fn nullspace(grid: &PeriodicGrid, system: &ConstraintSystem, options: SolverOptions) -> Result<NullSpace> {
    let geometry = grid.chart().period_geometry()?;
    let sigma_max = system.sigma_max();
    let shift = options.delta * sigma_max * sigma_max;
    let ncols = system.ncols();
    let period = system.period();

    let membrane_llt = factor(&system.normal_matrix(shift, true)?)?;
    let full = factor(&system.normal_matrix(shift, false)?)?;

    let p_scale = geometry.p1.norm().max(geometry.p2.norm());
    let e_scale = p_scale * p_scale;
    let chi_scale = p_scale / period[0].min(period[1]);
    let mut candidates = Vec::new();
    let mut fields = Vec::new();
    let e_rows = membrane_functionals(grid, &geometry);
    let e_rows_w = e_rows.clone().map(|mut r| {
        r.truncate(3 * grid.len());
        r
    });
    for (dir, mu, u) in strain_candidates(&membrane_llt, &e_rows_w, ncols)? {
        let residual = candidate_residual(system, &e_rows, e_scale, dir, &u, sigma_max);
        candidates.push(Candidate {
            kind: CandidateKind::Membrane,
            direction: dir,
            sigma: revealing_value(residual, mu, sigma_max, e_scale),
            residual,
            accepted: false,
        });
        fields.push(u);
    }
    let chi_rows = bending_functionals(grid.len(), period, &geometry);
    for (dir, mu, u) in strain_candidates(&full, &chi_rows, ncols)? {
        let residual = candidate_residual(system, &chi_rows, chi_scale, dir, &u, sigma_max);
        candidates.push(Candidate {
            kind: CandidateKind::Bending,
            direction: dir,
            sigma: revealing_value(residual, mu, sigma_max, chi_scale),
            residual,
            accepted: false,
        });
        fields.push(u);
    }
    let sigmas: Vec<f64> = candidates.iter().map(|c| c.sigma).collect();
    let decision = decide(options.threshold, &sigmas)?;

    let mut modes: Vec<RotationMode> =
        (0..3).map(|c| RotationMode::constant(Vec3::axis(c), grid.len(), period).normalized()).collect();
    let mut membrane: Vec<(Vec<f64>, [f64; 3])> = Vec::new();
    for (cand, u) in candidates.iter_mut().zip(&fields) {
        cand.accepted = cand.sigma.is_finite() && cand.sigma <= decision.cut;
        if cand.accepted && cand.kind == CandidateKind::Membrane {
            membrane.push((u.clone(), membrane_strain_of(&e_rows, u)));
        }
    }
    for (cand, u) in candidates.iter().zip(&fields) {
        if !cand.accepted {
            continue;
        }
        let mut u = u.clone();
        let class = match cand.kind {
            CandidateKind::Membrane => ModeClass::Membrane,
            CandidateKind::Bending => {
                // remove the membrane part so the mode carries no E where possible
                let mut e = membrane_strain_of(&e_rows, &u);
                let scale = weighted_dot(e, e);
                for (mu, em) in &membrane {
                    let c = weighted_dot(e, *em) / weighted_dot(*em, *em);
                    for (a, b) in u.iter_mut().zip(mu) {
                        *a -= c * b;
                    }
                    e = membrane_strain_of(&e_rows, &u);
                }
                let chi = membrane_strain_of(&chi_rows, &u);
                let chi_size = math::sqrt(weighted_dot(chi, chi)) * p_scale;
                let left = math::sqrt(weighted_dot(e, e));
                if left <= 1e-6 * chi_size.max(math::sqrt(scale)) {
                    ModeClass::Bending
                } else {
                    ModeClass::Mixed
                }
            }
        };
        let mut mode = RotationMode::from_vector(&u, period).normalized();
        mode.sigma = cand.residual;
        mode.class = class;
        modes.push(mode);
    }
    modes.sort_by(|a, b| a.sigma.total_cmp(&b.sigma));
    Ok(NullSpace {
        modes,
        candidates,
        decision,
        sigma_max,
        delta: options.delta,
        geometry,
        system: system.clone(),
        full,
    })
}

/// Applies three weighted functionals to a field.
fn membrane_strain_of(rows: &[Vec<f64>; 3], u: &[f64]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (k, r) in rows.iter().enumerate() {
        out[k] = r.iter().zip(u).map(|(a, b)| a * b).sum();
    }
    out
}

/// All generalized singular values `σ(A M^{-1/2})`, descending; small systems only.
pub fn dense_singular_values(system: &ConstraintSystem) -> Result<Vec<f64>> {
    let (m, n) = (system.nrows(), system.ncols());
    let mut a = Mat::<f64>::zeros(m, n);
    for r in 0..m {
        for (c, v) in system.row(r) {
            a[(r, c)] = v / math::sqrt(system.mass()[c]);
        }
    }
    a.singular_values().map_err(|e| Error::Factorization(alloc::format!("{e:?}")))
}

/// Deflection `ẋ` sampled on the grid, with `ẋ` at node 0 fixed to zero.
///
/// Because `w(ξ + T_α e_α) = w(ξ) + Ŵ_α`, the deflection satisfies
/// `ẋ(ξ + T_α e_α) = ẋ(ξ) + Ŵ_α∧x(ξ) + c_α` with constant `c_α`.
#[derive(Clone, Debug, PartialEq)]
pub struct DeflectionField {
    pub values: Vec<Vec3>,
    pub growth: [Vec3; 2],
    pub offsets: [Vec3; 2],
    pub lattice: [Vec3; 2],
}

impl DeflectionField {
    /// `ẋ` at the image of node `id` shifted by `shift` periods.
    pub fn value(&self, grid: &PeriodicGrid, id: usize, shift: [i8; 2]) -> Vec3 {
        let mut v = self.values[id];
        let mut x = grid.positions()[id];
        for dir in 0..2 {
            for _ in 0..shift[dir].max(0) {
                v = v + self.growth[dir].cross(x) + self.offsets[dir];
                x += self.lattice[dir];
            }
            for _ in 0..(-shift[dir]).max(0) {
                x -= self.lattice[dir];
                v = v - self.growth[dir].cross(x) - self.offsets[dir];
            }
        }
        v
    }

    /// `∂ẋ/∂ξ_direction` on the grid.
    pub fn derivative(&self, grid: &PeriodicGrid, direction: usize) -> Vec<Vec3> {
        (0..grid.len())
            .map(|i| {
                let mut acc = Vec3::ZERO;
                for e in grid.stencil(i, direction) {
                    let mut s = [0, 0];
                    s[direction] = e.shift;
                    acc += (self.value(grid, e.node, s) - self.values[i]) * e.coef;
                }
                acc
            })
            .collect()
    }
}

/// Integrates `ẋ_μ = w∧x_μ` along a spanning tree (first column, then rows),
/// with the trapezoid increment `½(w_a + w_b)∧(x_b − x_a)`.
pub fn recover_deflection(mode: &RotationMode, grid: &PeriodicGrid) -> Result<DeflectionField> {
    if mode.w.len() != grid.len() {
        return Err(Error::FieldSize { expected: grid.len(), got: mode.w.len() });
    }
    let chart = grid.chart();
    let lattice = [chart.lattice_vector(0), chart.lattice_vector(1)];
    let [n1, n2] = grid.dims();
    let x = grid.positions();
    let w = &mode.w;
    let step = |from: Vec3, wa: Vec3, xa: Vec3, wb: Vec3, xb: Vec3| from + (wa + wb).cross(xb - xa) * 0.5;
    let mut values = vec![Vec3::ZERO; grid.len()];
    for b in 1..n2 {
        let (p, q) = (grid.id(0, b - 1), grid.id(0, b));
        values[q] = step(values[p], w[p], x[p], w[q], x[q]);
    }
    for b in 0..n2 {
        for a in 1..n1 {
            let (p, q) = (grid.id(a - 1, b), grid.id(a, b));
            values[q] = step(values[p], w[p], x[p], w[q], x[q]);
        }
    }
    // ẋ at the image of node 0 one period up, reached from the far end of the base line
    let mut offsets = [Vec3::ZERO; 2];
    for dir in 0..2 {
        let axis = grid.axis(dir);
        let last = if dir == 0 { grid.id(n1 - 1, 0) } else { grid.id(0, n2 - 1) };
        let image = if axis.is_periodic() {
            let (wi, xi) = (w[0] + mode.growth[dir], x[0] + lattice[dir]);
            step(values[last], w[last], x[last], wi, xi)
        } else {
            values[last]
        };
        offsets[dir] = image - values[0] - mode.growth[dir].cross(x[0]);
    }
    Ok(DeflectionField { values, growth: mode.growth, offsets, lattice })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{Profile, SurfaceChart};
    use crate::math::TAU;

    fn plane(n: usize) -> PeriodicGrid {
        PeriodicGrid::build(&SurfaceChart::plane([TAU, TAU]).unwrap(), [n, n]).unwrap()
    }

    fn sgn() -> Profile {
        Profile::sgn_cos(1.0, TAU).unwrap()
    }

    #[test]
    fn plane_counts() {
        let g = plane(8);
        let s = assemble_system(&g).unwrap();
        assert_eq!(s.nrows(), 192);
        assert_eq!(s.ncols(), 198);
        assert_eq!(s.count_rows(RowKind::Pde), 192);
    }

    #[test]
    fn corrugation_counts() {
        let chart = SurfaceChart::simple_corrugation(sgn(), TAU).unwrap();
        let g = PeriodicGrid::build(&chart, [16, 16]).unwrap();
        let s = assemble_system(&g).unwrap();
        assert_eq!(s.count_rows(RowKind::Pde), 3 * 18 * 16);
        assert_eq!(s.count_rows(RowKind::Crease), 3 * 2 * 16);
        assert_eq!(s.ncols(), 3 * 18 * 16 + 6);
    }

    #[test]
    fn constants_are_annihilated() {
        let chart = SurfaceChart::double_corrugation(sgn(), sgn()).unwrap();
        let g = PeriodicGrid::build(&chart, [16, 16]).unwrap();
        let s = assemble_system(&g).unwrap();
        for c in 0..3 {
            let m = RotationMode::constant(Vec3::axis(c), g.len(), chart.period());
            let r = s.apply(&m.to_vector());
            assert!(r.iter().all(|v| v.abs() < 1e-12), "{:?}", r.iter().copied().fold(0.0, f64::max));
        }
    }

    #[test]
    fn plane_kernel_is_large() {
        // a discrete bump space sits in the kernel besides the six effective modes
        let s = assemble_system(&plane(8)).unwrap();
        let sv = dense_singular_values(&s).unwrap();
        let smax = sv[0];
        let zero = sv.iter().filter(|x| **x < 1e-10 * smax).count() + (s.ncols() - sv.len());
        assert!(zero > 6, "kernel dimension {zero}");
    }

    #[test]
    fn plane_linear_bending_mode_is_exact() {
        let g = plane(16);
        let s = assemble_system(&g).unwrap();
        let w: Vec<Vec3> = g.nodes().iter().map(|n| Vec3::new(0.0, -n.xi[0], 0.0)).collect();
        let m = RotationMode::new(w, [Vec3::new(0.0, -TAU, 0.0), Vec3::ZERO], [TAU, TAU]);
        let r = s.apply(&m.to_vector());
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn rigid_rotation_deflection() {
        let chart = SurfaceChart::simple_corrugation(sgn(), TAU).unwrap();
        let g = PeriodicGrid::build(&chart, [16, 16]).unwrap();
        let m = RotationMode::constant(Vec3::axis(2), g.len(), chart.period());
        let d = recover_deflection(&m, &g).unwrap();
        let x0 = g.positions()[0];
        for (v, x) in d.values.iter().zip(g.positions()) {
            assert!((*v - Vec3::axis(2).cross(*x - x0)).norm() < 1e-12);
        }
    }

    #[test]
    fn threshold_decision_with_unrealizable_directions() {
        let d = decide(ThresholdPolicy::default(), &[1e-6, 1e-6, 2e-6, f64::INFINITY, f64::INFINITY, f64::INFINITY]).unwrap();
        assert!(d.cut.is_finite() && d.cut >= 2e-6);
    }

    #[test]
    fn threshold_decision() {
        let d = decide(ThresholdPolicy::default(), &[1e-6, 2e-6, 1e-1, 3e-1, 2e-1, 1e-6]).unwrap();
        assert!(d.cut > 2e-6 && d.cut < 1e-1);
        assert!(decide(ThresholdPolicy::default(), &[1e-3, 2e-3, 3e-3, 4e-3, 5e-3, 6e-3]).is_err());
        let d = decide(ThresholdPolicy::Fixed(0.5), &[1.0; 6]).unwrap();
        assert_eq!(d.cut, 0.5);
    }
}
