//! Panel-aligned structured discretization of one period.
//!
//! Each parameter axis is cut at the chart's junction coordinates into panels
//! with uniform spacing inside each panel. Junction nodes are duplicated, one
//! copy per adjacent panel, so fields may be double-valued there. The last panel
//! of an axis ends on the image `b₀ + T` of the first junction; that end node is
//! identified with the first node shifted by one period. Axes without junctions
//! are plain periodic grids.
//!
//! Stencil entries carry a `shift`: the value to use is the stored value plus
//! `shift` times the growth of the field over one period in that direction.

use alloc::vec;
use alloc::vec::Vec;

use crate::chart::{Junction, JunctionKind, PanelSelector, PeriodGeometry, Side, SurfaceChart};
use crate::error::{Error, Result};
use crate::math;
use crate::vec3::Vec3;

pub const MIN_RESOLUTION: usize = 8;

/// One term `coef · (field[node] + shift · jump)` of a derivative stencil.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StencilEntry {
    pub node: usize,
    pub coef: f64,
    pub shift: i8,
}

/// Duplicated node pair across a junction of one axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisJunction {
    /// Last node of the panel below.
    pub minus: usize,
    /// First node of the panel above.
    pub plus: usize,
    /// 1 when `plus` stands for its image one period up.
    pub shift: i8,
    pub kind: JunctionKind,
}

/// One parameter direction of the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis1d {
    period: f64,
    coords: Vec<f64>,
    panel: Vec<usize>,
    side: Vec<Side>,
    panel_first: Vec<usize>,
    panel_intervals: Vec<usize>,
    spacing: Vec<f64>,
    weights: Vec<f64>,
    junctions: Vec<AxisJunction>,
    stencils: Vec<Vec<StencilEntry>>,
}

impl Axis1d {
    fn periodic(period: f64, n: usize) -> Self {
        let h = period / n as f64;
        let stencils = (0..n)
            .map(|a| {
                let (next, s_next) = if a + 1 == n { (0, 1) } else { (a + 1, 0) };
                let (prev, s_prev) = if a == 0 { (n - 1, -1) } else { (a - 1, 0) };
                vec![
                    StencilEntry { node: next, coef: 0.5 / h, shift: s_next },
                    StencilEntry { node: prev, coef: -0.5 / h, shift: s_prev },
                ]
            })
            .collect();
        Axis1d {
            period,
            coords: (0..n).map(|a| a as f64 * h).collect(),
            panel: vec![0; n],
            side: vec![Side::Plus; n],
            panel_first: vec![0],
            panel_intervals: vec![n],
            spacing: vec![h],
            weights: vec![h; n],
            junctions: Vec::new(),
            stencils,
        }
    }

    fn paneled(period: f64, junctions: &[Junction], n: usize, direction: usize) -> Result<Self> {
        let k = junctions.len();
        let lens: Vec<f64> = (0..k)
            .map(|i| {
                let end = if i + 1 < k { junctions[i + 1].coord } else { junctions[0].coord + period };
                end - junctions[i].coord
            })
            .collect();
        let intervals = distribute(n, &lens, period);
        for (panel, &m) in intervals.iter().enumerate() {
            if m < 2 {
                return Err(Error::PanelTooNarrow { direction, panel, intervals: m });
            }
        }
        let mut axis = Axis1d {
            period,
            coords: Vec::new(),
            panel: Vec::new(),
            side: Vec::new(),
            panel_first: Vec::new(),
            panel_intervals: intervals.clone(),
            spacing: Vec::new(),
            weights: Vec::new(),
            junctions: Vec::new(),
            stencils: Vec::new(),
        };
        for (i, &m) in intervals.iter().enumerate() {
            let h = lens[i] / m as f64;
            let first = axis.coords.len();
            axis.panel_first.push(first);
            axis.spacing.push(h);
            for j in 0..=m {
                let c = if j == m { junctions[i].coord + lens[i] } else { junctions[i].coord + j as f64 * h };
                axis.coords.push(c);
                axis.panel.push(i);
                axis.side.push(if j == m { Side::Minus } else { Side::Plus });
                axis.weights.push(if j == 0 || j == m { 0.5 * h } else { h });
                let a = first + j;
                let e = |node: usize, coef: f64| StencilEntry { node, coef: coef / h, shift: 0 };
                axis.stencils.push(if j == 0 {
                    vec![e(a, -1.5), e(a + 1, 2.0), e(a + 2, -0.5)]
                } else if j == m {
                    vec![e(a, 1.5), e(a - 1, -2.0), e(a - 2, 0.5)]
                } else {
                    vec![e(a + 1, 0.5), e(a - 1, -0.5)]
                });
            }
        }
        for i in 0..k {
            let minus = axis.panel_first[i] + intervals[i];
            let (plus, shift) = if i + 1 < k { (axis.panel_first[i + 1], 0) } else { (0, 1) };
            // the junction at the end of panel i is the start of panel i+1
            let kind = junctions[(i + 1) % k].kind;
            axis.junctions.push(AxisJunction { minus, plus, shift, kind });
        }
        Ok(axis)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn side(&self, a: usize) -> Side {
        self.side[a]
    }

    pub fn panel(&self, a: usize) -> usize {
        self.panel[a]
    }

    pub fn panel_count(&self) -> usize {
        self.panel_first.len()
    }

    /// Number of intervals per panel; they sum to the requested resolution.
    pub fn panel_intervals(&self) -> &[usize] {
        &self.panel_intervals
    }

    /// Trapezoid weights; they sum to the period.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn junctions(&self) -> &[AxisJunction] {
        &self.junctions
    }

    pub fn is_periodic(&self) -> bool {
        self.junctions.is_empty()
    }

    pub fn stencil(&self, a: usize) -> &[StencilEntry] {
        &self.stencils[a]
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_junction_node(&self, a: usize) -> bool {
        self.junctions.iter().any(|j| j.minus == a || j.plus == a)
    }

    /// Consecutive node pairs `(from, to, shift)` with nonzero length, plus the
    /// periodic wrap edge for axes without junctions.
    pub fn segments(&self) -> Vec<(usize, usize, i8)> {
        let n = self.len();
        if self.is_periodic() {
            return (0..n).map(|a| if a + 1 == n { (a, 0, 1) } else { (a, a + 1, 0) }).collect();
        }
        (0..n - 1).filter(|&a| self.panel[a] == self.panel[a + 1]).map(|a| (a, a + 1, 0)).collect()
    }
}

/// Splits `n` intervals over panels in proportion to their lengths (largest remainder).
fn distribute(n: usize, lens: &[f64], period: f64) -> Vec<usize> {
    let ideal: Vec<f64> = lens.iter().map(|l| n as f64 * l / period).collect();
    let mut out: Vec<usize> = ideal.iter().map(|x| math::floor(*x) as usize).collect();
    let mut rest = n.saturating_sub(out.iter().sum());
    let mut order: Vec<usize> = (0..lens.len()).collect();
    order.sort_by(|&i, &j| (ideal[j] - out[j] as f64).total_cmp(&(ideal[i] - out[i] as f64)).then(i.cmp(&j)));
    for &i in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        out[i] += 1;
        rest -= 1;
    }
    out
}

/// A node of the 2D grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Node {
    pub xi: [f64; 2],
    pub panel: [usize; 2],
    pub sel: PanelSelector,
}

/// Two copies of the same surface point across a junction line `ξ_direction = const`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodePair {
    pub plus: usize,
    pub minus: usize,
    pub direction: usize,
    pub shift: i8,
    pub kind: JunctionKind,
    /// The pair also lies on a junction line of the other direction.
    pub corner: bool,
    /// Tangent `x_β` of the junction line at the pair (`β ≠ direction`).
    pub tangent: Vec3,
    /// Length of the junction line attributed to the pair, for row weighting.
    pub along: f64,
}

/// A grid quad `(a, b)–(a+1, b+1)` with per-corner period shifts, corners in
/// counterclockwise parameter order starting at `(a, b)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub corners: [(usize, [i8; 2]); 4],
    /// Parameter extent `(h₁, h₂)`.
    pub size: [f64; 2],
}

/// A 2×2 Gauss point of a cell for the bilinear interpolant of the chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussPoint {
    /// Quadrature weight normalized so that weights over the period sum to 1.
    pub weight: f64,
    /// Bilinear shape functions of the four corners.
    pub shape: [f64; 4],
    /// Their parameter derivatives `∂/∂ξ₁`, `∂/∂ξ₂`.
    pub grad: [[f64; 4]; 2],
    /// Partials `(x₁, x₂)` of the interpolated chart.
    pub partials: [Vec3; 2],
}

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // 1/(2√3)

#[derive(Clone, Debug)]
pub struct PeriodicGrid {
    chart: SurfaceChart,
    resolution: [usize; 2],
    axes: [Axis1d; 2],
    nodes: Vec<Node>,
    positions: Vec<Vec3>,
    partials: Vec<[Vec3; 2]>,
    weights: Vec<f64>,
    pairs: Vec<NodePair>,
}

impl PeriodicGrid {
    pub fn build(chart: &SurfaceChart, resolution: [usize; 2]) -> Result<Self> {
        for (direction, &got) in resolution.iter().enumerate() {
            if got < MIN_RESOLUTION {
                return Err(Error::ResolutionTooLow { direction, got, min: MIN_RESOLUTION });
            }
        }
        let period = chart.period();
        let mut axes = Vec::with_capacity(2);
        for dir in 0..2 {
            let junctions = chart.junctions(dir)?;
            axes.push(if junctions.is_empty() {
                Axis1d::periodic(period[dir], resolution[dir])
            } else {
                Axis1d::paneled(period[dir], &junctions, resolution[dir], dir)?
            });
        }
        let ax2 = axes.pop().unwrap();
        let ax1 = axes.pop().unwrap();
        let (n1, n2) = (ax1.len(), ax2.len());
        let area = period[0] * period[1];
        let mut nodes = Vec::with_capacity(n1 * n2);
        let mut positions = Vec::with_capacity(n1 * n2);
        let mut partials = Vec::with_capacity(n1 * n2);
        let mut weights = Vec::with_capacity(n1 * n2);
        for b in 0..n2 {
            for a in 0..n1 {
                let xi = [ax1.coords[a], ax2.coords[b]];
                let sel = PanelSelector(ax1.side[a], ax2.side[b]);
                nodes.push(Node { xi, panel: [ax1.panel[a], ax2.panel[b]], sel });
                positions.push(chart.position(xi));
                partials.push(chart.partials(xi, sel)?);
                weights.push(ax1.weights[a] * ax2.weights[b] / area);
            }
        }
        let mut grid = PeriodicGrid {
            chart: chart.clone(),
            resolution,
            axes: [ax1, ax2],
            nodes,
            positions,
            partials,
            weights,
            pairs: Vec::new(),
        };
        grid.pairs = grid.collect_pairs();
        Ok(grid)
    }

    fn collect_pairs(&self) -> Vec<NodePair> {
        let mut out = Vec::new();
        for dir in 0..2 {
            let other = 1 - dir;
            let (ax, ox) = (&self.axes[dir], &self.axes[other]);
            for j in ax.junctions() {
                for c in 0..ox.len() {
                    let id = |i: usize| if dir == 0 { self.id(i, c) } else { self.id(c, i) };
                    let (minus, plus) = (id(j.minus), id(j.plus));
                    out.push(NodePair {
                        plus,
                        minus,
                        direction: dir,
                        shift: j.shift,
                        kind: j.kind,
                        corner: ox.is_junction_node(c),
                        tangent: self.partials[minus][other],
                        along: ox.weights[c],
                    });
                }
            }
        }
        out
    }

    pub fn chart(&self) -> &SurfaceChart {
        &self.chart
    }

    pub fn resolution(&self) -> [usize; 2] {
        self.resolution
    }

    pub fn axis(&self, direction: usize) -> &Axis1d {
        &self.axes[direction]
    }

    /// Node counts `(n₁, n₂)` including junction duplicates.
    pub fn dims(&self) -> [usize; 2] {
        [self.axes[0].len(), self.axes[1].len()]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn id(&self, a: usize, b: usize) -> usize {
        b * self.axes[0].len() + a
    }

    #[inline]
    pub fn coords_of(&self, id: usize) -> (usize, usize) {
        let n1 = self.axes[0].len();
        (id % n1, id / n1)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    /// One-sided `(x₁, x₂)` per node, taken on the node's own panel.
    pub fn partials(&self) -> &[[Vec3; 2]] {
        &self.partials
    }

    /// Quadrature weights for the cell average; they sum to 1.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// All duplicated pairs, creases and seams.
    pub fn junction_pairs(&self) -> &[NodePair] {
        &self.pairs
    }

    pub fn crease_pairs(&self) -> impl Iterator<Item = &NodePair> {
        self.pairs.iter().filter(|p| p.kind == JunctionKind::Crease)
    }

    /// Largest node spacing over both directions.
    pub fn h(&self) -> f64 {
        self.axes[0].max_spacing().max(self.axes[1].max_spacing())
    }

    /// Stencil of `∂/∂ξ_direction` at a node, in node ids.
    pub fn stencil(&self, id: usize, direction: usize) -> impl Iterator<Item = StencilEntry> + '_ {
        let (a, b) = self.coords_of(id);
        let (local, other) = if direction == 0 { (a, b) } else { (b, a) };
        self.axes[direction].stencil(local).iter().map(move |e| StencilEntry {
            node: if direction == 0 { self.id(e.node, other) } else { self.id(other, e.node) },
            ..*e
        })
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::FieldSize { expected: self.len(), got });
        }
        Ok(())
    }

    /// Derivative of a scalar field that grows by `jump` over one period in `direction`.
    pub fn differentiate_with(&self, field: &[f64], direction: usize, jump: f64) -> Result<Vec<f64>> {
        self.check_len(field.len())?;
        Ok((0..self.len())
            .map(|i| {
                // differences against the center keep constants exactly in the kernel
                self.stencil(i, direction)
                    .map(|e| e.coef * (field[e.node] + e.shift as f64 * jump - field[i]))
                    .sum()
            })
            .collect())
    }

    /// Derivative of a periodic scalar field.
    pub fn differentiate(&self, field: &[f64], direction: usize) -> Result<Vec<f64>> {
        self.differentiate_with(field, direction, 0.0)
    }

    /// Derivative of a vector field that grows by `jump` over one period in `direction`.
    pub fn differentiate_vec(&self, field: &[Vec3], direction: usize, jump: Vec3) -> Result<Vec<Vec3>> {
        self.check_len(field.len())?;
        Ok((0..self.len())
            .map(|i| {
                let mut acc = Vec3::ZERO;
                for e in self.stencil(i, direction) {
                    acc += (field[e.node] + jump * e.shift as f64 - field[i]) * e.coef;
                }
                acc
            })
            .collect())
    }

    /// `(1/|R|) ∫_R field` by panel-wise trapezoid quadrature.
    pub fn cell_average(&self, field: &[f64]) -> Result<f64> {
        self.check_len(field.len())?;
        Ok(field.iter().zip(&self.weights).map(|(v, q)| v * q).sum())
    }

    pub fn cell_average_vec(&self, field: &[Vec3]) -> Result<Vec3> {
        self.check_len(field.len())?;
        let mut acc = Vec3::ZERO;
        for (v, q) in field.iter().zip(&self.weights) {
            acc += *v * *q;
        }
        Ok(acc)
    }

    /// Mean tangents from the cell averages of the sampled partials.
    pub fn period_geometry(&self) -> Result<PeriodGeometry> {
        let x1: Vec<Vec3> = self.partials.iter().map(|d| d[0]).collect();
        let x2: Vec<Vec3> = self.partials.iter().map(|d| d[1]).collect();
        PeriodGeometry::new(self.cell_average_vec(&x1)?, self.cell_average_vec(&x2)?)
    }

    /// Quads of the grid, skipping the zero-width strips between duplicated nodes.
    pub fn cells(&self) -> Vec<Cell> {
        let s1 = self.axes[0].segments();
        let s2 = self.axes[1].segments();
        let mut out = Vec::with_capacity(s1.len() * s2.len());
        let c1 = self.axes[0].coords();
        let c2 = self.axes[1].coords();
        let span = |c: &[f64], i: usize, j: usize, s: i8, t: f64| c[j] + s as f64 * t - c[i];
        for &(b0, b1, t) in &s2 {
            for &(a0, a1, s) in &s1 {
                out.push(Cell {
                    size: [
                        span(c1, a0, a1, s, self.axes[0].period),
                        span(c2, b0, b1, t, self.axes[1].period),
                    ],
                    corners: [
                        (self.id(a0, b0), [0, 0]),
                        (self.id(a1, b0), [s, 0]),
                        (self.id(a1, b1), [s, t]),
                        (self.id(a0, b1), [0, t]),
                    ],
                });
            }
        }
        out
    }

    /// Position of a cell corner including its period shift.
    pub fn corner_position(&self, corner: (usize, [i8; 2])) -> Vec3 {
        let (id, [s, t]) = corner;
        let mut x = self.positions[id];
        if s != 0 {
            x += self.chart.lattice_vector(0) * s as f64;
        }
        if t != 0 {
            x += self.chart.lattice_vector(1) * t as f64;
        }
        x
    }

    /// 2×2 Gauss rule on a cell, exact for bicubic integrands.
    pub fn gauss_points(&self, cell: &Cell) -> [GaussPoint; 4] {
        let x: [Vec3; 4] = core::array::from_fn(|k| self.corner_position(cell.corners[k]));
        let [h1, h2] = cell.size;
        let area = self.chart.period()[0] * self.chart.period()[1];
        let pts = [0.5 - GAUSS_OFFSET, 0.5 + GAUSS_OFFSET];
        core::array::from_fn(|g| {
            let (s, t) = (pts[g % 2], pts[g / 2]);
            let shape = [(1.0 - s) * (1.0 - t), s * (1.0 - t), s * t, (1.0 - s) * t];
            let grad = [
                [-(1.0 - t) / h1, (1.0 - t) / h1, t / h1, -t / h1],
                [-(1.0 - s) / h2, -s / h2, s / h2, (1.0 - s) / h2],
            ];
            let partials = core::array::from_fn(|d| {
                let mut v = Vec3::ZERO;
                for k in 0..4 {
                    v += x[k] * grad[d][k];
                }
                v
            });
            GaussPoint { weight: 0.25 * h1 * h2 / area, shape, grad, partials }
        })
    }
}
