//! Periodic parametric surfaces and their panel structure.
//!
//! A chart maps parameters `ξ = (ξ₁, ξ₂)` to points of `R³`. Every family here is
//! periodic modulo a linear map: `x(ξ + T_α e_α) − x(ξ) = T_α p_α` for constant
//! mean tangents `p_α`. Profiles are periodic scalar functions of one parameter;
//! their breakpoints become crease lines (slope jumps) or seams (curvature jumps
//! only) of the surface.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::tensor::Sym2;
use crate::vec3::Vec3;

/// Relative tolerance used to snap a parameter onto a breakpoint.
const SNAP: f64 = 1e-10;

/// One-sided selector at a breakpoint: `Minus` is the limit from below.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Side {
    Minus,
    #[default]
    Plus,
}

/// Panel selector for both parameter directions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct PanelSelector(pub Side, pub Side);

impl PanelSelector {
    pub const PLUS: PanelSelector = PanelSelector(Side::Plus, Side::Plus);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProfileKind {
    /// Triangle-like wave; the slope jumps at every breakpoint.
    PiecewiseLinear,
    /// Slope is a continuous triangle wave; only the curvature jumps at breakpoints.
    PiecewiseQuadratic,
    /// `A cos(2πξ/T)`; no breakpoints.
    Sinusoidal,
}

impl ProfileKind {
    pub fn name(self) -> &'static str {
        match self {
            ProfileKind::PiecewiseLinear => "piecewise-linear",
            ProfileKind::PiecewiseQuadratic => "piecewise-quadratic",
            ProfileKind::Sinusoidal => "sinusoidal",
        }
    }
}

/// How a junction line between two panels behaves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum JunctionKind {
    /// The tangent plane jumps; rotations may jump along the crease tangent.
    Crease,
    /// The surface is C¹ but not C²; rotations are continuous.
    Seam,
}

/// A panel boundary `ξ_α = coord` in one parameter direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Junction {
    pub coord: f64,
    pub kind: JunctionKind,
}

/// Local polynomial `value + slope·t + curvature·t²/2` on `[start, start + len]`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Piece {
    offset: f64,
    len: f64,
    value: f64,
    slope: f64,
    curvature: f64,
}

impl Piece {
    fn value(&self, t: f64) -> f64 {
        self.value + self.slope * t + 0.5 * self.curvature * t * t
    }

    fn slope(&self, t: f64) -> f64 {
        self.slope + self.curvature * t
    }

    fn slope_sq_integral(&self, t: f64) -> f64 {
        let (s, c) = (self.slope, self.curvature);
        s * s * t + s * c * t * t + c * c * t * t * t / 3.0
    }

    fn value_integral(&self, t: f64) -> f64 {
        let (v, s, c) = (self.value, self.slope, self.curvature);
        v * t + 0.5 * s * t * t + c * t * t * t / 6.0
    }

    fn recip_slope_integral(&self, t: f64) -> Result<f64> {
        let (s, c) = (self.slope, self.curvature);
        let end = s + c * self.len;
        if s == 0.0 || end == 0.0 || (s > 0.0) != (end > 0.0) {
            return Err(Error::VanishingSlope);
        }
        if c == 0.0 {
            Ok(t / s)
        } else {
            Ok(math::ln((s + c * t) / s) / c)
        }
    }
}

/// A continuous, periodic, non-constant scalar profile.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    kind: ProfileKind,
    period: f64,
    amplitude: f64,
    breakpoints: Vec<f64>,
    pieces: Vec<Piece>,
    // Per-period integrals of f′², f and (when defined) 1/f′, plus prefix sums.
    slope_sq_prefix: Vec<f64>,
    value_prefix: Vec<f64>,
}

impl Profile {
    /// Builds a profile.
    ///
    /// `amplitude` is the slope scale for the piecewise kinds (the slope on the
    /// rising panels for piecewise-linear, the peak slope for piecewise-quadratic)
    /// and the value amplitude for the sinusoidal kind. Breakpoints are ignored
    /// for the sinusoidal kind and must be an even number of strictly increasing
    /// values in `[0, period)` otherwise.
    pub fn new(kind: ProfileKind, amplitude: f64, period: f64, breakpoints: &[f64]) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidPeriod(period));
        }
        if amplitude == 0.0 || !amplitude.is_finite() {
            return Err(Error::ZeroAmplitude);
        }
        let breakpoints: Vec<f64> = match kind {
            ProfileKind::Sinusoidal => Vec::new(),
            _ => {
                if breakpoints.is_empty() || breakpoints.len() % 2 != 0 {
                    return Err(Error::MissingBreakpoints(kind.name()));
                }
                let increasing = breakpoints.windows(2).all(|w| w[0] < w[1]);
                let in_range = breakpoints.iter().all(|&b| (0.0..period).contains(&b));
                if !increasing || !in_range {
                    return Err(Error::InvalidBreakpoints);
                }
                breakpoints.to_vec()
            }
        };
        let pieces = match kind {
            ProfileKind::Sinusoidal => Vec::new(),
            ProfileKind::PiecewiseLinear => linear_pieces(amplitude, period, &breakpoints),
            ProfileKind::PiecewiseQuadratic => quadratic_pieces(amplitude, period, &breakpoints),
        };
        let mut profile = Profile {
            kind,
            period,
            amplitude,
            breakpoints,
            pieces,
            slope_sq_prefix: Vec::new(),
            value_prefix: Vec::new(),
        };
        profile.close_up();
        Ok(profile)
    }

    /// Triangle wave with `f′ = ±slope`, breakpoints at a quarter and three quarters
    /// of the period; for `period = 2π`, `f′ = slope·sgn(cos ξ)`.
    pub fn sgn_cos(slope: f64, period: f64) -> Result<Self> {
        Self::new(
            ProfileKind::PiecewiseLinear,
            slope,
            period,
            &[0.25 * period, 0.75 * period],
        )
    }

    /// Piecewise-quadratic profile whose slope is a triangle wave with peak
    /// `peak_slope` at `ξ = 0` (breakpoints at 0 and half the period).
    pub fn triangle_slope(peak_slope: f64, period: f64) -> Result<Self> {
        Self::new(ProfileKind::PiecewiseQuadratic, peak_slope, period, &[0.0, 0.5 * period])
    }

    pub fn cosine(amplitude: f64, period: f64) -> Result<Self> {
        Self::new(ProfileKind::Sinusoidal, amplitude, period, &[])
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Junction type created by the breakpoints, `None` for smooth profiles.
    pub fn junction_kind(&self) -> Option<JunctionKind> {
        match self.kind {
            ProfileKind::PiecewiseLinear => Some(JunctionKind::Crease),
            ProfileKind::PiecewiseQuadratic => Some(JunctionKind::Seam),
            ProfileKind::Sinusoidal => None,
        }
    }

    /// Same profile with the amplitude multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.kind, self.amplitude * factor, self.period, &self.breakpoints)
    }

    /// Same shape rescaled so that `max f − min f = height`.
    pub fn with_peak_to_peak(&self, height: f64) -> Result<Self> {
        self.rescaled(height / self.peak_to_peak())
    }

    fn wavenumber(&self) -> f64 {
        math::TAU / self.period
    }

    fn origin(&self) -> f64 {
        self.breakpoints.first().copied().unwrap_or(0.0)
    }

    /// Piece index, local coordinate and period count for `ξ`, honoring `side` at breakpoints.
    fn locate(&self, xi: f64, side: Side) -> (usize, f64, f64) {
        let t_period = self.period;
        let r = xi - self.origin();
        let mut n = math::floor(r / t_period);
        let mut y = r - n * t_period;
        if y < 0.0 {
            y = 0.0;
        }
        let tol = SNAP * t_period;
        let k = self.pieces.len();
        let mut i = match self.pieces.iter().rposition(|p| p.offset <= y) {
            Some(i) => i,
            None => 0,
        };
        let piece = &self.pieces[i];
        if side == Side::Minus && (y - piece.offset).abs() <= tol {
            if i == 0 {
                i = k - 1;
                n -= 1.0;
            } else {
                i -= 1;
            }
            return (i, self.pieces[i].len, n);
        }
        if side == Side::Plus && (piece.offset + piece.len - y).abs() <= tol {
            if i + 1 == k {
                return (0, 0.0, n + 1.0);
            }
            return (i + 1, 0.0, n);
        }
        (i, (y - piece.offset).min(piece.len), n)
    }

    /// `f(ξ)`; the profile is continuous so `side` only matters for rounding.
    pub fn value(&self, xi: f64) -> f64 {
        match self.kind {
            ProfileKind::Sinusoidal => self.amplitude * math::cos(self.wavenumber() * xi),
            _ => {
                let (i, t, _) = self.locate(xi, Side::Plus);
                self.pieces[i].value(t)
            }
        }
    }

    /// One-sided slope `f′(ξ±)`.
    pub fn slope(&self, xi: f64, side: Side) -> f64 {
        match self.kind {
            ProfileKind::Sinusoidal => {
                let k = self.wavenumber();
                -self.amplitude * k * math::sin(k * xi)
            }
            _ => {
                let (i, t, _) = self.locate(xi, side);
                self.pieces[i].slope(t)
            }
        }
    }

    /// One-sided curvature `f″(ξ±)`.
    pub fn curvature(&self, xi: f64, side: Side) -> f64 {
        match self.kind {
            ProfileKind::Sinusoidal => {
                let k = self.wavenumber();
                -self.amplitude * k * k * math::cos(k * xi)
            }
            _ => {
                let (i, _, _) = self.locate(xi, side);
                self.pieces[i].curvature
            }
        }
    }

    /// Mean of `f′²` over one period, exact.
    pub fn mean_slope_sq(&self) -> f64 {
        match self.kind {
            ProfileKind::Sinusoidal => {
                let k = self.wavenumber();
                0.5 * self.amplitude * self.amplitude * k * k
            }
            _ => self.slope_sq_prefix[self.pieces.len()] / self.period,
        }
    }

    /// `∫₀^ξ f′²`, exact.
    pub fn slope_sq_integral(&self, xi: f64) -> f64 {
        match self.kind {
            ProfileKind::Sinusoidal => {
                let (a, k) = (self.amplitude, self.wavenumber());
                a * a * k * k * (0.5 * xi - math::sin(2.0 * k * xi) / (4.0 * k))
            }
            _ => self.cumulative(xi, &self.slope_sq_prefix, Piece::slope_sq_integral),
        }
    }

    /// `∫₀^ξ f`, exact.
    pub fn value_integral(&self, xi: f64) -> f64 {
        match self.kind {
            ProfileKind::Sinusoidal => {
                let k = self.wavenumber();
                self.amplitude * math::sin(k * xi) / k
            }
            _ => self.cumulative(xi, &self.value_prefix, Piece::value_integral),
        }
    }

    /// `∫₀^ξ 1/f′`; fails unless every piece has a slope bounded away from zero.
    pub fn recip_slope_integral(&self, xi: f64) -> Result<f64> {
        if self.kind == ProfileKind::Sinusoidal {
            return Err(Error::VanishingSlope);
        }
        let mut prefix = Vec::with_capacity(self.pieces.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for p in &self.pieces {
            acc += p.recip_slope_integral(p.len)?;
            prefix.push(acc);
        }
        let eval = |x: f64| -> Result<f64> {
            let (i, t, n) = self.locate(x, Side::Plus);
            Ok(n * acc + prefix[i] + self.pieces[i].recip_slope_integral(t)?)
        };
        Ok(eval(xi)? - eval(0.0)?)
    }

    /// Mean of `1/f′` over one period.
    pub fn mean_recip_slope(&self) -> Result<f64> {
        Ok(self.recip_slope_integral(self.period)? / self.period)
    }

    /// Largest `|f′|`.
    pub fn max_slope(&self) -> f64 {
        match self.kind {
            ProfileKind::Sinusoidal => math::abs(self.amplitude) * self.wavenumber(),
            _ => self
                .pieces
                .iter()
                .map(|p| math::abs(p.slope).max(math::abs(p.slope(p.len))))
                .fold(0.0, f64::max),
        }
    }

    /// `max f − min f`.
    pub fn peak_to_peak(&self) -> f64 {
        match self.kind {
            ProfileKind::Sinusoidal => 2.0 * math::abs(self.amplitude),
            _ => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for p in &self.pieces {
                    let mut probe = |t: f64| {
                        let v = p.value(t);
                        lo = lo.min(v);
                        hi = hi.max(v);
                    };
                    probe(0.0);
                    probe(p.len);
                    if p.curvature != 0.0 {
                        let t = -p.slope / p.curvature;
                        if (0.0..=p.len).contains(&t) {
                            probe(t);
                        }
                    }
                }
                hi - lo
            }
        }
    }

    fn cumulative(&self, xi: f64, prefix: &[f64], piece_integral: fn(&Piece, f64) -> f64) -> f64 {
        let whole = prefix[self.pieces.len()];
        let eval = |x: f64| {
            let (i, t, n) = self.locate(x, Side::Plus);
            n * whole + prefix[i] + piece_integral(&self.pieces[i], t)
        };
        eval(xi) - eval(0.0)
    }

    /// Shifts values to zero mean and caches per-piece prefix integrals.
    fn close_up(&mut self) {
        if self.pieces.is_empty() {
            return;
        }
        let total: f64 = self.pieces.iter().map(|p| p.value_integral(p.len)).sum();
        let shift = total / self.period;
        for p in &mut self.pieces {
            p.value -= shift;
        }
        let mut sq = Vec::with_capacity(self.pieces.len() + 1);
        let mut val = Vec::with_capacity(self.pieces.len() + 1);
        sq.push(0.0);
        val.push(0.0);
        let (mut a, mut b) = (0.0, 0.0);
        for p in &self.pieces {
            a += p.slope_sq_integral(p.len);
            b += p.value_integral(p.len);
            sq.push(a);
            val.push(b);
        }
        self.slope_sq_prefix = sq;
        self.value_prefix = val;
    }
}

fn piece_lengths(period: f64, breakpoints: &[f64]) -> Vec<f64> {
    let k = breakpoints.len();
    (0..k)
        .map(|i| {
            if i + 1 < k {
                breakpoints[i + 1] - breakpoints[i]
            } else {
                breakpoints[0] + period - breakpoints[i]
            }
        })
        .collect()
}

fn integrate_values(pieces: &mut [Piece]) {
    let mut v = 0.0;
    for p in pieces.iter_mut() {
        p.value = v;
        v = p.value(p.len);
    }
}

/// Piece `i` has slope sign `(−1)^(i+1)`, so the piece wrapping through the
/// origin rises. Falling slopes are scaled so that `∫f′ = 0` over a period.
fn linear_pieces(amplitude: f64, period: f64, breakpoints: &[f64]) -> Vec<Piece> {
    let lens = piece_lengths(period, breakpoints);
    let rising: f64 = lens.iter().skip(1).step_by(2).sum();
    let falling: f64 = lens.iter().step_by(2).sum();
    let b0 = breakpoints[0];
    let mut pieces: Vec<Piece> = lens
        .iter()
        .enumerate()
        .map(|(i, &len)| {
            let slope = if i % 2 == 1 { amplitude } else { -amplitude * rising / falling };
            Piece { offset: breakpoints[i] - b0, len, value: 0.0, slope, curvature: 0.0 }
        })
        .collect();
    integrate_values(&mut pieces);
    pieces
}

/// The slope is `±amplitude` at alternate breakpoints and linear in between.
fn quadratic_pieces(amplitude: f64, period: f64, breakpoints: &[f64]) -> Vec<Piece> {
    let lens = piece_lengths(period, breakpoints);
    let b0 = breakpoints[0];
    let mut pieces: Vec<Piece> = lens
        .iter()
        .enumerate()
        .map(|(i, &len)| {
            let start = if i % 2 == 0 { amplitude } else { -amplitude };
            Piece {
                offset: breakpoints[i] - b0,
                len,
                value: 0.0,
                slope: start,
                curvature: -2.0 * start / len,
            }
        })
        .collect();
    integrate_values(&mut pieces);
    pieces
}

/// A periodic-modulo-linear space curve `ξ ↦ ξ·drift + Σ_c P_c(ξ) e_c`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceCurve {
    drift: Vec3,
    components: [Option<Profile>; 3],
    period: f64,
}

impl SpaceCurve {
    pub fn new(drift: Vec3, components: [Option<Profile>; 3], period: f64) -> Result<Self> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidPeriod(period));
        }
        for p in components.iter().flatten() {
            check_period(period, p)?;
        }
        Ok(SpaceCurve { drift, components, period })
    }

    /// `ξ ↦ ξ e_axis + f(ξ) e_lift`.
    pub fn lifted(axis: usize, lift: usize, profile: Profile) -> Result<Self> {
        let period = profile.period();
        let mut components = [None, None, None];
        components[lift] = Some(profile);
        Self::new(Vec3::axis(axis), components, period)
    }

    /// Straight line `ξ ↦ ξ e_axis`.
    pub fn straight(axis: usize, period: f64) -> Result<Self> {
        Self::new(Vec3::axis(axis), [None, None, None], period)
    }

    pub fn drift(&self) -> Vec3 {
        self.drift
    }

    pub fn components(&self) -> &[Option<Profile>; 3] {
        &self.components
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn point(&self, xi: f64) -> Vec3 {
        let mut v = self.drift * xi;
        for (c, p) in self.components.iter().enumerate() {
            if let Some(p) = p {
                v.0[c] += p.value(xi);
            }
        }
        v
    }

    pub fn tangent(&self, xi: f64, side: Side) -> Vec3 {
        let mut v = self.drift;
        for (c, p) in self.components.iter().enumerate() {
            if let Some(p) = p {
                v.0[c] += p.slope(xi, side);
            }
        }
        v
    }

    /// Mean tangent over one period (the profiles have zero mean slope).
    pub fn mean_tangent(&self) -> Vec3 {
        self.drift
    }

    /// Union of the component breakpoints; a crease wins over a seam.
    pub fn junctions(&self) -> Vec<Junction> {
        let mut out: Vec<Junction> = Vec::new();
        for p in self.components.iter().flatten() {
            let Some(kind) = p.junction_kind() else { continue };
            for &b in p.breakpoints() {
                match out.iter_mut().find(|j| (j.coord - b).abs() <= SNAP * self.period) {
                    Some(j) => {
                        if kind == JunctionKind::Crease {
                            j.kind = JunctionKind::Crease;
                        }
                    }
                    None => out.push(Junction { coord: b, kind }),
                }
            }
        }
        out.sort_by(|a, b| a.coord.total_cmp(&b.coord));
        out
    }
}

fn check_period(expected: f64, p: &Profile) -> Result<()> {
    if (p.period() - expected).abs() > 1e-12 * expected {
        return Err(Error::PeriodMismatch { expected, found: p.period() });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Plane,
    SimpleCorrugation,
    DoubleCorrugation,
    TranslationSurface,
    MiuraLike,
    ShearedDoubleCorrugation,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Plane,
        Family::SimpleCorrugation,
        Family::DoubleCorrugation,
        Family::TranslationSurface,
        Family::MiuraLike,
        Family::ShearedDoubleCorrugation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Plane => "plane",
            Family::SimpleCorrugation => "simple-corrugation",
            Family::DoubleCorrugation => "double-corrugation",
            Family::TranslationSurface => "translation-surface",
            Family::MiuraLike => "miura-like",
            Family::ShearedDoubleCorrugation => "sheared-double-corrugation",
        }
    }

    pub fn from_name(name: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Shape {
    Plane,
    Simple { f: Profile },
    Double { f: Profile, g: Profile },
    Translation { alpha: SpaceCurve, beta: SpaceCurve },
    Miura { f: Profile, g: Profile },
    Sheared { f: Profile, g: Profile, gamma: f64 },
}

/// A periodic parametric surface with period `R = ]0,T₁[ × ]0,T₂[`.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceChart {
    period: [f64; 2],
    shape: Shape,
}

impl SurfaceChart {
    /// `(ξ₁, ξ₂) ↦ (ξ₁, ξ₂, 0)`.
    pub fn plane(period: [f64; 2]) -> Result<Self> {
        check_chart_period(period)?;
        Ok(SurfaceChart { period, shape: Shape::Plane })
    }

    /// `(ξ₁, ξ₂) ↦ (ξ₁, ξ₂, f(ξ₁))`.
    pub fn simple_corrugation(f: Profile, period_2: f64) -> Result<Self> {
        let period = [f.period(), period_2];
        check_chart_period(period)?;
        Ok(SurfaceChart { period, shape: Shape::Simple { f } })
    }

    /// `(ξ₁, ξ₂) ↦ (ξ₁, ξ₂, f(ξ₁) + g(ξ₂))`.
    pub fn double_corrugation(f: Profile, g: Profile) -> Result<Self> {
        let period = [f.period(), g.period()];
        check_chart_period(period)?;
        Ok(SurfaceChart { period, shape: Shape::Double { f, g } })
    }

    /// `(ξ₁, ξ₂) ↦ α(ξ₁) + β(ξ₂)`.
    pub fn translation_surface(alpha: SpaceCurve, beta: SpaceCurve) -> Result<Self> {
        let period = [alpha.period(), beta.period()];
        check_chart_period(period)?;
        Ok(SurfaceChart { period, shape: Shape::Translation { alpha, beta } })
    }

    /// `(ξ₁, ξ₂) ↦ (ξ₁, ξ₂ + f(ξ₁), g(ξ₂))`.
    pub fn miura_like(f: Profile, g: Profile) -> Result<Self> {
        let period = [f.period(), g.period()];
        check_chart_period(period)?;
        Ok(SurfaceChart { period, shape: Shape::Miura { f, g } })
    }

    /// `(ξ₁, ξ₂) ↦ (ξ₁, ξ₂ + γξ₁, f(ξ₁) + g(ξ₂ + γξ₁))`.
    ///
    /// Periodicity needs `γ·T₁` to be a whole number of periods of `g`.
    pub fn sheared_double_corrugation(f: Profile, g: Profile, gamma: f64) -> Result<Self> {
        let period = [f.period(), g.period()];
        check_chart_period(period)?;
        let turns = gamma * period[0] / period[1];
        if !turns.is_finite() || (turns - libm::round(turns)).abs() > 1e-9 {
            return Err(Error::InvalidShear(gamma));
        }
        Ok(SurfaceChart { period, shape: Shape::Sheared { f, g, gamma } })
    }

    pub fn family(&self) -> Family {
        match self.shape {
            Shape::Plane => Family::Plane,
            Shape::Simple { .. } => Family::SimpleCorrugation,
            Shape::Double { .. } => Family::DoubleCorrugation,
            Shape::Translation { .. } => Family::TranslationSurface,
            Shape::Miura { .. } => Family::MiuraLike,
            Shape::Sheared { .. } => Family::ShearedDoubleCorrugation,
        }
    }

    pub fn period(&self) -> [f64; 2] {
        self.period
    }

    /// Shear ratio of the sheared family.
    pub fn gamma(&self) -> Option<f64> {
        match self.shape {
            Shape::Sheared { gamma, .. } => Some(gamma),
            _ => None,
        }
    }

    /// The scalar profiles `(f, g)` as far as the family has them.
    pub fn profiles(&self) -> (Option<&Profile>, Option<&Profile>) {
        match &self.shape {
            Shape::Plane | Shape::Translation { .. } => (None, None),
            Shape::Simple { f } => (Some(f), None),
            Shape::Double { f, g } | Shape::Miura { f, g } | Shape::Sheared { f, g, .. } => {
                (Some(f), Some(g))
            }
        }
    }

    /// `x(ξ)`.
    pub fn position(&self, xi: [f64; 2]) -> Vec3 {
        let [a, b] = xi;
        match &self.shape {
            Shape::Plane => Vec3::new(a, b, 0.0),
            Shape::Simple { f } => Vec3::new(a, b, f.value(a)),
            Shape::Double { f, g } => Vec3::new(a, b, f.value(a) + g.value(b)),
            Shape::Translation { alpha, beta } => alpha.point(a) + beta.point(b),
            Shape::Miura { f, g } => Vec3::new(a, b + f.value(a), g.value(b)),
            Shape::Sheared { f, g, gamma } => {
                let eta = b + gamma * a;
                Vec3::new(a, eta, f.value(a) + g.value(eta))
            }
        }
    }

    /// `(x₁, x₂)` on the panel picked by `sel`; fails where they are parallel.
    pub fn partials(&self, xi: [f64; 2], sel: PanelSelector) -> Result<[Vec3; 2]> {
        let [a, b] = xi;
        let PanelSelector(s1, s2) = sel;
        let d = match &self.shape {
            Shape::Plane => [Vec3::axis(0), Vec3::axis(1)],
            Shape::Simple { f } => [Vec3::new(1.0, 0.0, f.slope(a, s1)), Vec3::axis(1)],
            Shape::Double { f, g } => {
                [Vec3::new(1.0, 0.0, f.slope(a, s1)), Vec3::new(0.0, 1.0, g.slope(b, s2))]
            }
            Shape::Translation { alpha, beta } => [alpha.tangent(a, s1), beta.tangent(b, s2)],
            Shape::Miura { f, g } => {
                [Vec3::new(1.0, f.slope(a, s1), 0.0), Vec3::new(0.0, 1.0, g.slope(b, s2))]
            }
            Shape::Sheared { f, g, gamma } => {
                let gp = g.slope(b + gamma * a, s2);
                [Vec3::new(1.0, *gamma, f.slope(a, s1) + gamma * gp), Vec3::new(0.0, 1.0, gp)]
            }
        };
        let area = d[0].cross(d[1]).norm();
        if !(area > 1e-12 * d[0].norm() * d[1].norm()) {
            return Err(Error::DegeneratePartials(xi));
        }
        Ok(d)
    }

    /// Panel boundaries `ξ_direction = const`, sorted.
    ///
    /// Fails for families whose creases are oblique in parameter space.
    pub fn junctions(&self, direction: usize) -> Result<Vec<Junction>> {
        let of = |p: &Profile| -> Vec<Junction> {
            match p.junction_kind() {
                Some(kind) => p.breakpoints().iter().map(|&coord| Junction { coord, kind }).collect(),
                None => Vec::new(),
            }
        };
        Ok(match (&self.shape, direction) {
            (Shape::Plane, _) => Vec::new(),
            (Shape::Simple { f }, 0) => of(f),
            (Shape::Simple { .. }, _) => Vec::new(),
            (Shape::Double { f, .. } | Shape::Miura { f, .. }, 0) => of(f),
            (Shape::Double { g, .. } | Shape::Miura { g, .. }, _) => of(g),
            (Shape::Translation { alpha, .. }, 0) => alpha.junctions(),
            (Shape::Translation { beta, .. }, _) => beta.junctions(),
            (Shape::Sheared { f, g, gamma }, dir) => {
                if g.junction_kind().is_some() && *gamma != 0.0 {
                    return Err(Error::NonAxisAlignedCreases(Family::ShearedDoubleCorrugation.name()));
                }
                if dir == 0 { of(f) } else { of(g) }
            }
        })
    }

    /// Crease lines as `(direction, junction)`; seams are not creases.
    pub fn crease_lines(&self) -> Result<Vec<(usize, Junction)>> {
        let mut out = Vec::new();
        for dir in 0..2 {
            for j in self.junctions(dir)? {
                if j.kind == JunctionKind::Crease {
                    out.push((dir, j));
                }
            }
        }
        Ok(out)
    }

    /// `x(ξ + T_α e_α) − x(ξ)`, independent of `ξ`.
    pub fn lattice_vector(&self, direction: usize) -> Vec3 {
        let mut shifted = [0.0, 0.0];
        shifted[direction] = self.period[direction];
        self.position(shifted) - self.position([0.0, 0.0])
    }

    /// Exact mean tangents `p_α` and unit normal.
    pub fn period_geometry(&self) -> Result<PeriodGeometry> {
        PeriodGeometry::new(
            self.lattice_vector(0) * (1.0 / self.period[0]),
            self.lattice_vector(1) * (1.0 / self.period[1]),
        )
    }

    /// Generating curves when the chart is a surface of translation `α(ξ₁) + β(ξ₂)`.
    pub fn as_translation(&self) -> Option<(SpaceCurve, SpaceCurve)> {
        let [t1, t2] = self.period;
        let pair = match &self.shape {
            Shape::Plane => (SpaceCurve::straight(0, t1), SpaceCurve::straight(1, t2)),
            Shape::Simple { f } => (SpaceCurve::lifted(0, 2, f.clone()), SpaceCurve::straight(1, t2)),
            Shape::Double { f, g } => {
                (SpaceCurve::lifted(0, 2, f.clone()), SpaceCurve::lifted(1, 2, g.clone()))
            }
            Shape::Translation { alpha, beta } => (Ok(alpha.clone()), Ok(beta.clone())),
            Shape::Miura { f, g } => {
                (SpaceCurve::lifted(0, 1, f.clone()), SpaceCurve::lifted(1, 2, g.clone()))
            }
            Shape::Sheared { .. } => return None,
        };
        match pair {
            (Ok(a), Ok(b)) => Some((a, b)),
            _ => None,
        }
    }
}

fn check_chart_period(period: [f64; 2]) -> Result<()> {
    for t in period {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidPeriod(t));
        }
    }
    Ok(())
}

/// Mean tangents `p_α = ∫x_α` of one period and the unit normal `n = p₁∧p₂/‖p₁∧p₂‖`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeriodGeometry {
    pub p1: Vec3,
    pub p2: Vec3,
    pub normal: Vec3,
}

impl PeriodGeometry {
    pub fn new(p1: Vec3, p2: Vec3) -> Result<Self> {
        let c = p1.cross(p2);
        let area = c.norm();
        if !(area > 1e-12 * p1.norm() * p2.norm()) {
            return Err(Error::DegenerateGeometry);
        }
        Ok(PeriodGeometry { p1, p2, normal: c * (1.0 / area) })
    }

    pub fn p(&self, alpha: usize) -> Vec3 {
        if alpha == 0 { self.p1 } else { self.p2 }
    }

    /// Components of a bilinear form on parameter vectors in the orthonormal
    /// frame `e₁ = p₁/‖p₁‖, e₂ = n∧e₁` of the period plane.
    pub fn to_orthonormal(&self, s: Sym2) -> Sym2 {
        let e1 = self.p1 * (1.0 / self.p1.norm());
        let e2 = self.normal.cross(e1);
        // v_frame = P ξ
        let p = [[self.p1.dot(e1), self.p2.dot(e1)], [self.p1.dot(e2), self.p2.dot(e2)]];
        let det = p[0][0] * p[1][1] - p[0][1] * p[1][0];
        let inv = [[p[1][1] / det, -p[0][1] / det], [-p[1][0] / det, p[0][0] / det]];
        s.congruence(inv)
    }
}
