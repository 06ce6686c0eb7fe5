use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("period must be positive and finite, got {0}")]
    InvalidPeriod(f64),

    #[error("{0} profile needs a non-empty, even-length breakpoint list")]
    MissingBreakpoints(&'static str),

    #[error("breakpoints must be strictly increasing in [0, period)")]
    InvalidBreakpoints,

    #[error("profile amplitude must be non-zero and finite (a constant profile is not a corrugation)")]
    ZeroAmplitude,

    #[error("profile period {found} does not match the chart period {expected}")]
    PeriodMismatch { expected: f64, found: f64 },

    #[error("chart partials are parallel at ξ = ({}, {})", .0[0], .0[1])]
    DegeneratePartials([f64; 2]),

    #[error("mean tangents p₁ and p₂ are parallel")]
    DegenerateGeometry,

    #[error("the shear ratio must be finite, got {0}")]
    InvalidShear(f64),

    #[error("resolution {got} in direction {direction} is below the minimum of {min}")]
    ResolutionTooLow { direction: usize, got: usize, min: usize },

    #[error("family `{0}` has creases that are not aligned with the parameter axes")]
    NonAxisAlignedCreases(&'static str),

    #[error("panel {panel} in direction {direction} has {intervals} interval(s); at least 2 are needed")]
    PanelTooNarrow { direction: usize, panel: usize, intervals: usize },

    #[error("crease tangent vanishes at node {0}")]
    DegenerateCreaseTangent(usize),

    #[error("field has {got} values, grid has {expected} nodes")]
    FieldSize { expected: usize, got: usize },

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("no spectral gap separates null modes from the rest (sorted residuals: {spectrum:?})")]
    AmbiguousGap { spectrum: Vec<f64> },

    #[error("mode has a non-periodic rotation field (|W| = {0:e}); not a membrane candidate")]
    NotMembrane(f64),

    #[error("example `{example}` does not apply: {reason}")]
    UnsupportedExample { example: &'static str, reason: &'static str },

    #[error("1/g′ is unbounded: the profile has a vanishing slope")]
    VanishingSlope,

    #[error("{0} is not finite")]
    NonFinite(&'static str),

    #[error("section has {0} sample(s); at least 2 distinct samples are needed")]
    SectionTooShort(usize),

    #[error("consecutive section samples {0} and {next} coincide", next = .0 + 1)]
    RepeatedSample(usize),

    #[error("closed section passed where an open one is expected (use the dislocation)")]
    ClosedSection,

    #[error("open section passed where a closed one is expected")]
    OpenSection,
}
