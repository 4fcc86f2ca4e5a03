use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("monodromy is not hyperbolic: trace {trace}, determinant {det}")]
    NonHyperbolic { trace: i64, det: i64 },
    #[error("point {point} has no finite orbit under the monodromy")]
    NotPeriodic { point: String },
    #[error("surgery slopes have mixed signs")]
    MixedSigns,
    #[error("surgery slope has p = 0 on orbit {orbit}")]
    ZeroSlope { orbit: usize },
    #[error("orbits {first} and {second} overlap")]
    OverlappingOrbits { first: usize, second: usize },
    #[error("prong count {prongs} must be a positive even integer")]
    OddProngs { prongs: u32 },
    #[error("invalid rational {0:?}")]
    BadRational(String),
    #[error("window would contain about {predicted} singularities (cap {cap})")]
    WindowTooLarge { predicted: f64, cap: f64 },

    #[error("path passes through a singularity at ({east}, {north})")]
    PathThroughSingularity { east: f64, north: f64 },
    #[error("rectangle is not clear: singularity at height {height}")]
    RectangleNotClear { height: f64 },
    #[error("base point ({east}, {north}) is not on an unstable prong")]
    NotOnProng { east: f64, north: f64 },
    #[error("section blows up after distance {distance} at east {east}")]
    Blowup { distance: f64, east: f64 },
    #[error("ray base lies on a singularity")]
    BaseOnSingularity,
    #[error("sweep exceeded {0} events without terminating")]
    Stalled(u64),
    #[error("bisection failed: bracket [{lo}, {hi}]")]
    BisectionFailure { lo: f64, hi: f64 },
    #[error("scene has no magnifying orbit")]
    NoMagnifyingOrbit,
    #[error("loop does not close: end ({east}, {north}, tau {tau}) vs start")]
    NotClosed { east: f64, north: f64, tau: f64 },
    #[error("hug radius {0} is too large for a clean meridian")]
    RadiusTooLarge(f64),
    #[error("orbit index {0} out of range")]
    NoSuchOrbit(usize),

    #[error("tree state space too large: depth {depth}, resolution {resolution}")]
    TreeTooLarge { depth: u32, resolution: u32 },
    #[error("gluing B needs at least one dyadic bit per level (got resolution {0})")]
    ResolutionMismatch(u32),
    #[error("point {0} lies beyond the truncation")]
    TruncationBoundary(String),
    #[error("quotient order has a cycle")]
    OrderCycle,
    #[error("expected a quotient built with gluing B")]
    WrongGluing,

    #[error("scene file: {0}")]
    SceneFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
