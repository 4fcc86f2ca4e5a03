use serde::{Deserialize, Serialize};

/// Numerical knobs shared by every engine in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Absolute tolerance for coincident event positions and prong membership.
    pub event: f64,
    /// A section whose magnitude exceeds this is declared blown up.
    pub blowup_threshold: f64,
    /// Constant `C` used to bound the remaining time once the threshold is passed.
    pub tail_constant: f64,
    /// Hard cap on the number of events processed by a single sweep.
    pub max_events: u64,
    /// Maximum number of singularities a window query may return.
    pub window_cap: f64,
    /// Height searched above and below a base point when looking for its prong.
    pub prong_search_height: f64,
    /// Absolute/relative tolerance on fiber values found by bisection.
    pub bisection: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            event: 1e-10,
            blowup_threshold: 1e12,
            tail_constant: 100.0,
            max_events: 5_000_000,
            window_cap: 1e7,
            prong_search_height: 1e6,
            bisection: 1e-9,
        }
    }
}
