//! Transverse geometry of pseudo-Anosov suspension flows after Dehn surgery.
//!
//! The crate models the developed leaf space of a punctured Anosov torus
//! bundle, transports fiber points along paths, measures when sections blow
//! up, computes holonomy of loops, and builds finite truncations of the
//! glued trees that appear as leaf spaces.

pub mod action;
pub mod blowup;
pub mod config;
pub mod error;
pub mod surface;
pub mod sweep;
pub mod transport;
pub mod treeglue;

pub use action::{
    filling_monodromy, meridian_loop, order_witness, relation_residual, sample_loop,
    standard_samples, step_decomposition, torus_relation, FillingReport, LoopClass, LoopWord,
    OrderWitness, SampledHomeo, StepDecomposition, StepSegment,
};
pub use blowup::{
    advance_section, advance_section_toward, check_bounds, ergodic_counts, estimate_constants,
    full_transport, full_transport_east, full_transport_path, invert_t_max, ragged_count,
    sample_rays, t_max_east, t_max_west, CountSummary, ErgodicConstants, Ray, SectionTrace,
    TraceStatus, Unrolled,
};
pub use config::Tolerances;
pub use error::{Error, Result};
pub use surface::{
    build_scene, flow_scaled_lattice, singularities_in_window, singularities_in_window_at,
    validate_slope, EigenStructure, Mat2, MonodromyMatrix, Orbit, OrbitInput, OrbitSpec,
    RationalPoint, Scene, SceneFile, SceneFileOrbit, SingularityHit, SlopeReport, SlopeSpec,
    Window,
};
pub use sweep::{Heading, SectionEvent};
pub use transport::{
    loop_monodromy, transport_east_clear, transport_flow, transport_north, transport_path,
    transport_prong_cross, CompiledPath, CrossDirection, FiberPoint, FiberValue, LoopReport, Move,
    PathSpec, PathState, SideTag,
};
pub use treeglue::{
    build_quotient, parse_point, ClaimCheck, ClaimSurvey, Gluing, TreePoint, TreeQuotient,
};
