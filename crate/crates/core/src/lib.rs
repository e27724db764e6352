//! Paraconvexity measurement and continuous-selection construction for
//! set-valued mappings on finite discretized domains.
//!
//! The crate has five subsystems:
//!
//! - [`geom`]: Euclidean primitives. Distances to finite sets, open balls,
//!   convex hulls, and nearest-point projection onto polytopes.
//! - [`paraconvexity`]: estimation of the paraconvexity defect of a point
//!   cloud, with witnesses, radius-resolved profiles, and a brute-force
//!   oracle for cross-checking.
//! - [`multimap`]: set-valued maps on finite metric domains. Preimages,
//!   discrete continuity moduli, and increasing cover chains.
//! - [`selection`]: the successive-approximation selection engine with
//!   per-iteration inequality certificates, cover-based gluing, and the
//!   oscillation counterexample showing why naive gluing fails.
//! - [`semenov`]: functional paraconvexity. The damping recursion, the
//!   strict-domination check, and radius schedules for the engine.
//!
//! Grid sweeps run in parallel by default (`parallel` feature); disable it
//! for a fully sequential build.

pub mod error;
pub mod exec;
pub mod fixtures;
pub mod geom;
pub mod multimap;
pub mod paraconvexity;
pub mod selection;
pub mod semenov;

pub use error::{GeomError, MapError, ParaconvexityError, SelectionError, SemenovError};
pub use geom::{
    ball_intersect, convex_hull, distance_to_cloud, distance_to_hull, hausdorff_semidistance,
    Ball, ConvexBody, HullProjection, Point, PointCloud, TOL_GEO,
};
pub use multimap::{
    build_cover_chain, d_proximal_report, lsc_defect, preimage, CoverChain, DomainComplex,
    SetValue, SetValuedMap,
};
pub use paraconvexity::{
    default_grids, defect, defect_seq, is_alpha_paraconvex, oracle_defect, oracle_defect_seq,
    oracle_grids, profile, DefectGrids, GridBudget, HullSampling, ParaconvexityProfile,
    ParaconvexityReport,
};
pub use selection::{
    demo_glue_failure, demo_glue_repaired, glue, run, step, verify_trace, CertificationReport,
    GlueReport, RadiusSchedule, SelectionConfig, SelectionTrace, VertexFunction,
};
pub use semenov::{check_ps, h_iterates, run_functional, HSeries, PsReport, ScalarFn};
