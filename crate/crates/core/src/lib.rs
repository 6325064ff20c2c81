//! Linear diffusion on metric graphs with vertex reservoirs.
//!
//! A metric graph carries a one-dimensional interval on every edge; vertices
//! store mass and exchange it with the adjacent edge endpoints through jump
//! rates satisfying detailed balance. This crate builds the finite-dimensional
//! generators for that dynamic and its multiscale rescalings, integrates the
//! resulting stiff linear ODEs, and evaluates the variational structure
//! (relative entropy, cosh-type dissipation, energy-dissipation functional,
//! Hellinger distances) along trajectories.
//!
//! The crate is `no_std`-compatible (requires `alloc`); file formats, CLI and
//! experiment orchestration live in the companion `mgf-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod functionals;
pub mod graph;
pub mod integrator;
pub mod linalg;
mod math;
pub mod presets;
pub mod reference;
pub mod system;

pub use graph::{EndpointRole, GraphError, MetricGraph};
pub use reference::{
    apply_scaling, apply_scaling_with, harmonic_rate, BoundaryCoupling, CellMeasures,
    EdgeDensityExpr, RateSpec, ReferenceError, ReferenceMeasure, ScaledSetup, ScalingOptions,
    ScalingRegime,
};
pub use system::{
    assemble_combinatorial, assemble_fast_edge, assemble_kirchhoff_limit, assemble_prelimit,
    stationary_state, total_mass, AssemblyError, Bond, BondClass, DiscreteSystem, SlotKind,
    StateLayout, SystemKind,
};

pub use integrator::{
    integrate, resolve_with_tolerance_sweep, IntegrateError, IntegratorConfig, OutputGrid, Scheme,
    Trajectory,
};

pub use functionals::{
    cosh_dual, cosh_primal, cosh_primal_weighted, divergence, edp_report, embed_flux, embed_state,
    flux_from_state, hellinger, rate_r, relative_entropy, slope_i, CellWeight, ComparisonMap,
    DissipationBreakdown, EmbeddedFlux, EmbeddedState, FluxVector, FunctionalError,
    FunctionalReport,
};
