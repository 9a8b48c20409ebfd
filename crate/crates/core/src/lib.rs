//! String stability analysis for heterogeneous vehicle flocks with linear
//! decentralized feedback.
//!
//! A flock is described by a [`FlockSpec`]: an arrangement of agent types and
//! per-type gains and neighbor weights. From it the crate builds the
//! closed-loop system on a circle or a line, computes periodic spectra from
//! the per-mode characteristic polynomial, evaluates the closed-form
//! necessary conditions, simulates the line system and tracks the small
//! roots near the origin.

pub mod assembly;
pub mod conditions;
pub mod fixtures;
pub mod model;
pub mod poly;
pub mod report;
pub mod rootcurves;
pub mod simulation;
pub mod spectral;

pub use assembly::{assemble_line, assemble_periodic, BoundaryType, SparseRows, SystemMatrix, Topology};
pub use conditions::{conditions, ConditionReport, Overall};
pub use model::{alphas_betas, build_spec, AgentParams, Arrangement, Channel, FlockSpec, ModelError, NeighborWeights};
pub use num_complex::Complex64;
pub use rootcurves::{track_branches, Branch, RootCurve, RootCurveError, SpecFamily, TrackedBranches};
pub use simulation::{simulate, transient, SimError, SimOptions, Trajectory, TransientReport};
pub use spectral::{
    assess_stability, char_poly, spectrum_periodic, CharPoly, ModeSpectrum, SpectralError, StabilityStatus,
    StabilityVerdict,
};
