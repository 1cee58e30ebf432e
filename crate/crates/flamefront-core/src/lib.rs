//! Numerical laboratory for a one-phase parabolic free boundary problem of
//! premixed flame propagation.
//!
//! The library integrates the regularized reaction–diffusion equation
//!
//! ```text
//! u_t = Δu − (1/ε) β(u/ε)
//! ```
//!
//! on 2-D Cartesian grids ([`cartesian`]) and in radial symmetry for any
//! integer dimension ([`radial`]), constructs the self-similar extinction
//! profile from its ODE ([`self_similar`]), and measures the quantitative
//! asymptotics of the flame near extinction: the √(T−t) scaling of the
//! maximum, the inner/outer radii and flatness of the burning front
//! ([`geometry`]), dyadic-time flatness decay, and convergence of the
//! rescaled solution to the self-similar profile ([`analysis`]).
//!
//! [`verify`] bundles the quantitative checks of all of the above into a
//! pass/fail criteria suite.

pub mod analysis;
pub mod cartesian;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod initial;
pub mod radial;
pub mod reaction;
pub mod self_similar;
pub mod snapshot;
pub mod verify;

pub use analysis::{DyadicSchedule, ExtinctionEstimate, FlatnessFit};
pub use cartesian::{RunOutcome, RunRecord, SolverParams};
pub use error::{FlameError, Result};
pub use geometry::BoundaryGeometry;
pub use grid::{GridSpec, ScalarField};
pub use initial::{InitialDataSpec, ValidationReport};
pub use radial::RadialField;
pub use reaction::BetaKernel;
pub use self_similar::SelfSimilarProfile;
