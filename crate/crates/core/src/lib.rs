//! Simulation core for a one-dimensional porous-elastic beam coupled to a
//! microtemperature field, in the inertia-reduced ("second-spectrum-free")
//! form where the volume-fraction acceleration is replaced by `-u_xtt`.
//!
//! The crate provides:
//!
//! * [`model`] — physical parameters, their admissibility constraints, and
//!   the chain of stability constants used by the Lyapunov diagnostics;
//! * [`fem`] — a uniform P1 mesh on `(0, l)` with Dirichlet-eliminated
//!   interior degrees of freedom and the four tridiagonal operators
//!   (mass `Z`, stiffness `T`, convection `X`, and its transpose `Y`);
//! * [`band`] — a small banded LU solver with partial pivoting;
//! * [`timestepper`] — the fully implicit coupled step and trajectory runner;
//! * [`energy`] — the discrete energy, the step dissipation check, the
//!   Lyapunov functionals, and exponential decay-rate fitting;
//! * [`verification`] — manufactured solutions, forcing generation, error
//!   norms, and convergence-order studies in `h` and `dt`.

pub mod band;
pub mod energy;
pub mod fem;
pub mod model;
pub mod timestepper;
pub mod verification;

#[cfg(test)]
pub(crate) mod test_util;

pub use energy::{DecayFit, DissipationReport, EnergyBreakdown, LyapunovValues};
pub use fem::{FemMatrices, Mesh1D, NodalVector};
pub use model::{LyapunovConstants, PhysicalParams};
pub use timestepper::{Forcing, Profile, RunConfig, SolverState, Trajectory};
pub use verification::{ConvergenceReport, ErrorNorms, ManufacturedSolution};
