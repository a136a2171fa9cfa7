//! Finite-element laboratory for Signorini (frictionless contact) problems.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: polygonal sets with edge provenance, boolean operations,
//!   the reachable region `G0` and the contradiction set `V`, and the
//!   classification of `∂V` against the obstacle boundaries.
//! * [`mesh`]: constrained Delaunay triangulation of multiply-connected
//!   polygonal domains with boundary tags and obstacle node normals.
//! * [`fem`]: sparse assembly, the bound-constrained quadratic programs
//!   shared by both contact solvers (primal–dual active set and projected
//!   Gauss–Seidel), the scalar problem ([`fem::scalar`]) and the frictionless
//!   elastic problem ([`fem::elastic`]) with flux / traction recovery, rigid
//!   fits and discrete Gauss–Green checks.
//! * [`scene`]: the JSON scene format.
//! * [`inverse`]: forward maps, distinguishability experiments, the rigid
//!   obstruction class `Υ_{A,c}` and a Gauss–Newton shape reconstruction.

pub mod error;
pub mod expr;
pub mod fem;
pub mod geometry;
pub mod inverse;
pub mod mesh;
pub mod par;
pub mod scene;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
