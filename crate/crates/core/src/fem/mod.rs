//! Finite-element machinery shared by the scalar and elastic contact solvers.

pub mod elastic;
pub mod gauss_green;
pub mod measurement;
pub mod p1;
pub mod qp;
pub mod rigid;
pub mod scalar;
pub mod sparse;

pub use elastic::{
    contact_split, recover_traction, solve_elastic, solve_elastic_with, stresses, ElasticOptions, ElasticSolution,
    LameField,
};
pub use gauss_green::{gauss_green_check_elastic, gauss_green_check_scalar, GaussGreenReport};
pub use measurement::{boundary_chains, gap, BoundaryMeasurement, Quantity, Sample};
pub use qp::{Bound, BoundQp, Method, PdasOptions, PgsOptions, QpSolution};
pub use rigid::{fit_rigid_motion, RigidFit, RigidMotion};
pub use scalar::{recover_flux, solve_scalar, solve_scalar_with, ScalarOptions, ScalarSolution};
pub use sparse::CsrMatrix;
