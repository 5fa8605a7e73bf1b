//! Mixed finite element discretizations of the linear Cosserat (micropolar)
//! equations.
//!
//! The crate provides four stress/rotation discretizations (`BDM1-P0`,
//! `BDM1-L1`, `RT1-L1`, `RT1-P1`) in both their full mixed form and their
//! multipoint stress form, where a vertex (or vertex + center) quadrature
//! rule makes the stress mass matrix block diagonal so that the stresses can
//! be eliminated locally and only a displacement/rotation Schur complement
//! has to be solved.
//!
//! Layering, bottom to top:
//!
//! * [`mesh`]: conforming simplicial meshes of the unit square/cube.
//! * [`quadrature`]: exact simplex rules and the lumping rules `Q1`, `Q2`.
//! * [`fespace`]: reference elements, Piola maps and DOF tables.
//! * [`model`]: material tensors, length scales, manufactured solutions.
//! * [`assembly`]: saddle-point blocks for each scheme.
//! * [`solve`]: sparse algebra, block-diagonal elimination, Krylov solvers.

pub mod assembly;
pub mod error;
pub mod fespace;
pub mod mesh;
pub mod model;
pub mod quadrature;
pub mod solve;
pub mod sparse;
pub mod tensor;

pub use error::{Error, Result};
