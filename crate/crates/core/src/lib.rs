#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod gas;
pub mod linalg;
pub mod mesh_fem;
pub mod nozzle;
pub mod problem;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
pub use problem::ProblemSpec;
