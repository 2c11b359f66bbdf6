//! Tensor mesh on the reference cylinder, multilinear elements, and
//! assembly of the truncated energy, its gradient (the weak form) and
//! Hessian, all pulled back through the nozzle map.

mod assembly;
mod field;
mod mesh;

pub use assembly::{Discretization, QpSample, SectionPoint, SectionSamples, SparseSystem};
pub use field::DiscreteField;
pub use mesh::{build_mesh, Mesh};
