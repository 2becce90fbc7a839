//! Implicitly constituted incompressible fluids: relation catalog,
//! admissibility checks, regularized resolvents and a channel-flow solver.

// Parameter checks are written as `!(x > 0.0)` on purpose: the negation
// also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admissibility;
pub mod catalog;
pub mod error;
pub mod flow;
pub mod harness;
pub mod oracle;
pub mod regularization;
pub mod relation;
pub mod sampling;
pub mod tensor;

/// Relation catalog, tensors and closed-form reference profiles.
pub mod constitutive_core {
    pub use crate::catalog::*;
    pub use crate::oracle;
    pub use crate::relation::*;
    pub use crate::tensor::*;
}

/// The channel-flow solver and its outputs.
pub mod flow_solver {
    pub use crate::flow::*;
}

pub use error::{Result, RheoError};
pub use relation::{BoundaryKind, BoundaryRelation, BulkKind, BulkRelation, Orientation, Relation};
pub use tensor::{Element, SlipVector, SymTensor2};
