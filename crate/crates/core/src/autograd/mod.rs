//! Reverse-mode automatic differentiation over dense `f64` arrays.
//!
//! A [`Graph`] records every primitive application as a node. Nodes are
//! only ever appended, so creation order is topological and
//! [`Graph::backward`] is one reverse sweep. Parameter leaves accumulate
//! gradient across backward calls until [`Graph::zero_gradients`].

mod array;
mod gradcheck;
mod graph;

pub use array::Array;
pub use gradcheck::{gradient_check, GradCheckReport, DEFAULT_STEP, ERROR_FLOOR};
pub use graph::{Gradients, Graph, Mode, Primitive, Var};

#[cfg(test)]
mod tests;
