//! Reverse-mode differentiation over the tensor primitives.
//!
//! A [`Tape`] records every operation eagerly: the output value is computed
//! immediately and the operation kind is stored alongside it. [`Tape::backward`]
//! walks the record in reverse, summing gradients where a value fans out to
//! several consumers. Values that do not depend on any gradient-requiring
//! leaf are never differentiated.

mod gradcheck;
mod tape;

pub use gradcheck::{grad_check, GradCheck};
pub(crate) use tape::charbonnier_value;
pub use tape::{Gradients, Tape, Var};
