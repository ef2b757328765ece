//! Dense matrices, a reverse-mode tape over them, and Adam.

mod adam;
mod tape;
mod tensor;

pub use adam::AdamState;
pub use tape::{BinaryOp, Gradients, ReduceOp, Tape, UnaryOp, Var, EPS};
pub use tensor::Tensor;
