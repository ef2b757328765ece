use crate::error::{Error, Result};
use crate::ndmath::{Tape, Tensor, UnaryOp, Var};

/// `D^{-1/2} (A + I) D^{-1/2}` with `D = diag(rowsum(A + I))`.
pub fn degree_normalize(a: &Tensor) -> Result<Tensor> {
    let mut tape = Tape::new();
    let av = tape.leaf(a.clone());
    let out = degree_normalize_on_tape(&mut tape, av)?;
    Ok(tape.value(out).clone())
}

/// Differentiable form of [`degree_normalize`].
pub fn degree_normalize_on_tape(tape: &mut Tape, a: Var) -> Result<Var> {
    let (r, c) = tape.shape(a);
    if r != c {
        return Err(Error::Shape {
            op: "degree_normalize",
            left: (r, c),
            right: (c, r),
        });
    }
    if tape.value(a).data().iter().any(|&x| x < 0.0) {
        return Err(Error::Domain(
            "degree_normalize needs a non-negative matrix".into(),
        ));
    }
    let eye = tape.leaf(Tensor::identity(r));
    let a_hat = tape.add(a, eye)?;
    let deg = tape.row_sum(a_hat);
    let root = tape.sqrt(deg)?;
    let inv = tape.unary(UnaryOp::ReciprocalEps, root)?;
    let inv_t = tape.transpose(inv);
    let left = tape.mul(a_hat, inv)?;
    tape.mul(left, inv_t)
}
