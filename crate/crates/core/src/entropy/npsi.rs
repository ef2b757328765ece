use serde::{Deserialize, Serialize};

use super::HardPartition;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::ndmath::{Tape, Tensor, Var, EPS};

/// Normalizer used by the matrix form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NpsiConvention {
    /// Both factors divided by `sum(A)`; agrees with [`npsi_node`] on hard partitions.
    #[default]
    Reconciled,
    /// Both factors divided by `2 * sum(A)`. Kept for comparison only.
    Literal,
}

impl NpsiConvention {
    fn denominator_factor(self) -> f64 {
        match self {
            NpsiConvention::Reconciled => 1.0,
            NpsiConvention::Literal => 2.0,
        }
    }
}

/// NPSI of a hard partition, from degrees and cut sizes.
pub fn npsi_node(g: &Graph, p: &HardPartition) -> Result<f64> {
    if p.len() != g.num_nodes() {
        return Err(Error::Contract(format!(
            "partition covers {} nodes, graph has {}",
            p.len(),
            g.num_nodes()
        )));
    }
    let two_e = 2 * g.edge_count();
    if two_e == 0 {
        return Err(Error::Domain(
            "NPSI is undefined on an edgeless graph".into(),
        ));
    }
    let labels = p.assignment();
    let mut vol = vec![0usize; p.groups()];
    let mut cut = vec![0usize; p.groups()];
    for (u, &d) in g.degrees().iter().enumerate() {
        vol[labels[u]] += d;
    }
    for (u, v) in g.edges() {
        if labels[u] != labels[v] {
            cut[labels[u]] += 1;
            cut[labels[v]] += 1;
        }
    }
    let two_e = two_e as f64;
    Ok(vol
        .iter()
        .zip(&cut)
        .map(|(&v, &g)| {
            let coef = (v - g) as f64 / two_e;
            if coef == 0.0 {
                0.0
            } else {
                coef * (v as f64 / two_e).max(EPS).log2()
            }
        })
        .sum())
}

/// Differentiable matrix form of NPSI for a non-negative symmetric `a` and a
/// row-stochastic `y`.
pub fn npsi_matrix(tape: &mut Tape, a: Var, y: Var, convention: NpsiConvention) -> Result<Var> {
    let (n, m) = tape.shape(a);
    let (ny, _) = tape.shape(y);
    if n != m || ny != n {
        return Err(Error::Shape {
            op: "npsi_matrix",
            left: (n, m),
            right: tape.shape(y),
        });
    }
    let total = tape.sum_all(a);
    let total_value = tape.value(total).item()?;
    if total_value.is_nan() || total_value <= 0.0 {
        return Err(Error::Domain("NPSI needs sum(A') > 0".into()));
    }
    let denom = tape.scale(total, convention.denominator_factor());

    let ay = tape.matmul(a, y)?;
    let y_ay = tape.mul(y, ay)?;
    let inner = tape.col_sum(y_ay); // diag(YᵀAY)
    let vol = tape.col_sum(ay);

    let coef = tape.div_eps(inner, denom)?;
    let share = tape.div_eps(vol, denom)?;
    let logs = tape.log2eps(share);
    let terms = tape.mul(coef, logs)?;
    Ok(tape.sum_all(terms))
}

pub fn npsi_matrix_value(a: &Tensor, y: &Tensor, convention: NpsiConvention) -> Result<f64> {
    let mut tape = Tape::new();
    let (av, yv) = (tape.leaf(a.clone()), tape.leaf(y.clone()));
    let out = npsi_matrix(&mut tape, av, yv, convention)?;
    tape.value(out).item()
}
