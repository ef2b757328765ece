//! Partition structural information (NPSI) and the Davies-Bouldin index.
//!
//! For a partition `C_0..C_{r-1}` of a graph with `|E|` edges, NPSI is
//!
//! ```text
//! sum_k  (vol_k - g_k) / 2|E|  *  log2(vol_k / 2|E|)
//! ```
//!
//! where `vol_k` is the degree sum of `C_k` and `g_k` its cut size. With an
//! indicator matrix `Y` and `2|E| = sum(A)`, `vol_k - g_k = (YᵀAY)_kk` and
//! `vol_k = colsum(AY)_k`, which gives the matrix form evaluated on the tape.
//! The matrix form accepts any non-negative `A` and any row-stochastic `Y`.

mod dbi;
mod npsi;

pub use dbi::{dbi_hard, dbi_soft, MASS_EPS};
pub use npsi::{npsi_matrix, npsi_matrix_value, npsi_node, NpsiConvention};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndmath::{Tape, Tensor, Var};

/// Hard assignment of n nodes to r non-empty groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardPartition {
    assignment: Vec<usize>,
    groups: usize,
}

impl HardPartition {
    /// Groups are inferred as `max + 1`; every group must be used.
    pub fn new(assignment: Vec<usize>) -> Result<Self> {
        let groups = crate::graph::class_count(&assignment)?;
        if groups == 0 {
            return Err(Error::Contract("empty partition".into()));
        }
        Ok(Self { assignment, groups })
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// One-hot n x r indicator.
    pub fn indicator(&self) -> Tensor {
        Tensor::from_fn(self.assignment.len(), self.groups, |i, k| {
            if self.assignment[i] == k {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Row-wise argmax of a soft indicator, then compacted so that every
    /// group id in use is dense.
    pub fn from_soft(y: &Tensor) -> Result<Self> {
        let raw = argmax_rows(y);
        Self::new(crate::graph::compact_labels(&raw))
    }
}

/// Index of the largest entry in every row (first on ties).
pub fn argmax_rows(y: &Tensor) -> Vec<usize> {
    (0..y.rows())
        .map(|i| {
            y.row(i)
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (j, &v)| {
                    if v > best.1 {
                        (j, v)
                    } else {
                        best
                    }
                })
                .0
        })
        .collect()
}

/// Checks that `y` is row-stochastic within `tol`.
pub fn check_soft_indicator(y: &Tensor, tol: f64) -> Result<()> {
    for i in 0..y.rows() {
        let row = y.row(i);
        if row.iter().any(|&v| !(-tol..=1.0 + tol).contains(&v)) {
            return Err(Error::Contract(format!(
                "row {i} of Y has entries outside [0,1]"
            )));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > tol {
            return Err(Error::Contract(format!("row {i} of Y sums to {s}")));
        }
    }
    Ok(())
}

/// The three pieces of `L_N`, as tape nodes.
#[derive(Debug, Clone, Copy)]
pub struct InnocuousLoss {
    pub total: Var,
    pub npsi: Var,
    pub dbi: Var,
}

/// `L_N = NPSI(A', Y) + beta * DBI(X, Y)` with the soft DBI.
pub fn loss_ln(
    tape: &mut Tape,
    a_prime: Var,
    y: Var,
    x: Var,
    beta: f64,
    convention: NpsiConvention,
) -> Result<InnocuousLoss> {
    let npsi = npsi_matrix(tape, a_prime, y, convention)?;
    let dbi = dbi_soft(tape, x, y)?;
    let weighted = tape.scale(dbi, beta);
    let total = tape.add(npsi, weighted)?;
    Ok(InnocuousLoss { total, npsi, dbi })
}

/// Convention for `L_N` on plain values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LnValues {
    pub total: f64,
    pub npsi: f64,
    pub dbi: f64,
}

/// Evaluates [`loss_ln`] without keeping the tape.
pub fn loss_ln_value(
    a_prime: &Tensor,
    y: &Tensor,
    x: &Tensor,
    beta: f64,
    convention: NpsiConvention,
) -> Result<LnValues> {
    let mut tape = Tape::new();
    let (a, yv, xv) = (
        tape.leaf(a_prime.clone()),
        tape.leaf(y.clone()),
        tape.leaf(x.clone()),
    );
    let parts = loss_ln(&mut tape, a, yv, xv, beta, convention)?;
    Ok(LnValues {
        total: tape.value(parts.total).item()?,
        npsi: tape.value(parts.npsi).item()?,
        dbi: tape.value(parts.dbi).item()?,
    })
}
