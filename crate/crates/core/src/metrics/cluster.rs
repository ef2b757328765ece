use serde::{Deserialize, Serialize};

use super::assignment::min_cost_assignment;
use crate::error::{Error, Result};

/// How mutual information is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NmiNormalization {
    /// `I / sqrt(H(a) H(b))`
    #[default]
    Sqrt,
    /// `I / max(H(a), H(b))`
    Max,
    /// `2I / (H(a) + H(b))`
    Arithmetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterEval {
    pub nmi: f64,
    pub acc: f64,
    /// `table[p][t]` counts nodes with predicted p and true t.
    pub contingency: Vec<Vec<usize>>,
}

impl ClusterEval {
    pub fn evaluate(pred: &[usize], truth: &[usize]) -> Result<Self> {
        Ok(Self {
            nmi: nmi(pred, truth)?,
            acc: clustering_accuracy(pred, truth)?,
            contingency: contingency(pred, truth)?,
        })
    }
}

fn check(pred: &[usize], truth: &[usize]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::Contract(format!(
            "label vectors differ in length: {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Contract("empty label vectors".into()));
    }
    Ok(())
}

/// Counts over the raw label ids (rows: pred, cols: truth).
pub fn contingency(pred: &[usize], truth: &[usize]) -> Result<Vec<Vec<usize>>> {
    check(pred, truth)?;
    let rp = pred.iter().max().unwrap() + 1;
    let rt = truth.iter().max().unwrap() + 1;
    let mut table = vec![vec![0; rt]; rp];
    for (&p, &t) in pred.iter().zip(truth) {
        table[p][t] += 1;
    }
    Ok(table)
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    nmi_with(pred, truth, NmiNormalization::Sqrt)
}

/// Normalized mutual information in nats. When either side has zero
/// entropy the score is 1 for identical partitions and 0 otherwise.
pub fn nmi_with(pred: &[usize], truth: &[usize], norm: NmiNormalization) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let n = pred.len() as f64;
    let row_tot: Vec<usize> = table.iter().map(|r| r.iter().sum()).collect();
    let col_tot: Vec<usize> = (0..table[0].len())
        .map(|t| table.iter().map(|r| r[t]).sum())
        .collect();
    let hp = entropy(row_tot.iter().copied(), n);
    let ht = entropy(col_tot.iter().copied(), n);

    if hp == 0.0 || ht == 0.0 {
        let same = hp == 0.0 && ht == 0.0;
        return Ok(if same { 1.0 } else { 0.0 });
    }

    let mut mi = 0.0;
    for (p, row) in table.iter().enumerate() {
        for (t, &c) in row.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let c = c as f64;
            mi += c / n * (c * n / (row_tot[p] as f64 * col_tot[t] as f64)).ln();
        }
    }
    let denom = match norm {
        NmiNormalization::Sqrt => (hp * ht).sqrt(),
        NmiNormalization::Max => hp.max(ht),
        NmiNormalization::Arithmetic => 0.5 * (hp + ht),
    };
    Ok((mi / denom).clamp(0.0, 1.0))
}

/// Best matched fraction over one-to-one maps from predicted to true labels.
pub fn clustering_accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = contingency(pred, truth)?;
    let size = table.len().max(table[0].len());
    let max = table.iter().flatten().copied().max().unwrap_or(0) as f64;
    let cost: Vec<Vec<f64>> = (0..size)
        .map(|p| {
            (0..size)
                .map(|t| max - table.get(p).and_then(|r| r.get(t)).copied().unwrap_or(0) as f64)
                .collect()
        })
        .collect();
    let assign = min_cost_assignment(&cost);
    let matched: usize = assign
        .iter()
        .enumerate()
        .map(|(p, &t)| table.get(p).and_then(|r| r.get(t)).copied().unwrap_or(0))
        .sum();
    Ok(matched as f64 / pred.len() as f64)
}
