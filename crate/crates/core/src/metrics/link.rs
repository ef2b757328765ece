use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::ndmath::Tensor;

/// Held-out edges and matched non-edges for link prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSplit {
    /// Input graph with every held-out positive removed.
    pub train: Graph,
    pub val_pos: Vec<(usize, usize)>,
    pub val_neg: Vec<(usize, usize)>,
    pub test_pos: Vec<(usize, usize)>,
    pub test_neg: Vec<(usize, usize)>,
    pub seed: u64,
}

impl LinkSplit {
    /// Every pair that must not be touched by later perturbation of `train`.
    pub fn held_out_pairs(&self) -> HashSet<(usize, usize)> {
        self.val_pos
            .iter()
            .chain(&self.val_neg)
            .chain(&self.test_pos)
            .chain(&self.test_neg)
            .copied()
            .collect()
    }
}

fn hidden_count(frac: f64, edges: usize, name: &str) -> Result<usize> {
    if !(0.0..1.0).contains(&frac) {
        return Err(Error::Config(format!(
            "{name} fraction must lie in [0,1), got {frac}"
        )));
    }
    let k = (frac * edges as f64).round() as usize;
    if frac > 0.0 && k == 0 {
        return Err(Error::Config(format!(
            "{name} fraction {frac} of {edges} edges selects no edge"
        )));
    }
    Ok(k)
}

/// Hides `round(val * |E|)` and `round(test * |E|)` edges and samples as many
/// non-edges of `g` for each split.
pub fn link_split(g: &Graph, val: f64, test: f64, seed: u64) -> Result<LinkSplit> {
    let mut edges: Vec<(usize, usize)> = g.edges().collect();
    let n_val = hidden_count(val, edges.len(), "validation")?;
    let n_test = hidden_count(test, edges.len(), "test")?;
    if n_val + n_test > 0 && n_val + n_test >= edges.len() {
        return Err(Error::Config(format!(
            "hiding {} of {} edges leaves no training edge",
            n_val + n_test,
            edges.len()
        )));
    }

    let n = g.num_nodes();
    let non_edges = n * n.saturating_sub(1) / 2 - edges.len();
    if n_val + n_test > non_edges {
        return Err(Error::Config(format!(
            "need {} negative pairs but the graph has only {non_edges} non-edges",
            n_val + n_test
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    edges.shuffle(&mut rng);
    let test_pos = edges[..n_test].to_vec();
    let val_pos = edges[n_test..n_test + n_val].to_vec();

    let mut taken = HashSet::new();
    let mut negatives = Vec::with_capacity(n_val + n_test);
    while negatives.len() < n_val + n_test {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u == v || g.has_edge(u, v) {
            continue;
        }
        let pair = (u.min(v), u.max(v));
        if taken.insert(pair) {
            negatives.push(pair);
        }
    }
    let test_neg = negatives[..n_test].to_vec();
    let val_neg = negatives[n_test..].to_vec();

    let mut train = g.clone();
    for &(u, v) in test_pos.iter().chain(&val_pos) {
        train.set_edge(u, v, false);
    }
    Ok(LinkSplit {
        train,
        val_pos,
        val_neg,
        test_pos,
        test_neg,
        seed,
    })
}

/// `sigmoid(h_i · h_j)` for each pair.
pub fn score_links(h: &Tensor, pairs: &[(usize, usize)]) -> Result<Vec<f64>> {
    let n = h.rows();
    pairs
        .iter()
        .map(|&(i, j)| {
            if i >= n || j >= n {
                return Err(Error::Contract(format!(
                    "pair ({i},{j}) out of range for {n} nodes"
                )));
            }
            let dot: f64 = h.row(i).iter().zip(h.row(j)).map(|(a, b)| a * b).sum();
            Ok(1.0 / (1.0 + (-dot).exp()))
        })
        .collect()
}

fn check_binary(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Contract(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Domain("NaN score".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Domain("both classes must be present".into()));
    }
    Ok((pos, neg))
}

/// Area under the ROC curve via the rank statistic, ties given midranks.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check_binary(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += order[i..=j].iter().filter(|&&k| labels[k]).count() as f64 * midrank;
        i = j + 1;
    }
    let p = pos as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * neg as f64))
}

/// Average precision: sum over the descending sweep of recall gain times
/// precision, treating tied scores as one threshold.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, _) = check_binary(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut seen, mut ap) = (0usize, 0usize, 0.0);
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let group_pos = order[i..=j].iter().filter(|&&k| labels[k]).count();
        tp += group_pos;
        seen += j - i + 1;
        if group_pos > 0 {
            ap += group_pos as f64 / pos as f64 * (tp as f64 / seen as f64);
        }
        i = j + 1;
    }
    Ok(ap)
}
