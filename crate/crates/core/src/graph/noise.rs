use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Graph;
use crate::error::{Error, Result};

/// Toggles `round(ratio * |E|)` distinct node pairs chosen uniformly at random.
pub fn flip_noise(g: &Graph, ratio: f64, seed: u64) -> Result<Graph> {
    flip_noise_excluding(g, ratio, seed, &HashSet::new())
}

/// [`flip_noise`] restricted to pairs outside `excluded` (pairs stored as (u, v), u < v).
pub fn flip_noise_excluding(
    g: &Graph,
    ratio: f64,
    seed: u64,
    excluded: &HashSet<(usize, usize)>,
) -> Result<Graph> {
    if !ratio.is_finite() || ratio < 0.0 {
        return Err(Error::Config(format!(
            "noise ratio must be >= 0, got {ratio}"
        )));
    }
    let k = (ratio * g.edge_count() as f64).round() as usize;
    flip_pairs_excluding(g, k, seed, excluded)
}

/// Toggles exactly `k` distinct pairs. The pair sequence depends only on
/// `(n, k, seed)`, so applying it twice restores the input.
pub fn flip_pairs(g: &Graph, k: usize, seed: u64) -> Result<Graph> {
    flip_pairs_excluding(g, k, seed, &HashSet::new())
}

fn flip_pairs_excluding(
    g: &Graph,
    k: usize,
    seed: u64,
    excluded: &HashSet<(usize, usize)>,
) -> Result<Graph> {
    let n = g.num_nodes();
    let total = n * n.saturating_sub(1) / 2;
    let blocked = excluded.iter().filter(|&&(u, v)| u < v && v < n).count();
    let available = total - blocked;
    if k > available {
        return Err(Error::Config(format!(
            "cannot flip {k} pairs: only {available} candidate pairs on {n} nodes"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = HashSet::with_capacity(k);
    let mut order = Vec::with_capacity(k);
    while order.len() < k {
        let pair = pair_from_index(n, rng.gen_range(0..total));
        if excluded.contains(&pair) || !chosen.insert(pair) {
            continue;
        }
        order.push(pair);
    }
    let mut out = g.clone();
    for (u, v) in order {
        out.toggle(u, v);
    }
    Ok(out)
}

/// Maps a linear index in [0, n(n-1)/2) to the pair (u, v), u < v, in row-major order.
fn pair_from_index(n: usize, mut idx: usize) -> (usize, usize) {
    let mut u = 0;
    loop {
        let row = n - 1 - u;
        if idx < row {
            return (u, u + 1 + idx);
        }
        idx -= row;
        u += 1;
    }
}
