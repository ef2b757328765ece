use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ndmath::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    centroids
        .iter()
        .enumerate()
        .map(|(k, c)| (k, sq_dist(p, c)))
        .fold(
            (0, f64::INFINITY),
            |best, cur| if cur.1 < best.1 { cur } else { best },
        )
}

fn plus_plus_seeds(points: &Tensor, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.rows();
    let mut centroids = vec![points.row(rng.gen_range(0..n)).to_vec()];
    let mut d2: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.row(i), &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut idx = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    idx = i;
                    break;
                }
                target -= w;
            }
            idx
        } else {
            rng.gen_range(0..n)
        };
        let c = points.row(pick).to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), &c));
        }
        centroids.push(c);
    }
    centroids
}

fn lloyd(points: &Tensor, mut centroids: Vec<Vec<f64>>, iters: usize) -> KMeansResult {
    let (n, d) = points.shape();
    let k = centroids.len();
    let mut labels = vec![usize::MAX; n];
    for _ in 0..iters {
        let mut changed = false;
        for (i, label) in labels.iter_mut().enumerate() {
            let (c, _) = nearest(points.row(i), &centroids);
            if *label != c {
                *label = c;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(points.row(i)) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                // Re-seed an empty cluster at the point farthest from its centroid.
                let far = (0..n)
                    .map(|i| (i, sq_dist(points.row(i), &centroids[labels[i]])))
                    .fold((0, -1.0), |b, cur| if cur.1 > b.1 { cur } else { b })
                    .0;
                centroids[c] = points.row(far).to_vec();
                labels[far] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for (i, label) in labels.iter_mut().enumerate() {
        *label = nearest(points.row(i), &centroids).0;
    }
    let inertia = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| sq_dist(points.row(i), &centroids[l]))
        .sum();
    KMeansResult {
        labels,
        centroids,
        inertia,
    }
}

/// k-means++ seeding followed by Lloyd iterations; keeps the restart with the
/// lowest inertia.
pub fn kmeans(
    points: &Tensor,
    k: usize,
    restarts: usize,
    iters: usize,
    seed: u64,
) -> Result<KMeansResult> {
    let n = points.rows();
    if k == 0 || k > n {
        return Err(Error::Config(format!("k = {k} must lie in [1, {n}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..restarts.max(1) {
        let seeds = plus_plus_seeds(points, k, &mut rng);
        let run = lloyd(points, seeds, iters);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}
