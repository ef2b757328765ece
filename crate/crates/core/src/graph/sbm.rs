use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Dataset, Graph};
use crate::error::{Error, Result};
use crate::ndmath::Tensor;

/// Planted-partition generator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmConfig {
    pub blocks: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    pub dim: usize,
    pub feature_noise: f64,
    pub seed: u64,
}

impl SbmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() || self.blocks.contains(&0) {
            return Err(Error::Config("every block needs at least one node".into()));
        }
        for (name, p) in [("p_in", self.p_in), ("p_out", self.p_out)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0,1], got {p}")));
            }
        }
        if self.p_in < self.p_out {
            return Err(Error::Config(format!(
                "p_in ({}) must not be below p_out ({})",
                self.p_in, self.p_out
            )));
        }
        if self.dim < self.blocks.len() {
            return Err(Error::Config(format!(
                "feature dimension {} is smaller than the block count {}",
                self.dim,
                self.blocks.len()
            )));
        }
        if self.feature_noise.is_nan() || self.feature_noise < 0.0 {
            return Err(Error::Config("feature noise scale must be >= 0".into()));
        }
        Ok(())
    }
}

/// Samples a stochastic block model with one-hot block features plus Gaussian noise.
pub fn sbm_generate(cfg: &SbmConfig) -> Result<Dataset> {
    cfg.validate()?;
    let labels: Vec<usize> = cfg
        .blocks
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
        .collect();
    let n = labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut g = Graph::empty(n);
    for u in 0..n {
        for v in u + 1..n {
            let p = if labels[u] == labels[v] {
                cfg.p_in
            } else {
                cfg.p_out
            };
            if rng.gen::<f64>() < p {
                g.set_edge(u, v, true);
            }
        }
    }

    let mut features = Tensor::zeros(n, cfg.dim);
    for (u, &label) in labels.iter().enumerate() {
        for j in 0..cfg.dim {
            let base = if j == label { 1.0 } else { 0.0 };
            let noise: f64 = rng.sample(StandardNormal);
            features.set(u, j, base + cfg.feature_noise * noise);
        }
    }
    Dataset::new(g, features, Some(labels))
}
