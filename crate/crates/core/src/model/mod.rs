//! The learnable-adjacency graph autoencoder and its training loop.
//!
//! Parameters are an n x n seed `M` for the adjacency, two GCN weight
//! matrices and the partition head `W_Y`. The realized adjacency
//! `A' = (relu(M) + relu(M)ᵀ) / 2` is non-negative and symmetric by
//! construction.

mod checkpoint;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use train::{train, train_with_observer, EpochRecord, EpochState, TrainHistory, TrainOutcome};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entropy::{loss_ln, InnocuousLoss, NpsiConvention};
use crate::error::{Error, Result};
use crate::graph::{degree_normalize_on_tape, Dataset};
use crate::ndmath::{Tape, Tensor, Var};

/// Value added to every entry of the observed adjacency to form the initial seed `M`.
pub const SEED_OFFSET: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Weight of the reconstruction loss.
    pub alpha: f64,
    /// Weight of the Davies-Bouldin term.
    pub beta: f64,
    pub lr: f64,
    pub epochs: usize,
    pub hidden: usize,
    pub embedding: usize,
    /// Partition size; defaults to the dataset's class count.
    pub classes: Option<usize>,
    pub seed: u64,
    pub convention: NpsiConvention,
    /// Record the numerical rank of `A'` every this many epochs (0 disables).
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            beta: 1.0,
            lr: 0.001,
            epochs: 400,
            hidden: 32,
            embedding: 16,
            classes: None,
            seed: 0,
            convention: NpsiConvention::Reconciled,
            log_every: 50,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alpha.is_nan() || self.beta.is_nan() || self.alpha < 0.0 || self.beta < 0.0 {
            return Err(Error::Config("alpha and beta must be >= 0".into()));
        }
        if self.lr.is_nan() || self.lr <= 0.0 {
            return Err(Error::Config("learning rate must be > 0".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.hidden == 0 || self.embedding == 0 {
            return Err(Error::Config("layer widths must be >= 1".into()));
        }
        Ok(())
    }

    /// Partition size for `ds`.
    pub fn resolve_classes(&self, ds: &Dataset) -> Result<usize> {
        let c = self.classes.or_else(|| ds.num_classes()).ok_or_else(|| {
            Error::Config("class count unknown: pass it or provide labels".into())
        })?;
        if c < 2 {
            return Err(Error::Config(format!("need at least 2 groups, got {c}")));
        }
        Ok(c)
    }
}

/// Learnable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct UserModel {
    pub m: Tensor,
    pub w1: Tensor,
    pub w2: Tensor,
    pub wy: Tensor,
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Tensor::from_fn(rows, cols, |_, _| rng.gen_range(-bound..bound))
}

impl UserModel {
    /// `M = A + 0.01`, Glorot-uniform weights.
    pub fn init(ds: &Dataset, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        if ds.graph.edge_count() == 0 {
            return Err(Error::EmptyDataset("graph has no edges".into()));
        }
        let c = cfg.resolve_classes(ds)?;
        let d = ds.features.cols();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let m = ds.graph.to_tensor().map(|x| x + SEED_OFFSET);
        let w1 = glorot(&mut rng, d, cfg.hidden);
        let w2 = glorot(&mut rng, cfg.hidden, cfg.embedding);
        let wy = glorot(&mut rng, cfg.embedding, c);
        Ok(Self { m, w1, w2, wy })
    }

    pub fn params(&self) -> [&Tensor; 4] {
        [&self.m, &self.w1, &self.w2, &self.wy]
    }

    pub fn shapes(&self) -> [(usize, usize); 4] {
        self.params().map(Tensor::shape)
    }

    pub fn num_nodes(&self) -> usize {
        self.m.rows()
    }

    pub fn num_groups(&self) -> usize {
        self.wy.cols()
    }
}

/// `(relu(M) + relu(M)ᵀ) / 2`.
pub fn realize_adjacency(tape: &mut Tape, m: Var) -> Result<Var> {
    let r = tape.relu(m);
    let rt = tape.transpose(r);
    let s = tape.add(r, rt)?;
    Ok(tape.scale(s, 0.5))
}

/// Two-layer GCN on `a_prime`: `Ã relu(Ã X W1) W2`.
pub fn encode(tape: &mut Tape, a_prime: Var, x: Var, w1: Var, w2: Var) -> Result<Var> {
    let norm = degree_normalize_on_tape(tape, a_prime)?;
    let xw = tape.matmul(x, w1)?;
    let agg = tape.matmul(norm, xw)?;
    let hidden = tape.relu(agg);
    let hw = tape.matmul(hidden, w2)?;
    tape.matmul(norm, hw)
}

/// `sigmoid(H Hᵀ)`.
pub fn reconstruct(tape: &mut Tape, h: Var) -> Result<Var> {
    let ht = tape.transpose(h);
    let logits = tape.matmul(h, ht)?;
    Ok(tape.sigmoid(logits))
}

/// Squared Frobenius distance between the reconstruction and the observed adjacency.
pub fn loss_supported(tape: &mut Tape, h: Var, observed: Var) -> Result<Var> {
    let a_hat = reconstruct(tape, h)?;
    let diff = tape.sub(a_hat, observed)?;
    let sq = tape.square(diff);
    Ok(tape.sum_all(sq))
}

/// Row-softmax of `H W_Y`.
pub fn partition_head(tape: &mut Tape, h: Var, wy: Var) -> Result<Var> {
    let logits = tape.matmul(h, wy)?;
    Ok(tape.row_softmax(logits))
}

/// One forward pass recorded on a fresh tape.
pub struct Forward {
    pub tape: Tape,
    /// Leaves for M, W1, W2, W_Y in that order.
    pub params: [Var; 4],
    pub a_prime: Var,
    pub h: Var,
    pub y: Var,
    pub ln: InnocuousLoss,
    pub ls: Var,
    pub total: Var,
}

/// Scalar parts of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub total: f64,
    pub ln: f64,
    pub ls: f64,
    pub npsi: f64,
    pub dbi: f64,
}

impl Forward {
    pub fn loss_parts(&self) -> LossParts {
        let v = |var: Var| self.tape.value(var).get(0, 0);
        LossParts {
            total: v(self.total),
            ln: v(self.ln.total),
            ls: v(self.ls),
            npsi: v(self.ln.npsi),
            dbi: v(self.ln.dbi),
        }
    }
}

/// `L = L_N + alpha * L_S`, where `L_S` targets the observed adjacency.
pub fn loss_total(
    model: &UserModel,
    features: &Tensor,
    observed: &Tensor,
    cfg: &TrainConfig,
) -> Result<Forward> {
    let n = model.num_nodes();
    if observed.shape() != (n, n) || features.rows() != n {
        return Err(Error::Shape {
            op: "loss_total",
            left: (n, n),
            right: observed.shape(),
        });
    }
    let mut tape = Tape::new();
    let params = model.params().map(|p| tape.leaf(p.clone()));
    let [m, w1, w2, wy] = params;
    let x = tape.leaf(features.clone());
    let a_obs = tape.leaf(observed.clone());

    let a_prime = realize_adjacency(&mut tape, m)?;
    let h = encode(&mut tape, a_prime, x, w1, w2)?;
    let y = partition_head(&mut tape, h, wy)?;
    let ln = loss_ln(&mut tape, a_prime, y, x, cfg.beta, cfg.convention)?;
    let ls = loss_supported(&mut tape, h, a_obs)?;
    let weighted = tape.scale(ls, cfg.alpha);
    let total = tape.add(ln.total, weighted)?;
    Ok(Forward {
        tape,
        params,
        a_prime,
        h,
        y,
        ln,
        ls,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn leaf_value(t: &Tensor, f: impl FnOnce(&mut Tape, Var) -> Result<Var>) -> Tensor {
        let mut tape = Tape::new();
        let v = tape.leaf(t.clone());
        let out = f(&mut tape, v).unwrap();
        tape.value(out).clone()
    }

    fn tiny_dataset() -> Dataset {
        let (g, _) = Graph::from_edges(4, &[(0, 1), (2, 3), (1, 2)]).unwrap();
        let x = Tensor::from_rows(&[[1.0, 0.0], [0.9, 0.1], [0.0, 1.0], [0.2, 0.8]]);
        Dataset::new(g, x, Some(vec![0, 0, 1, 1])).unwrap()
    }

    #[test]
    fn realize_examples() {
        let m = Tensor::from_rows(&[[0.0, -5.0], [3.0, 0.0]]);
        let a = leaf_value(&m, realize_adjacency);
        assert_eq!(a, Tensor::from_rows(&[[0.0, 1.5], [1.5, 0.0]]));
        let sym = Tensor::from_rows(&[[0.2, 1.0], [1.0, 0.0]]);
        assert_eq!(leaf_value(&sym, realize_adjacency), sym);
    }

    #[test]
    fn init_seed_values() {
        let ds = tiny_dataset();
        let cfg = TrainConfig {
            seed: 5,
            ..TrainConfig::default()
        };
        let model = UserModel::init(&ds, &cfg).unwrap();
        let a = leaf_value(&model.m, realize_adjacency);
        assert!(a.is_symmetric());
        assert!((a.get(0, 1) - 1.01).abs() < 1e-15);
        assert!((a.get(0, 2) - 0.01).abs() < 1e-15);
        assert!((a.get(3, 3) - 0.01).abs() < 1e-15);
        assert_eq!(model, UserModel::init(&ds, &cfg).unwrap());
        assert_eq!(model.shapes(), [(4, 4), (2, 32), (32, 16), (16, 2)]);
    }

    #[test]
    fn init_rejects_edgeless_and_unknown_classes() {
        let ds = Dataset::new(Graph::empty(3), Tensor::zeros(3, 2), Some(vec![0, 1, 1])).unwrap();
        assert!(UserModel::init(&ds, &TrainConfig::default()).is_err());
        let (g, _) = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let ds = Dataset::new(g, Tensor::zeros(2, 2), None).unwrap();
        assert!(matches!(
            UserModel::init(&ds, &TrainConfig::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn zero_weights_give_zero_embeddings() {
        let ds = tiny_dataset();
        let mut tape = Tape::new();
        let a = tape.leaf(ds.graph.to_tensor());
        let x = tape.leaf(ds.features.clone());
        let w1 = tape.leaf(Tensor::zeros(2, 3));
        let w2 = tape.leaf(Tensor::zeros(3, 2));
        let h = encode(&mut tape, a, x, w1, w2).unwrap();
        assert_eq!(tape.value(h), &Tensor::zeros(4, 2));
    }

    #[test]
    fn zero_adjacency_is_an_mlp() {
        let ds = tiny_dataset();
        let w1v = Tensor::from_rows(&[[0.5, -1.0, 0.3], [0.2, 0.4, -0.7]]);
        let w2v = Tensor::from_rows(&[[1.0, 0.0], [0.5, -0.5], [0.0, 2.0]]);
        let mut tape = Tape::new();
        let a = tape.leaf(Tensor::zeros(4, 4));
        let x = tape.leaf(ds.features.clone());
        let w1 = tape.leaf(w1v.clone());
        let w2 = tape.leaf(w2v.clone());
        let h = encode(&mut tape, a, x, w1, w2).unwrap();
        let expected = ds
            .features
            .matmul(&w1v)
            .unwrap()
            .map(|v| v.max(0.0))
            .matmul(&w2v)
            .unwrap();
        assert!(tape.value(h).max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn reconstruction_loss_at_zero_embedding() {
        let (g, _) = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let mut tape = Tape::new();
        let h = tape.leaf(Tensor::zeros(3, 2));
        let a = tape.leaf(g.to_tensor());
        let ls = loss_supported(&mut tape, h, a).unwrap();
        assert!((tape.value(ls).item().unwrap() - 2.25).abs() < 1e-15);
    }

    #[test]
    fn head_examples() {
        let mut tape = Tape::new();
        let h = tape.leaf(Tensor::from_rows(&[[1.0, -2.0], [0.5, 3.0]]));
        let wy = tape.leaf(Tensor::zeros(2, 3));
        let y = partition_head(&mut tape, h, wy).unwrap();
        assert!(tape.value(y).max_abs_diff(&Tensor::filled(2, 3, 1.0 / 3.0)) < 1e-15);
    }

    #[test]
    fn alpha_zero_total_equals_ln() {
        let ds = tiny_dataset();
        let cfg = TrainConfig {
            alpha: 0.0,
            ..TrainConfig::default()
        };
        let model = UserModel::init(&ds, &cfg).unwrap();
        let f = loss_total(&model, &ds.features, &ds.graph.to_tensor(), &cfg).unwrap();
        let parts = f.loss_parts();
        assert_eq!(parts.total, parts.ln);
    }

    #[test]
    fn config_validation() {
        let bad = [
            TrainConfig {
                alpha: -1.0,
                ..TrainConfig::default()
            },
            TrainConfig {
                epochs: 0,
                ..TrainConfig::default()
            },
            TrainConfig {
                lr: 0.0,
                ..TrainConfig::default()
            },
            TrainConfig {
                hidden: 0,
                ..TrainConfig::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err());
        }
    }
}
