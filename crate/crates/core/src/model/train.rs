use log::info;
use serde::{Deserialize, Serialize};

use super::{loss_total, LossParts, TrainConfig, UserModel};
use crate::entropy::argmax_rows;
use crate::error::{Error, Result};
use crate::graph::{numerical_rank, Dataset};
use crate::ndmath::{AdamState, Tensor};

/// Relative tolerance used for the logged rank of `A'`.
pub const RANK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    #[serde(flatten)]
    pub loss: LossParts,
    pub rank_a_prime: Option<usize>,
}

pub type TrainHistory = Vec<EpochRecord>;

/// Snapshot handed to observers once per epoch, before the update.
pub struct EpochState<'a> {
    pub epoch: usize,
    pub a_prime: &'a Tensor,
    pub y: &'a Tensor,
    pub record: &'a EpochRecord,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: UserModel,
    pub history: TrainHistory,
    /// Values after the last update.
    pub final_loss: LossParts,
    pub embeddings: Tensor,
    pub a_prime: Tensor,
    pub y: Tensor,
    /// Row-wise argmax of `y`.
    pub partition: Vec<usize>,
}

impl TrainOutcome {
    pub fn initial_loss(&self) -> f64 {
        self.history[0].loss.total
    }

    pub fn rank_a_prime(&self) -> usize {
        numerical_rank(&self.a_prime, RANK_TOL)
    }
}

pub fn train(ds: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with_observer(ds, cfg, |_| {})
}

/// Full-batch Adam on `{M, W1, W2, W_Y}`.
pub fn train_with_observer(
    ds: &Dataset,
    cfg: &TrainConfig,
    mut observe: impl FnMut(&EpochState<'_>),
) -> Result<TrainOutcome> {
    let mut model = UserModel::init(ds, cfg)?;
    let observed = ds.graph.to_tensor();
    let mut adam = AdamState::new(cfg.lr, &model.shapes());
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let fwd = loss_total(&model, &ds.features, &observed, cfg)?;
        let loss = fwd.loss_parts();
        if !loss.total.is_finite() {
            return Err(Error::Diverged {
                epoch,
                reason: format!("loss is {}", loss.total),
            });
        }
        let log_rank = cfg.log_every > 0 && (epoch % cfg.log_every == 0 || epoch + 1 == cfg.epochs);
        let record = EpochRecord {
            epoch,
            loss,
            rank_a_prime: log_rank.then(|| numerical_rank(fwd.tape.value(fwd.a_prime), RANK_TOL)),
        };
        if let Some(rank) = record.rank_a_prime {
            info!(
                "epoch {epoch}: loss {:.6} (npsi {:.6}, dbi {:.6}, ls {:.6}), rank(A') {rank}",
                loss.total, loss.npsi, loss.dbi, loss.ls
            );
        }
        observe(&EpochState {
            epoch,
            a_prime: fwd.tape.value(fwd.a_prime),
            y: fwd.tape.value(fwd.y),
            record: &record,
        });
        history.push(record);

        let grads = fwd.tape.backward(fwd.total)?;
        let g: Vec<Tensor> = fwd
            .params
            .iter()
            .map(|&p| grads.get_or_zeros(p, fwd.tape.shape(p)))
            .collect();
        if g.iter().any(|t| !t.is_finite()) {
            return Err(Error::Diverged {
                epoch,
                reason: "non-finite gradient".into(),
            });
        }
        let mut params = [
            std::mem::replace(&mut model.m, Tensor::zeros(0, 0)),
            std::mem::replace(&mut model.w1, Tensor::zeros(0, 0)),
            std::mem::replace(&mut model.w2, Tensor::zeros(0, 0)),
            std::mem::replace(&mut model.wy, Tensor::zeros(0, 0)),
        ];
        adam.step(&mut params, &g)?;
        let [m, w1, w2, wy] = params;
        model = UserModel { m, w1, w2, wy };
    }

    let fwd = loss_total(&model, &ds.features, &observed, cfg)?;
    let final_loss = fwd.loss_parts();
    if !final_loss.total.is_finite() {
        return Err(Error::Diverged {
            epoch: cfg.epochs,
            reason: format!("loss is {}", final_loss.total),
        });
    }
    let y = fwd.tape.value(fwd.y).clone();
    Ok(TrainOutcome {
        partition: argmax_rows(&y),
        embeddings: fwd.tape.value(fwd.h).clone(),
        a_prime: fwd.tape.value(fwd.a_prime).clone(),
        y,
        final_loss,
        history,
        model,
    })
}
