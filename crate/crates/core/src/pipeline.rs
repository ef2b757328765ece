//! End-to-end runs shared by the CLI and the C bindings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{flip_noise, flip_noise_excluding, remove_isolated, Dataset, IndexMap};
use crate::metrics::{
    auc, average_precision, clustering_accuracy, kmeans, link_split, nmi, score_links,
    MetricsReport,
};
use crate::model::{train, TrainConfig, TrainOutcome};

/// Restarts and iterations used for k-means on the embeddings.
pub const KMEANS_RESTARTS: usize = 10;
pub const KMEANS_ITERS: usize = 300;

/// Load-time preprocessing: optional flip noise, then isolated-node removal.
pub fn preprocess(ds: &Dataset, noise_ratio: f64, noise_seed: u64) -> Result<(Dataset, IndexMap)> {
    let noisy = if noise_ratio > 0.0 {
        ds.with_graph(flip_noise(&ds.graph, noise_ratio, noise_seed)?)?
    } else if noise_ratio == 0.0 {
        ds.clone()
    } else {
        return Err(Error::Config(format!(
            "noise ratio must be >= 0, got {noise_ratio}"
        )));
    };
    remove_isolated(&noisy)
}

/// Trains and fills the clustering half of the report. Clustering metrics
/// are `None` when the dataset carries no labels.
pub fn train_and_report(ds: &Dataset, cfg: &TrainConfig) -> Result<(TrainOutcome, MetricsReport)> {
    let outcome = train(ds, cfg)?;
    let mut report = MetricsReport {
        rank_a_prime: Some(outcome.rank_a_prime()),
        loss_final: Some(outcome.final_loss.total),
        ..MetricsReport::default()
    };
    if let Some(truth) = &ds.labels {
        let c = cfg.resolve_classes(ds)?;
        let km = kmeans(
            &outcome.embeddings,
            c,
            KMEANS_RESTARTS,
            KMEANS_ITERS,
            cfg.seed,
        )?;
        report.nmi_argmax_y = Some(nmi(&outcome.partition, truth)?);
        report.acc_argmax_y = Some(clustering_accuracy(&outcome.partition, truth)?);
        report.nmi_kmeans = Some(nmi(&km.labels, truth)?);
        report.acc_kmeans = Some(clustering_accuracy(&km.labels, truth)?);
    }
    Ok((outcome, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkPredConfig {
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub split_seed: u64,
    pub noise_ratio: f64,
    pub noise_seed: u64,
}

impl Default for LinkPredConfig {
    fn default() -> Self {
        Self {
            val_fraction: 0.05,
            test_fraction: 0.10,
            split_seed: 0,
            noise_ratio: 0.0,
            noise_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkPredResult {
    pub auc: f64,
    pub ap: f64,
    pub val_auc: Option<f64>,
    pub val_ap: Option<f64>,
    pub test_pairs: usize,
    pub report: MetricsReport,
}

fn score_split(
    h: &crate::ndmath::Tensor,
    pos: &[(usize, usize)],
    neg: &[(usize, usize)],
) -> Result<(f64, f64)> {
    let mut scores = score_links(h, pos)?;
    scores.extend(score_links(h, neg)?);
    let labels: Vec<bool> = (0..pos.len() + neg.len()).map(|i| i < pos.len()).collect();
    Ok((auc(&scores, &labels)?, average_precision(&scores, &labels)?))
}

/// Hides edges from the clean graph, perturbs what is left (never touching
/// held-out pairs), trains on it and scores the test pairs with `sigmoid(h_i · h_j)`.
/// Isolated nodes are kept so that held-out pairs keep their indices.
pub fn eval_linkpred(
    ds: &Dataset,
    lp: &LinkPredConfig,
    cfg: &TrainConfig,
) -> Result<LinkPredResult> {
    if lp.test_fraction <= 0.0 {
        return Err(Error::Config("test fraction must be > 0".into()));
    }
    let split = link_split(&ds.graph, lp.val_fraction, lp.test_fraction, lp.split_seed)?;
    let train_graph = flip_noise_excluding(
        &split.train,
        lp.noise_ratio,
        lp.noise_seed,
        &split.held_out_pairs(),
    )?;
    let train_ds = ds.with_graph(train_graph)?;
    let (outcome, mut report) = train_and_report(&train_ds, cfg)?;

    let (test_auc, test_ap) = score_split(&outcome.embeddings, &split.test_pos, &split.test_neg)?;
    let (val_auc, val_ap) = if split.val_pos.is_empty() {
        (None, None)
    } else {
        let (a, p) = score_split(&outcome.embeddings, &split.val_pos, &split.val_neg)?;
        (Some(a), Some(p))
    };
    report.auc = Some(test_auc);
    report.ap = Some(test_ap);
    Ok(LinkPredResult {
        auc: test_auc,
        ap: test_ap,
        val_auc,
        val_ap,
        test_pairs: split.test_pos.len() + split.test_neg.len(),
        report,
    })
}
