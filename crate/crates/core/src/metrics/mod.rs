//! Clustering and link-prediction evaluation.

mod assignment;
mod cluster;
mod kmeans;
mod link;

pub use assignment::min_cost_assignment;
pub use cluster::{clustering_accuracy, contingency, nmi, nmi_with, ClusterEval, NmiNormalization};
pub use kmeans::{kmeans, KMeansResult};
pub use link::{auc, average_precision, link_split, score_links, LinkSplit};

use serde::{Deserialize, Serialize};

/// Flat result record written as `report.json`. Metrics that were not
/// computed serialize as `null`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(rename = "nmi_argmaxY")]
    pub nmi_argmax_y: Option<f64>,
    pub nmi_kmeans: Option<f64>,
    #[serde(rename = "acc_argmaxY")]
    pub acc_argmax_y: Option<f64>,
    pub acc_kmeans: Option<f64>,
    pub auc: Option<f64>,
    pub ap: Option<f64>,
    #[serde(rename = "rank_Aprime")]
    pub rank_a_prime: Option<usize>,
    pub loss_final: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_keys_and_nulls() {
        let r = MetricsReport {
            auc: Some(0.5),
            ..Default::default()
        };
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        let obj = v.as_object().unwrap();
        let mut keys: Vec<_> = obj.keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "acc_argmaxY",
                "acc_kmeans",
                "ap",
                "auc",
                "loss_final",
                "nmi_argmaxY",
                "nmi_kmeans",
                "rank_Aprime"
            ]
        );
        assert!(obj["nmi_kmeans"].is_null());
        assert_eq!(obj["auc"], 0.5);
    }
}
