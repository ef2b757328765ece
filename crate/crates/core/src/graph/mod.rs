//! Graphs, datasets, and the structural operations applied to them.

mod io;
mod noise;
mod normalize;
mod rank;
mod sbm;

pub use io::{
    load_dataset, read_dense_csv, read_labels, save_dataset, write_dense_csv, write_edges,
    LoadReport,
};
pub use noise::{flip_noise, flip_noise_excluding, flip_pairs};
pub use normalize::{degree_normalize, degree_normalize_on_tape};
pub use rank::{numerical_rank, singular_values};
pub use sbm::{sbm_generate, SbmConfig};

use crate::error::{Error, Result};
use crate::ndmath::Tensor;

/// Undirected, unweighted graph without self-loops, stored densely.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<u8>,
}

impl std::fmt::Debug for Graph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Graph(n={}, edges={:?})",
            self.n,
            self.edges().collect::<Vec<_>>()
        )
    }
}

/// Result of building a graph from a raw edge list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EdgeListStats {
    pub duplicates: usize,
    pub self_loops: usize,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            adj: vec![0; n * n],
        }
    }

    /// Builds a graph from (u, v) pairs. Duplicates (in either orientation) and
    /// self-loops are dropped and counted.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<(Self, EdgeListStats)> {
        let mut g = Self::empty(n);
        let mut stats = EdgeListStats::default();
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Contract(format!(
                    "edge ({u},{v}) out of range for n={n}"
                )));
            }
            if u == v {
                stats.self_loops += 1;
            } else if g.has_edge(u, v) {
                stats.duplicates += 1;
            } else {
                g.set_edge(u, v, true);
            }
        }
        Ok((g, stats))
    }

    /// Validates a dense 0/1 symmetric matrix with zero diagonal.
    pub fn from_adjacency(a: &Tensor) -> Result<Self> {
        let (r, c) = a.shape();
        if r != c {
            return Err(Error::Shape {
                op: "graph adjacency",
                left: (r, c),
                right: (c, r),
            });
        }
        let mut g = Self::empty(r);
        for i in 0..r {
            if a.get(i, i) != 0.0 {
                return Err(Error::Contract(format!("self-loop at node {i}")));
            }
            for j in 0..r {
                let x = a.get(i, j);
                if x != 0.0 && x != 1.0 {
                    return Err(Error::Contract(format!("entry ({i},{j}) = {x} is not 0/1")));
                }
                if x != a.get(j, i) {
                    return Err(Error::Contract(format!("asymmetric entry ({i},{j})")));
                }
                if x == 1.0 {
                    g.adj[i * r + j] = 1;
                }
            }
        }
        Ok(g)
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u * self.n + v] != 0
    }

    /// Sets the undirected edge state. Panics on `u == v`.
    pub fn set_edge(&mut self, u: usize, v: usize, present: bool) {
        assert_ne!(u, v, "self-loops are not representable");
        let x = u8::from(present);
        self.adj[u * self.n + v] = x;
        self.adj[v * self.n + u] = x;
    }

    pub fn toggle(&mut self, u: usize, v: usize) {
        let state = self.has_edge(u, v);
        self.set_edge(u, v, !state);
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u * self.n..(u + 1) * self.n]
            .iter()
            .map(|&x| x as usize)
            .sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|u| self.degree(u)).collect()
    }

    /// Undirected edge count |E|.
    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|&x| x as usize).sum::<usize>() / 2
    }

    /// Edges as (u, v) with u < v, in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| {
            (u + 1..self.n)
                .filter(move |&v| self.has_edge(u, v))
                .map(move |v| (u, v))
        })
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::from_fn(self.n, self.n, |i, j| f64::from(self.adj[i * self.n + j]))
    }

    /// Number of pair states that differ between two graphs on the same nodes.
    pub fn pair_difference(&self, other: &Graph) -> usize {
        assert_eq!(self.n, other.n);
        self.adj
            .iter()
            .zip(&other.adj)
            .filter(|(a, b)| a != b)
            .count()
            / 2
    }

    /// Subgraph induced by `keep` (in the given order).
    pub fn induced(&self, keep: &[usize]) -> Graph {
        let mut g = Graph::empty(keep.len());
        for (a, &u) in keep.iter().enumerate() {
            for (b, &v) in keep.iter().enumerate().skip(a + 1) {
                if self.has_edge(u, v) {
                    g.set_edge(a, b, true);
                }
            }
        }
        g
    }
}

/// Graph, node features and optional ground-truth classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: Graph,
    pub features: Tensor,
    pub labels: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(graph: Graph, features: Tensor, labels: Option<Vec<usize>>) -> Result<Self> {
        if features.rows() != graph.num_nodes() {
            return Err(Error::Contract(format!(
                "{} feature rows for {} nodes",
                features.rows(),
                graph.num_nodes()
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != graph.num_nodes() {
                return Err(Error::Contract(format!(
                    "{} labels for {} nodes",
                    labels.len(),
                    graph.num_nodes()
                )));
            }
            class_count(labels)?;
        }
        Ok(Self {
            graph,
            features,
            labels,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn num_classes(&self) -> Option<usize> {
        self.labels
            .as_deref()
            .map(|l| l.iter().max().map_or(0, |m| m + 1))
    }

    pub fn with_graph(&self, graph: Graph) -> Result<Self> {
        Dataset::new(graph, self.features.clone(), self.labels.clone())
    }
}

/// Number of classes c for labels in [0, c), requiring every class to be used.
pub fn class_count(labels: &[usize]) -> Result<usize> {
    let Some(&max) = labels.iter().max() else {
        return Ok(0);
    };
    let mut seen = vec![false; max + 1];
    for &l in labels {
        seen[l] = true;
    }
    if let Some(k) = seen.iter().position(|s| !s) {
        return Err(Error::Contract(format!("class {k} has no members")));
    }
    Ok(max + 1)
}

/// Old-to-new index map produced by [`remove_isolated`].
pub type IndexMap = Vec<Option<usize>>;

/// Drops degree-zero nodes and reindexes features, labels and adjacency.
pub fn remove_isolated(ds: &Dataset) -> Result<(Dataset, IndexMap)> {
    let keep: Vec<usize> = (0..ds.num_nodes())
        .filter(|&u| ds.graph.degree(u) > 0)
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyDataset("every node is isolated".into()));
    }
    let mut map = vec![None; ds.num_nodes()];
    for (new, &old) in keep.iter().enumerate() {
        map[old] = Some(new);
    }
    let graph = ds.graph.induced(&keep);
    let d = ds.features.cols();
    let features = Tensor::from_fn(keep.len(), d, |i, j| ds.features.get(keep[i], j));
    // Removing nodes can empty a class; compact the ids so they stay dense.
    let labels = ds.labels.as_ref().map(|l| {
        let kept: Vec<usize> = keep.iter().map(|&u| l[u]).collect();
        compact_labels(&kept)
    });
    Ok((Dataset::new(graph, features, labels)?, map))
}

/// Relabels arbitrary ids to 0..c in order of first appearance of each sorted id.
pub fn compact_labels(labels: &[usize]) -> Vec<usize> {
    let mut ids: Vec<usize> = labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    labels
        .iter()
        .map(|l| ids.binary_search(l).expect("present"))
        .collect()
}

/// Same-class indicator matrix, self-loops included: a block-of-ones matrix.
pub fn intrinsic_graph(labels: &[usize]) -> Result<Tensor> {
    class_count(labels)?;
    let n = labels.len();
    Ok(Tensor::from_fn(n, n, |i, j| {
        f64::from(u8::from(labels[i] == labels[j]))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge() {
        let (g, _) = Graph::from_edges(2, &[(0, 1)]).unwrap();
        assert_eq!(g.to_tensor(), Tensor::from_rows(&[[0.0, 1.0], [1.0, 0.0]]));
    }

    #[test]
    fn duplicates_and_loops_dropped() {
        let (g, stats) = Graph::from_edges(3, &[(0, 1), (1, 0), (2, 2)]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(
            stats,
            EdgeListStats {
                duplicates: 1,
                self_loops: 1
            }
        );
    }

    #[test]
    fn from_edges_rejects_out_of_range() {
        assert!(Graph::from_edges(2, &[(0, 2)]).is_err());
    }

    #[test]
    fn from_adjacency_validates() {
        assert!(Graph::from_adjacency(&Tensor::from_rows(&[[0.0, 1.0], [0.0, 0.0]])).is_err());
        assert!(Graph::from_adjacency(&Tensor::from_rows(&[[1.0, 0.0], [0.0, 0.0]])).is_err());
        assert!(Graph::from_adjacency(&Tensor::from_rows(&[[0.0, 0.5], [0.5, 0.0]])).is_err());
        let g = Graph::from_adjacency(&Tensor::from_rows(&[[0.0, 1.0], [1.0, 0.0]])).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn intrinsic_examples() {
        let a = intrinsic_graph(&[0, 0, 1]).unwrap();
        assert_eq!(
            a,
            Tensor::from_rows(&[[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        );
        let ones = intrinsic_graph(&[0; 4]).unwrap();
        assert_eq!(ones, Tensor::ones(4, 4));
        assert_eq!(numerical_rank(&ones, 1e-6), 1);
        let labels = [0, 0, 1, 1, 1, 2, 2, 2, 2];
        assert_eq!(numerical_rank(&intrinsic_graph(&labels).unwrap(), 1e-6), 3);
        assert!(intrinsic_graph(&[0, 2]).is_err());
    }

    #[test]
    fn remove_isolated_identity_when_connected() {
        let (g, _) = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let ds = Dataset::new(g, Tensor::zeros(3, 1), None).unwrap();
        let (out, map) = remove_isolated(&ds).unwrap();
        assert_eq!(out, ds);
        assert_eq!(map, vec![Some(0), Some(1), Some(2)]);
    }

    #[test]
    fn remove_isolated_drops_node() {
        let (g, _) = Graph::from_edges(3, &[(0, 1)]).unwrap();
        let features = Tensor::from_rows(&[[1.0], [2.0], [3.0]]);
        let ds = Dataset::new(g, features, Some(vec![0, 1, 1])).unwrap();
        let (out, map) = remove_isolated(&ds).unwrap();
        assert_eq!(out.num_nodes(), 2);
        assert_eq!(map, vec![Some(0), Some(1), None]);
        assert_eq!(out.features, Tensor::from_rows(&[[1.0], [2.0]]));
        assert_eq!(out.labels, Some(vec![0, 1]));
    }

    #[test]
    fn remove_isolated_compacts_labels() {
        let (g, _) = Graph::from_edges(3, &[(0, 2)]).unwrap();
        let ds = Dataset::new(g, Tensor::zeros(3, 1), Some(vec![0, 1, 2])).unwrap();
        let (out, _) = remove_isolated(&ds).unwrap();
        assert_eq!(out.labels, Some(vec![0, 1]));
    }

    #[test]
    fn remove_isolated_all_isolated() {
        let ds = Dataset::new(Graph::empty(3), Tensor::zeros(3, 1), None).unwrap();
        assert!(matches!(remove_isolated(&ds), Err(Error::EmptyDataset(_))));
    }

    #[test]
    fn dataset_validation() {
        let g = Graph::empty(2);
        assert!(Dataset::new(g.clone(), Tensor::zeros(3, 1), None).is_err());
        assert!(Dataset::new(g.clone(), Tensor::zeros(2, 1), Some(vec![0])).is_err());
        assert!(Dataset::new(g, Tensor::zeros(2, 1), Some(vec![0, 2])).is_err());
    }
}
