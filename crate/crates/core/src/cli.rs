//! The `usergnn` command-line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, LevelFilter};
use serde::Serialize;

use crate::entropy::{dbi_hard, npsi_node, HardPartition, NpsiConvention};
use crate::error::{Error, Result};
use crate::graph::{
    flip_noise, load_dataset, read_dense_csv, read_labels, save_dataset, sbm_generate,
    write_dense_csv, Dataset, SbmConfig,
};
use crate::model::{save_checkpoint, TrainConfig, TrainHistory};
use crate::ndmath::Tensor;
use crate::pipeline::{eval_linkpred, preprocess, train_and_report, LinkPredConfig};

#[derive(Debug, Parser)]
#[command(
    name = "usergnn",
    version,
    about = "Robust unsupervised graph embeddings via structural entropy"
)]
pub struct Cli {
    /// Log progress to stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a stochastic block model dataset.
    GenSbm {
        #[command(flatten)]
        sbm: SbmArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Flip a fraction of node pairs in a dataset's edge list.
    Perturb {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        ratio: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print NPSI and hard Davies-Bouldin index of a partition as JSON.
    Entropy {
        #[arg(long = "in")]
        input: PathBuf,
        /// Ground-truth style label file (one id per line).
        #[arg(long, conflicts_with = "partition_file")]
        labels: Option<PathBuf>,
        /// Any partition file in the same format, e.g. a trained `partition.csv`.
        #[arg(long)]
        partition_file: Option<PathBuf>,
    },
    /// Train and export checkpoint, embeddings, A', history and report.
    Train {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Hold out edges, train on the rest and report test AUC/AP as JSON.
    EvalLinkpred {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
        #[arg(long = "val", default_value_t = 0.05)]
        val_fraction: f64,
        #[arg(long = "test", default_value_t = 0.10)]
        test_fraction: f64,
        /// Also write the JSON to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a square matrix as a binary PGM, ordered by label.
    Heatmap {
        /// Dense square matrix CSV (no header).
        #[arg(
            long = "in",
            conflicts_with = "dataset",
            required_unless_present = "dataset"
        )]
        input: Option<PathBuf>,
        /// Dataset directory; its adjacency is rendered.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Label file giving the row/column order. Defaults to the dataset's labels.
        #[arg(long)]
        order: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SbmArgs {
    /// Comma-separated block sizes.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub blocks: Vec<usize>,
    #[arg(long)]
    pub p_in: f64,
    #[arg(long)]
    pub p_out: f64,
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub feature_noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SbmArgs {
    fn config(&self) -> SbmConfig {
        SbmConfig {
            blocks: self.blocks.clone(),
            p_in: self.p_in,
            p_out: self.p_out,
            dim: self.dim,
            feature_noise: self.feature_noise,
            seed: self.seed,
        }
    }
}

/// Either a dataset directory or inline SBM parameters.
#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    #[arg(
        long = "in",
        conflicts_with = "blocks",
        required_unless_present = "blocks"
    )]
    pub input: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', num_args = 1.., requires_all = ["p_in", "p_out", "dim"])]
    pub blocks: Option<Vec<usize>>,
    #[arg(long)]
    pub p_in: Option<f64>,
    #[arg(long)]
    pub p_out: Option<f64>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub feature_noise: f64,
    #[arg(long, default_value_t = 0)]
    pub sbm_seed: u64,
}

impl SourceArgs {
    fn load(&self) -> Result<Dataset> {
        match (&self.input, &self.blocks) {
            (Some(dir), None) => Ok(load_dataset(dir)?.0),
            (None, Some(blocks)) => sbm_generate(&SbmConfig {
                blocks: blocks.clone(),
                p_in: self.p_in.unwrap_or_default(),
                p_out: self.p_out.unwrap_or_default(),
                dim: self.dim.unwrap_or_default(),
                feature_noise: self.feature_noise,
                seed: self.sbm_seed,
            }),
            _ => Err(Error::Config("give exactly one of --in or --blocks".into())),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct NoiseArgs {
    /// Fraction of |E| node pairs to flip before training.
    #[arg(long, default_value_t = 0.0)]
    pub noise_ratio: f64,
    #[arg(long, default_value_t = 0)]
    pub noise_seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ConventionArg {
    Reconciled,
    Literal,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 400)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub hidden: usize,
    #[arg(long, default_value_t = 16)]
    pub embedding: usize,
    /// Number of partition groups; defaults to the number of label classes.
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long = "train-seed", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ConventionArg::Reconciled)]
    pub convention: ConventionArg,
    #[arg(long, default_value_t = 50)]
    pub log_every: usize,
}

impl TrainArgs {
    pub fn config(&self) -> TrainConfig {
        TrainConfig {
            alpha: self.alpha,
            beta: self.beta,
            lr: self.lr,
            epochs: self.epochs,
            hidden: self.hidden,
            embedding: self.embedding,
            classes: self.classes,
            seed: self.seed,
            convention: match self.convention {
                ConventionArg::Reconciled => NpsiConvention::Reconciled,
                ConventionArg::Literal => NpsiConvention::Literal,
            },
            log_every: self.log_every,
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::GenSbm { sbm, out } => {
            let ds = sbm_generate(&sbm.config())?;
            save_dataset(&out, &ds)?;
            println!(
                "wrote {} nodes, {} edges, {} features to {}",
                ds.num_nodes(),
                ds.graph.edge_count(),
                ds.features.cols(),
                out.display()
            );
        }
        Command::Perturb {
            input,
            ratio,
            seed,
            out,
        } => {
            let (ds, _) = load_dataset(&input)?;
            let noisy = flip_noise(&ds.graph, ratio, seed)?;
            let added = noisy
                .edges()
                .filter(|&(u, v)| !ds.graph.has_edge(u, v))
                .count();
            let removed = ds
                .graph
                .edges()
                .filter(|&(u, v)| !noisy.has_edge(u, v))
                .count();
            save_dataset(&out, &ds.with_graph(noisy)?)?;
            println!(
                "flipped {} pairs: added {added}, removed {removed}",
                added + removed
            );
        }
        Command::Entropy {
            input,
            labels,
            partition_file,
        } => {
            let (ds, _) = load_dataset(&input)?;
            let assignment = match labels.or(partition_file) {
                Some(path) => read_labels(path)?,
                None => ds.labels.clone().ok_or_else(|| {
                    Error::Config(
                        "dataset has no labels.csv; pass --labels or --partition-file".into(),
                    )
                })?,
            };
            let p = HardPartition::new(assignment)?;
            let npsi = npsi_node(&ds.graph, &p)?;
            let dbi = if p.groups() >= 2 {
                Some(dbi_hard(&ds.features, &p)?)
            } else {
                None
            };
            print!(
                "{}",
                to_json(&serde_json::json!({ "npsi": npsi, "dbi": dbi, "groups": p.groups() }))
            );
        }
        Command::Train {
            source,
            noise,
            train,
            out,
        } => {
            let cfg = train.config();
            let raw = source.load()?;
            let (ds, index) = preprocess(&raw, noise.noise_ratio, noise.noise_seed)?;
            let dropped = index.iter().filter(|m| m.is_none()).count();
            if dropped > 0 {
                info!("removed {dropped} isolated nodes");
            }
            let (outcome, report) = train_and_report(&ds, &cfg)?;
            create_dir(&out)?;
            save_checkpoint(out.join("model.bin"), &outcome.model)?;
            write_dense_csv(out.join("embeddings.csv"), &outcome.embeddings)?;
            write_dense_csv(out.join("aprime.csv"), &outcome.a_prime)?;
            write_file(&out.join("history.csv"), history_csv(&outcome.history))?;
            let partition: String = outcome.partition.iter().map(|k| format!("{k}\n")).collect();
            write_file(&out.join("partition.csv"), partition)?;
            save_dataset(out.join("dataset"), &ds)?;
            let json = to_json(&report);
            write_file(&out.join("report.json"), &json)?;
            print!("{json}");
        }
        Command::EvalLinkpred {
            source,
            noise,
            train,
            split_seed,
            val_fraction,
            test_fraction,
            out,
        } => {
            let ds = source.load()?;
            let lp = LinkPredConfig {
                val_fraction,
                test_fraction,
                split_seed,
                noise_ratio: noise.noise_ratio,
                noise_seed: noise.noise_seed,
            };
            let result = eval_linkpred(&ds, &lp, &train.config())?;
            let json = to_json(&serde_json::json!({
                "auc": result.auc,
                "ap": result.ap,
                "val_auc": result.val_auc,
                "val_ap": result.val_ap,
                "test_pairs": result.test_pairs,
                "report": result.report,
            }));
            if let Some(path) = out {
                write_file(&path, &json)?;
            }
            print!("{json}");
        }
        Command::Heatmap {
            input,
            dataset,
            order,
            out,
        } => {
            let (matrix, ds_labels) = match (input, dataset) {
                (Some(path), _) => (read_dense_csv(path)?, None),
                (None, Some(dir)) => {
                    let (ds, _) = load_dataset(dir)?;
                    (ds.graph.to_tensor(), ds.labels)
                }
                (None, None) => unreachable!("clap requires one source"),
            };
            let labels = match order {
                Some(path) => Some(read_labels(path)?),
                None => ds_labels,
            };
            let map = Heatmap::render(&matrix, labels.as_deref())?;
            write_file(&out, map.to_pgm())?;
            match map.block_means() {
                Some((within, between)) => {
                    println!("within_block_mean={within:.4} between_block_mean={between:.4}")
                }
                None => println!("wrote {}x{} heatmap", map.size, map.size),
            }
        }
    }
    Ok(())
}

pub fn history_csv(history: &TrainHistory) -> String {
    let mut s = String::from("epoch,total,ln,ls,npsi,dbi,rank_Aprime\n");
    for r in history {
        let l = &r.loss;
        let rank = r.rank_a_prime.map(|k| k.to_string()).unwrap_or_default();
        writeln!(
            s,
            "{},{},{},{},{},{},{rank}",
            r.epoch, l.total, l.ln, l.ls, l.npsi, l.dbi
        )
        .unwrap();
    }
    s
}

/// An 8-bit image of a square matrix, rows and columns sorted by label.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub size: usize,
    pub pixels: Vec<u8>,
    /// Labels in display order, if any were given.
    pub labels: Option<Vec<usize>>,
}

impl Heatmap {
    /// Stable-sorts indices by label (identity order without labels) and
    /// min-max scales values to 0..=255. A constant matrix renders black.
    pub fn render(matrix: &Tensor, labels: Option<&[usize]>) -> Result<Self> {
        let n = matrix.rows();
        if matrix.cols() != n {
            return Err(Error::Shape {
                op: "heatmap",
                left: matrix.shape(),
                right: (n, n),
            });
        }
        if let Some(l) = labels {
            if l.len() != n {
                return Err(Error::Contract(format!(
                    "{} labels for a {n}x{n} matrix",
                    l.len()
                )));
            }
        }
        if !matrix.is_finite() {
            return Err(Error::Domain("heatmap input has non-finite entries".into()));
        }
        let mut order: Vec<usize> = (0..n).collect();
        if let Some(l) = labels {
            order.sort_by_key(|&i| l[i]);
        }
        let (lo, hi) = matrix
            .data()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        let span = hi - lo;
        let mut pixels = Vec::with_capacity(n * n);
        for &i in &order {
            for &j in &order {
                let v = if span > 0.0 {
                    (matrix.get(i, j) - lo) / span
                } else {
                    0.0
                };
                pixels.push((v * 255.0).round() as u8);
            }
        }
        Ok(Heatmap {
            size: n,
            pixels,
            labels: labels.map(|l| order.iter().map(|&i| l[i]).collect()),
        })
    }

    pub fn to_pgm(&self) -> Vec<u8> {
        let mut bytes = format!("P5\n{} {}\n255\n", self.size, self.size).into_bytes();
        bytes.extend_from_slice(&self.pixels);
        bytes
    }

    /// Mean pixel intensity over off-diagonal same-label and different-label
    /// cells. `None` without labels or when either set is empty.
    pub fn block_means(&self) -> Option<(f64, f64)> {
        let labels = self.labels.as_ref()?;
        let (mut within, mut nw, mut between, mut nb) = (0.0, 0usize, 0.0, 0usize);
        for i in 0..self.size {
            for j in 0..self.size {
                if i == j {
                    continue;
                }
                let p = self.pixels[i * self.size + j] as f64;
                if labels[i] == labels[j] {
                    within += p;
                    nw += 1;
                } else {
                    between += p;
                    nb += 1;
                }
            }
        }
        (nw > 0 && nb > 0).then(|| (within / nw as f64, between / nb as f64))
    }
}
