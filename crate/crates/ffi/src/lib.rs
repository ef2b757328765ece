//! C ABI over `usergnn-core`.
//!
//! Every fallible function returns a [`UsergnnStatus`]; on failure a
//! human-readable message is available from [`usergnn_last_error`] on the
//! same thread. Objects are opaque handles released with their `_free`
//! function. Arrays are passed as pointer plus length; copy-out functions
//! fail with `USERGNN_STATUS_BUFFER_TOO_SMALL` when `len` is short.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use usergnn_core::entropy::{npsi_node, HardPartition, NpsiConvention};
use usergnn_core::graph::{
    flip_noise, load_dataset, remove_isolated, save_dataset, sbm_generate, Dataset, SbmConfig,
};
use usergnn_core::metrics::{auc, average_precision, clustering_accuracy, nmi, MetricsReport};
use usergnn_core::model::{save_checkpoint, TrainConfig, TrainOutcome};
use usergnn_core::ndmath::Tensor;
use usergnn_core::pipeline::{eval_linkpred, train_and_report, LinkPredConfig};
use usergnn_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UsergnnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Shape = 3,
    Domain = 4,
    Diverged = 5,
    Parse = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UsergnnMatrix {
    /// Node embeddings `H`, n x embedding.
    Embeddings = 0,
    /// Learned adjacency `A'`, n x n.
    APrime = 1,
    /// Soft partition `Y`, n x classes.
    Partition = 2,
}

/// Training hyperparameters; start from `usergnn_train_config_default()`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UsergnnTrainConfig {
    pub alpha: f64,
    pub beta: f64,
    pub lr: f64,
    pub epochs: usize,
    pub hidden: usize,
    pub embedding: usize,
    /// 0 takes the class count from the dataset labels.
    pub classes: usize,
    pub seed: u64,
    /// NPSI normalizer: 0 = reconciled (default), 1 = literal.
    pub convention: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UsergnnLinkPredConfig {
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub split_seed: u64,
    pub noise_ratio: f64,
    pub noise_seed: u64,
}

/// Missing real-valued metrics are NaN; a missing rank is -1.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UsergnnMetrics {
    pub nmi_argmax_y: f64,
    pub nmi_kmeans: f64,
    pub acc_argmax_y: f64,
    pub acc_kmeans: f64,
    pub auc: f64,
    pub ap: f64,
    pub rank_a_prime: i64,
    pub loss_final: f64,
}

/// Opaque dataset handle.
pub struct UsergnnDataset(Dataset);

/// Opaque handle to a trained model and its outputs.
pub struct UsergnnTrainResult {
    outcome: TrainOutcome,
    report: MetricsReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

struct Failure(UsergnnStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Shape { .. } => UsergnnStatus::Shape,
            Error::Domain(_) => UsergnnStatus::Domain,
            Error::Diverged { .. } => UsergnnStatus::Diverged,
            Error::Parse { .. } => UsergnnStatus::Parse,
            Error::Io { .. } => UsergnnStatus::Io,
            Error::Contract(_) | Error::Config(_) | Error::EmptyDataset(_) => {
                UsergnnStatus::InvalidArgument
            }
        };
        Failure(status, e.to_string())
    }
}

fn fail<T>(status: UsergnnStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

/// Runs `f`, recording the error message and converting panics.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> UsergnnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            UsergnnStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            UsergnnStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().map_or_else(
        || fail(UsergnnStatus::NullPointer, format!("{name} is null")),
        Ok,
    )
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(UsergnnStatus::NullPointer, format!("{name} is null"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn path(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return fail(UsergnnStatus::NullPointer, "path is null");
    }
    match CStr::from_ptr(p).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => fail(UsergnnStatus::InvalidArgument, "path is not valid UTF-8"),
    }
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return fail(UsergnnStatus::NullPointer, "output handle pointer is null");
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return fail(UsergnnStatus::NullPointer, "output pointer is null");
    }
    *out = value;
    Ok(())
}

unsafe fn copy_out<T: Copy>(src: &[T], out: *mut T, len: usize) -> Result<(), Failure> {
    if len < src.len() {
        return fail(
            UsergnnStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        );
    }
    if !src.is_empty() {
        if out.is_null() {
            return fail(UsergnnStatus::NullPointer, "output buffer is null");
        }
        ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    }
    Ok(())
}

fn train_config(c: &UsergnnTrainConfig) -> Result<TrainConfig, Failure> {
    let convention = match c.convention {
        0 => NpsiConvention::Reconciled,
        1 => NpsiConvention::Literal,
        k => {
            return fail(
                UsergnnStatus::InvalidArgument,
                format!("unknown convention {k}"),
            )
        }
    };
    Ok(TrainConfig {
        alpha: c.alpha,
        beta: c.beta,
        lr: c.lr,
        epochs: c.epochs,
        hidden: c.hidden,
        embedding: c.embedding,
        classes: (c.classes > 0).then_some(c.classes),
        seed: c.seed,
        convention,
        log_every: 0,
    })
}

fn metrics(r: &MetricsReport) -> UsergnnMetrics {
    let f = |x: Option<f64>| x.unwrap_or(f64::NAN);
    UsergnnMetrics {
        nmi_argmax_y: f(r.nmi_argmax_y),
        nmi_kmeans: f(r.nmi_kmeans),
        acc_argmax_y: f(r.acc_argmax_y),
        acc_kmeans: f(r.acc_kmeans),
        auc: f(r.auc),
        ap: f(r.ap),
        rank_a_prime: r.rank_a_prime.map_or(-1, |k| k as i64),
        loss_final: f(r.loss_final),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn usergnn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread ("" after a success).
/// The pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn usergnn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn usergnn_train_config_default() -> UsergnnTrainConfig {
    let d = TrainConfig::default();
    UsergnnTrainConfig {
        alpha: d.alpha,
        beta: d.beta,
        lr: d.lr,
        epochs: d.epochs,
        hidden: d.hidden,
        embedding: d.embedding,
        classes: d.classes.unwrap_or(0),
        seed: d.seed,
        convention: 0,
    }
}

#[no_mangle]
pub extern "C" fn usergnn_linkpred_config_default() -> UsergnnLinkPredConfig {
    let d = LinkPredConfig::default();
    UsergnnLinkPredConfig {
        val_fraction: d.val_fraction,
        test_fraction: d.test_fraction,
        split_seed: d.split_seed,
        noise_ratio: d.noise_ratio,
        noise_seed: d.noise_seed,
    }
}

/// Loads `edges.csv`, `features.csv` and optional `labels.csv` from `dir`.
#[no_mangle]
pub unsafe extern "C" fn usergnn_dataset_load(
    dir: *const c_char,
    out: *mut *mut UsergnnDataset,
) -> UsergnnStatus {
    guard(|| {
        let (ds, _) = load_dataset(path(dir)?)?;
        put(out, UsergnnDataset(ds))
    })
}

#[no_mangle]
pub unsafe extern "C" fn usergnn_dataset_save(
    ds: *const UsergnnDataset,
    dir: *const c_char,
) -> UsergnnStatus {
    guard(|| {
        let ds = deref(ds, "dataset")?;
        Ok(save_dataset(path(dir)?, &ds.0)?)
    })
}

/// Samples a stochastic block model with `num_blocks` blocks of the given sizes.
#[no_mangle]
pub unsafe extern "C" fn usergnn_dataset_generate_sbm(
    blocks: *const usize,
    num_blocks: usize,
    p_in: f64,
    p_out: f64,
    dim: usize,
    feature_noise: f64,
    seed: u64,
    out: *mut *mut UsergnnDataset,
) -> UsergnnStatus {
    guard(|| {
        let cfg = SbmConfig {
            blocks: slice(blocks, num_blocks, "blocks")?.to_vec(),
            p_in,
            p_out,
            dim,
            feature_noise,
            seed,
        };
        put(out, UsergnnDataset(sbm_generate(&cfg)?))
    })
}

/// New dataset with `round(ratio * |E|)` node pairs flipped.
#[no_mangle]
pub unsafe extern "C" fn usergnn_dataset_perturb(
    ds: *const UsergnnDataset,
    ratio: f64,
    seed: u64,
    out: *mut *mut UsergnnDataset,
) -> UsergnnStatus {
    guard(|| {
        let ds = &deref(ds, "dataset")?.0;
        let noisy = ds.with_graph(flip_noise(&ds.graph, ratio, seed)?)?;
        put(out, UsergnnDataset(noisy))
    })
}

/// New dataset without zero-degree nodes (labels compacted).
#[no_mangle]
pub unsafe extern "C" fn usergnn_dataset_remove_isolated(
    ds: *const UsergnnDataset,
    out: *mut *mut UsergnnDataset,
) -> UsergnnStatus {
    guard(|| {
        let (clean, _) = remove_isolated(&deref(ds, "dataset")?.0)?;
        put(out, UsergnnDataset(clean))
    })
}

/// Number of nodes; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn usergnn_dataset_num_nodes(ds: *const UsergnnDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.num_nodes())
}

#[no_mangle]
pub unsafe extern "C" fn usergnn_dataset_num_edges(ds: *const UsergnnDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.graph.edge_count())
}

#[no_mangle]
pub unsafe extern "C" fn usergnn_dataset_num_features(ds: *const UsergnnDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.features.cols())
}

/// Copies the `num_nodes` labels into `out`. Fails with `INVALID_ARGUMENT`
/// when the dataset is unlabeled.
#[no_mangle]
pub unsafe extern "C" fn usergnn_dataset_labels(
    ds: *const UsergnnDataset,
    out: *mut usize,
    len: usize,
) -> UsergnnStatus {
    guard(|| match &deref(ds, "dataset")?.0.labels {
        Some(l) => copy_out(l, out, len),
        None => fail(UsergnnStatus::InvalidArgument, "dataset has no labels"),
    })
}

#[no_mangle]
pub unsafe extern "C" fn usergnn_dataset_free(ds: *mut UsergnnDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Trains on the dataset as given (no noise, no isolated-node removal).
#[no_mangle]
pub unsafe extern "C" fn usergnn_train(
    ds: *const UsergnnDataset,
    config: *const UsergnnTrainConfig,
    out: *mut *mut UsergnnTrainResult,
) -> UsergnnStatus {
    guard(|| {
        let ds = &deref(ds, "dataset")?.0;
        let cfg = train_config(deref(config, "config")?)?;
        let (outcome, report) = train_and_report(ds, &cfg)?;
        put(out, UsergnnTrainResult { outcome, report })
    })
}

#[no_mangle]
pub unsafe extern "C" fn usergnn_result_metrics(
    res: *const UsergnnTrainResult,
    out: *mut UsergnnMetrics,
) -> UsergnnStatus {
    guard(|| write_out(out, metrics(&deref(res, "result")?.report)))
}

fn matrix(res: &UsergnnTrainResult, which: UsergnnMatrix) -> &Tensor {
    match which {
        UsergnnMatrix::Embeddings => &res.outcome.embeddings,
        UsergnnMatrix::APrime => &res.outcome.a_prime,
        UsergnnMatrix::Partition => &res.outcome.y,
    }
}

#[no_mangle]
pub unsafe extern "C" fn usergnn_result_matrix_shape(
    res: *const UsergnnTrainResult,
    which: UsergnnMatrix,
    rows: *mut usize,
    cols: *mut usize,
) -> UsergnnStatus {
    guard(|| {
        let m = matrix(deref(res, "result")?, which);
        write_out(rows, m.rows())?;
        write_out(cols, m.cols())
    })
}

/// Copies the matrix in row-major order; `len` must be at least rows * cols.
#[no_mangle]
pub unsafe extern "C" fn usergnn_result_matrix_copy(
    res: *const UsergnnTrainResult,
    which: UsergnnMatrix,
    out: *mut f64,
    len: usize,
) -> UsergnnStatus {
    guard(|| copy_out(matrix(deref(res, "result")?, which).data(), out, len))
}

/// Hard partition `argmax(Y)` per node.
#[no_mangle]
pub unsafe extern "C" fn usergnn_result_partition(
    res: *const UsergnnTrainResult,
    out: *mut usize,
    len: usize,
) -> UsergnnStatus {
    guard(|| copy_out(&deref(res, "result")?.outcome.partition, out, len))
}

#[no_mangle]
pub unsafe extern "C" fn usergnn_result_save_checkpoint(
    res: *const UsergnnTrainResult,
    file: *const c_char,
) -> UsergnnStatus {
    guard(|| {
        Ok(save_checkpoint(
            path(file)?,
            &deref(res, "result")?.outcome.model,
        )?)
    })
}

#[no_mangle]
pub unsafe extern "C" fn usergnn_result_free(res: *mut UsergnnTrainResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Split, perturb the training graph, train and score held-out pairs.
/// `out.auc`/`out.ap` hold the test scores.
#[no_mangle]
pub unsafe extern "C" fn usergnn_eval_linkpred(
    ds: *const UsergnnDataset,
    split: *const UsergnnLinkPredConfig,
    config: *const UsergnnTrainConfig,
    out: *mut UsergnnMetrics,
) -> UsergnnStatus {
    guard(|| {
        let ds = &deref(ds, "dataset")?.0;
        let s = deref(split, "split config")?;
        let lp = LinkPredConfig {
            val_fraction: s.val_fraction,
            test_fraction: s.test_fraction,
            split_seed: s.split_seed,
            noise_ratio: s.noise_ratio,
            noise_seed: s.noise_seed,
        };
        let cfg = train_config(deref(config, "config")?)?;
        let result = eval_linkpred(ds, &lp, &cfg)?;
        write_out(out, metrics(&result.report))
    })
}

/// NPSI of a hard partition of the dataset graph.
#[no_mangle]
pub unsafe extern "C" fn usergnn_npsi(
    ds: *const UsergnnDataset,
    partition: *const usize,
    len: usize,
    out: *mut f64,
) -> UsergnnStatus {
    guard(|| {
        let ds = &deref(ds, "dataset")?.0;
        let p = HardPartition::new(slice(partition, len, "partition")?.to_vec())?;
        write_out(out, npsi_node(&ds.graph, &p)?)
    })
}

/// Normalized mutual information (sqrt normalization) of two labelings.
#[no_mangle]
pub unsafe extern "C" fn usergnn_nmi(
    a: *const usize,
    b: *const usize,
    len: usize,
    out: *mut f64,
) -> UsergnnStatus {
    guard(|| write_out(out, nmi(slice(a, len, "a")?, slice(b, len, "b")?)?))
}

/// Clustering accuracy of `predicted` against `truth` under the best matching.
#[no_mangle]
pub unsafe extern "C" fn usergnn_clustering_accuracy(
    predicted: *const usize,
    truth: *const usize,
    len: usize,
    out: *mut f64,
) -> UsergnnStatus {
    guard(|| {
        let acc = clustering_accuracy(
            slice(predicted, len, "predicted")?,
            slice(truth, len, "truth")?,
        )?;
        write_out(out, acc)
    })
}

unsafe fn binary_inputs<'a>(
    scores: *const f64,
    labels: *const u8,
    len: usize,
) -> Result<(&'a [f64], Vec<bool>), Failure> {
    let s = slice(scores, len, "scores")?;
    let l = slice(labels, len, "labels")?
        .iter()
        .map(|&x| x != 0)
        .collect();
    Ok((s, l))
}

/// ROC AUC; nonzero `labels` entries are positives.
#[no_mangle]
pub unsafe extern "C" fn usergnn_auc(
    scores: *const f64,
    labels: *const u8,
    len: usize,
    out: *mut f64,
) -> UsergnnStatus {
    guard(|| {
        let (s, l) = binary_inputs(scores, labels, len)?;
        write_out(out, auc(s, &l)?)
    })
}

#[no_mangle]
pub unsafe extern "C" fn usergnn_average_precision(
    scores: *const f64,
    labels: *const u8,
    len: usize,
    out: *mut f64,
) -> UsergnnStatus {
    guard(|| {
        let (s, l) = binary_inputs(scores, labels, len)?;
        write_out(out, average_precision(s, &l)?)
    })
}
