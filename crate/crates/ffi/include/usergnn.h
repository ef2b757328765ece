#ifndef USERGNN_H
#define USERGNN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum UsergnnStatus {
  USERGNN_STATUS_OK = 0,
  USERGNN_STATUS_NULL_POINTER = 1,
  USERGNN_STATUS_INVALID_ARGUMENT = 2,
  USERGNN_STATUS_SHAPE = 3,
  USERGNN_STATUS_DOMAIN = 4,
  USERGNN_STATUS_DIVERGED = 5,
  USERGNN_STATUS_PARSE = 6,
  USERGNN_STATUS_IO = 7,
  USERGNN_STATUS_BUFFER_TOO_SMALL = 8,
  USERGNN_STATUS_PANIC = 9,
} UsergnnStatus;

typedef enum UsergnnMatrix {
  // Node embeddings `H`, n x embedding.
  USERGNN_MATRIX_EMBEDDINGS = 0,
  // Learned adjacency `A'`, n x n.
  USERGNN_MATRIX_A_PRIME = 1,
  // Soft partition `Y`, n x classes.
  USERGNN_MATRIX_PARTITION = 2,
} UsergnnMatrix;

// Opaque dataset handle.
typedef struct UsergnnDataset UsergnnDataset;

// Opaque handle to a trained model and its outputs.
typedef struct UsergnnTrainResult UsergnnTrainResult;

// Training hyperparameters; start from `usergnn_train_config_default()`.
typedef struct UsergnnTrainConfig {
  double alpha;
  double beta;
  double lr;
  size_t epochs;
  size_t hidden;
  size_t embedding;
  // 0 takes the class count from the dataset labels.
  size_t classes;
  uint64_t seed;
  // NPSI normalizer: 0 = reconciled (default), 1 = literal.
  uint32_t convention;
} UsergnnTrainConfig;

typedef struct UsergnnLinkPredConfig {
  double val_fraction;
  double test_fraction;
  uint64_t split_seed;
  double noise_ratio;
  uint64_t noise_seed;
} UsergnnLinkPredConfig;

// Missing real-valued metrics are NaN; a missing rank is -1.
typedef struct UsergnnMetrics {
  double nmi_argmax_y;
  double nmi_kmeans;
  double acc_argmax_y;
  double acc_kmeans;
  double auc;
  double ap;
  int64_t rank_a_prime;
  double loss_final;
} UsergnnMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *usergnn_version(void);

// Message of the last failed call on this thread ("" after a success).
// The pointer stays valid until the next call into the library on this thread.
const char *usergnn_last_error(void);

struct UsergnnTrainConfig usergnn_train_config_default(void);

struct UsergnnLinkPredConfig usergnn_linkpred_config_default(void);

// Loads `edges.csv`, `features.csv` and optional `labels.csv` from `dir`.
enum UsergnnStatus usergnn_dataset_load(const char *dir, struct UsergnnDataset **out);

enum UsergnnStatus usergnn_dataset_save(const struct UsergnnDataset *ds, const char *dir);

// Samples a stochastic block model with `num_blocks` blocks of the given sizes.
enum UsergnnStatus usergnn_dataset_generate_sbm(const size_t *blocks,
                                                size_t num_blocks,
                                                double p_in,
                                                double p_out,
                                                size_t dim,
                                                double feature_noise,
                                                uint64_t seed,
                                                struct UsergnnDataset **out);

// New dataset with `round(ratio * |E|)` node pairs flipped.
enum UsergnnStatus usergnn_dataset_perturb(const struct UsergnnDataset *ds,
                                           double ratio,
                                           uint64_t seed,
                                           struct UsergnnDataset **out);

// New dataset without zero-degree nodes (labels compacted).
enum UsergnnStatus usergnn_dataset_remove_isolated(const struct UsergnnDataset *ds,
                                                   struct UsergnnDataset **out);

// Number of nodes; 0 for a null handle.
size_t usergnn_dataset_num_nodes(const struct UsergnnDataset *ds);

size_t usergnn_dataset_num_edges(const struct UsergnnDataset *ds);

size_t usergnn_dataset_num_features(const struct UsergnnDataset *ds);

// Copies the `num_nodes` labels into `out`. Fails with `INVALID_ARGUMENT`
// when the dataset is unlabeled.
enum UsergnnStatus usergnn_dataset_labels(const struct UsergnnDataset *ds, size_t *out, size_t len);

void usergnn_dataset_free(struct UsergnnDataset *ds);

// Trains on the dataset as given (no noise, no isolated-node removal).
enum UsergnnStatus usergnn_train(const struct UsergnnDataset *ds,
                                 const struct UsergnnTrainConfig *config,
                                 struct UsergnnTrainResult **out);

enum UsergnnStatus usergnn_result_metrics(const struct UsergnnTrainResult *res,
                                          struct UsergnnMetrics *out);

enum UsergnnStatus usergnn_result_matrix_shape(const struct UsergnnTrainResult *res,
                                               enum UsergnnMatrix which,
                                               size_t *rows,
                                               size_t *cols);

// Copies the matrix in row-major order; `len` must be at least rows * cols.
enum UsergnnStatus usergnn_result_matrix_copy(const struct UsergnnTrainResult *res,
                                              enum UsergnnMatrix which,
                                              double *out,
                                              size_t len);

// Hard partition `argmax(Y)` per node.
enum UsergnnStatus usergnn_result_partition(const struct UsergnnTrainResult *res,
                                            size_t *out,
                                            size_t len);

enum UsergnnStatus usergnn_result_save_checkpoint(const struct UsergnnTrainResult *res,
                                                  const char *file);

void usergnn_result_free(struct UsergnnTrainResult *res);

// Split, perturb the training graph, train and score held-out pairs.
// `out.auc`/`out.ap` hold the test scores.
enum UsergnnStatus usergnn_eval_linkpred(const struct UsergnnDataset *ds,
                                         const struct UsergnnLinkPredConfig *split,
                                         const struct UsergnnTrainConfig *config,
                                         struct UsergnnMetrics *out);

// NPSI of a hard partition of the dataset graph.
enum UsergnnStatus usergnn_npsi(const struct UsergnnDataset *ds,
                                const size_t *partition,
                                size_t len,
                                double *out);

// Normalized mutual information (sqrt normalization) of two labelings.
enum UsergnnStatus usergnn_nmi(const size_t *a, const size_t *b, size_t len, double *out);

// Clustering accuracy of `predicted` against `truth` under the best matching.
enum UsergnnStatus usergnn_clustering_accuracy(const size_t *predicted,
                                               const size_t *truth,
                                               size_t len,
                                               double *out);

// ROC AUC; nonzero `labels` entries are positives.
enum UsergnnStatus usergnn_auc(const double *scores,
                               const uint8_t *labels,
                               size_t len,
                               double *out);

enum UsergnnStatus usergnn_average_precision(const double *scores,
                                             const uint8_t *labels,
                                             size_t len,
                                             double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* USERGNN_H */
