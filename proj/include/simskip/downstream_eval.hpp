#ifndef SIMSKIP_DOWNSTREAM_EVAL_HPP_
#define SIMSKIP_DOWNSTREAM_EVAL_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "simskip/embedding_store.hpp"
#include "simskip/nn_core.hpp"

namespace simskip {

enum class KnnMetric { Euclidean, Cosine };

std::string to_string(KnnMetric metric);
KnnMetric parse_knn_metric(const std::string& text);

/// k nearest neighbours of every row (self excluded), nearest first; ties go to the lower index.
std::vector<std::vector<std::size_t>> knn_neighbors(const EmbeddingDataset& dataset, std::size_t k,
                                                    KnnMetric metric = KnnMetric::Euclidean,
                                                    std::size_t threads = 0);

/**
 * Mean over all rows of the fraction of its k nearest neighbours that share its label.
 * ValidationError when unlabeled or when count <= k. threads = 0 uses worker_count().
 */
double knn_same_label_score(const EmbeddingDataset& dataset, std::size_t k = 10,
                            KnnMetric metric = KnnMetric::Euclidean, std::size_t threads = 0);

enum class ProbeKind { Linear, MLP3 };

std::string to_string(ProbeKind kind);
ProbeKind parse_probe_kind(const std::string& text);

struct ProbeConfig {
  ProbeKind kind = ProbeKind::Linear;
  std::size_t hidden_dim = 64;
  double learning_rate = 0.5;
  std::size_t epochs = 500;
  std::uint64_t seed = 0;

  /// Linear: full-batch gradient descent, lr 0.5, 500 epochs.
  /// MLP3: full-batch Adam, lr 0.01, 300 epochs, hidden width 64.
  static ProbeConfig defaults(ProbeKind kind);
  void validate() const;
};

/**
 * Classifier on standardized features. Linear holds one layer (multinomial
 * logistic regression); MLP3 holds input->hidden->hidden->classes with ReLU
 * between layers.
 */
struct ProbeModel {
  ProbeKind kind = ProbeKind::Linear;
  Vector feature_mean;
  Vector feature_scale;
  std::vector<LinearLayer> layers;
  std::size_t num_classes = 0;

  std::size_t dim() const { return static_cast<std::size_t>(feature_mean.size()); }
  Matrix logits(const Matrix& x) const;
  /// Argmax class per row; ties go to the lower class id.
  std::vector<Label> predict(const Matrix& x) const;
};

ProbeModel train_probe(const EmbeddingDataset& train, const ProbeConfig& cfg);

/// Fraction of rows whose argmax prediction equals the label.
double evaluate_probe(const ProbeModel& model, const EmbeddingDataset& test);
/// Accuracy restricted to each class present in `test`; NaN for absent classes.
std::vector<double> per_class_accuracy(const ProbeModel& model, const EmbeddingDataset& test);

struct SplitConfig {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
  bool stratify = true;
};

struct EvalReport {
  std::size_t count = 0;
  std::size_t dim = 0;
  std::size_t k = 10;
  KnnMetric metric = KnnMetric::Euclidean;
  double knn_score = 0.0;
  double probe_accuracy = 0.0;
  std::vector<double> per_class_accuracy;
  ProbeConfig probe;
  SplitConfig split;
  std::uint64_t fingerprint = 0;
};

/// kNN score over the whole dataset plus a probe trained on the split's train part
/// and scored on its test part.
EvalReport evaluate_embeddings(const EmbeddingDataset& dataset, const ProbeConfig& probe_cfg,
                               const SplitConfig& split_cfg, std::size_t k = 10,
                               KnnMetric metric = KnnMetric::Euclidean);

struct ComparisonReport {
  EvalReport original;
  EvalReport refined;
  double knn_delta = 0.0;    // refined - original
  double probe_delta = 0.0;  // refined - original
};

/**
 * Evaluates both datasets with the identical row split. Dimensions may differ;
 * counts and labels must agree (ValidationError otherwise).
 */
ComparisonReport compare_embeddings(const EmbeddingDataset& original, const EmbeddingDataset& refined,
                                    const ProbeConfig& probe_cfg, const SplitConfig& split_cfg,
                                    std::size_t k = 10, KnnMetric metric = KnnMetric::Euclidean);

}  // namespace simskip

#endif  // SIMSKIP_DOWNSTREAM_EVAL_HPP_
