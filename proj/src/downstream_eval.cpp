#include "simskip/downstream_eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <thread>

#include "simskip/trainer.hpp"

namespace simskip {

namespace {

using Candidate = std::pair<double, std::size_t>;

void neighbors_of(const Matrix& x, const Vector& norms, std::size_t query, std::size_t k, KnnMetric metric,
                  std::vector<Candidate>& scratch, std::vector<std::size_t>& out) {
  const auto q = static_cast<Eigen::Index>(query);
  scratch.clear();
  for (Eigen::Index j = 0; j < x.rows(); ++j) {
    if (j == q) continue;
    double dist;
    if (metric == KnnMetric::Euclidean) {
      dist = (x.row(j) - x.row(q)).squaredNorm();
    } else {
      dist = 1.0 - x.row(j).dot(x.row(q)) / (norms(j) * norms(q));
    }
    scratch.emplace_back(dist, static_cast<std::size_t>(j));
  }
  std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k), scratch.end());
  out.resize(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = scratch[i].second;
}

template <typename Fn>
void parallel_rows(std::size_t n, std::size_t threads, Fn&& fn) {
  if (threads == 0) threads = worker_count();
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

std::vector<std::vector<std::size_t>> knn_neighbors(const EmbeddingDataset& dataset, std::size_t k, KnnMetric metric,
                                                    std::size_t threads) {
  if (k == 0) {
    throw ValidationError("k must be positive");
  }
  if (dataset.count() <= k) {
    throw ValidationError("kNN needs more than k = " + std::to_string(k) + " rows, got " +
                          std::to_string(dataset.count()));
  }
  const Matrix& x = dataset.vectors();
  Vector norms;
  if (metric == KnnMetric::Cosine) {
    norms = x.rowwise().norm();
    if ((norms.array() <= 0.0).any()) {
      throw NumericsError("cosine kNN: zero-norm embedding");
    }
  }
  std::vector<std::vector<std::size_t>> result(dataset.count());
  parallel_rows(dataset.count(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<Candidate> scratch;
    scratch.reserve(dataset.count());
    for (std::size_t i = begin; i < end; ++i) neighbors_of(x, norms, i, k, metric, scratch, result[i]);
  });
  return result;
}

double knn_same_label_score(const EmbeddingDataset& dataset, std::size_t k, KnnMetric metric, std::size_t threads) {
  const auto& labels = dataset.require_labels();
  const auto neighbors = knn_neighbors(dataset, k, metric, threads);
  double total = 0.0;
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    std::size_t same = 0;
    for (std::size_t j : neighbors[i]) same += labels[j] == labels[i] ? 1 : 0;
    total += static_cast<double>(same) / static_cast<double>(k);
  }
  return total / static_cast<double>(neighbors.size());
}

std::string to_string(KnnMetric metric) { return metric == KnnMetric::Euclidean ? "euclidean" : "cosine"; }

KnnMetric parse_knn_metric(const std::string& text) {
  if (text == "euclidean") return KnnMetric::Euclidean;
  if (text == "cosine") return KnnMetric::Cosine;
  throw ValidationError("unknown kNN metric '" + text + "'");
}

std::string to_string(ProbeKind kind) { return kind == ProbeKind::Linear ? "linear" : "mlp3"; }

ProbeKind parse_probe_kind(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t == "linear") return ProbeKind::Linear;
  if (t == "mlp3" || t == "mlp") return ProbeKind::MLP3;
  throw ValidationError("unknown probe kind '" + text + "'");
}

ProbeConfig ProbeConfig::defaults(ProbeKind kind) {
  ProbeConfig cfg;
  cfg.kind = kind;
  if (kind == ProbeKind::MLP3) {
    cfg.learning_rate = 0.01;
    cfg.epochs = 300;
  }
  return cfg;
}

void ProbeConfig::validate() const {
  if (kind == ProbeKind::MLP3 && hidden_dim < 1) {
    throw ValidationError("MLP3 probe needs hidden_dim >= 1");
  }
  if (!(learning_rate > 0.0)) {
    throw ValidationError("probe learning_rate must be positive");
  }
}

Matrix ProbeModel::logits(const Matrix& x) const {
  if (x.cols() != feature_mean.size()) {
    throw ShapeError("probe expects width " + std::to_string(feature_mean.size()) + ", got " +
                     std::to_string(x.cols()));
  }
  Matrix h = (x.rowwise() - feature_mean.transpose()).array().rowwise() / feature_scale.transpose().array();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = linear_apply(layers[i], h, Mode::Eval).first;
    if (i + 1 < layers.size()) h = h.cwiseMax(0.0);
  }
  return h;
}

std::vector<Label> ProbeModel::predict(const Matrix& x) const {
  const Matrix scores = logits(x);
  std::vector<Label> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c) {
      if (scores(r, c) > scores(r, best)) best = c;
    }
    out[static_cast<std::size_t>(r)] = static_cast<Label>(best);
  }
  return out;
}

namespace {

/// Mean cross-entropy gradient w.r.t. logits: (softmax - onehot) / B.
Matrix cross_entropy_grad(const Matrix& logits, const std::vector<Label>& labels) {
  Matrix g = logits;
  const double inv = 1.0 / static_cast<double>(logits.rows());
  for (Eigen::Index r = 0; r < g.rows(); ++r) {
    const double m = g.row(r).maxCoeff();
    g.row(r) = (g.row(r).array() - m).exp();
    g.row(r) /= g.row(r).sum();
    g(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
  }
  return g * inv;
}

std::span<double> view(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> view(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> cview(const Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<const double> cview(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

ProbeModel train_probe(const EmbeddingDataset& train, const ProbeConfig& cfg) {
  cfg.validate();
  const auto& labels = train.require_labels();
  std::vector<Label> distinct(labels.begin(), labels.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) {
    throw ValidationError("probe training needs at least 2 classes");
  }

  ProbeModel model;
  model.kind = cfg.kind;
  model.num_classes = train.num_classes();
  const Matrix& x = train.vectors();
  const double n = static_cast<double>(x.rows());
  model.feature_mean = x.colwise().sum().transpose() / n;
  model.feature_scale =
      ((x.rowwise() - model.feature_mean.transpose()).array().square().colwise().sum().transpose() / n).sqrt();
  for (Eigen::Index j = 0; j < model.feature_scale.size(); ++j) {
    if (!(model.feature_scale(j) > 1e-12)) model.feature_scale(j) = 1.0;
  }
  const Matrix xs = (x.rowwise() - model.feature_mean.transpose()).array().rowwise() /
                    model.feature_scale.transpose().array();

  Rng rng(cfg.seed);
  const std::size_t d = train.dim();
  const std::size_t c = model.num_classes;

  if (cfg.kind == ProbeKind::Linear) {
    model.layers.push_back(LinearLayer::zeros(d, c));
    LinearLayer& layer = model.layers.front();
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      auto [logits, cache] = linear_apply(layer, xs, Mode::Train);
      const LinearBackward back = linear_backward(layer, cache, cross_entropy_grad(logits, labels));
      layer.weight -= cfg.learning_rate * back.grads.weight;
      layer.bias -= cfg.learning_rate * back.grads.bias;
    }
    return model;
  }

  const std::size_t hidden = cfg.hidden_dim;
  model.layers.push_back(LinearLayer::uniform(d, hidden, rng));
  model.layers.push_back(LinearLayer::uniform(hidden, hidden, rng));
  model.layers.push_back(LinearLayer::uniform(hidden, c, rng));
  AdamState adam;
  const AdamConfig adam_cfg{cfg.learning_rate};
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<LinearCache> lin(3);
    std::vector<ReluCache> act(2);
    Matrix h = xs;
    for (std::size_t i = 0; i < 3; ++i) {
      auto [y, lc] = linear_apply(model.layers[i], h, Mode::Train);
      lin[i] = std::move(lc);
      if (i < 2) {
        auto [r, rc] = relu_apply(y);
        act[i] = std::move(rc);
        h = std::move(r);
      } else {
        h = std::move(y);
      }
    }
    Matrix g = cross_entropy_grad(h, labels);
    std::vector<LinearGrads> grads(3);
    for (std::size_t i = 3; i-- > 0;) {
      LinearBackward back = linear_backward(model.layers[i], lin[i], g);
      grads[i] = std::move(back.grads);
      g = i > 0 ? relu_backward(act[i - 1], back.input_grad) : Matrix();
    }
    std::vector<std::span<double>> params;
    std::vector<std::span<const double>> gviews;
    for (std::size_t i = 0; i < 3; ++i) {
      params.push_back(view(model.layers[i].weight));
      params.push_back(view(model.layers[i].bias));
      gviews.push_back(cview(grads[i].weight));
      gviews.push_back(cview(grads[i].bias));
    }
    adam_step(params, gviews, adam, epoch + 1, adam_cfg);
  }
  return model;
}

double evaluate_probe(const ProbeModel& model, const EmbeddingDataset& test) {
  const auto& labels = test.require_labels();
  if (test.count() == 0) {
    throw ValidationError("cannot evaluate a probe on an empty test set");
  }
  if (test.dim() != model.dim()) {
    throw ShapeError("probe dimension " + std::to_string(model.dim()) + " does not match test dimension " +
                     std::to_string(test.dim()));
  }
  const auto predicted = model.predict(test.vectors());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predicted[i] == labels[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

std::vector<double> per_class_accuracy(const ProbeModel& model, const EmbeddingDataset& test) {
  const auto& labels = test.require_labels();
  if (test.dim() != model.dim()) {
    throw ShapeError("probe dimension does not match test dimension");
  }
  const auto predicted = model.predict(test.vectors());
  const std::size_t classes = std::max(model.num_classes, test.num_classes());
  std::vector<std::size_t> hits(classes, 0);
  std::vector<std::size_t> totals(classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++totals[labels[i]];
    hits[labels[i]] += predicted[i] == labels[i] ? 1 : 0;
  }
  std::vector<double> out(classes, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t c = 0; c < classes; ++c) {
    if (totals[c] > 0) out[c] = static_cast<double>(hits[c]) / static_cast<double>(totals[c]);
  }
  return out;
}

namespace {

EvalReport evaluate_with_split(const EmbeddingDataset& dataset, const SplitIndices& idx, const ProbeConfig& probe_cfg,
                               const SplitConfig& split_cfg, std::size_t k, KnnMetric metric) {
  EvalReport report;
  report.count = dataset.count();
  report.dim = dataset.dim();
  report.k = k;
  report.metric = metric;
  report.probe = probe_cfg;
  report.split = split_cfg;
  report.fingerprint = fingerprint(dataset);
  report.knn_score = knn_same_label_score(dataset, k, metric);
  const EmbeddingDataset train = dataset.select(idx.train);
  const EmbeddingDataset test = dataset.select(idx.test);
  const ProbeModel model = train_probe(train, probe_cfg);
  report.probe_accuracy = evaluate_probe(model, test);
  report.per_class_accuracy = per_class_accuracy(model, test);
  return report;
}

}  // namespace

EvalReport evaluate_embeddings(const EmbeddingDataset& dataset, const ProbeConfig& probe_cfg,
                               const SplitConfig& split_cfg, std::size_t k, KnnMetric metric) {
  const SplitIndices idx = split_indices(dataset, split_cfg.train_fraction, split_cfg.seed, split_cfg.stratify);
  return evaluate_with_split(dataset, idx, probe_cfg, split_cfg, k, metric);
}

ComparisonReport compare_embeddings(const EmbeddingDataset& original, const EmbeddingDataset& refined,
                                    const ProbeConfig& probe_cfg, const SplitConfig& split_cfg, std::size_t k,
                                    KnnMetric metric) {
  if (original.count() != refined.count()) {
    throw ValidationError("original has " + std::to_string(original.count()) + " rows, refined has " +
                          std::to_string(refined.count()));
  }
  if (original.require_labels() != refined.require_labels()) {
    throw ValidationError("original and refined label vectors differ");
  }
  const SplitIndices idx = split_indices(original, split_cfg.train_fraction, split_cfg.seed, split_cfg.stratify);
  ComparisonReport report;
  report.original = evaluate_with_split(original, idx, probe_cfg, split_cfg, k, metric);
  report.refined = evaluate_with_split(refined, idx, probe_cfg, split_cfg, k, metric);
  report.knn_delta = report.refined.knn_score - report.original.knn_score;
  report.probe_delta = report.refined.probe_accuracy - report.original.probe_accuracy;
  return report;
}

}  // namespace simskip
