#include "simskip/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace simskip {

EmbeddingDataset generate_gaussian_mixture(const MixtureSpec& spec) {
  if (spec.num_classes < 1 || spec.dim < 1 || spec.points_per_class < 1) {
    throw ValidationError("mixture needs >= 1 class, dim and point per class");
  }
  if (!(spec.class_separation > 0.0) || !(spec.cluster_sigma > 0.0)) {
    throw ValidationError("class_separation and cluster_sigma must be positive");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t n = spec.num_classes * spec.points_per_class;
  Matrix vectors(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(spec.dim));
  std::vector<Label> labels(n);
  std::size_t row = 0;
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    const double mean0 = static_cast<double>(c) * spec.class_separation;
    for (std::size_t p = 0; p < spec.points_per_class; ++p, ++row) {
      for (std::size_t j = 0; j < spec.dim; ++j) {
        const double mean = j == 0 ? mean0 : 0.0;
        vectors(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) =
            mean + spec.cluster_sigma * normal(rng);
      }
      labels[row] = static_cast<Label>(c);
    }
  }
  return EmbeddingDataset(std::move(vectors), std::move(labels));
}

EmbeddingDataset apply_class_mixing(const EmbeddingDataset& dataset, double mix_strength, std::uint64_t seed) {
  dataset.require_labels();
  if (!(mix_strength >= 0.0 && mix_strength <= 1.0)) {
    throw ValidationError("mix_strength must lie in [0, 1]");
  }
  if (mix_strength == 0.0 || dataset.count() == 0) {
    return dataset;
  }
  const Matrix& x = dataset.vectors();
  const std::size_t n = dataset.count();

  const RowVector mean = x.colwise().mean();
  const RowVector stddev = ((x.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(n)).sqrt();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::size_t> partner(n);
  std::iota(partner.begin(), partner.end(), 0);
  std::shuffle(partner.begin(), partner.end(), rng);

  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    RowVector y = x.row(static_cast<Eigen::Index>(partner[i]));
    for (Eigen::Index j = 0; j < y.size(); ++j) {
      y(j) += 0.1 * stddev(j) * normal(rng);
    }
    out.row(r) = (1.0 - mix_strength) * x.row(r) + mix_strength * y;
  }
  return EmbeddingDataset(std::move(out), dataset.labels());
}

}  // namespace simskip
