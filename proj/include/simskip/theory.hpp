#ifndef SIMSKIP_THEORY_HPP_
#define SIMSKIP_THEORY_HPP_

// Numerical companions to the contrastive downstream-loss bound: empirical
// unsupervised loss on sampled triplets, the generalization term, the bound's
// right-hand side and the identity-vs-doubled-identity margin check.

#include <cstdint>
#include <functional>
#include <vector>

#include "simskip/embedding_store.hpp"

namespace simskip {

struct TripletSample {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::vector<std::size_t> negatives;
};

/**
 * Anchors uniform over all rows, positives uniform over the other rows with the
 * anchor's label, k negatives uniform over the full dataset (class collisions allowed).
 * ValidationError if unlabeled, k == 0, or any class has exactly one member.
 */
std::vector<TripletSample> sample_triplets(const EmbeddingDataset& dataset, std::size_t k, std::size_t count,
                                           std::uint64_t seed);

enum class LossKind { Hinge, Logistic };

using EmbedFn = std::function<Vector(const Vector&)>;

/// Margins v_i = f(x)^T (f(x+) - f(x_i-)) of one triplet.
Vector triplet_margins(const Vector& anchor, const Vector& positive, const std::vector<Vector>& negatives);

/// Mean over triplets of l(v). NumericsError if embed_fn returns non-finite values.
double empirical_unsup_loss(const EmbeddingDataset& dataset, const EmbedFn& embed_fn,
                            const std::vector<TripletSample>& triplets, LossKind kind);

struct SkipInequalityReport {
  std::size_t triplets = 0;
  std::size_t nonneg_triplets = 0;
  /// Fraction of triplets whose identity margins are all >= 0.
  double nonneg_margin_fraction = 0.0;
  /// Logistic L_un under f(x) = x and f(x) = 2x, over all triplets.
  double l_un_identity = 0.0;
  double l_un_doubled = 0.0;
  /// Same two quantities over the nonnegative-margin subset.
  double l_un_identity_nonneg = 0.0;
  double l_un_doubled_nonneg = 0.0;
  /// l_un_doubled_nonneg <= l_un_identity_nonneg (vacuously true for an empty subset).
  bool holds = true;
};

SkipInequalityReport skip_inequality_check(const EmbeddingDataset& dataset,
                                           const std::vector<TripletSample>& triplets);

struct BoundInputs {
  double alpha = 1.0;
  double eta = 1.0;
  double eps_slack = 0.0;
  double R = 1.0;
  double rademacher = 0.0;
  std::size_t M = 1;
  double delta_conf = 0.05;
  std::size_t k = 1;

  void validate() const;
};

/// R sqrt(k) R_s / M + (R^2 + ln k) sqrt(ln(1/delta) / M), big-O constants set to 1.
double gen_m(const BoundInputs& inputs);

/// alpha * L_un + eta * gen + eps_slack.
double bound_rhs(double l_un_value, double gen, const BoundInputs& inputs);

}  // namespace simskip

#endif  // SIMSKIP_THEORY_HPP_
