#include "simskip/theory.hpp"

#include <cmath>
#include <random>

#include "simskip/augment.hpp"
#include "simskip/contrastive_loss.hpp"

namespace simskip {

std::vector<TripletSample> sample_triplets(const EmbeddingDataset& dataset, std::size_t k, std::size_t count,
                                           std::uint64_t seed) {
  const auto& labels = dataset.require_labels();
  if (k == 0) {
    throw ValidationError("triplets need k >= 1 negatives");
  }
  if (dataset.count() < 2) {
    throw ValidationError("triplet sampling needs at least 2 rows");
  }
  std::vector<std::vector<std::size_t>> members(dataset.num_classes());
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  for (std::size_t c = 0; c < members.size(); ++c) {
    if (members[c].size() == 1) {
      throw ValidationError("class " + std::to_string(c) + " has a single member; no positive exists");
    }
  }
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> any_row(0, dataset.count() - 1);
  std::vector<TripletSample> out;
  out.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    TripletSample s;
    s.anchor = any_row(rng);
    const auto& same = members[labels[s.anchor]];
    // Uniform over same-label rows other than the anchor.
    std::uniform_int_distribution<std::size_t> pick(0, same.size() - 2);
    std::size_t p = pick(rng);
    if (same[p] == s.anchor) p = same.size() - 1;
    s.positive = same[p];
    s.negatives.resize(k);
    for (auto& n : s.negatives) n = any_row(rng);
    out.push_back(std::move(s));
  }
  return out;
}

Vector triplet_margins(const Vector& anchor, const Vector& positive, const std::vector<Vector>& negatives) {
  Vector v(static_cast<Eigen::Index>(negatives.size()));
  for (std::size_t i = 0; i < negatives.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = anchor.dot(positive - negatives[i]);
  }
  return v;
}

namespace {

double loss_of(const Vector& v, LossKind kind) { return kind == LossKind::Hinge ? hinge_loss(v) : logistic_loss(v); }

std::vector<Vector> embed_all(const EmbeddingDataset& dataset, const EmbedFn& embed_fn) {
  std::vector<Vector> out;
  out.reserve(dataset.count());
  for (std::size_t i = 0; i < dataset.count(); ++i) {
    Vector e = embed_fn(dataset.vectors().row(static_cast<Eigen::Index>(i)).transpose());
    if (!e.allFinite()) {
      throw NumericsError("embedding of row " + std::to_string(i) + " is not finite");
    }
    out.push_back(std::move(e));
  }
  return out;
}

Vector margins_for(const std::vector<Vector>& emb, const TripletSample& t) {
  std::vector<Vector> negs;
  negs.reserve(t.negatives.size());
  for (std::size_t n : t.negatives) negs.push_back(emb.at(n));
  return triplet_margins(emb.at(t.anchor), emb.at(t.positive), negs);
}

double mean_loss(const std::vector<Vector>& emb, const std::vector<TripletSample>& triplets, LossKind kind) {
  if (triplets.empty()) {
    throw ValidationError("no triplets to average over");
  }
  double sum = 0.0;
  for (const auto& t : triplets) sum += loss_of(margins_for(emb, t), kind);
  return sum / static_cast<double>(triplets.size());
}

}  // namespace

double empirical_unsup_loss(const EmbeddingDataset& dataset, const EmbedFn& embed_fn,
                            const std::vector<TripletSample>& triplets, LossKind kind) {
  return mean_loss(embed_all(dataset, embed_fn), triplets, kind);
}

SkipInequalityReport skip_inequality_check(const EmbeddingDataset& dataset,
                                           const std::vector<TripletSample>& triplets) {
  const EmbedFn identity = [](const Vector& x) { return x; };
  const EmbedFn doubled = [](const Vector& x) { return Vector(2.0 * x); };
  const auto emb_identity = embed_all(dataset, identity);
  const auto emb_doubled = embed_all(dataset, doubled);

  std::vector<TripletSample> nonneg;
  for (const auto& t : triplets) {
    if ((margins_for(emb_identity, t).array() >= 0.0).all()) nonneg.push_back(t);
  }
  SkipInequalityReport r;
  r.triplets = triplets.size();
  r.nonneg_triplets = nonneg.size();
  r.nonneg_margin_fraction =
      triplets.empty() ? 0.0 : static_cast<double>(nonneg.size()) / static_cast<double>(triplets.size());
  if (!triplets.empty()) {
    r.l_un_identity = mean_loss(emb_identity, triplets, LossKind::Logistic);
    r.l_un_doubled = mean_loss(emb_doubled, triplets, LossKind::Logistic);
  }
  if (!nonneg.empty()) {
    r.l_un_identity_nonneg = mean_loss(emb_identity, nonneg, LossKind::Logistic);
    r.l_un_doubled_nonneg = mean_loss(emb_doubled, nonneg, LossKind::Logistic);
    r.holds = r.l_un_doubled_nonneg <= r.l_un_identity_nonneg;
  }
  return r;
}

void BoundInputs::validate() const {
  if (!(alpha >= 0.0) || !(eta >= 0.0) || !(eps_slack >= 0.0) || !(rademacher >= 0.0)) {
    throw ValidationError("alpha, eta, eps_slack and rademacher must be nonnegative");
  }
  if (!(R > 0.0)) {
    throw ValidationError("R must be positive");
  }
  if (M < 1 || k < 1) {
    throw ValidationError("M and k must be positive integers");
  }
  if (!(delta_conf > 0.0 && delta_conf < 1.0)) {
    throw ValidationError("delta_conf must lie in (0, 1)");
  }
}

double gen_m(const BoundInputs& in) {
  in.validate();
  const double m = static_cast<double>(in.M);
  const double k = static_cast<double>(in.k);
  const double complexity = in.R * std::sqrt(k) * in.rademacher / m;
  const double concentration = (in.R * in.R + std::log(k)) * std::sqrt(std::log(1.0 / in.delta_conf) / m);
  return complexity + concentration;
}

double bound_rhs(double l_un_value, double gen, const BoundInputs& inputs) {
  return inputs.alpha * l_un_value + inputs.eta * gen + inputs.eps_slack;
}

}  // namespace simskip
