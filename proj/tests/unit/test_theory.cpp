#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "simskip/synth_data.hpp"
#include "simskip/theory.hpp"

namespace simskip {
namespace {

EmbeddingDataset rows(std::initializer_list<std::initializer_list<double>> values, std::vector<Label> labels) {
  Matrix m(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : values) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return EmbeddingDataset(m, std::move(labels));
}

const EmbedFn kIdentity = [](const Vector& x) { return x; };

TEST(Triplets, ForcedChoice) {
  const auto d = rows({{0.0}, {1.0}}, {0, 0});
  const auto t = sample_triplets(d, 1, 1, 5);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_NE(t[0].anchor, t[0].positive);
  EXPECT_EQ(t[0].anchor + t[0].positive, 1u);
  EXPECT_EQ(t[0].negatives.size(), 1u);
}

TEST(Triplets, PositivesShareLabelAndNegativesAreUniform) {
  const auto d = generate_gaussian_mixture(MixtureSpec{2, 2, 100, 3.0, 1.0, 0});
  const auto& labels = *d.labels();
  const auto t = sample_triplets(d, 1, 1000, 9);
  std::size_t same = 0;
  for (const auto& s : t) {
    EXPECT_EQ(labels[s.anchor], labels[s.positive]);
    EXPECT_NE(s.anchor, s.positive);
    same += labels[s.negatives[0]] == labels[s.anchor] ? 1 : 0;
  }
  EXPECT_NEAR(static_cast<double>(same) / 1000.0, 0.5, 0.05);
}

TEST(Triplets, Deterministic) {
  const auto d = generate_gaussian_mixture(MixtureSpec{3, 2, 10, 3.0, 1.0, 0});
  const auto a = sample_triplets(d, 3, 50, 4);
  const auto b = sample_triplets(d, 3, 50, 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].anchor, b[i].anchor);
    EXPECT_EQ(a[i].positive, b[i].positive);
    EXPECT_EQ(a[i].negatives, b[i].negatives);
  }
}

TEST(Triplets, SingletonClassIsValidationError) {
  EXPECT_THROW(sample_triplets(rows({{0.0}, {1.0}, {2.0}}, {0, 0, 1}), 1, 1, 0), ValidationError);
  EXPECT_THROW(sample_triplets(EmbeddingDataset(Matrix::Zero(3, 1)), 1, 1, 0), ValidationError);
}

TEST(UnsupLoss, HandExample) {
  const auto d = rows({{1, 0}, {1, 0}, {0, 1}}, {0, 0, 1});
  const std::vector<TripletSample> t = {TripletSample{0, 1, {2}}};
  EXPECT_NEAR(empirical_unsup_loss(d, kIdentity, t, LossKind::Logistic), std::log2(1.0 + std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(empirical_unsup_loss(d, kIdentity, t, LossKind::Logistic), 0.45194, 1e-5);
  EXPECT_DOUBLE_EQ(empirical_unsup_loss(d, kIdentity, t, LossKind::Hinge), 0.0);
}

TEST(UnsupLoss, ConstantEmbeddingGivesLogOnePlusK) {
  const auto d = rows({{1, 0}, {1, 0}, {0, 1}, {3, 3}}, {0, 0, 1, 1});
  const EmbedFn constant = [](const Vector&) { return Vector::Ones(3).eval(); };
  const std::vector<TripletSample> t = {TripletSample{0, 1, {2, 3, 2}}, TripletSample{2, 3, {0, 1, 1}}};
  EXPECT_NEAR(empirical_unsup_loss(d, constant, t, LossKind::Logistic), std::log2(4.0), 1e-15);
}

TEST(UnsupLoss, NonFiniteEmbeddingIsNumericsError) {
  const auto d = rows({{1, 0}, {1, 0}, {0, 1}}, {0, 0, 1});
  const EmbedFn broken = [](const Vector& x) { return (x / 0.0).eval(); };
  const std::vector<TripletSample> t = {TripletSample{0, 1, {2}}};
  EXPECT_THROW(empirical_unsup_loss(d, broken, t, LossKind::Hinge), NumericsError);
}

// Class means at -5 e1 and +5 e1: every cross-class margin is positive, while a
// same-class negative gives a margin of random sign. With uniform negatives over
// two balanced classes the expected nonnegative fraction is 1/2 + 1/2 * 1/2.
EmbeddingDataset centered_mixture(std::uint64_t seed) {
  const auto d = generate_gaussian_mixture(MixtureSpec{2, 8, 200, 10.0, 1.0, seed});
  Matrix m = d.vectors();
  m.col(0).array() -= 5.0;
  return EmbeddingDataset(m, d.labels());
}

TEST(SkipInequality, SeparatedMixtureHolds) {
  const auto d = centered_mixture(2);
  const auto report = skip_inequality_check(d, sample_triplets(d, 1, 1000, 3));
  EXPECT_NEAR(report.nonneg_margin_fraction, 0.75, 0.05);
  EXPECT_TRUE(report.holds);
  EXPECT_EQ(report.triplets, 1000u);
  EXPECT_LT(report.l_un_doubled_nonneg, report.l_un_identity_nonneg);
}

TEST(SkipInequality, CrossClassTripletsAreAllNonnegative) {
  const auto d = centered_mixture(4);
  const auto& labels = *d.labels();
  std::vector<TripletSample> cross;
  for (const auto& t : sample_triplets(d, 1, 1000, 5)) {
    if (labels[t.negatives[0]] != labels[t.anchor]) cross.push_back(t);
  }
  const auto report = skip_inequality_check(d, cross);
  EXPECT_GE(report.nonneg_margin_fraction, 0.99);
  EXPECT_TRUE(report.holds);
}

TEST(SkipInequality, SingleTripletWithHalfMargin) {
  // u = x.(x+ - x-) = 0.5
  const auto d = rows({{1, 0}, {0.5, 0}, {0, 1}}, {0, 0, 1});
  const auto report = skip_inequality_check(d, {TripletSample{0, 1, {2}}});
  EXPECT_NEAR(report.l_un_identity, std::log2(1.0 + std::exp(-0.5)), 1e-14);
  EXPECT_NEAR(report.l_un_doubled, std::log2(1.0 + std::exp(-2.0)), 1e-14);
  EXPECT_NEAR(report.l_un_identity, 0.6840, 1e-4);
  EXPECT_NEAR(report.l_un_doubled, 0.1832, 1e-4);
  EXPECT_DOUBLE_EQ(report.nonneg_margin_fraction, 1.0);
  EXPECT_TRUE(report.holds);
}

TEST(SkipInequality, AllNonnegativeMarginsAlwaysHold) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    // Points on the positive half line: x (x+ - x-) >= 0 when x+ >= x-.
    Matrix m(6, 1);
    for (Eigen::Index i = 0; i < 6; ++i) m(i, 0) = unit(rng) + (i < 3 ? 2.0 : 0.0);
    const EmbeddingDataset d(m, std::vector<Label>{0, 0, 0, 1, 1, 1});
    std::vector<TripletSample> t;
    for (std::size_t a = 0; a < 3; ++a) t.push_back(TripletSample{a, (a + 1) % 3, {3, 4, 5}});
    const auto report = skip_inequality_check(d, t);
    EXPECT_DOUBLE_EQ(report.nonneg_margin_fraction, 1.0);
    EXPECT_TRUE(report.holds);
  }
}

TEST(GenM, HandValue) {
  BoundInputs in;
  in.R = 1.0;
  in.k = 1;
  in.rademacher = 1.0;
  in.M = 100;
  in.delta_conf = 0.05;
  EXPECT_NEAR(gen_m(in), 0.01 + std::sqrt(std::log(20.0) / 100.0), 1e-15);
  EXPECT_NEAR(gen_m(in), 0.18309, 1e-5);
}

TEST(GenM, VanishingTerms) {
  BoundInputs in;
  in.rademacher = 0.0;
  in.k = 1;
  in.delta_conf = 1.0 - 1e-12;
  EXPECT_NEAR(gen_m(in), 0.0, 1e-5);
}

TEST(GenM, StrictlyDecreasingInM) {
  BoundInputs in;
  in.rademacher = 1.0;
  in.k = 4;
  double previous = INFINITY;
  for (std::size_t m : {10u, 20u, 100u, 200u, 1000u}) {
    in.M = m;
    const double g = gen_m(in);
    EXPECT_LT(g, previous) << "M=" << m;
    previous = g;
  }
}

TEST(GenM, InvalidInputsAreValidationErrors) {
  BoundInputs in;
  in.delta_conf = 1.0;
  EXPECT_THROW(gen_m(in), ValidationError);
  in = BoundInputs{};
  in.M = 0;
  EXPECT_THROW(gen_m(in), ValidationError);
  in = BoundInputs{};
  in.R = 0.0;
  EXPECT_THROW(gen_m(in), ValidationError);
}

TEST(BoundRhs, Values) {
  BoundInputs in;
  in.alpha = 1.0;
  in.eta = 0.0;
  in.eps_slack = 0.0;
  EXPECT_DOUBLE_EQ(bound_rhs(0.37, 5.0, in), 0.37);
  in.eta = 1.0;
  in.eps_slack = 0.1;
  EXPECT_NEAR(bound_rhs(0.45, 0.18309, in), 0.73309, 1e-12);
  in.alpha = 0.0;
  in.eta = 0.0;
  in.eps_slack = 0.0;
  EXPECT_DOUBLE_EQ(bound_rhs(0.0, 0.0, in), 0.0);
}

}  // namespace
}  // namespace simskip
