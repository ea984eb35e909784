#include <gtest/gtest.h>

#include <cstdint>
#include <vector>

#include "simskip/augment.hpp"

namespace simskip {
namespace {

Vector iota_vector(Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = static_cast<double>(i + 1);
  return v;
}

TEST(Mask, ZeroProbabilityIsIdentity) {
  Rng rng(1);
  const Vector x = iota_vector(6);
  EXPECT_EQ(random_mask(x, 0.0, rng), x);
}

TEST(Mask, FixedMaskIsElementwiseProduct) {
  Vector x(4);
  x << 1, 2, 3, 4;
  const std::vector<std::uint8_t> m = {1, 0, 1, 1};
  Vector expected(4);
  expected << 1, 0, 3, 4;
  EXPECT_EQ(apply_mask(x, m), expected);
}

TEST(Mask, FixedMaskLengthMismatchIsShapeError) {
  const std::vector<std::uint8_t> m = {1, 0};
  EXPECT_THROW(apply_mask(iota_vector(3), m), ShapeError);
}

TEST(Mask, ProbabilityOutsideUnitIntervalIsValidationError) {
  Rng rng(1);
  EXPECT_THROW(random_mask(iota_vector(3), 1.5, rng), ValidationError);
  EXPECT_THROW(random_mask(iota_vector(3), -0.1, rng), ValidationError);
}

TEST(Mask, MaskedFractionConcentratesAtTwentyPercent) {
  Rng rng(42);
  const Vector x = Vector::Ones(32);
  std::size_t masked = 0;
  const std::size_t draws = 100000;
  for (std::size_t t = 0; t < draws; ++t) {
    masked += static_cast<std::size_t>((random_mask(x, kDefaultMaskProb, rng).array() == 0.0).count());
  }
  const double fraction = static_cast<double>(masked) / static_cast<double>(draws * 32);
  EXPECT_NEAR(fraction, 0.2, 0.01);
}

TEST(Noise, ZeroScaleIsIdentity) {
  Rng rng(1);
  const Vector x = iota_vector(5);
  EXPECT_EQ(gaussian_noise(x, 0.0, rng), x);
}

TEST(Noise, NegativeScaleIsValidationError) {
  Rng rng(1);
  EXPECT_THROW(gaussian_noise(iota_vector(2), -1.0, rng), ValidationError);
}

TEST(Noise, MomentsMatchConfiguredScale) {
  for (double delta : {0.5, kDefaultNoiseScale}) {
    Rng rng(7);
    const Eigen::Index d = 8;
    const std::size_t draws = 100000;
    Vector sum = Vector::Zero(d);
    Vector sum_sq = Vector::Zero(d);
    for (std::size_t t = 0; t < draws; ++t) {
      const Vector y = gaussian_noise(Vector::Zero(d), delta, rng);
      sum += y;
      sum_sq += y.cwiseProduct(y);
    }
    const double n = static_cast<double>(draws);
    for (Eigen::Index c = 0; c < d; ++c) {
      const double mean = sum(c) / n;
      const double var = sum_sq(c) / n - mean * mean;
      EXPECT_NEAR(mean, 0.0, 0.02);
      EXPECT_NEAR(var, delta * delta, 0.05 * delta * delta);
    }
  }
}

TEST(Noise, DefaultVarianceIsPointOneThree) {
  EXPECT_NEAR(kDefaultNoiseScale * kDefaultNoiseScale, 0.13, 1e-15);
}

TEST(PositivePair, MaskWithZeroProbabilityReturnsTwoCopies) {
  Rng rng(3);
  AugmentConfig cfg;
  cfg.kind = AugmentKind::Mask;
  cfg.mask_prob = 0.0;
  const Vector x = iota_vector(7);
  const auto [a, b] = make_positive_pair(x, cfg, rng);
  EXPECT_EQ(a, x);
  EXPECT_EQ(b, x);
}

TEST(PositivePair, GaussianViewsDiffer) {
  Rng rng(3);
  AugmentConfig cfg;
  cfg.kind = AugmentKind::Gaussian;
  const Vector x = iota_vector(4);
  for (int t = 0; t < 100; ++t) {
    const auto [a, b] = make_positive_pair(x, cfg, rng);
    EXPECT_FALSE(a == b);
  }
}

TEST(PositivePair, CombinedMasksBeforeNoise) {
  AugmentConfig cfg;
  cfg.kind = AugmentKind::MaskPlusGaussian;
  cfg.mask_prob = 0.5;
  cfg.noise_scale = 0.3;
  const Vector x = Vector::Constant(16, 100.0);
  Rng rng(11);
  // Reproduce the draw order: mask first, then noise, on the same stream.
  Rng replay(11);
  const Vector view = augment_view(x, cfg, rng);
  const Vector masked = random_mask(x, cfg.mask_prob, replay);
  const Vector expected = gaussian_noise(masked, cfg.noise_scale, replay);
  EXPECT_EQ(view, expected);
  std::size_t zeros = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (masked(i) == 0.0) {
      ++zeros;
      // A masked coordinate carries pure noise, far from the original value.
      EXPECT_LT(std::abs(view(i)), 3.0);
    }
  }
  EXPECT_GT(zeros, 0u);
}

TEST(PairBatch, RowsAreInterleavedViews) {
  AugmentConfig cfg;
  cfg.mask_prob = 0.0;
  Matrix batch(3, 2);
  batch << 1, 2, 3, 4, 5, 6;
  Rng rng(0);
  const Matrix views = make_pair_batch(batch, cfg, rng);
  ASSERT_EQ(views.rows(), 6);
  for (Eigen::Index i = 0; i < 3; ++i) {
    EXPECT_EQ(views.row(2 * i), batch.row(i));
    EXPECT_EQ(views.row(2 * i + 1), batch.row(i));
  }
}

TEST(AugmentKindText, RoundTrip) {
  for (auto kind : {AugmentKind::Mask, AugmentKind::Gaussian, AugmentKind::MaskPlusGaussian}) {
    EXPECT_EQ(parse_augment_kind(to_string(kind)), kind);
  }
  EXPECT_THROW(parse_augment_kind("rotate"), ValidationError);
}

}  // namespace
}  // namespace simskip
