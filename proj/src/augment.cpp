#include "simskip/augment.hpp"

#include <algorithm>
#include <cctype>

namespace simskip {

std::string to_string(AugmentKind kind) {
  switch (kind) {
    case AugmentKind::Mask:
      return "mask";
    case AugmentKind::Gaussian:
      return "gaussian";
    case AugmentKind::MaskPlusGaussian:
      return "mask+gaussian";
  }
  return "unknown";
}

AugmentKind parse_augment_kind(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t == "mask") return AugmentKind::Mask;
  if (t == "gaussian" || t == "noise") return AugmentKind::Gaussian;
  if (t == "mask+gaussian" || t == "mask+noise" || t == "maskplusgaussian") return AugmentKind::MaskPlusGaussian;
  throw ValidationError("unknown augmentation kind '" + text + "'");
}

namespace {

void check_mask_prob(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ValidationError("mask_prob must lie in [0, 1]");
  }
}

void check_noise_scale(double s) {
  if (!(s >= 0.0) || !std::isfinite(s)) {
    throw ValidationError("noise_scale must be a finite nonnegative number");
  }
}

}  // namespace

void AugmentConfig::validate() const {
  check_mask_prob(mask_prob);
  check_noise_scale(noise_scale);
}

Vector random_mask(const Vector& x, double mask_prob, Rng& rng) {
  check_mask_prob(mask_prob);
  if (mask_prob == 0.0) {
    return x;
  }
  std::bernoulli_distribution masked(mask_prob);
  Vector out = x;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (masked(rng)) {
      out(i) = 0.0;
    }
  }
  return out;
}

Vector apply_mask(const Vector& x, std::span<const std::uint8_t> mask) {
  if (mask.size() != static_cast<std::size_t>(x.size())) {
    throw ShapeError("mask length does not match vector length");
  }
  Vector out = x;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (mask[static_cast<std::size_t>(i)] == 0) {
      out(i) = 0.0;
    }
  }
  return out;
}

Vector gaussian_noise(const Vector& x, double noise_scale, Rng& rng) {
  check_noise_scale(noise_scale);
  if (noise_scale == 0.0) {
    return x;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector out = x;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out(i) += noise_scale * normal(rng);
  }
  return out;
}

Vector augment_view(const Vector& x, const AugmentConfig& cfg, Rng& rng) {
  switch (cfg.kind) {
    case AugmentKind::Mask:
      return random_mask(x, cfg.mask_prob, rng);
    case AugmentKind::Gaussian:
      return gaussian_noise(x, cfg.noise_scale, rng);
    case AugmentKind::MaskPlusGaussian:
      return gaussian_noise(random_mask(x, cfg.mask_prob, rng), cfg.noise_scale, rng);
  }
  throw ValidationError("unknown augmentation kind");
}

std::pair<Vector, Vector> make_positive_pair(const Vector& x, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  Vector a = augment_view(x, cfg, rng);
  Vector b = augment_view(x, cfg, rng);
  return {std::move(a), std::move(b)};
}

Matrix make_pair_batch(const Matrix& batch, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  Matrix out(2 * batch.rows(), batch.cols());
  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    const Vector x = batch.row(i).transpose();
    auto [a, b] = make_positive_pair(x, cfg, rng);
    out.row(2 * i) = a.transpose();
    out.row(2 * i + 1) = b.transpose();
  }
  return out;
}

}  // namespace simskip
