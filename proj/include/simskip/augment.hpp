#ifndef SIMSKIP_AUGMENT_HPP_
#define SIMSKIP_AUGMENT_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>

#include "simskip/common.hpp"

namespace simskip {

using Rng = std::mt19937_64;

enum class AugmentKind { Mask, Gaussian, MaskPlusGaussian };

std::string to_string(AugmentKind kind);
/// Accepts "mask", "gaussian", "mask+gaussian" (case-insensitive). ValidationError otherwise.
AugmentKind parse_augment_kind(const std::string& text);

inline constexpr double kDefaultMaskProb = 0.2;
inline const double kDefaultNoiseScale = std::sqrt(0.13);

struct AugmentConfig {
  AugmentKind kind = AugmentKind::Mask;
  double mask_prob = kDefaultMaskProb;     // per-coordinate probability of zeroing
  double noise_scale = kDefaultNoiseScale;  // per-coordinate noise stddev
  std::uint64_t seed = 0;

  void validate() const;
};

/// out[i] = x[i] * m[i] with m[i] = 0 with probability mask_prob.
Vector random_mask(const Vector& x, double mask_prob, Rng& rng);
/// Elementwise product with a caller-supplied 0/1 mask.
Vector apply_mask(const Vector& x, std::span<const std::uint8_t> mask);

/// out = x + noise_scale * eps, eps ~ N(0, I).
Vector gaussian_noise(const Vector& x, double noise_scale, Rng& rng);

/// One augmented view according to cfg (mask first, then noise, for the combined kind).
Vector augment_view(const Vector& x, const AugmentConfig& cfg, Rng& rng);

/// Two views of x drawn with independent randomness from the same stream.
std::pair<Vector, Vector> make_positive_pair(const Vector& x, const AugmentConfig& cfg, Rng& rng);

/// For a batch of N rows returns 2N rows; rows 2i and 2i+1 are the two views of row i.
Matrix make_pair_batch(const Matrix& batch, const AugmentConfig& cfg, Rng& rng);

}  // namespace simskip

#endif  // SIMSKIP_AUGMENT_HPP_
