#ifndef SIMSKIP_SYNTH_DATA_HPP_
#define SIMSKIP_SYNTH_DATA_HPP_

#include <cstdint>

#include "simskip/embedding_store.hpp"

namespace simskip {

/// Isotropic Gaussian clusters with means c * class_separation * e1.
struct MixtureSpec {
  std::size_t num_classes = 2;
  std::size_t dim = 16;
  std::size_t points_per_class = 200;
  double class_separation = 3.0;
  double cluster_sigma = 1.0;
  std::uint64_t seed = 0;
};

/// Rows are emitted class by class; labels are the generating class.
EmbeddingDataset generate_gaussian_mixture(const MixtureSpec& spec);

/**
 * Blends every row with a random row of the same dataset:
 * x <- (1 - s) x + s (x_perm + noise), where the partner row comes from a seeded
 * permutation and the noise has 0.1 times the pooled per-coordinate stddev.
 * s = 0 returns the input unchanged. Labels are never touched.
 */
EmbeddingDataset apply_class_mixing(const EmbeddingDataset& dataset, double mix_strength, std::uint64_t seed);

}  // namespace simskip

#endif  // SIMSKIP_SYNTH_DATA_HPP_
