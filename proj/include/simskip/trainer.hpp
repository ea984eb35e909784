#ifndef SIMSKIP_TRAINER_HPP_
#define SIMSKIP_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "simskip/augment.hpp"
#include "simskip/simskip_model.hpp"

namespace simskip {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moment estimates, one buffer per parameter tensor.
struct AdamState {
  std::vector<std::vector<double>> first;
  std::vector<std::vector<double>> second;
};

/**
 * One bias-corrected Adam update at step t (t >= 1). Moments are allocated
 * lazily on first use. The gradients are checked before anything is
 * modified; a non-finite entry raises NumericsError and leaves params intact.
 */
void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state, std::size_t t, const AdamConfig& cfg);

/// Learning rates swept by `refine --lr-sweep`.
inline const std::vector<double> kLearningRateGrid = {1e-3, 3e-4, 3e-5, 1e-5};

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 256;
  std::size_t epochs = 100;
  double tau = kDefaultTemperature;
  std::uint64_t seed = 0;
  AugmentConfig augment;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool zero_init_residual_out = true;
  bool skip_enabled = true;
  double dropout_rate = 0.1;
  NtXentDenominator denominator = NtXentDenominator::AllButSelf;

  void validate() const;
  AdamConfig adam() const { return AdamConfig{learning_rate, adam_beta1, adam_beta2, adam_eps}; }
};

/**
 * Plain-text "key = value" lines; '#' starts a comment. Keys are the TrainConfig
 * field names, with the augmentation under augment.kind / augment.mask_prob /
 * augment.noise_scale / augment.seed. Unknown keys and malformed values raise
 * ValidationError. Missing keys keep their defaults.
 */
TrainConfig parse_train_config(std::istream& in, TrainConfig base = {});
TrainConfig load_train_config(const std::filesystem::path& path, TrainConfig base = {});
/// Inverse of parse_train_config.
std::string format_train_config(const TrainConfig& cfg);

struct TrainReport {
  std::vector<double> epoch_losses;
  std::size_t steps = 0;
  double wall_time_seconds = 0.0;
  std::string checkpoint_path;
  TrainConfig config;
};

struct TrainResult {
  SimSkipParams params;
  TrainReport report;
};

/// Called after every epoch with (epoch index, mean loss).
using EpochCallback = std::function<void(std::size_t, double)>;

/**
 * Shuffled minibatch training: every step builds 2N augmented views, runs the
 * encoder and projector in Train mode, takes the NT-Xent loss and applies one
 * Adam update. The trailing partial batch of each epoch is dropped.
 * Deterministic for a fixed (dataset, cfg).
 */
TrainResult train(const EmbeddingDataset& dataset, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace simskip

#endif  // SIMSKIP_TRAINER_HPP_
