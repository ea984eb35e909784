#include "simskip/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace simskip {

void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state, std::size_t t, const AdamConfig& cfg) {
  if (t < 1) {
    throw ValidationError("adam_step: step index starts at 1");
  }
  if (params.size() != grads.size()) {
    throw ShapeError("adam_step: parameter and gradient tensor counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != grads[i].size()) {
      throw ShapeError("adam_step: tensor " + std::to_string(i) + " shape mismatch");
    }
    for (double g : grads[i]) {
      if (!std::isfinite(g)) {
        throw NumericsError("adam_step: non-finite gradient in tensor " + std::to_string(i));
      }
    }
  }
  if (state.first.size() != params.size()) {
    state.first.assign(params.size(), {});
    state.second.assign(params.size(), {});
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.first[i].assign(params[i].size(), 0.0);
      state.second[i].assign(params[i].size(), 0.0);
    }
  }
  const double step = static_cast<double>(t);
  const double correction1 = 1.0 - std::pow(cfg.beta1, step);
  const double correction2 = 1.0 - std::pow(cfg.beta2, step);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.first[i];
    auto& v = state.second[i];
    for (std::size_t j = 0; j < params[i].size(); ++j) {
      const double g = grads[i][j];
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      params[i][j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning_rate must be positive");
  }
  if (batch_size < 2) {
    throw ValidationError("batch_size must be >= 2 (NT-Xent needs negatives)");
  }
  if (!(tau > 0.0)) {
    throw ValidationError("tau must be positive");
  }
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
    throw ValidationError("adam betas must lie in (0, 1)");
  }
  if (!(adam_eps > 0.0)) {
    throw ValidationError("adam_eps must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ValidationError("dropout_rate must lie in [0, 1)");
  }
  augment.validate();
}

namespace {

void check_finite(const SimSkipParams& params, std::size_t epoch) {
  for (auto t : trainable_tensors(params)) {
    for (double v : t) {
      if (!std::isfinite(v)) {
        throw NumericsError("parameters became non-finite during epoch " + std::to_string(epoch + 1));
      }
    }
  }
}

}  // namespace

TrainResult train(const EmbeddingDataset& dataset, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (dataset.count() < cfg.batch_size) {
    throw ValidationError("dataset has " + std::to_string(dataset.count()) + " rows, fewer than batch_size " +
                          std::to_string(cfg.batch_size));
  }
  const auto start = std::chrono::steady_clock::now();
  TrainResult result;
  result.params = init_params(dataset.dim(), cfg.seed, cfg.skip_enabled, cfg.zero_init_residual_out, cfg.dropout_rate);
  result.report.config = cfg;

  std::seed_seq seq{cfg.seed, cfg.augment.seed, std::uint64_t{0x5349'4d53'4b49'50}};
  Rng rng(seq);
  AdamState adam;
  const AdamConfig adam_cfg = cfg.adam();
  const std::size_t n = dataset.count();
  const std::size_t batches = n / cfg.batch_size;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Matrix batch(static_cast<Eigen::Index>(cfg.batch_size), static_cast<Eigen::Index>(dataset.dim()));

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      for (std::size_t i = 0; i < cfg.batch_size; ++i) {
        batch.row(static_cast<Eigen::Index>(i)) =
            dataset.vectors().row(static_cast<Eigen::Index>(order[b * cfg.batch_size + i]));
      }
      const Matrix views = make_pair_batch(batch, cfg.augment, rng);
      const auto where = [&] {
        return "epoch " + std::to_string(epoch + 1) + ", batch " + std::to_string(b + 1) + " (learning_rate " +
               std::to_string(cfg.learning_rate) + ")";
      };
      ContrastiveStep step;
      try {
        step = contrastive_step(result.params, views, cfg.tau, Mode::Train, rng, cfg.denominator);
      } catch (const NumericsError& e) {
        throw NumericsError(std::string(e.what()) + " at " + where());
      }
      if (!std::isfinite(step.loss)) {
        throw NumericsError("non-finite loss at " + where());
      }
      commit_running_stats(result.params, step.encoder_cache);
      ++result.report.steps;
      const auto params = trainable_tensors(result.params);
      const auto grads = gradient_tensors(std::as_const(step.grads));
      adam_step(params, grads, adam, result.report.steps, adam_cfg);
      loss_sum += step.loss;
    }
    check_finite(result.params, epoch);
    const double mean = loss_sum / static_cast<double>(batches);
    result.report.epoch_losses.push_back(mean);
    if (on_epoch) {
      on_epoch(epoch, mean);
    }
  }
  result.report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace simskip
