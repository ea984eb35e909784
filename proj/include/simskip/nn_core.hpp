#ifndef SIMSKIP_NN_CORE_HPP_
#define SIMSKIP_NN_CORE_HPP_

// Layer kit with explicit forward/backward passes. Activations are batches
// stored one example per row. Forward functions are pure and return a cache
// that the matching backward consumes.

#include <functional>
#include <span>
#include <utility>

#include "simskip/augment.hpp"
#include "simskip/common.hpp"

namespace simskip {

// ---------------------------------------------------------------- linear

/// y = x W^T + b, W is out_dim x in_dim.
struct LinearLayer {
  Matrix weight;
  Vector bias;

  LinearLayer() = default;
  LinearLayer(Matrix w, Vector b);
  static LinearLayer zeros(std::size_t in_dim, std::size_t out_dim);
  /// U(-1/sqrt(in_dim), 1/sqrt(in_dim)) for weights and bias.
  static LinearLayer uniform(std::size_t in_dim, std::size_t out_dim, Rng& rng);

  std::size_t in_dim() const { return static_cast<std::size_t>(weight.cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weight.rows()); }
  /// Weight entries only; biases are not counted.
  std::size_t weight_count() const { return static_cast<std::size_t>(weight.size()); }
};

struct LinearCache {
  Matrix input;
};

struct LinearGrads {
  Matrix weight;
  Vector bias;
};

std::pair<Matrix, LinearCache> linear_apply(const LinearLayer& layer, const Matrix& x, Mode mode = Mode::Train);

struct LinearBackward {
  LinearGrads grads;
  Matrix input_grad;
};

LinearBackward linear_backward(const LinearLayer& layer, const LinearCache& cache, const Matrix& upstream);

// ------------------------------------------------------------ batch norm

struct BatchNormLayer {
  Vector gamma;
  Vector beta;
  Vector running_mean;
  Vector running_var;
  double eps = 1e-5;
  double momentum = 0.1;

  /// gamma = 1, beta = 0, running stats (0, 1).
  static BatchNormLayer identity(std::size_t dim);
  std::size_t dim() const { return static_cast<std::size_t>(gamma.size()); }
};

struct BatchNormCache {
  Mode mode = Mode::Eval;
  Matrix normalized;  // x_hat, before the affine map
  Vector inv_std;
  Vector batch_mean;  // Train mode only
  Vector batch_var;   // biased, Train mode only
};

struct BatchNormGrads {
  Vector gamma;
  Vector beta;
};

/// Pure forward. Train mode normalizes with biased batch statistics (needs >= 2 rows).
std::pair<Matrix, BatchNormCache> batchnorm_forward(const BatchNormLayer& layer, const Matrix& x, Mode mode);

/// running <- (1 - momentum) running + momentum batch; no-op for Eval caches.
void update_running_stats(BatchNormLayer& layer, const BatchNormCache& cache);

/// Forward followed by the running-statistics update.
std::pair<Matrix, BatchNormCache> batchnorm_apply(BatchNormLayer& layer, const Matrix& x, Mode mode);

struct BatchNormBackward {
  BatchNormGrads grads;
  Matrix input_grad;
};

BatchNormBackward batchnorm_backward(const BatchNormLayer& layer, const BatchNormCache& cache,
                                     const Matrix& upstream);

// ------------------------------------------------------------------ relu

struct ReluCache {
  Matrix input;
};

std::pair<Matrix, ReluCache> relu_apply(const Matrix& x);
/// Passes the gradient where input > 0; zero elsewhere (including at 0).
Matrix relu_backward(const ReluCache& cache, const Matrix& upstream);

// --------------------------------------------------------------- dropout

struct DropoutLayer {
  double rate = 0.1;
};

struct DropoutCache {
  /// Per-entry multiplier: 0 or 1/(1-rate). Empty when the pass was the identity.
  Matrix scale;
};

/// Inverted dropout. Eval mode, or rate 0, is the exact identity.
std::pair<Matrix, DropoutCache> dropout_apply(const DropoutLayer& layer, const Matrix& x, Mode mode, Rng& rng);
/// Dropout with a fixed multiplier matrix, for deterministic checks.
std::pair<Matrix, DropoutCache> dropout_with_scale(const Matrix& x, Matrix scale);
Matrix dropout_backward(const DropoutCache& cache, const Matrix& upstream);

// --------------------------------------------------------- gradient check

/// Scalar function of a flat parameter vector.
using ScalarFunction = std::function<double(std::span<const double>)>;

struct GradCheckOptions {
  double step = 1e-5;
  /// Denominator floor: |a - n| / max(|a|, |n|, floor). Keeps near-zero
  /// components from producing huge ratios out of round-off noise.
  double floor = 1e-6;
};

/**
 * Compares `analytic` against central differences (f(p+h) - f(p-h)) / 2h, one
 * coordinate at a time, and returns the largest relative error.
 * Throws NumericsError on non-finite function values or gradients.
 */
double grad_check(const ScalarFunction& f, std::span<const double> params, std::span<const double> analytic,
                  const GradCheckOptions& options = {});

}  // namespace simskip

#endif  // SIMSKIP_NN_CORE_HPP_
