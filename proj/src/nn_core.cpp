#include "simskip/nn_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace simskip {

namespace {

std::string shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

}  // namespace

LinearLayer::LinearLayer(Matrix w, Vector b) : weight(std::move(w)), bias(std::move(b)) {
  if (bias.size() != weight.rows()) {
    throw ShapeError("bias length " + std::to_string(bias.size()) + " does not match weight " + shape(weight));
  }
}

LinearLayer LinearLayer::zeros(std::size_t in_dim, std::size_t out_dim) {
  return LinearLayer(Matrix::Zero(static_cast<Eigen::Index>(out_dim), static_cast<Eigen::Index>(in_dim)),
                     Vector::Zero(static_cast<Eigen::Index>(out_dim)));
}

LinearLayer LinearLayer::uniform(std::size_t in_dim, std::size_t out_dim, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  std::uniform_real_distribution<double> dist(-bound, bound);
  LinearLayer layer = zeros(in_dim, out_dim);
  for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
    layer.weight.data()[i] = dist(rng);
  }
  for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
    layer.bias(i) = dist(rng);
  }
  return layer;
}

std::pair<Matrix, LinearCache> linear_apply(const LinearLayer& layer, const Matrix& x, Mode) {
  if (x.cols() != layer.weight.cols()) {
    throw ShapeError("linear layer expects width " + std::to_string(layer.weight.cols()) + ", got input " +
                     shape(x));
  }
  Matrix y = x * layer.weight.transpose();
  y.rowwise() += layer.bias.transpose();
  return {std::move(y), LinearCache{x}};
}

LinearBackward linear_backward(const LinearLayer& layer, const LinearCache& cache, const Matrix& upstream) {
  if (upstream.rows() != cache.input.rows() || upstream.cols() != layer.weight.rows()) {
    throw ShapeError("linear backward: upstream " + shape(upstream) + " does not match forward output " +
                     std::to_string(cache.input.rows()) + "x" + std::to_string(layer.weight.rows()));
  }
  LinearBackward out;
  out.grads.weight = upstream.transpose() * cache.input;
  out.grads.bias = upstream.colwise().sum().transpose();
  out.input_grad = upstream * layer.weight;
  return out;
}

BatchNormLayer BatchNormLayer::identity(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return BatchNormLayer{Vector::Ones(d), Vector::Zero(d), Vector::Zero(d), Vector::Ones(d)};
}

std::pair<Matrix, BatchNormCache> batchnorm_forward(const BatchNormLayer& layer, const Matrix& x, Mode mode) {
  const Eigen::Index d = layer.gamma.size();
  if (x.cols() != d) {
    throw ShapeError("batch norm expects width " + std::to_string(d) + ", got input " + shape(x));
  }
  BatchNormCache cache;
  cache.mode = mode;
  Vector mean;
  Vector var;
  if (mode == Mode::Train) {
    if (x.rows() < 2) {
      throw ValidationError("batch norm in Train mode needs at least 2 rows, got " + std::to_string(x.rows()));
    }
    const double b = static_cast<double>(x.rows());
    mean = x.colwise().sum().transpose() / b;
    var = (x.rowwise() - mean.transpose()).array().square().colwise().sum().transpose() / b;
    cache.batch_mean = mean;
    cache.batch_var = var;
  } else {
    mean = layer.running_mean;
    var = layer.running_var;
  }
  cache.inv_std = (var.array() + layer.eps).rsqrt().matrix();
  cache.normalized = (x.rowwise() - mean.transpose()).array().rowwise() * cache.inv_std.transpose().array();
  Matrix y = cache.normalized.array().rowwise() * layer.gamma.transpose().array();
  y.rowwise() += layer.beta.transpose();
  return {std::move(y), std::move(cache)};
}

void update_running_stats(BatchNormLayer& layer, const BatchNormCache& cache) {
  if (cache.mode != Mode::Train) {
    return;
  }
  layer.running_mean = (1.0 - layer.momentum) * layer.running_mean + layer.momentum * cache.batch_mean;
  layer.running_var = (1.0 - layer.momentum) * layer.running_var + layer.momentum * cache.batch_var;
}

std::pair<Matrix, BatchNormCache> batchnorm_apply(BatchNormLayer& layer, const Matrix& x, Mode mode) {
  auto result = batchnorm_forward(layer, x, mode);
  update_running_stats(layer, result.second);
  return result;
}

BatchNormBackward batchnorm_backward(const BatchNormLayer& layer, const BatchNormCache& cache,
                                     const Matrix& upstream) {
  if (upstream.rows() != cache.normalized.rows() || upstream.cols() != cache.normalized.cols()) {
    throw ShapeError("batch norm backward: upstream " + shape(upstream) + " vs forward " + shape(cache.normalized));
  }
  BatchNormBackward out;
  out.grads.gamma = (upstream.array() * cache.normalized.array()).colwise().sum().transpose();
  out.grads.beta = upstream.colwise().sum().transpose();

  const Matrix dxhat = upstream.array().rowwise() * layer.gamma.transpose().array();
  if (cache.mode == Mode::Eval) {
    out.input_grad = dxhat.array().rowwise() * cache.inv_std.transpose().array();
    return out;
  }
  // dx = inv_std / B * (B dxhat - sum(dxhat) - xhat * sum(dxhat * xhat))
  const double b = static_cast<double>(upstream.rows());
  const RowVector sum_dxhat = dxhat.colwise().sum();
  const RowVector sum_dxhat_xhat = (dxhat.array() * cache.normalized.array()).colwise().sum();
  Matrix centered = (b * dxhat).rowwise() - sum_dxhat;
  centered -= (cache.normalized.array().rowwise() * sum_dxhat_xhat.array()).matrix();
  out.input_grad = (centered.array().rowwise() * (cache.inv_std.transpose().array() / b)).matrix();
  return out;
}

std::pair<Matrix, ReluCache> relu_apply(const Matrix& x) {
  Matrix y = x.cwiseMax(0.0);
  return {std::move(y), ReluCache{x}};
}

Matrix relu_backward(const ReluCache& cache, const Matrix& upstream) {
  if (upstream.rows() != cache.input.rows() || upstream.cols() != cache.input.cols()) {
    throw ShapeError("relu backward: upstream " + shape(upstream) + " vs forward " + shape(cache.input));
  }
  return (cache.input.array() > 0.0).select(upstream, 0.0);
}

std::pair<Matrix, DropoutCache> dropout_apply(const DropoutLayer& layer, const Matrix& x, Mode mode, Rng& rng) {
  if (!(layer.rate >= 0.0 && layer.rate < 1.0)) {
    throw ValidationError("dropout rate must lie in [0, 1)");
  }
  if (mode == Mode::Eval || layer.rate == 0.0) {
    return {x, DropoutCache{}};
  }
  std::bernoulli_distribution drop(layer.rate);
  const double keep_scale = 1.0 / (1.0 - layer.rate);
  Matrix scale(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < scale.size(); ++i) {
    scale.data()[i] = drop(rng) ? 0.0 : keep_scale;
  }
  return dropout_with_scale(x, std::move(scale));
}

std::pair<Matrix, DropoutCache> dropout_with_scale(const Matrix& x, Matrix scale) {
  if (scale.rows() != x.rows() || scale.cols() != x.cols()) {
    throw ShapeError("dropout scale " + shape(scale) + " vs input " + shape(x));
  }
  Matrix y = x.cwiseProduct(scale);
  return {std::move(y), DropoutCache{std::move(scale)}};
}

Matrix dropout_backward(const DropoutCache& cache, const Matrix& upstream) {
  if (cache.scale.size() == 0) {
    return upstream;
  }
  if (upstream.rows() != cache.scale.rows() || upstream.cols() != cache.scale.cols()) {
    throw ShapeError("dropout backward: upstream " + shape(upstream) + " vs mask " + shape(cache.scale));
  }
  return upstream.cwiseProduct(cache.scale);
}

double grad_check(const ScalarFunction& f, std::span<const double> params, std::span<const double> analytic,
                  const GradCheckOptions& options) {
  if (params.size() != analytic.size()) {
    throw ShapeError("grad_check: " + std::to_string(analytic.size()) + " gradient entries for " +
                     std::to_string(params.size()) + " parameters");
  }
  std::vector<double> probe(params.begin(), params.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double original = probe[i];
    probe[i] = original + options.step;
    const double plus = f(probe);
    probe[i] = original - options.step;
    const double minus = f(probe);
    probe[i] = original;
    const double numeric = (plus - minus) / (2.0 * options.step);
    if (!std::isfinite(plus) || !std::isfinite(minus) || !std::isfinite(analytic[i])) {
      throw NumericsError("grad_check: non-finite value at parameter " + std::to_string(i));
    }
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), options.floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace simskip
