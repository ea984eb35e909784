#include <gtest/gtest.h>

#include <vector>

#include "matrix_helpers.hpp"
#include "simskip/nn_core.hpp"

namespace simskip {
namespace {

using testing::random_matrix;

std::vector<double> flat(const Matrix& m) { return {m.data(), m.data() + m.size()}; }
std::vector<double> flat(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Matrix unflat(std::span<const double> p, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Matrix>(p.data(), rows, cols);
}

Vector unflat(std::span<const double> p) { return Eigen::Map<const Vector>(p.data(), static_cast<Eigen::Index>(p.size())); }

// Scalar probe loss: <upstream, y>.
double contract(const Matrix& y, const Matrix& upstream) { return (y.array() * upstream.array()).sum(); }

TEST(Linear, IdentityWeightsPassInputThrough) {
  const LinearLayer layer(Matrix::Identity(3, 3), Vector::Zero(3));
  const Matrix x = random_matrix(4, 3, 1);
  EXPECT_EQ(linear_apply(layer, x).first, x);
}

TEST(Linear, HandComputedProduct) {
  Matrix w(2, 2);
  w << 1, 2, 3, 4;
  const LinearLayer layer(w, Vector::Zero(2));
  Matrix x(1, 2);
  x << 1, 1;
  Matrix expected(1, 2);
  expected << 3, 7;
  EXPECT_EQ(linear_apply(layer, x).first, expected);
}

TEST(Linear, WidthMismatchIsShapeError) {
  const LinearLayer layer = LinearLayer::zeros(3, 2);
  EXPECT_THROW(linear_apply(layer, Matrix::Zero(2, 4)), ShapeError);
  EXPECT_THROW(LinearLayer(Matrix::Zero(2, 3), Vector::Zero(3)), ShapeError);
}

TEST(Linear, ZeroUpstreamGivesZeroGradients) {
  Rng rng(2);
  const auto layer = LinearLayer::uniform(2, 3, rng);
  const auto [y, cache] = linear_apply(layer, random_matrix(4, 2, 3));
  const auto back = linear_backward(layer, cache, Matrix::Zero(4, 3));
  EXPECT_TRUE(back.grads.weight.isZero(0));
  EXPECT_TRUE(back.grads.bias.isZero(0));
  EXPECT_TRUE(back.input_grad.isZero(0));
}

TEST(Linear, GradientsMatchFiniteDifferences) {
  Rng rng(4);
  const auto layer = LinearLayer::uniform(2, 3, rng);
  const Matrix x = random_matrix(4, 2, 5);
  const Matrix up = random_matrix(4, 3, 6);
  const auto back = linear_backward(layer, linear_apply(layer, x).second, up);

  const auto fw = [&](std::span<const double> p) {
    return contract(linear_apply(LinearLayer(unflat(p, 3, 2), layer.bias), x).first, up);
  };
  EXPECT_LT(grad_check(fw, flat(layer.weight), flat(back.grads.weight)), 1e-6);
  const auto fb = [&](std::span<const double> p) {
    return contract(linear_apply(LinearLayer(layer.weight, unflat(p)), x).first, up);
  };
  EXPECT_LT(grad_check(fb, flat(layer.bias), flat(back.grads.bias)), 1e-6);
  const auto fx = [&](std::span<const double> p) { return contract(linear_apply(layer, unflat(p, 4, 2)).first, up); };
  EXPECT_LT(grad_check(fx, flat(x), flat(back.input_grad)), 1e-6);
}

TEST(Linear, DuplicatedRowsDoubleWeightGradient) {
  Rng rng(7);
  const auto layer = LinearLayer::uniform(3, 2, rng);
  const Matrix row = random_matrix(1, 3, 8);
  const Matrix g = random_matrix(1, 2, 9);
  Matrix two_rows(2, 3);
  two_rows << row, row;
  Matrix two_g(2, 2);
  two_g << g, g;
  const auto single = linear_backward(layer, linear_apply(layer, row).second, g);
  const auto pair = linear_backward(layer, linear_apply(layer, two_rows).second, two_g);
  EXPECT_TRUE(pair.grads.weight.isApprox(2.0 * single.grads.weight, 1e-15));
}

TEST(BatchNorm, TrainModeHandExample) {
  auto layer = BatchNormLayer::identity(1);
  Matrix x(2, 1);
  x << 1, 3;
  const auto [y, cache] = batchnorm_forward(layer, x, Mode::Train);
  const double expected = 1.0 / std::sqrt(1.0 + 1e-5);
  EXPECT_NEAR(y(0, 0), -expected, 1e-15);
  EXPECT_NEAR(y(1, 0), expected, 1e-15);
  EXPECT_NEAR(y(1, 0), 0.999995, 1e-6);
}

TEST(BatchNorm, EvalWithUnitStatisticsIsNearIdentity) {
  const auto layer = BatchNormLayer::identity(3);
  const Matrix x = random_matrix(5, 3, 1);
  const Matrix y = batchnorm_forward(layer, x, Mode::Eval).first;
  EXPECT_TRUE(y.isApprox(x / std::sqrt(1.0 + 1e-5), 1e-15));
  EXPECT_LT((y - x).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(BatchNorm, ConstantColumnNormalizesToZero) {
  Matrix x(2, 1);
  x << 5, 5;
  const auto [y, cache] = batchnorm_forward(BatchNormLayer::identity(1), x, Mode::Train);
  EXPECT_EQ(cache.normalized(0, 0), 0.0);
  EXPECT_EQ(cache.normalized(1, 0), 0.0);
}

TEST(BatchNorm, SingleRowTrainIsValidationError) {
  EXPECT_THROW(batchnorm_forward(BatchNormLayer::identity(2), Matrix::Zero(1, 2), Mode::Train), ValidationError);
  EXPECT_NO_THROW(batchnorm_forward(BatchNormLayer::identity(2), Matrix::Zero(1, 2), Mode::Eval));
}

TEST(BatchNorm, ForwardIsPureAndApplyUpdatesRunningStats) {
  auto layer = BatchNormLayer::identity(1);
  Matrix x(2, 1);
  x << 1, 3;
  batchnorm_forward(layer, x, Mode::Train);
  EXPECT_EQ(layer.running_mean(0), 0.0);
  batchnorm_apply(layer, x, Mode::Train);
  EXPECT_NEAR(layer.running_mean(0), 0.2, 1e-15);
  EXPECT_NEAR(layer.running_var(0), 0.9 + 0.1 * 1.0, 1e-15);
  batchnorm_apply(layer, x, Mode::Eval);
  EXPECT_NEAR(layer.running_mean(0), 0.2, 1e-15);
}

void check_batchnorm_gradients(Mode mode, double tol) {
  Rng rng(11);
  BatchNormLayer layer = BatchNormLayer::identity(3);
  std::normal_distribution<double> normal;
  for (Eigen::Index c = 0; c < 3; ++c) {
    layer.gamma(c) = 1.0 + 0.5 * normal(rng);
    layer.beta(c) = normal(rng);
    layer.running_mean(c) = normal(rng);
    layer.running_var(c) = 0.5 + std::abs(normal(rng));
  }
  const Matrix x = random_matrix(5, 3, 12, 2.0);
  const Matrix up = random_matrix(5, 3, 13);
  const auto back = batchnorm_backward(layer, batchnorm_forward(layer, x, mode).second, up);

  const auto fg = [&](std::span<const double> p) {
    BatchNormLayer l = layer;
    l.gamma = unflat(p);
    return contract(batchnorm_forward(l, x, mode).first, up);
  };
  EXPECT_LT(grad_check(fg, flat(layer.gamma), flat(back.grads.gamma)), tol);
  const auto fb = [&](std::span<const double> p) {
    BatchNormLayer l = layer;
    l.beta = unflat(p);
    return contract(batchnorm_forward(l, x, mode).first, up);
  };
  EXPECT_LT(grad_check(fb, flat(layer.beta), flat(back.grads.beta)), tol);
  const auto fx = [&](std::span<const double> p) {
    return contract(batchnorm_forward(layer, unflat(p, 5, 3), mode).first, up);
  };
  EXPECT_LT(grad_check(fx, flat(x), flat(back.input_grad)), tol);
}

TEST(BatchNorm, TrainGradientsMatchFiniteDifferences) { check_batchnorm_gradients(Mode::Train, 1e-6); }
TEST(BatchNorm, EvalGradientsMatchFiniteDifferences) { check_batchnorm_gradients(Mode::Eval, 1e-6); }

TEST(BatchNorm, ZeroUpstreamGivesZeroGradients) {
  const auto layer = BatchNormLayer::identity(3);
  const auto cache = batchnorm_forward(layer, random_matrix(5, 3, 1), Mode::Train).second;
  const auto back = batchnorm_backward(layer, cache, Matrix::Zero(5, 3));
  EXPECT_TRUE(back.grads.gamma.isZero(0));
  EXPECT_TRUE(back.grads.beta.isZero(0));
  EXPECT_TRUE(back.input_grad.isZero(0));
}

TEST(Relu, ForwardAndBackward) {
  Matrix x(1, 3);
  x << -1, 0, 2;
  Matrix expected(1, 3);
  expected << 0, 0, 2;
  const auto [y, cache] = relu_apply(x);
  EXPECT_EQ(y, expected);

  Matrix x2(1, 2);
  x2 << -1, 2;
  Matrix g(1, 2);
  g << 5, 5;
  Matrix expected_g(1, 2);
  expected_g << 0, 5;
  EXPECT_EQ(relu_backward(relu_apply(x2).second, g), expected_g);
  // Subgradient at exactly zero is zero.
  EXPECT_EQ(relu_backward(cache, Matrix::Ones(1, 3))(0, 1), 0.0);
}

TEST(Relu, GradientsMatchFiniteDifferencesAwayFromKink) {
  Matrix x = random_matrix(4, 3, 21);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::abs(x.data()[i]) < 0.1) x.data()[i] = 0.5;
  }
  const Matrix up = random_matrix(4, 3, 22);
  const Matrix g = relu_backward(relu_apply(x).second, up);
  const auto f = [&](std::span<const double> p) { return contract(relu_apply(unflat(p, 4, 3)).first, up); };
  EXPECT_LT(grad_check(f, flat(x), flat(g)), 1e-6);
}

TEST(Dropout, RateZeroAndEvalAreIdentity) {
  Rng rng(1);
  const Matrix x = random_matrix(3, 4, 1);
  EXPECT_EQ(dropout_apply(DropoutLayer{0.0}, x, Mode::Train, rng).first, x);
  EXPECT_EQ(dropout_apply(DropoutLayer{0.0}, x, Mode::Eval, rng).first, x);
  EXPECT_EQ(dropout_apply(DropoutLayer{0.7}, x, Mode::Eval, rng).first, x);
}

TEST(Dropout, InvertedScalingIsUnbiased) {
  Rng rng(5);
  const Matrix x = Matrix::Ones(1, 4);
  Matrix sum = Matrix::Zero(1, 4);
  const int draws = 100000;
  for (int t = 0; t < draws; ++t) sum += dropout_apply(DropoutLayer{0.5}, x, Mode::Train, rng).first;
  for (Eigen::Index c = 0; c < 4; ++c) EXPECT_NEAR(sum(0, c) / draws, 1.0, 0.02);
}

TEST(Dropout, BackwardReusesMask) {
  Rng rng(9);
  const Matrix x = random_matrix(6, 5, 2);
  const auto [y, cache] = dropout_apply(DropoutLayer{0.3}, x, Mode::Train, rng);
  const Matrix up = random_matrix(6, 5, 3);
  const Matrix g = dropout_backward(cache, up);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double s = cache.scale.data()[i];
    EXPECT_TRUE(s == 0.0 || std::abs(s - 1.0 / 0.7) < 1e-15);
    EXPECT_EQ(g.data()[i], up.data()[i] * s);
    EXPECT_EQ(y.data()[i], x.data()[i] * s);
  }
}

TEST(Dropout, InvalidRateIsValidationError) {
  Rng rng(1);
  EXPECT_THROW(dropout_apply(DropoutLayer{1.0}, Matrix::Ones(2, 2), Mode::Train, rng), ValidationError);
}

TEST(GradCheck, SquareFunction) {
  const std::vector<double> w = {3.0};
  const std::vector<double> g = {6.0};
  EXPECT_LT(grad_check([](std::span<const double> p) { return p[0] * p[0]; }, w, g), 1e-9);
}

TEST(GradCheck, DetectsWrongGradient) {
  const std::vector<double> w = {3.0};
  const std::vector<double> g = {5.0};
  EXPECT_GT(grad_check([](std::span<const double> p) { return p[0] * p[0]; }, w, g), 0.1);
}

TEST(GradCheck, NonFiniteIsNumericsError) {
  const std::vector<double> w = {0.0};
  const std::vector<double> g = {1.0};
  EXPECT_THROW(grad_check([](std::span<const double>) { return std::nan(""); }, w, g), NumericsError);
}

}  // namespace
}  // namespace simskip
