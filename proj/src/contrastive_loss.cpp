#include "simskip/contrastive_loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace simskip {

double cosine_sim(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw ShapeError("cosine_sim: vectors of different length");
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) {
    throw NumericsError("cosine_sim: zero-norm input");
  }
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

LossValue nt_xent(const Matrix& z, double tau, NtXentDenominator denominator) {
  if (!(tau > 0.0)) {
    throw ValidationError("nt_xent: temperature must be positive");
  }
  const Eigen::Index rows = z.rows();
  if (rows % 2 != 0) {
    throw ShapeError("nt_xent: expected an even number of rows (2N), got " + std::to_string(rows));
  }
  if (rows < 4) {
    throw ValidationError("nt_xent: need N >= 2 pairs so that negatives exist");
  }
  if (!z.allFinite()) {
    throw NumericsError("nt_xent: non-finite projector output");
  }
  const Vector norms = z.rowwise().norm();
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!(norms(i) > 0.0)) {
      throw NumericsError("nt_xent: zero row " + std::to_string(i));
    }
  }
  const Matrix u = z.array().colwise() / norms.array();
  const Matrix s = (u * u.transpose()) / tau;

  // coeff(i,k) = d value / d s(i,k) = (softmax_ik - [k == partner]) / 2N
  Matrix coeff = Matrix::Zero(rows, rows);
  double total = 0.0;
  const double inv_count = 1.0 / static_cast<double>(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Eigen::Index partner = i ^ 1;
    auto in_denominator = [&](Eigen::Index k) {
      return k != i && (denominator == NtXentDenominator::AllButSelf || k != partner);
    };
    double row_max = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < rows; ++k) {
      if (in_denominator(k)) row_max = std::max(row_max, s(i, k));
    }
    double sum = 0.0;
    for (Eigen::Index k = 0; k < rows; ++k) {
      if (in_denominator(k)) sum += std::exp(s(i, k) - row_max);
    }
    const double log_denominator = row_max + std::log(sum);
    total += log_denominator - s(i, partner);
    for (Eigen::Index k = 0; k < rows; ++k) {
      if (in_denominator(k)) coeff(i, k) = std::exp(s(i, k) - log_denominator) * inv_count;
    }
    coeff(i, partner) -= inv_count;
  }

  LossValue out;
  out.value = total * inv_count;
  // s(i,k) = u_i.u_k / tau is symmetric in (i,k), so both orders contribute.
  const Matrix du = ((coeff + coeff.transpose()) * u) / tau;
  // Project out the radial component: d u_i / d z_i = (I - u_i u_i^T) / |z_i|.
  const Vector radial = (du.array() * u.array()).rowwise().sum();
  out.grad = ((du - (u.array().colwise() * radial.array()).matrix()).array().colwise() / norms.array()).matrix();
  return out;
}

double hinge_loss(std::span<const double> v) {
  if (v.empty()) {
    throw ValidationError("hinge_loss: empty input");
  }
  return std::max(0.0, 1.0 - *std::min_element(v.begin(), v.end()));
}

double logistic_loss(std::span<const double> v) {
  if (v.empty()) {
    throw ValidationError("logistic_loss: empty input");
  }
  // log(1 + sum exp(-v_i)) = m + log(exp(-m) + sum exp(-v_i - m)), m = max(0, max(-v_i))
  double m = 0.0;
  for (double x : v) m = std::max(m, -x);
  if (m == 0.0) {
    double tail = 0.0;
    for (double x : v) tail += std::exp(-x);
    return std::log1p(tail) / std::numbers::ln2;
  }
  double sum = std::exp(-m);
  for (double x : v) sum += std::exp(-x - m);
  return (m + std::log(sum)) / std::numbers::ln2;
}

}  // namespace simskip
