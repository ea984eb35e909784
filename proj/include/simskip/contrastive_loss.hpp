#ifndef SIMSKIP_CONTRASTIVE_LOSS_HPP_
#define SIMSKIP_CONTRASTIVE_LOSS_HPP_

#include <span>

#include "simskip/common.hpp"

namespace simskip {

/// a.b / (|a||b|), clamped to [-1, 1]. NumericsError for a zero-norm input.
double cosine_sim(const Vector& a, const Vector& b);

/// Which terms the NT-Xent softmax denominator sums over.
enum class NtXentDenominator {
  AllButSelf,         // k != i, positive included (standard form, loss > 0)
  AllButSelfAndPair,  // k != i, j
};

inline constexpr double kDefaultTemperature = 0.5;

struct LossValue {
  double value = 0.0;
  Matrix grad;  // d value / d input, same shape as the input
};

/**
 * NT-Xent over 2N projector outputs; rows 2i and 2i+1 form a positive pair.
 *
 * value = (1 / 2N) * sum_i -log( exp(s(i,j(i))) / sum_{k in D(i)} exp(s(i,k)) )
 * with s(i,k) = cos(z_i, z_k) / tau. The log-sum-exp is shifted by the row max.
 */
LossValue nt_xent(const Matrix& z, double tau = kDefaultTemperature,
                  NtXentDenominator denominator = NtXentDenominator::AllButSelf);

/// max(0, 1 - min_i v_i).
double hinge_loss(std::span<const double> v);
/// log2(1 + sum_i exp(-v_i)), evaluated with a shifted log-sum-exp.
double logistic_loss(std::span<const double> v);

inline double hinge_loss(const Vector& v) { return hinge_loss(std::span<const double>(v.data(), v.size())); }
inline double logistic_loss(const Vector& v) { return logistic_loss(std::span<const double>(v.data(), v.size())); }

}  // namespace simskip

#endif  // SIMSKIP_CONTRASTIVE_LOSS_HPP_
