#ifndef SIMSKIP_TESTS_MATRIX_HELPERS_HPP_
#define SIMSKIP_TESTS_MATRIX_HELPERS_HPP_

#include "oracles.hpp"
#include "simskip/common.hpp"

namespace simskip::testing {

inline Matrix to_matrix(const Rows& rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.empty() ? 0 : rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return m;
}

inline Rows to_rows(const Matrix& m) {
  Rows rows(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = m(r, c);
  return rows;
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 1.0) {
  return to_matrix(random_rows(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), seed, scale));
}

}  // namespace simskip::testing

#endif  // SIMSKIP_TESTS_MATRIX_HELPERS_HPP_
