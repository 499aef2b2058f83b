#include "sentipipe/kernels.hpp"

#include <cassert>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sentipipe {

Matrix gather_rows(const Matrix& src, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), src.cols());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto from = src.row(indices[r]);
    auto to = out.row(r);
    for (std::size_t c = 0; c < from.size(); ++c) to[c] = from[c];
  }
  return out;
}

namespace kernels {
namespace {

inline double sq_dist(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

namespace serial {

Matrix pairwise_sq_distances(const Matrix& X) {
  const std::size_t n = X.rows();
  Matrix D(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) D(i, j) = i == j ? 0.0 : sq_dist(X.row(i), X.row(j));
  return D;
}

Matrix affine_scores(const Matrix& X, const Matrix& W, std::span<const double> b) {
  assert(X.cols() == W.cols() && W.rows() == b.size());
  Matrix S(X.rows(), W.rows());
  for (std::size_t i = 0; i < X.rows(); ++i)
    for (std::size_t c = 0; c < W.rows(); ++c) S(i, c) = dot(X.row(i), W.row(c)) + b[c];
  return S;
}

Matrix transpose_times(const Matrix& A, const Matrix& X) {
  assert(A.rows() == X.rows());
  Matrix G(A.cols(), X.cols());
  for (std::size_t c = 0; c < A.cols(); ++c)
    for (std::size_t j = 0; j < X.cols(); ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < A.rows(); ++i) s += A(i, c) * X(i, j);
      G(c, j) = s;
    }
  return G;
}

}  // namespace serial

namespace omp {

Matrix pairwise_sq_distances(const Matrix& X) {
  const auto n = static_cast<std::ptrdiff_t>(X.rows());
  Matrix D(X.rows(), X.rows());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    for (std::size_t j = 0; j < X.rows(); ++j)
      D(ui, j) = ui == j ? 0.0 : sq_dist(X.row(ui), X.row(j));
  }
  return D;
}

Matrix affine_scores(const Matrix& X, const Matrix& W, std::span<const double> b) {
  assert(X.cols() == W.cols() && W.rows() == b.size());
  const auto n = static_cast<std::ptrdiff_t>(X.rows());
  Matrix S(X.rows(), W.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    for (std::size_t c = 0; c < W.rows(); ++c) S(ui, c) = dot(X.row(ui), W.row(c)) + b[c];
  }
  return S;
}

Matrix transpose_times(const Matrix& A, const Matrix& X) {
  assert(A.rows() == X.rows());
  const auto total = static_cast<std::ptrdiff_t>(A.cols() * X.cols());
  Matrix G(A.cols(), X.cols());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t flat = 0; flat < total; ++flat) {
    const auto c = static_cast<std::size_t>(flat) / X.cols();
    const auto j = static_cast<std::size_t>(flat) % X.cols();
    double s = 0.0;
    for (std::size_t i = 0; i < A.rows(); ++i) s += A(i, c) * X(i, j);
    G(c, j) = s;
  }
  return G;
}

}  // namespace omp

int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace kernels
}  // namespace sentipipe
