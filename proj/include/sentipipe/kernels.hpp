#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// `kernels::serial` and an OpenMP version in `kernels::omp`. Each output
// element is computed by the same sequence of floating-point operations in
// both, so results are bit-identical regardless of thread count.

#include <cstddef>
#include <span>

#include "sentipipe/matrix.hpp"

namespace sentipipe::kernels {

enum class Exec { serial, parallel };

namespace serial {

/// D(i,j) = squared Euclidean distance between rows i and j of X.
Matrix pairwise_sq_distances(const Matrix& X);

/// S = X · Wᵀ + b, with W of shape (k × d) and b of length k.
Matrix affine_scores(const Matrix& X, const Matrix& W, std::span<const double> b);

/// G = Aᵀ · X, with A of shape (n × k) and X of shape (n × d); G is k × d.
/// Each output element sums over rows in index order.
Matrix transpose_times(const Matrix& A, const Matrix& X);

}  // namespace serial

namespace omp {

Matrix pairwise_sq_distances(const Matrix& X);
Matrix affine_scores(const Matrix& X, const Matrix& W, std::span<const double> b);
Matrix transpose_times(const Matrix& A, const Matrix& X);

}  // namespace omp

inline Matrix pairwise_sq_distances(const Matrix& X, Exec exec = Exec::parallel) {
  return exec == Exec::serial ? serial::pairwise_sq_distances(X) : omp::pairwise_sq_distances(X);
}

inline Matrix affine_scores(const Matrix& X, const Matrix& W, std::span<const double> b,
                            Exec exec = Exec::parallel) {
  return exec == Exec::serial ? serial::affine_scores(X, W, b) : omp::affine_scores(X, W, b);
}

inline Matrix transpose_times(const Matrix& A, const Matrix& X, Exec exec = Exec::parallel) {
  return exec == Exec::serial ? serial::transpose_times(A, X) : omp::transpose_times(A, X);
}

/// Number of threads the OpenMP kernels will use (1 when built without OpenMP).
int max_threads() noexcept;

}  // namespace sentipipe::kernels
