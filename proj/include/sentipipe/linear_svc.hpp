#pragma once

#include <cstdint>
#include <vector>

#include "sentipipe/dataset.hpp"
#include "sentipipe/matrix.hpp"
#include "sentipipe/trace.hpp"

namespace sentipipe {

struct LinearSvcParams {
  double lambda = 1e-4;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
};

void validate(const LinearSvcParams& params);

/// One-vs-rest linear SVM: row c of `weights` and `bias[c]` score class c.
struct LinearSvc {
  Matrix weights;  // C × d
  std::vector<double> bias;

  Matrix predict_scores(const Matrix& X) const;  // margins

  friend bool operator==(const LinearSvc&, const LinearSvc&) = default;
};

/// Soft-margin primal objective of the binary problem for class c:
/// (λ/2)(‖w‖² + b²) + (1/n) Σ max(0, 1 − y_i(⟨w,x_i⟩ + b)), y_i = ±1.
double svc_objective(const LinearSvc& model, std::size_t c, const Matrix& X,
                     std::span<const int> y, double lambda);

/// One Pegasos step for the binary problem with label `sign` (±1) at step
/// `t` (1-based): scale by (1 − ηλ) with η = 1/(λt), then add η·sign·x when
/// the margin is below 1. The bias is an extra coordinate with constant
/// input 1. Returns true when the example violated the margin.
bool pegasos_step(std::span<double> w, double& b, std::span<const double> x, int sign,
                  double lambda, std::size_t t);

struct LinearSvcFit {
  LinearSvc model;
  /// Per epoch: mean objective over the C binary problems and accuracies.
  std::vector<EpochTrace> trace;
};

/// `test` may be empty; its accuracy column is then 0. Throws ConfigError
/// when fewer than two classes are present.
LinearSvcFit fit_linear_svc(const EmbeddedDataset& train, const EmbeddedDataset* test,
                            const LinearSvcParams& params, int n_classes);

}  // namespace sentipipe
