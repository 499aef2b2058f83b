#pragma once

#include <vector>

#include "sentipipe/dataset.hpp"
#include "sentipipe/matrix.hpp"
#include "sentipipe/trace.hpp"

namespace sentipipe {

struct LogRegParams {
  double learning_rate = 0.1;
  std::size_t epochs = 200;
  double l2 = 0.0;
};

void validate(const LogRegParams& params);

/// Multinomial logistic regression.
struct LogReg {
  Matrix weights;  // C × d
  std::vector<double> bias;

  /// Softmax probabilities, rows summing to 1.
  Matrix predict_proba(const Matrix& X) const;

  friend bool operator==(const LogReg&, const LogReg&) = default;
};

/// In-place row softmax with max subtraction.
void softmax_rows(Matrix& logits);

/// Mean cross-entropy plus (l2/2)‖W‖² (bias unpenalized).
double logreg_loss(const LogReg& model, const Matrix& X, std::span<const int> y, double l2);

struct LogRegGradient {
  Matrix weights;
  std::vector<double> bias;
};

/// Analytic gradient of logreg_loss: (1/n)(P − Y)ᵀX + l2·W for the weights,
/// the column means of P − Y for the bias.
LogRegGradient logreg_gradient(const LogReg& model, const Matrix& X, std::span<const int> y,
                               double l2);

struct LogRegFit {
  LogReg model;
  std::vector<EpochTrace> trace;
};

/// Full-batch gradient descent from zero weights. Throws NumericalError if
/// the loss becomes non-finite.
LogRegFit fit_logreg(const EmbeddedDataset& train, const EmbeddedDataset* test,
                     const LogRegParams& params, int n_classes);

}  // namespace sentipipe
