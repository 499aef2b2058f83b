#include "sentipipe/logreg.hpp"

#include <algorithm>
#include <cmath>

#include "sentipipe/error.hpp"
#include "sentipipe/kernels.hpp"

namespace sentipipe {

void validate(const LogRegParams& params) {
  if (!(params.learning_rate > 0.0)) throw ConfigError("logreg learning_rate must be positive");
  if (params.l2 < 0.0) throw ConfigError("logreg l2 must be non-negative");
}

void softmax_rows(Matrix& logits) {
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (auto& v : row) {
      v = std::exp(v - peak);
      total += v;
    }
    for (auto& v : row) v /= total;
  }
}

Matrix LogReg::predict_proba(const Matrix& X) const {
  Matrix p = kernels::affine_scores(X, weights, bias);
  softmax_rows(p);
  return p;
}

double logreg_loss(const LogReg& model, const Matrix& X, std::span<const int> y, double l2) {
  const Matrix logits = kernels::affine_scores(X, model.weights, model.bias);
  double ce = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double v : row) total += std::exp(v - peak);
    ce += peak + std::log(total) - row[static_cast<std::size_t>(y[r])];
  }
  double reg = 0.0;
  for (double w : model.weights.data()) reg += w * w;
  return ce / static_cast<double>(X.rows()) + 0.5 * l2 * reg;
}

LogRegGradient logreg_gradient(const LogReg& model, const Matrix& X, std::span<const int> y,
                               double l2) {
  Matrix residual = model.predict_proba(X);
  for (std::size_t r = 0; r < residual.rows(); ++r)
    residual(r, static_cast<std::size_t>(y[r])) -= 1.0;

  const double inv_n = 1.0 / static_cast<double>(X.rows());
  LogRegGradient g{kernels::transpose_times(residual, X),
                   std::vector<double>(residual.cols(), 0.0)};
  for (std::size_t c = 0; c < g.weights.rows(); ++c) {
    auto row = g.weights.row(c);
    const auto w = model.weights.row(c);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = row[j] * inv_n + l2 * w[j];
  }
  for (std::size_t r = 0; r < residual.rows(); ++r)
    for (std::size_t c = 0; c < residual.cols(); ++c) g.bias[c] += residual(r, c);
  for (auto& b : g.bias) b *= inv_n;
  return g;
}

LogRegFit fit_logreg(const EmbeddedDataset& train, const EmbeddedDataset* test,
                     const LogRegParams& params, int n_classes) {
  validate(params);
  const auto& y = train.labels();
  if (n_classes < 2) throw ConfigError("logistic regression needs at least two classes");
  if (train.size() == 0) throw ConfigError("cannot fit logistic regression on an empty dataset");

  const auto C = static_cast<std::size_t>(n_classes);
  LogRegFit fit;
  fit.model.weights = Matrix(C, train.dim());
  fit.model.bias.assign(C, 0.0);

  for (std::size_t epoch = 1; epoch <= params.epochs; ++epoch) {
    const auto g = logreg_gradient(fit.model, train.X, y, params.l2);
    auto w = fit.model.weights.data();
    const auto gw = g.weights.data();
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= params.learning_rate * gw[k];
    for (std::size_t c = 0; c < C; ++c) fit.model.bias[c] -= params.learning_rate * g.bias[c];

    EpochTrace e;
    e.epoch = epoch;
    e.loss = logreg_loss(fit.model, train.X, y, params.l2);
    if (!std::isfinite(e.loss))
      throw NumericalError("logistic regression loss is not finite at epoch " +
                           std::to_string(epoch));
    e.train_accuracy = accuracy(argmax_rows(fit.model.predict_proba(train.X)), y);
    if (test && test->size() > 0)
      e.test_accuracy =
          accuracy(argmax_rows(fit.model.predict_proba(test->X)), test->labels());
    fit.trace.push_back(e);
  }
  return fit;
}

}  // namespace sentipipe
