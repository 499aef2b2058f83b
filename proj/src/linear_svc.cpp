#include "sentipipe/linear_svc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sentipipe/error.hpp"
#include "sentipipe/kernels.hpp"
#include "sentipipe/rng.hpp"

namespace sentipipe {

void validate(const LinearSvcParams& params) {
  if (!(params.lambda > 0.0)) throw ConfigError("svc lambda must be positive");
  if (params.epochs < 1) throw ConfigError("svc epochs must be at least 1");
}

Matrix LinearSvc::predict_scores(const Matrix& X) const {
  return kernels::affine_scores(X, weights, bias);
}

double svc_objective(const LinearSvc& model, std::size_t c, const Matrix& X,
                     std::span<const int> y, double lambda) {
  const auto w = model.weights.row(c);
  const double b = model.bias[c];
  double reg = b * b;
  for (double v : w) reg += v * v;
  double hinge = 0.0;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const double sign = y[i] == static_cast<int>(c) ? 1.0 : -1.0;
    const auto x = X.row(i);
    const double score = std::inner_product(w.begin(), w.end(), x.begin(), b);
    hinge += std::max(0.0, 1.0 - sign * score);
  }
  return 0.5 * lambda * reg + hinge / static_cast<double>(X.rows());
}

bool pegasos_step(std::span<double> w, double& b, std::span<const double> x, int sign,
                  double lambda, std::size_t t) {
  const double eta = 1.0 / (lambda * static_cast<double>(t));
  const double margin = sign * std::inner_product(w.begin(), w.end(), x.begin(), b);
  const double shrink = 1.0 - eta * lambda;
  for (auto& v : w) v *= shrink;
  b *= shrink;
  if (margin >= 1.0) return false;
  for (std::size_t k = 0; k < w.size(); ++k) w[k] += eta * sign * x[k];
  b += eta * sign;
  return true;
}

LinearSvcFit fit_linear_svc(const EmbeddedDataset& train, const EmbeddedDataset* test,
                            const LinearSvcParams& params, int n_classes) {
  validate(params);
  const auto& y = train.labels();
  std::vector<bool> present(static_cast<std::size_t>(n_classes), false);
  for (int c : y) present[static_cast<std::size_t>(c)] = true;
  if (std::count(present.begin(), present.end(), true) < 2)
    throw ConfigError("linear SVC needs at least two classes in the training set");

  const std::size_t n = train.size();
  const auto C = static_cast<std::size_t>(n_classes);
  LinearSvcFit fit;
  fit.model.weights = Matrix(C, train.dim());
  fit.model.bias.assign(C, 0.0);

  Rng rng(params.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::size_t t = 0;

  for (std::size_t epoch = 1; epoch <= params.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    for (const auto i : order) {
      ++t;
      for (std::size_t c = 0; c < C; ++c) {
        const int sign = y[i] == static_cast<int>(c) ? 1 : -1;
        pegasos_step(fit.model.weights.row(c), fit.model.bias[c], train.X.row(i), sign,
                     params.lambda, t);
      }
    }

    EpochTrace e;
    e.epoch = epoch;
    for (std::size_t c = 0; c < C; ++c)
      e.loss += svc_objective(fit.model, c, train.X, y, params.lambda);
    e.loss /= static_cast<double>(C);
    if (!std::isfinite(e.loss))
      throw NumericalError("linear SVC objective is not finite at epoch " + std::to_string(epoch));
    e.train_accuracy = accuracy(argmax_rows(fit.model.predict_scores(train.X)), y);
    if (test && test->size() > 0)
      e.test_accuracy = accuracy(argmax_rows(fit.model.predict_scores(test->X)), test->labels());
    fit.trace.push_back(e);
  }
  return fit;
}

}  // namespace sentipipe
