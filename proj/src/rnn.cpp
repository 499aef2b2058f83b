#include "sentipipe/rnn.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include "sentipipe/error.hpp"
#include "sentipipe/rng.hpp"

namespace sentipipe {

void validate(const RnnParams& params, std::size_t dim) {
  if (params.seq_len < 1) throw ConfigError("rnn seq_len must be at least 1");
  if (dim % params.seq_len != 0)
    throw ConfigError("embedding dim " + std::to_string(dim) + " is not divisible by seq_len " +
                      std::to_string(params.seq_len));
  if (params.hidden_dim < 1) throw ConfigError("rnn hidden_dim must be at least 1");
  if (!(params.grad_clip > 0.0)) throw ConfigError("rnn grad_clip must be positive");
  if (!(params.learning_rate > 0.0)) throw ConfigError("rnn learning_rate must be positive");
  if (params.batch_size < 1) throw ConfigError("rnn batch_size must be at least 1");
}

RnnWeights RnnWeights::zeros(std::size_t step_width, std::size_t hidden, std::size_t classes) {
  return RnnWeights{Matrix(hidden, step_width), Matrix(hidden, hidden),
                    std::vector<double>(hidden, 0.0), Matrix(classes, hidden),
                    std::vector<double>(classes, 0.0)};
}

RnnWeights RnnWeights::uniform(std::size_t step_width, std::size_t hidden, std::size_t classes,
                               std::uint64_t seed, double scale) {
  auto w = zeros(step_width, hidden, classes);
  Rng rng(seed);
  for (auto block : w.blocks())
    for (auto& v : block) v = rng.uniform(-scale, scale);
  return w;
}

std::vector<std::span<double>> RnnWeights::blocks() {
  return {W_xh.data(), W_hh.data(), b_h, W_hy.data(), b_y};
}

std::vector<std::span<const double>> RnnWeights::blocks() const {
  return {W_xh.data(), W_hh.data(), b_h, W_hy.data(), b_y};
}

double RnnWeights::squared_norm() const {
  double s = 0.0;
  for (auto block : blocks())
    for (double v : block) s += v * v;
  return s;
}

void RnnWeights::scale(double factor) {
  for (auto block : blocks())
    for (auto& v : block) v *= factor;
}

void RnnWeights::axpy(double factor, const RnnWeights& other) {
  auto mine = blocks();
  const auto theirs = other.blocks();
  for (std::size_t b = 0; b < mine.size(); ++b)
    for (std::size_t k = 0; k < mine[b].size(); ++k) mine[b][k] += factor * theirs[b][k];
}

std::vector<std::vector<double>> reshape_to_sequence(std::span<const double> embedding,
                                                     std::size_t steps) {
  if (steps == 0 || embedding.size() % steps != 0)
    throw ConfigError("cannot split an embedding of dim " + std::to_string(embedding.size()) +
                      " into " + std::to_string(steps) + " equal steps");
  const std::size_t width = embedding.size() / steps;
  std::vector<std::vector<double>> seq(steps);
  for (std::size_t t = 0; t < steps; ++t)
    seq[t].assign(embedding.begin() + static_cast<std::ptrdiff_t>(t * width),
                  embedding.begin() + static_cast<std::ptrdiff_t>((t + 1) * width));
  return seq;
}

namespace {

void check_shapes(const RnnWeights& w, const std::vector<std::vector<double>>& sequence) {
  if (sequence.empty()) throw ConfigError("rnn input sequence is empty");
  for (const auto& x : sequence)
    if (x.size() != w.step_width())
      throw ConfigError("rnn step width " + std::to_string(x.size()) + " does not match W_xh (" +
                        std::to_string(w.step_width()) + ")");
}

}  // namespace

RnnForward rnn_forward(const RnnWeights& w, const std::vector<std::vector<double>>& sequence) {
  check_shapes(w, sequence);
  const std::size_t H = w.hidden(), C = w.classes();
  RnnForward out;
  out.hidden.reserve(sequence.size());
  std::vector<double> prev(H, 0.0);
  for (std::size_t t = 0; t < sequence.size(); ++t) {
    const auto& x = sequence[t];
    std::vector<double> h(H);
    for (std::size_t i = 0; i < H; ++i) {
      const auto wx = w.W_xh.row(i);
      const auto wh = w.W_hh.row(i);
      double a = w.b_h[i];
      for (std::size_t k = 0; k < x.size(); ++k) a += wx[k] * x[k];
      for (std::size_t k = 0; k < H; ++k) a += wh[k] * prev[k];
      h[i] = std::tanh(a);
      if (!std::isfinite(h[i]))
        throw NumericalError("non-finite rnn activation at step " + std::to_string(t + 1));
    }
    prev = h;
    out.hidden.push_back(std::move(h));
  }
  out.logits.assign(C, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    const auto wy = w.W_hy.row(c);
    double z = w.b_y[c];
    for (std::size_t k = 0; k < H; ++k) z += wy[k] * prev[k];
    out.logits[c] = z;
  }
  out.probabilities = out.logits;
  const double peak = *std::max_element(out.probabilities.begin(), out.probabilities.end());
  double total = 0.0;
  for (auto& p : out.probabilities) {
    p = std::exp(p - peak);
    total += p;
  }
  for (auto& p : out.probabilities) p /= total;
  for (double z : out.logits)
    if (!std::isfinite(z)) throw NumericalError("non-finite rnn logits");
  return out;
}

double rnn_loss(const RnnWeights& w, const std::vector<std::vector<double>>& sequence,
                int target) {
  const auto fwd = rnn_forward(w, sequence);
  const double peak = *std::max_element(fwd.logits.begin(), fwd.logits.end());
  double total = 0.0;
  for (double z : fwd.logits) total += std::exp(z - peak);
  return peak + std::log(total) - fwd.logits[static_cast<std::size_t>(target)];
}

double clip_global_norm(RnnWeights& g, double max_norm) {
  const double norm = std::sqrt(g.squared_norm());
  if (norm > max_norm) g.scale(max_norm / norm);
  return norm;
}

RnnWeights bptt_gradients(const RnnWeights& w, const std::vector<std::vector<double>>& sequence,
                          int target, std::optional<double> clip) {
  const auto fwd = rnn_forward(w, sequence);
  const std::size_t H = w.hidden(), C = w.classes(), T = sequence.size();
  auto g = RnnWeights::zeros(w.step_width(), H, C);

  // Output layer: dL/dz = p − onehot(target).
  std::vector<double> dz = fwd.probabilities;
  dz[static_cast<std::size_t>(target)] -= 1.0;
  const auto& h_last = fwd.hidden.back();
  for (std::size_t c = 0; c < C; ++c) {
    g.b_y[c] = dz[c];
    auto row = g.W_hy.row(c);
    for (std::size_t k = 0; k < H; ++k) row[k] = dz[c] * h_last[k];
  }

  std::vector<double> dh(H, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    const auto wy = w.W_hy.row(c);
    for (std::size_t k = 0; k < H; ++k) dh[k] += wy[k] * dz[c];
  }

  std::vector<double> da(H);
  const std::vector<double> h0(H, 0.0);
  for (std::size_t t = T; t-- > 0;) {
    const auto& h = fwd.hidden[t];
    const auto& h_prev = t > 0 ? fwd.hidden[t - 1] : h0;
    const auto& x = sequence[t];
    for (std::size_t i = 0; i < H; ++i) da[i] = dh[i] * (1.0 - h[i] * h[i]);
    for (std::size_t i = 0; i < H; ++i) {
      g.b_h[i] += da[i];
      auto gx = g.W_xh.row(i);
      for (std::size_t k = 0; k < x.size(); ++k) gx[k] += da[i] * x[k];
      auto gh = g.W_hh.row(i);
      for (std::size_t k = 0; k < H; ++k) gh[k] += da[i] * h_prev[k];
    }
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t i = 0; i < H; ++i) {
      const auto wh = w.W_hh.row(i);
      for (std::size_t k = 0; k < H; ++k) dh[k] += wh[k] * da[i];
    }
  }
  if (clip) clip_global_norm(g, *clip);
  return g;
}

Matrix RnnModel::predict_proba(const Matrix& X) const {
  Matrix out(X.rows(), weights.classes());
  const auto n = static_cast<std::ptrdiff_t>(X.rows());
  std::exception_ptr error;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const auto ur = static_cast<std::size_t>(r);
    try {
      const auto fwd = rnn_forward(weights, reshape_to_sequence(X.row(ur), seq_len));
      std::copy(fwd.probabilities.begin(), fwd.probabilities.end(), out.row(ur).begin());
    } catch (...) {
#pragma omp critical(sentipipe_rnn_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

RnnFit fit_rnn(const EmbeddedDataset& train, const EmbeddedDataset* test,
               const RnnParams& params, int n_classes) {
  validate(params, train.dim());
  const auto& y = train.labels();
  if (n_classes < 2) throw ConfigError("rnn needs at least two classes");

  const std::size_t n = train.size();
  const std::size_t width = train.dim() / params.seq_len;
  const auto C = static_cast<std::size_t>(n_classes);

  RnnFit fit;
  fit.model.seq_len = params.seq_len;
  fit.model.weights = RnnWeights::uniform(width, params.hidden_dim, C, mix64(params.seed));

  std::vector<std::vector<std::vector<double>>> sequences(n);
  for (std::size_t i = 0; i < n; ++i)
    sequences[i] = reshape_to_sequence(train.X.row(i), params.seq_len);

  Rng rng(params.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<RnnWeights> per_sample(params.batch_size);
  std::vector<double> per_loss(params.batch_size);

  for (std::size_t epoch = 1; epoch <= params.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += params.batch_size) {
      const std::size_t len = std::min(params.batch_size, n - start);
      const auto& w = fit.model.weights;
      const auto batch = static_cast<std::ptrdiff_t>(len);
      std::exception_ptr error;
      // Samples are independent; the reduction below runs in index order.
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t b = 0; b < batch; ++b) {
        const auto ub = static_cast<std::size_t>(b);
        const auto i = order[start + ub];
        try {
          per_sample[ub] = bptt_gradients(w, sequences[i], y[i], params.grad_clip);
          per_loss[ub] = rnn_loss(w, sequences[i], y[i]);
        } catch (...) {
#pragma omp critical(sentipipe_rnn_error)
          if (!error) error = std::current_exception();
        }
      }
      if (error) std::rethrow_exception(error);
      auto grad = RnnWeights::zeros(width, params.hidden_dim, C);
      for (std::size_t b = 0; b < len; ++b) {
        grad.axpy(1.0, per_sample[b]);
        loss_sum += per_loss[b];
      }
      clip_global_norm(grad, params.grad_clip);
      fit.model.weights.axpy(-params.learning_rate, grad);
    }

    EpochTrace e;
    e.epoch = epoch;
    e.loss = loss_sum / static_cast<double>(n);
    if (!std::isfinite(e.loss))
      throw NumericalError("rnn loss diverged at epoch " + std::to_string(epoch));
    e.train_accuracy = accuracy(argmax_rows(fit.model.predict_proba(train.X)), y);
    if (test && test->size() > 0)
      e.test_accuracy = accuracy(argmax_rows(fit.model.predict_proba(test->X)), test->labels());
    fit.trace.push_back(e);
  }
  return fit;
}

}  // namespace sentipipe
