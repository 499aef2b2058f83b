#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sentipipe/dataset.hpp"
#include "sentipipe/matrix.hpp"
#include "sentipipe/trace.hpp"

namespace sentipipe {

struct RnnParams {
  std::size_t seq_len = 8;
  std::size_t hidden_dim = 64;
  double learning_rate = 0.01;
  std::size_t epochs = 30;
  double grad_clip = 5.0;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
};

void validate(const RnnParams& params, std::size_t dim);

/// Elman network weights. Also used for gradients (same shapes).
struct RnnWeights {
  Matrix W_xh;  // H × step_width
  Matrix W_hh;  // H × H
  std::vector<double> b_h;
  Matrix W_hy;  // C × H
  std::vector<double> b_y;

  static RnnWeights zeros(std::size_t step_width, std::size_t hidden, std::size_t classes);
  /// Uniform in [-scale, scale] from a seeded stream, in a fixed block order.
  static RnnWeights uniform(std::size_t step_width, std::size_t hidden, std::size_t classes,
                            std::uint64_t seed, double scale = 0.1);

  std::size_t hidden() const noexcept { return W_hh.rows(); }
  std::size_t step_width() const noexcept { return W_xh.cols(); }
  std::size_t classes() const noexcept { return W_hy.rows(); }

  /// Every parameter in block order W_xh, W_hh, b_h, W_hy, b_y.
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;

  double squared_norm() const;
  void scale(double factor);
  /// this += factor · other
  void axpy(double factor, const RnnWeights& other);

  friend bool operator==(const RnnWeights&, const RnnWeights&) = default;
};

/// Splits `embedding` into `steps` contiguous slices of equal width.
/// Throws ConfigError when steps does not divide the length.
std::vector<std::vector<double>> reshape_to_sequence(std::span<const double> embedding,
                                                     std::size_t steps);

struct RnnForward {
  std::vector<std::vector<double>> hidden;  // h_1..h_T
  std::vector<double> logits;
  std::vector<double> probabilities;
};

/// h_t = tanh(W_xh x_t + W_hh h_{t−1} + b_h), h_0 = 0; logits = W_hy h_T + b_y.
/// Throws NumericalError naming the step on a non-finite activation.
RnnForward rnn_forward(const RnnWeights& w, const std::vector<std::vector<double>>& sequence);

/// Cross-entropy −log p_target of one sequence.
double rnn_loss(const RnnWeights& w, const std::vector<std::vector<double>>& sequence, int target);

/// Exact BPTT gradient of rnn_loss. When `clip` is set, the result is scaled
/// so its global L2 norm does not exceed it.
RnnWeights bptt_gradients(const RnnWeights& w, const std::vector<std::vector<double>>& sequence,
                          int target, std::optional<double> clip = std::nullopt);

/// Scales `g` so that its global L2 norm is at most `max_norm`. Returns the
/// norm before clipping.
double clip_global_norm(RnnWeights& g, double max_norm);

struct RnnModel {
  RnnWeights weights;
  std::size_t seq_len = 1;

  Matrix predict_proba(const Matrix& X) const;

  friend bool operator==(const RnnModel&, const RnnModel&) = default;
};

struct RnnFit {
  RnnModel model;
  std::vector<EpochTrace> trace;
};

/// Mini-batch gradient descent: per-epoch reshuffle; the step direction is
/// the sum of the per-sample clipped BPTT gradients of the batch, clipped
/// again to params.grad_clip. Weights start uniform in [-0.1, 0.1].
/// Throws NumericalError reporting the epoch if the loss diverges.
RnnFit fit_rnn(const EmbeddedDataset& train, const EmbeddedDataset* test,
               const RnnParams& params, int n_classes);

}  // namespace sentipipe
