#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sentipipe/matrix.hpp"

namespace sentipipe {

/// One training epoch: mean loss and train/test accuracy.
struct EpochTrace {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;

  friend bool operator==(const EpochTrace&, const EpochTrace&) = default;
};

/// `epoch,loss,train_accuracy,test_accuracy` with six fixed decimals.
std::string trace_to_csv(std::span<const EpochTrace> trace);
std::vector<EpochTrace> trace_from_csv(std::string_view csv);

/// Row-wise argmax with ties to the lowest column.
std::vector<int> argmax_rows(const Matrix& scores);

/// Fraction of predictions equal to labels; 0 for empty input.
double accuracy(std::span<const int> predicted, std::span<const int> labels);

}  // namespace sentipipe
