#include "sentipipe/trace.hpp"

#include <cstdio>
#include <cstdlib>

#include "sentipipe/corpus.hpp"
#include "sentipipe/error.hpp"

namespace sentipipe {

std::string trace_to_csv(std::span<const EpochTrace> trace) {
  std::string out = "epoch,loss,train_accuracy,test_accuracy\n";
  char buf[128];
  for (const auto& e : trace) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f\n", e.epoch, e.loss, e.train_accuracy,
                  e.test_accuracy);
    out += buf;
  }
  return out;
}

std::vector<EpochTrace> trace_from_csv(std::string_view csv) {
  const auto records = parse_csv(csv);
  if (records.empty() || records.front() != std::vector<std::string>{"epoch", "loss",
                                                                     "train_accuracy",
                                                                     "test_accuracy"})
    throw FormatError("curve CSV must start with 'epoch,loss,train_accuracy,test_accuracy'");
  std::vector<EpochTrace> out;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != 4) throw FormatError("curve CSV row " + std::to_string(r) + " malformed");
    out.push_back(EpochTrace{std::strtoull(rec[0].c_str(), nullptr, 10),
                             std::strtod(rec[1].c_str(), nullptr),
                             std::strtod(rec[2].c_str(), nullptr),
                             std::strtod(rec[3].c_str(), nullptr)});
  }
  return out;
}

std::vector<int> argmax_rows(const Matrix& scores) {
  std::vector<int> out(scores.rows(), 0);
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.cols(); ++c)
      if (scores(r, c) > scores(r, best)) best = c;
    out[r] = static_cast<int>(best);
  }
  return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> labels) {
  if (labels.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hit += predicted[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

}  // namespace sentipipe
