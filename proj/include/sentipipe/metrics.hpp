#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace sentipipe {

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::size_t n_classes = 0;
  std::vector<std::size_t> counts;  // row-major n_classes × n_classes

  std::size_t& operator()(std::size_t t, std::size_t p) { return counts[t * n_classes + p]; }
  std::size_t operator()(std::size_t t, std::size_t p) const { return counts[t * n_classes + p]; }
  std::size_t total() const;
  std::size_t trace() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Throws ConfigError naming the index on a length mismatch or a code
/// outside [0, n_classes).
ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred,
                                 int n_classes);

struct ClassMetrics {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  /// Set when the class was never predicted (precision defined as 0).
  bool zero_division = false;
};

struct AverageMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct ClassificationReport {
  std::vector<ClassMetrics> classes;
  double accuracy = 0.0;
  AverageMetrics macro_avg;
  AverageMetrics weighted_avg;

  std::size_t total_support() const noexcept { return macro_avg.support; }
};

/// f1 = 2PR/(P+R), 0 when P+R = 0.
double f1_score(double precision, double recall) noexcept;

/// Report from a confusion matrix. Accuracy and the weighted recall are both
/// trace/total (computed once, so they agree exactly). Throws ConfigError when
/// the matrix is empty or the name count differs from the class count.
ClassificationReport classification_report(const ConfusionMatrix& cm,
                                           const std::vector<std::string>& names);

/// Report from published per-class rows: the averages are recomputed from the
/// rows and accuracy is the support-weighted mean recall.
ClassificationReport aggregate_report(std::vector<ClassMetrics> rows);

/// Half-up rounding to two decimals.
double round_half_up_2(double v) noexcept;

/// Fixed-width table, accuracy shown only in the F1-Score column.
std::string format_report(const ClassificationReport& report);

nlohmann::json report_to_json(const ClassificationReport& report);
ClassificationReport report_from_json(const nlohmann::json& j);

struct ComparisonRow {
  std::string name;
  ClassificationReport report;
};

struct ModelComparison {
  /// Weighted F1 descending, then name ascending. F1 is compared at the
  /// two-decimal precision of the printed tables.
  std::vector<ComparisonRow> rows;
  /// Metric name → model name with the highest (two-decimal) value; ties go
  /// to the row listed first.
  std::vector<std::pair<std::string, std::string>> best;
};

/// Throws ConfigError when `reports` is empty.
ModelComparison compare_models(std::vector<ComparisonRow> reports);
std::string format_comparison(const ModelComparison& comparison);
nlohmann::json comparison_to_json(const ModelComparison& comparison);

}  // namespace sentipipe
