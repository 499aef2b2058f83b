#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sentipipe/dataset.hpp"
#include "sentipipe/matrix.hpp"

namespace sentipipe {

/// 1 − Σ p_c². Throws ConfigError when every count is zero.
double gini(std::span<const std::size_t> counts);

struct TreeParams {
  std::size_t max_depth = 16;
  std::size_t min_samples_leaf = 1;
  double min_impurity_decrease = 0.0;
  /// Features examined per split; nullopt (or ≥ d) examines every feature.
  std::optional<std::size_t> max_features;
  std::uint64_t seed = 0;
};

void validate(const TreeParams& params);

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity_decrease = 0.0;
};

/// Decreases at or below this count as "no improvement" when comparing splits.
inline constexpr double kMinPositiveDecrease = 1e-12;

/// Best axis-aligned split of `rows` (indices into X/y) over `features`.
/// Candidate thresholds are midpoints of consecutive distinct sorted values;
/// rows with x ≤ threshold go left. Maximizes the weighted Gini decrease,
/// ties to the lower feature index, then the lower threshold. Each side must
/// keep at least `min_samples_leaf` rows. Returns nullopt when no candidate
/// has a positive decrease.
std::optional<Split> best_split(const Matrix& X, std::span<const int> y,
                                std::span<const std::size_t> rows,
                                std::span<const std::size_t> features, int n_classes,
                                std::size_t min_samples_leaf = 1);

/// Flat node array; node 0 is the root.
struct TreeNode {
  // Internal nodes: feature/threshold/children. Leaves: left == right == -1.
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::vector<std::size_t> counts;  // class counts of training rows reaching this node
  int predicted = 0;                // argmax of counts, ties to the lowest code

  bool is_leaf() const noexcept { return left < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
  int n_classes = 0;
  std::size_t dim = 0;

  std::size_t depth() const;
  std::size_t internal_count() const;
  const TreeNode& leaf_for(std::span<const double> x) const;
  int predict_one(std::span<const double> x) const { return leaf_for(x).predicted; }
  /// Leaf class-count fractions, one row per input row.
  Matrix predict_scores(const Matrix& X) const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

/// Grows a tree on `rows` of X. `n_classes` fixes the width of the count
/// vectors. Throws ConfigError on empty input.
DecisionTree grow_tree(const Matrix& X, std::span<const int> y, std::span<const std::size_t> rows,
                       int n_classes, const TreeParams& params);

DecisionTree fit_tree(const EmbeddedDataset& train, const TreeParams& params, int n_classes);

}  // namespace sentipipe
