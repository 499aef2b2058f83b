#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sentipipe/kernels.hpp"
#include "sentipipe/tree.hpp"

namespace sentipipe {

struct ForestParams {
  std::size_t n_trees = 100;
  /// Per-split feature subset size; nullopt means ⌊√d⌋.
  std::optional<std::size_t> max_features;
  TreeParams tree;  // depth/leaf limits for every member tree
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

void validate(const ForestParams& params, std::size_t dim);
std::size_t resolved_max_features(const ForestParams& params, std::size_t dim);

struct RandomForest {
  std::vector<DecisionTree> trees;
  int n_classes = 0;
  std::size_t dim = 0;
  std::optional<double> oob_accuracy;

  /// Vote fractions per class.
  Matrix predict_scores(const Matrix& X) const;

  friend bool operator==(const RandomForest&, const RandomForest&) = default;
};

/// Tree t trains on n draws with replacement from a stream seeded by
/// seed ⊕ t, so the result does not depend on which thread grows which tree.
/// Out-of-bag accuracy is set when every row is out of bag for some tree.
RandomForest fit_forest(const EmbeddedDataset& train, const ForestParams& params, int n_classes,
                        kernels::Exec exec = kernels::Exec::parallel);

}  // namespace sentipipe
