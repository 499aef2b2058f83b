#include "sentipipe/tree.hpp"

#include <algorithm>
#include <numeric>

#include "sentipipe/error.hpp"
#include "sentipipe/rng.hpp"

namespace sentipipe {

double gini(std::span<const std::size_t> counts) {
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (total == 0) throw ConfigError("gini of an empty node");
  double sum_sq = 0.0;
  for (auto c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

void validate(const TreeParams& params) {
  if (params.max_depth < 1) throw ConfigError("tree max_depth must be at least 1");
  if (params.min_samples_leaf < 1) throw ConfigError("tree min_samples_leaf must be at least 1");
  if (params.max_features && *params.max_features < 1)
    throw ConfigError("max_features must be at least 1");
}

namespace {

double midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  // Adjacent doubles can round the midpoint up onto `hi`.
  return mid < hi ? mid : lo;
}

int argmax_low(std::span<const std::size_t> counts) {
  int best = 0;
  for (std::size_t c = 1; c < counts.size(); ++c)
    if (counts[c] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  return best;
}

}  // namespace

std::optional<Split> best_split(const Matrix& X, std::span<const int> y,
                                std::span<const std::size_t> rows,
                                std::span<const std::size_t> features, int n_classes,
                                std::size_t min_samples_leaf) {
  const std::size_t n = rows.size();
  if (n < 2 || features.empty()) return std::nullopt;
  const auto C = static_cast<std::size_t>(n_classes);

  std::vector<std::size_t> parent(C, 0);
  for (auto r : rows) ++parent[static_cast<std::size_t>(y[r])];
  const double parent_gini = gini(parent);

  std::vector<std::size_t> feats(features.begin(), features.end());
  std::sort(feats.begin(), feats.end());

  std::optional<Split> best;
  std::vector<std::size_t> order(rows.begin(), rows.end());
  std::vector<std::size_t> left(C), right(C);

  for (const auto f : feats) {
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return X(a, f) < X(b, f); });
    std::fill(left.begin(), left.end(), 0);
    right = parent;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      const auto cls = static_cast<std::size_t>(y[order[p]]);
      ++left[cls];
      --right[cls];
      const double lo = X(order[p], f);
      const double hi = X(order[p + 1], f);
      if (!(lo < hi)) continue;
      const std::size_t n_left = p + 1, n_right = n - n_left;
      if (n_left < min_samples_leaf || n_right < min_samples_leaf) continue;
      const double child = (static_cast<double>(n_left) * gini(left) +
                            static_cast<double>(n_right) * gini(right)) /
                           static_cast<double>(n);
      const double decrease = parent_gini - child;
      if (decrease <= kMinPositiveDecrease) continue;
      if (!best || decrease > best->impurity_decrease + kMinPositiveDecrease)
        best = Split{f, midpoint(lo, hi), decrease};
    }
  }
  return best;
}

std::size_t DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::size_t deepest = 0;
  std::vector<std::pair<std::int32_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [idx, d] = stack.back();
    stack.pop_back();
    const auto& node = nodes[static_cast<std::size_t>(idx)];
    deepest = std::max(deepest, d);
    if (!node.is_leaf()) {
      stack.emplace_back(node.left, d + 1);
      stack.emplace_back(node.right, d + 1);
    }
  }
  return deepest;
}

std::size_t DecisionTree::internal_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return !n.is_leaf(); }));
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
  const TreeNode* node = &nodes.front();
  while (!node->is_leaf()) {
    const auto next = x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left
                                                                                      : node->right;
    node = &nodes[static_cast<std::size_t>(next)];
  }
  return *node;
}

Matrix DecisionTree::predict_scores(const Matrix& X) const {
  Matrix out(X.rows(), static_cast<std::size_t>(n_classes));
  for (std::size_t r = 0; r < X.rows(); ++r) {
    const auto& leaf = leaf_for(X.row(r));
    const double total = static_cast<double>(
        std::accumulate(leaf.counts.begin(), leaf.counts.end(), std::size_t{0}));
    for (std::size_t c = 0; c < leaf.counts.size(); ++c)
      out(r, c) = static_cast<double>(leaf.counts[c]) / total;
  }
  return out;
}

DecisionTree grow_tree(const Matrix& X, std::span<const int> y, std::span<const std::size_t> rows,
                       int n_classes, const TreeParams& params) {
  validate(params);
  if (rows.empty()) throw ConfigError("cannot fit a tree on an empty dataset");
  if (n_classes < 1) throw ConfigError("tree needs at least one class");

  DecisionTree tree;
  tree.n_classes = n_classes;
  tree.dim = X.cols();
  const auto C = static_cast<std::size_t>(n_classes);
  const std::size_t d = X.cols();
  const bool subsample = params.max_features && *params.max_features < d;
  Rng rng(params.seed);

  std::vector<std::size_t> all_features(d);
  std::iota(all_features.begin(), all_features.end(), 0);
  std::vector<std::size_t> pool = all_features;

  struct Pending {
    std::int32_t node;
    std::vector<std::size_t> rows;
    std::size_t depth;
  };
  std::vector<Pending> stack;
  tree.nodes.emplace_back();
  stack.push_back({0, {rows.begin(), rows.end()}, 0});

  while (!stack.empty()) {
    Pending job = std::move(stack.back());
    stack.pop_back();
    auto& node = tree.nodes[static_cast<std::size_t>(job.node)];
    node.counts.assign(C, 0);
    for (auto r : job.rows) {
      if (y[r] < 0 || y[r] >= n_classes)
        throw ConfigError("label " + std::to_string(y[r]) + " outside [0," +
                          std::to_string(n_classes) + ")");
      ++node.counts[static_cast<std::size_t>(y[r])];
    }
    node.predicted = argmax_low(node.counts);

    const bool pure = std::count_if(node.counts.begin(), node.counts.end(),
                                    [](std::size_t c) { return c > 0; }) <= 1;
    if (pure || job.depth >= params.max_depth ||
        job.rows.size() < 2 * params.min_samples_leaf)
      continue;

    std::span<const std::size_t> features = all_features;
    if (subsample) {
      // Partial Fisher–Yates: the first max_features entries are the sample.
      const std::size_t m = *params.max_features;
      for (std::size_t i = 0; i < m; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(d - i));
        std::swap(pool[i], pool[j]);
      }
      features = std::span<const std::size_t>(pool.data(), m);
    }

    const auto split =
        best_split(X, y, job.rows, features, n_classes, params.min_samples_leaf);
    if (!split || split->impurity_decrease < params.min_impurity_decrease) continue;

    std::vector<std::size_t> left_rows, right_rows;
    for (auto r : job.rows)
      (X(r, split->feature) <= split->threshold ? left_rows : right_rows).push_back(r);

    const auto left_idx = static_cast<std::int32_t>(tree.nodes.size());
    node.feature = static_cast<std::int32_t>(split->feature);
    node.threshold = split->threshold;
    node.left = left_idx;
    node.right = left_idx + 1;
    // `node` is invalidated by the emplace_backs below.
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    stack.push_back({left_idx + 1, std::move(right_rows), job.depth + 1});
    stack.push_back({left_idx, std::move(left_rows), job.depth + 1});
  }
  return tree;
}

DecisionTree fit_tree(const EmbeddedDataset& train, const TreeParams& params, int n_classes) {
  if (train.size() == 0) throw ConfigError("cannot fit a tree on an empty dataset");
  std::vector<std::size_t> rows(train.size());
  std::iota(rows.begin(), rows.end(), 0);
  return grow_tree(train.X, train.labels(), rows, n_classes, params);
}

}  // namespace sentipipe
