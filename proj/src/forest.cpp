#include "sentipipe/forest.hpp"

#include <cmath>
#include <exception>
#include <numeric>

#include "sentipipe/error.hpp"
#include "sentipipe/rng.hpp"

namespace sentipipe {

std::size_t resolved_max_features(const ForestParams& params, std::size_t dim) {
  if (params.max_features) return *params.max_features;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(dim))));
}

void validate(const ForestParams& params, std::size_t dim) {
  if (params.n_trees < 1) throw ConfigError("forest needs at least one tree");
  const auto m = resolved_max_features(params, dim);
  if (m < 1 || m > dim)
    throw ConfigError("max_features must lie in [1," + std::to_string(dim) + "], got " +
                      std::to_string(m));
  validate(params.tree);
}

Matrix RandomForest::predict_scores(const Matrix& X) const {
  Matrix votes(X.rows(), static_cast<std::size_t>(n_classes));
  for (const auto& tree : trees)
    for (std::size_t r = 0; r < X.rows(); ++r)
      votes(r, static_cast<std::size_t>(tree.predict_one(X.row(r)))) += 1.0;
  const double n = static_cast<double>(trees.size());
  for (auto& v : votes.data()) v /= n;
  return votes;
}

namespace {

struct GrownTree {
  DecisionTree tree;
  std::vector<bool> in_bag;
};

GrownTree grow_member(const EmbeddedDataset& train, const ForestParams& params, int n_classes,
                      std::size_t t) {
  const std::size_t n = train.size();
  const std::uint64_t tree_seed = params.seed ^ static_cast<std::uint64_t>(t);
  Rng rng(mix64(tree_seed));
  GrownTree out;
  out.in_bag.assign(n, !params.bootstrap);
  std::vector<std::size_t> rows(n);
  if (params.bootstrap) {
    for (auto& r : rows) {
      r = static_cast<std::size_t>(rng.below(n));
      out.in_bag[r] = true;
    }
    std::sort(rows.begin(), rows.end());
  } else {
    std::iota(rows.begin(), rows.end(), 0);
  }
  TreeParams tp = params.tree;
  tp.max_features = resolved_max_features(params, train.dim());
  tp.seed = rng.next();
  out.tree = grow_tree(train.X, train.labels(), rows, n_classes, tp);
  return out;
}

}  // namespace

RandomForest fit_forest(const EmbeddedDataset& train, const ForestParams& params, int n_classes,
                        kernels::Exec exec) {
  if (train.size() == 0) throw ConfigError("cannot fit a forest on an empty dataset");
  validate(params, train.dim());
  (void)train.labels();

  std::vector<GrownTree> grown(params.n_trees);
  if (exec == kernels::Exec::serial) {
    for (std::size_t t = 0; t < params.n_trees; ++t)
      grown[t] = grow_member(train, params, n_classes, t);
  } else {
    std::exception_ptr error;
    const auto n_trees = static_cast<std::ptrdiff_t>(params.n_trees);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t t = 0; t < n_trees; ++t) {
      try {
        grown[static_cast<std::size_t>(t)] =
            grow_member(train, params, n_classes, static_cast<std::size_t>(t));
      } catch (...) {
#pragma omp critical(sentipipe_forest_error)
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
  }

  RandomForest forest;
  forest.n_classes = n_classes;
  forest.dim = train.dim();
  forest.trees.reserve(grown.size());

  const auto& y = train.labels();
  const std::size_t n = train.size();
  Matrix oob_votes(n, static_cast<std::size_t>(n_classes));
  std::vector<bool> covered(n, false);
  for (const auto& g : grown) {
    for (std::size_t r = 0; r < n; ++r) {
      if (g.in_bag[r]) continue;
      covered[r] = true;
      oob_votes(r, static_cast<std::size_t>(g.tree.predict_one(train.X.row(r)))) += 1.0;
    }
    forest.trees.push_back(g.tree);
  }
  if (std::all_of(covered.begin(), covered.end(), [](bool b) { return b; })) {
    std::size_t correct = 0;
    for (std::size_t r = 0; r < n; ++r) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < oob_votes.cols(); ++c)
        if (oob_votes(r, c) > oob_votes(r, best)) best = c;
      if (static_cast<int>(best) == y[r]) ++correct;
    }
    forest.oob_accuracy = static_cast<double>(correct) / static_cast<double>(n);
  }
  return forest;
}

}  // namespace sentipipe
