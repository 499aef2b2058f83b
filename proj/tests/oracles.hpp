#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary.

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include "sentipipe/dataset.hpp"
#include "sentipipe/logreg.hpp"
#include "sentipipe/rng.hpp"
#include "sentipipe/rnn.hpp"
#include "sentipipe/smote.hpp"
#include "sentipipe/tree.hpp"

namespace testsupport {

/// Distance from s to the segment [a, b] (Euclidean, in the embedding space).
inline double segment_distance(std::span<const double> s, std::span<const double> a,
                               std::span<const double> b) {
  double ab2 = 0.0, dot = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    ab2 += (b[j] - a[j]) * (b[j] - a[j]);
    dot += (s[j] - a[j]) * (b[j] - a[j]);
  }
  const double u = ab2 > 0.0 ? std::clamp(dot / ab2, 0.0, 1.0) : 0.0;
  double d2 = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    const double p = a[j] + u * (b[j] - a[j]);
    d2 += (s[j] - p) * (s[j] - p);
  }
  return std::sqrt(d2);
}

/// Every synthetic row of `out` lies within `tol` of a segment joining two
/// original rows of its own class. Tries all pairs.
inline bool synthetic_rows_on_segments(const sentipipe::EmbeddedDataset& original,
                                       const sentipipe::EmbeddedDataset& out, double tol) {
  const auto& y0 = *original.y;
  const auto& y1 = *out.y;
  for (std::size_t r = original.size(); r < out.size(); ++r) {
    bool found = false;
    for (std::size_t a = 0; a < original.size() && !found; ++a) {
      if (y0[a] != y1[r]) continue;
      for (std::size_t b = 0; b < original.size() && !found; ++b)
        if (b != a && y0[b] == y1[r] &&
            segment_distance(out.X.row(r), original.X.row(a), original.X.row(b)) <= tol)
          found = true;
    }
    if (!found) return false;
  }
  return true;
}

/// Originals are the leading rows, bit-identical, with ids and labels intact.
inline bool originals_preserved(const sentipipe::EmbeddedDataset& original,
                                const sentipipe::EmbeddedDataset& out) {
  if (out.size() < original.size() || out.dim() != original.dim()) return false;
  for (std::size_t r = 0; r < original.size(); ++r) {
    if (out.ids[r] != original.ids[r] || (*out.y)[r] != (*original.y)[r]) return false;
    for (std::size_t j = 0; j < original.dim(); ++j)
      if (std::bit_cast<std::uint64_t>(out.X(r, j)) !=
          std::bit_cast<std::uint64_t>(original.X(r, j)))
        return false;
  }
  for (std::size_t r = original.size(); r < out.size(); ++r)
    if (!sentipipe::is_synthetic_id(out.ids[r])) return false;
  return true;
}

inline std::map<int, std::size_t> class_counts(const std::vector<int>& y) {
  std::map<int, std::size_t> m;
  for (int v : y) ++m[v];
  return m;
}

// ---- best split by exhaustive partition --------------------------------

inline double gini_of(const std::vector<std::size_t>& counts) {
  double n = 0.0, sq = 0.0;
  for (auto c : counts) n += static_cast<double>(c);
  for (auto c : counts) sq += (c / n) * (c / n);
  return 1.0 - sq;
}

struct OracleSplit {
  std::size_t feature;
  double threshold;
  double decrease;
};

/// Scans every feature and every midpoint between consecutive distinct
/// values, partitioning the rows from scratch each time. Returns the first
/// candidate (feature, then threshold order) within `tie` of the maximum.
inline std::optional<OracleSplit> exhaustive_best_split(const sentipipe::Matrix& X,
                                                        const std::vector<int>& y, int classes,
                                                        std::size_t min_leaf = 1,
                                                        double tie = 1e-9) {
  const std::size_t n = X.rows();
  std::vector<std::size_t> all(static_cast<std::size_t>(classes), 0);
  for (int v : y) ++all[static_cast<std::size_t>(v)];
  const double parent = gini_of(all);
  std::vector<OracleSplit> candidates;
  for (std::size_t f = 0; f < X.cols(); ++f) {
    std::vector<double> vals;
    for (std::size_t i = 0; i < n; ++i) vals.push_back(X(i, f));
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
      const double t = std::midpoint(vals[k], vals[k + 1]);
      std::vector<std::size_t> l(all.size(), 0), r(all.size(), 0);
      std::size_t nl = 0, nr = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (X(i, f) <= t) {
          ++l[static_cast<std::size_t>(y[i])];
          ++nl;
        } else {
          ++r[static_cast<std::size_t>(y[i])];
          ++nr;
        }
      }
      if (nl < min_leaf || nr < min_leaf) continue;
      const double dec = parent - (nl * gini_of(l) + nr * gini_of(r)) / static_cast<double>(n);
      candidates.push_back({f, t, dec});
    }
  }
  double best = -1.0;
  for (const auto& c : candidates) best = std::max(best, c.decrease);
  if (best <= tie) return std::nullopt;
  for (const auto& c : candidates)
    if (c.decrease >= best - tie) return c;
  return std::nullopt;
}

/// Runs best_split and the exhaustive oracle on a random dataset.
inline bool best_split_matches_oracle(std::uint64_t seed, std::size_t max_n = 30,
                                      std::size_t max_d = 4) {
  sentipipe::Rng rng(seed);
  const std::size_t n = 2 + static_cast<std::size_t>(rng.below(max_n - 1));
  const std::size_t d = 1 + static_cast<std::size_t>(rng.below(max_d));
  const int classes = 2 + static_cast<int>(rng.below(2));
  // Coarse value grid so duplicate values and tied splits occur.
  const bool coarse = rng.below(2) == 0;
  sentipipe::Matrix X(n, d);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j)
      X(i, j) = coarse ? static_cast<double>(rng.below(5)) : rng.uniform(-1.0, 1.0);
    y[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
  }
  std::vector<std::size_t> rows(n), feats(d);
  std::iota(rows.begin(), rows.end(), 0);
  std::iota(feats.begin(), feats.end(), 0);
  const auto got = sentipipe::best_split(X, y, rows, feats, classes);
  const auto want = exhaustive_best_split(X, y, classes);
  if (!got || !want) return !got && !want;
  return got->feature == want->feature && got->threshold == want->threshold &&
         std::abs(got->impurity_decrease - want->decrease) <= 1e-9;
}

// ---- finite-difference gradient checks -----------------------------------

/// Largest per-coordinate |a − b| / max(|a|, |b|, floor). The floor keeps
/// coordinates whose true value is ~0 from dividing noise by noise.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b,
                             double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]) /
                                std::max({std::abs(a[i]), std::abs(b[i]), floor}));
  return worst;
}

/// Central-difference check of logreg_gradient on a random n × d, C-class
/// instance with random nonzero weights.
inline double logreg_gradient_error(std::uint64_t seed, std::size_t n = 5, std::size_t d = 3,
                                    int classes = 3, double l2 = 0.1) {
  sentipipe::Rng rng(seed);
  sentipipe::Matrix X(n, d);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) X(i, j) = rng.uniform(-2.0, 2.0);
    y[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
  }
  sentipipe::LogReg m;
  m.weights = sentipipe::Matrix(static_cast<std::size_t>(classes), d);
  for (auto& w : m.weights.data()) w = rng.uniform(-1.0, 1.0);
  m.bias.resize(static_cast<std::size_t>(classes));
  for (auto& b : m.bias) b = rng.uniform(-1.0, 1.0);

  const auto g = sentipipe::logreg_gradient(m, X, y, l2);
  std::vector<double> analytic(g.weights.data().begin(), g.weights.data().end());
  analytic.insert(analytic.end(), g.bias.begin(), g.bias.end());

  const double h = 1e-5;
  std::vector<double> numeric;
  auto probe = [&](double& param) {
    const double saved = param;
    param = saved + h;
    const double up = sentipipe::logreg_loss(m, X, y, l2);
    param = saved - h;
    const double down = sentipipe::logreg_loss(m, X, y, l2);
    param = saved;
    numeric.push_back((up - down) / (2 * h));
  };
  for (auto& w : m.weights.data()) probe(w);
  for (auto& b : m.bias) probe(b);
  return relative_error(analytic, numeric);
}

/// Central-difference check of bptt_gradients (unclipped) on a random
/// instance: embedding dim `dim` split into `steps`, hidden size `hidden`.
inline double rnn_gradient_error(std::uint64_t seed, std::size_t dim = 4, std::size_t steps = 2,
                                 std::size_t hidden = 3, std::size_t classes = 3) {
  sentipipe::Rng rng(seed);
  std::vector<double> x(dim);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  const auto seq = sentipipe::reshape_to_sequence(x, steps);
  const int target = static_cast<int>(rng.below(classes));
  auto w = sentipipe::RnnWeights::uniform(dim / steps, hidden, classes, rng.next(), 0.8);

  const auto g = sentipipe::bptt_gradients(w, seq, target);
  std::vector<double> analytic;
  for (auto block : g.blocks()) analytic.insert(analytic.end(), block.begin(), block.end());

  const double h = 1e-5;
  std::vector<double> numeric;
  for (auto block : w.blocks())
    for (auto& p : block) {
      const double saved = p;
      p = saved + h;
      const double up = sentipipe::rnn_loss(w, seq, target);
      p = saved - h;
      const double down = sentipipe::rnn_loss(w, seq, target);
      p = saved;
      numeric.push_back((up - down) / (2 * h));
    }
  return relative_error(analytic, numeric);
}

}  // namespace testsupport
