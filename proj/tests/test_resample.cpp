#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "sentipipe/error.hpp"
#include "sentipipe/smote.hpp"
#include "test_support.hpp"

using namespace sentipipe;
using testsupport::class_counts;

namespace {

/// Dataset with the given per-class counts, rows uniform in [-1, 1].
EmbeddedDataset imbalanced(const std::vector<std::size_t>& counts, std::size_t d,
                           std::uint64_t seed) {
  Rng rng(seed);
  std::size_t n = 0;
  for (auto c : counts) n += c;
  EmbeddedDataset ds;
  ds.X = Matrix(n, d);
  std::vector<int> y;
  for (std::size_t c = 0; c < counts.size(); ++c) y.insert(y.end(), counts[c], static_cast<int>(c));
  rng.shuffle(std::span(y));
  for (std::size_t i = 0; i < n; ++i) {
    ds.ids.push_back("r" + std::to_string(i));
    for (std::size_t j = 0; j < d; ++j) ds.X(i, j) = rng.uniform(-1.0, 1.0);
  }
  ds.y = std::move(y);
  ds.provider_id = "test";
  return ds;
}

SmoteParams params(std::size_t k, std::uint64_t seed) {
  SmoteParams p;
  p.k = k;
  p.seed = seed;
  return p;
}

}  // namespace

TEST_CASE("stage names") {
  CHECK(parse_smote_stage("pre_split") == SmoteStage::pre_split);
  CHECK(parse_smote_stage("train_only") == SmoteStage::train_only);
  CHECK_FALSE(parse_smote_stage("both"));
  CHECK(smote_stage_name(SmoteStage::pre_split) == "pre_split");
  CHECK(is_synthetic_id("synth-0-1"));
  CHECK_FALSE(is_synthetic_id("mini-1"));
}

TEST_CASE("balanced input is returned unchanged") {
  const auto ds = testsupport::random_dataset(30, 4, 3, 1);
  const auto res = smote(ds, params(5, 2));
  CHECK(res.data == ds);
  CHECK(res.synthesized == 0);
  CHECK(res.warnings.empty());
}

TEST_CASE("minority class is brought up to the majority count") {
  const auto ds = imbalanced({4, 2}, 3, 5);
  const auto res = smote(ds, params(5, 9));
  CHECK(class_counts(*res.data.y) == std::map<int, std::size_t>{{0, 4}, {1, 4}});
  CHECK(res.synthesized == 2);
  CHECK(testsupport::originals_preserved(ds, res.data));
  CHECK(testsupport::synthetic_rows_on_segments(ds, res.data, 1e-9));
  // k = 5 exceeds the 1 available neighbour of the minority class.
  CHECK_FALSE(res.warnings.empty());
}

TEST_CASE("explicit targets") {
  const auto ds = imbalanced({10, 3, 5}, 2, 4);
  auto p = params(2, 1);
  p.targets = {{1, 6}, {2, 4}};
  const auto res = smote(ds, p);
  CHECK(class_counts(*res.data.y) == std::map<int, std::size_t>{{0, 10}, {1, 6}, {2, 5}});
}

TEST_CASE("synthetic geometry on random imbalanced datasets") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    const auto ds = imbalanced({20 + seed % 7, 6 + seed % 3, 3 + seed % 5}, 1 + seed % 5, seed);
    const auto res = smote(ds, params(1 + seed % 5, seed * 31));
    const auto counts = class_counts(*res.data.y);
    const std::size_t top = counts.at(0);
    for (const auto& [c, n] : counts) CHECK(n == top);
    CHECK(testsupport::originals_preserved(ds, res.data));
    CHECK(testsupport::synthetic_rows_on_segments(ds, res.data, 1e-9));

    // Each synthetic row stays inside its class bounding box.
    for (std::size_t r = ds.size(); r < res.data.size(); ++r) {
      const int c = (*res.data.y)[r];
      for (std::size_t j = 0; j < ds.dim(); ++j) {
        double lo = 1e300, hi = -1e300;
        for (std::size_t i = 0; i < ds.size(); ++i)
          if ((*ds.y)[i] == c) {
            lo = std::min(lo, ds.X(i, j));
            hi = std::max(hi, ds.X(i, j));
          }
        CHECK(res.data.X(r, j) >= lo - 1e-12);
        CHECK(res.data.X(r, j) <= hi + 1e-12);
      }
    }
    std::set<std::string> ids(res.data.ids.begin(), res.data.ids.end());
    CHECK(ids.size() == res.data.size());
  }
}

TEST_CASE("nearest neighbours: ascending distance, ties to the lower index, self excluded") {
  Matrix d(4, 4);
  const double vals[4][4] = {{0, 1, 1, 3}, {1, 0, 2, 2}, {1, 2, 0, 5}, {3, 2, 5, 0}};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) d(i, j) = vals[i][j];
  CHECK(nearest_neighbors(d, 0, 2) == std::vector<std::size_t>{1, 2});
  CHECK(nearest_neighbors(d, 3, 3) == std::vector<std::size_t>{1, 0, 2});
  CHECK(nearest_neighbors(d, 1, 1) == std::vector<std::size_t>{0});
}

TEST_CASE("errors") {
  const auto ds = imbalanced({5, 1}, 2, 1);
  try {
    smote(ds, params(3, 1));
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("class 1") != std::string::npos);
  }
  CHECK_THROWS_AS(smote(imbalanced({5, 3}, 2, 1), params(0, 1)), ConfigError);
  auto unlabeled = imbalanced({5, 3}, 2, 1);
  unlabeled.y.reset();
  CHECK_THROWS(smote(unlabeled, params(3, 1)));
}

TEST_CASE("determinism, seed sensitivity and serial/parallel agreement") {
  const auto ds = imbalanced({40, 12, 7}, 6, 77);
  const auto a = smote(ds, params(5, 123));
  const auto b = smote(ds, params(5, 123));
  CHECK(a.data == b.data);
  const auto serial = smote(ds, params(5, 123), kernels::Exec::serial);
  CHECK(serial.data == a.data);
  const auto other = smote(ds, params(5, 124));
  CHECK_FALSE(other.data == a.data);
}
