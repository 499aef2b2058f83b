#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mini_data.hpp"
#include "oracles.hpp"
#include "sentipipe/error.hpp"
#include "sentipipe/forest.hpp"
#include "sentipipe/linear_svc.hpp"
#include "sentipipe/logreg.hpp"
#include "sentipipe/model.hpp"
#include "sentipipe/tree.hpp"
#include "test_support.hpp"

using namespace sentipipe;

namespace {

EmbeddedDataset dataset(const std::vector<std::vector<double>>& rows, std::vector<int> y) {
  EmbeddedDataset ds;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ds.X.append_row(rows[i]);
    ds.ids.push_back("p" + std::to_string(i));
  }
  ds.y = std::move(y);
  ds.provider_id = "test";
  return ds;
}

std::vector<int> predict_all(const DecisionTree& t, const Matrix& X) {
  std::vector<int> out;
  for (std::size_t r = 0; r < X.rows(); ++r) out.push_back(t.predict_one(X.row(r)));
  return out;
}

}  // namespace

TEST_CASE("gini") {
  const std::vector<std::size_t> pure{10, 0, 0}, even{5, 5}, mixed{1, 2, 3};
  CHECK(gini(pure) == 0.0);
  CHECK(gini(even) == 0.5);
  CHECK(gini(mixed) == doctest::Approx(1.0 - 14.0 / 36.0).epsilon(1e-15));
  const std::vector<std::size_t> permuted{3, 1, 2}, scaled{4, 8, 12};
  CHECK(gini(permuted) == doctest::Approx(gini(mixed)).epsilon(1e-15));
  CHECK(gini(scaled) == doctest::Approx(gini(mixed)).epsilon(1e-15));
  const std::vector<std::size_t> zero{0, 0, 0};
  CHECK_THROWS_AS(gini(zero), ConfigError);
}

TEST_CASE("best_split examples") {
  Matrix X(4, 1);
  for (std::size_t i = 0; i < 4; ++i) X(i, 0) = static_cast<double>(i + 1);
  const std::vector<int> y{0, 0, 1, 1};
  const std::vector<std::size_t> rows{0, 1, 2, 3}, feats{0};
  const auto s = best_split(X, y, rows, feats, 2);
  REQUIRE(s);
  CHECK(s->feature == 0);
  CHECK(s->threshold == 2.5);
  CHECK(s->impurity_decrease == doctest::Approx(0.5));

  Matrix constant(4, 1, 7.0);
  CHECK_FALSE(best_split(constant, y, rows, feats, 2));

  // min_samples_leaf forbids the perfect split.
  const auto limited = best_split(X, y, rows, feats, 2, 3);
  CHECK_FALSE(limited);
}

TEST_CASE("best_split equals the exhaustive oracle") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    CAPTURE(seed);
    CHECK(testsupport::best_split_matches_oracle(seed));
  }
}

TEST_CASE("tree structure") {
  SUBCASE("single class gives a leaf root") {
    const auto ds = dataset({{0.0}, {1.0}, {2.0}}, {2, 2, 2});
    const auto t = fit_tree(ds, {}, 3);
    REQUIRE(t.nodes.size() == 1);
    CHECK(t.nodes[0].is_leaf());
    CHECK(t.nodes[0].predicted == 2);
  }
  SUBCASE("XOR is solved within depth 2") {
    // Same-side corners are class 0. Off the unit grid so the root split has
    // a positive decrease.
    const auto ds = dataset({{0, 0}, {1, 2}, {2, 1}, {3, 3}}, {0, 1, 1, 0});
    TreeParams p;
    p.max_depth = 2;
    const auto t = fit_tree(ds, p, 2);
    CHECK(t.depth() <= 2);
    CHECK(predict_all(t, ds.X) == ds.labels());
    // On the exact grid no single split helps, so growth stops at the root.
    const auto grid = dataset({{0, 0}, {0, 1}, {1, 0}, {1, 1}}, {0, 1, 1, 0});
    CHECK(fit_tree(grid, p, 2).nodes.size() == 1);
  }
  SUBCASE("max_depth 1 gives a stump") {
    const auto ds = testsupport::random_dataset(40, 3, 3, 5);
    TreeParams p;
    p.max_depth = 1;
    const auto t = fit_tree(ds, p, 3);
    CHECK(t.internal_count() <= 1);
    CHECK(t.depth() <= 1);
  }
  SUBCASE("empty dataset is an error") {
    EmbeddedDataset empty;
    empty.y = std::vector<int>{};
    CHECK_THROWS_AS(fit_tree(empty, {}, 3), ConfigError);
  }
}

TEST_CASE("tree predictions are invariant under monotone feature transforms") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto ds = testsupport::random_dataset(40, 3, 3, seed);
    auto warped = ds;
    for (auto& v : warped.X.data()) v = std::exp(3.0 * v);
    const auto a = fit_tree(ds, {}, 3);
    const auto b = fit_tree(warped, {}, 3);
    CHECK(predict_all(a, ds.X) == predict_all(b, warped.X));
    CHECK(a.nodes.size() == b.nodes.size());
  }
}

TEST_CASE("forest") {
  const auto ds = testsupport::random_dataset(60, 4, 3, 11);
  SUBCASE("degenerate forest equals a single tree") {
    ForestParams fp;
    fp.n_trees = 1;
    fp.max_features = 4;
    fp.bootstrap = false;
    fp.seed = 3;
    const auto f = fit_forest(ds, fp, 3);
    const auto t = fit_tree(ds, fp.tree, 3);
    CHECK(argmax_rows(f.predict_scores(ds.X)) == predict_all(t, ds.X));
  }
  SUBCASE("identical trees vote unanimously") {
    ForestParams fp;
    fp.n_trees = 3;
    fp.max_features = 4;
    fp.bootstrap = false;
    const auto f = fit_forest(ds, fp, 3);
    const auto scores = f.predict_scores(ds.X);
    for (std::size_t r = 0; r < ds.size(); ++r)
      CHECK(scores(r, static_cast<std::size_t>(argmax_rows(scores)[r])) == 1.0);
  }
  SUBCASE("determinism and serial/parallel agreement") {
    ForestParams fp;
    fp.n_trees = 15;
    fp.seed = 99;
    const auto a = fit_forest(ds, fp, 3);
    const auto b = fit_forest(ds, fp, 3);
    const auto s = fit_forest(ds, fp, 3, kernels::Exec::serial);
    CHECK(a == b);
    CHECK(a == s);
    REQUIRE(a.oob_accuracy);
    CHECK(*a.oob_accuracy >= 0.0);
    CHECK(*a.oob_accuracy <= 1.0);
    fp.seed = 100;
    CHECK_FALSE(fit_forest(ds, fp, 3) == a);
  }
  SUBCASE("resolved max_features") {
    ForestParams fp;
    CHECK(resolved_max_features(fp, 64) == 8);
    CHECK(resolved_max_features(fp, 3) == 1);
    fp.max_features = 5;
    CHECK(resolved_max_features(fp, 64) == 5);
  }
}

TEST_CASE("forest is not worse than a single tree on the bundled corpus") {
  const auto m = testsupport::mini_data(0);
  const auto hp = resolved_hyperparams(m.config);
  const auto labels = sentiment_mapping();
  const auto tree = fit_model(ModelKind::tree, m.train, nullptr, hp, labels);
  const auto forest = fit_model(ModelKind::forest, m.train, nullptr, hp, labels);
  const double tree_acc = accuracy(predict(tree, m.test.X), m.test.labels());
  const double forest_acc = accuracy(predict(forest, m.test.X), m.test.labels());
  MESSAGE("tree " << tree_acc << ", forest " << forest_acc);
  CHECK(forest_acc >= tree_acc - 0.02);
}

TEST_CASE("linear SVC") {
  SUBCASE("separable toy set") {
    const auto ds = dataset({{0, 0}, {2, 2}, {0, 1}, {2, 3}}, {0, 1, 0, 1});
    const auto fit = fit_linear_svc(ds, nullptr, {}, 2);
    CHECK(argmax_rows(fit.model.predict_scores(ds.X)) == ds.labels());
    CHECK(fit.trace.back().train_accuracy == 1.0);
  }
  SUBCASE("margin-satisfying example only shrinks the weights") {
    std::vector<double> w{2.0, 0.0};
    double b = 0.0;
    const std::vector<double> x{1.0, 0.0};
    const double lambda = 0.1;
    CHECK_FALSE(pegasos_step(w, b, x, +1, lambda, 2));
    const double eta = 1.0 / (lambda * 2);
    CHECK(w[0] == doctest::Approx(2.0 * (1.0 - eta * lambda)));
    CHECK(w[1] == 0.0);
    // Violating example adds eta * sign * x.
    std::vector<double> w2{0.0, 0.0};
    double b2 = 0.0;
    CHECK(pegasos_step(w2, b2, x, -1, lambda, 1));
    CHECK(w2[0] == doctest::Approx(-1.0 / lambda));
  }
  SUBCASE("objective on the bundled corpus settles below its first epoch") {
    const auto m = testsupport::mini_data(0);
    const auto hp = resolved_hyperparams(m.config);
    const auto fit = fit_linear_svc(m.train, &m.test, hp.svc, 3);
    REQUIRE(fit.trace.size() >= 5);
    double tail = 0.0;
    for (std::size_t i = fit.trace.size() - 5; i < fit.trace.size(); ++i) {
      CHECK(std::isfinite(fit.trace[i].loss));
      tail += fit.trace[i].loss / 5.0;
    }
    CHECK(tail <= fit.trace.front().loss);
  }
  SUBCASE("single class is an error") {
    const auto ds = dataset({{0, 0}, {1, 1}}, {1, 1});
    CHECK_THROWS_AS(fit_linear_svc(ds, nullptr, {}, 3), ConfigError);
  }
}

TEST_CASE("logistic regression") {
  SUBCASE("zero weights predict uniform probabilities") {
    LogReg m;
    m.weights = Matrix(3, 2);
    m.bias = {0, 0, 0};
    Matrix X(2, 2, 5.0);
    const auto p = m.predict_proba(X);
    for (double v : p.data()) CHECK(v == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("analytic gradient matches finite differences") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      CAPTURE(seed);
      CHECK(testsupport::logreg_gradient_error(seed) <= 1e-6);
      CHECK(testsupport::logreg_gradient_error(seed, 5, 3, 3, 0.0) <= 1e-6);
    }
  }
  SUBCASE("symmetric data puts the boundary at zero") {
    const auto ds = dataset({{-2}, {-1}, {1}, {2}}, {0, 0, 1, 1});
    const auto fit = fit_logreg(ds, nullptr, {}, 2);
    Matrix probe(2, 1);
    probe(0, 0) = -1e-3;
    probe(1, 0) = 1e-3;
    const auto pred = argmax_rows(fit.model.predict_proba(probe));
    CHECK(pred[0] == 0);
    CHECK(pred[1] == 1);
  }
  SUBCASE("probabilities sum to one, also for large logits") {
    const auto ds = testsupport::random_dataset(30, 4, 3, 8);
    const auto fit = fit_logreg(ds, nullptr, {}, 3);
    auto big = ds.X;
    for (auto& v : big.data()) v *= 1e4;
    for (const Matrix* X : {&ds.X, static_cast<const Matrix*>(&big)}) {
      const auto p = fit.model.predict_proba(*X);
      for (std::size_t r = 0; r < p.rows(); ++r) {
        double s = 0.0;
        for (double v : p.row(r)) {
          CHECK(std::isfinite(v));
          s += v;
        }
        CHECK(std::abs(s - 1.0) <= 1e-9);
      }
    }
    CHECK(fit.trace.back().loss < fit.trace.front().loss);
  }
}

TEST_CASE("model envelope: round trip, codomain and dim checks") {
  auto ds = testsupport::random_dataset(45, 6, 3, 21);
  quantize_to_f32(ds);
  ModelHyperparams hp;
  hp.forest.n_trees = 5;
  hp.svc.epochs = 3;
  hp.logreg.epochs = 5;
  hp.rnn.epochs = 2;
  hp.rnn.seq_len = 3;
  hp.rnn.hidden_dim = 4;
  Rng rng(4);
  Matrix probe(20, 6);
  for (auto& v : probe.data()) v = rng.uniform(-3.0, 3.0);
  for (auto kind : kAllModelKinds) {
    CAPTURE(model_kind_name(kind));
    const auto m = fit_model(kind, ds, nullptr, hp, sentiment_mapping());
    CHECK(m.kind() == kind);
    const auto codes = predict(m, ds.X);
    CHECK(codes.size() == ds.size());
    for (int c : codes) CHECK((c >= 0 && c <= 2));

    const auto back = deserialize_model(serialize_model(m));
    CHECK(back == m);
    CHECK(predict(back, probe) == predict(m, probe));
    CHECK(serialize_model(back) == serialize_model(m));

    Matrix wrong(2, 5);
    try {
      predict(m, wrong);
      FAIL("expected a dim error");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find('6') != std::string::npos);
      CHECK(msg.find('5') != std::string::npos);
    }
    CHECK(is_iterative(kind) == !m.metadata.trace.empty());
  }
  CHECK_THROWS_AS(deserialize_model("{"), FormatError);
  CHECK_THROWS_AS(deserialize_model(R"({"format_version":2})"), FormatError);
  CHECK(parse_model_kind("forest") == ModelKind::forest);
  CHECK_FALSE(parse_model_kind("knn"));
}
