#include "sentipipe/model.hpp"

#include <iterator>
#include <type_traits>

#include "sentipipe/error.hpp"

namespace sentipipe {

namespace {

constexpr std::string_view kKindNames[] = {"tree", "forest", "svc", "logreg", "rnn"};

using json = nlohmann::json;

json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()},
              {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

Matrix matrix_from_json(const json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.rows() * m.cols())
    throw FormatError("matrix payload has " + std::to_string(data.size()) + " values, expected " +
                      std::to_string(m.rows() * m.cols()));
  std::copy(data.begin(), data.end(), m.data().begin());
  return m;
}

json tree_to_json(const DecisionTree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes)
    nodes.push_back(json{{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left},
                         {"right", n.right}, {"counts", n.counts}, {"predicted", n.predicted}});
  return json{{"n_classes", t.n_classes}, {"dim", t.dim}, {"nodes", std::move(nodes)}};
}

DecisionTree tree_from_json(const json& j) {
  DecisionTree t;
  t.n_classes = j.at("n_classes").get<int>();
  t.dim = j.at("dim").get<std::size_t>();
  for (const auto& n : j.at("nodes")) {
    TreeNode node;
    node.feature = n.at("feature").get<std::int32_t>();
    node.threshold = n.at("threshold").get<double>();
    node.left = n.at("left").get<std::int32_t>();
    node.right = n.at("right").get<std::int32_t>();
    node.counts = n.at("counts").get<std::vector<std::size_t>>();
    node.predicted = n.at("predicted").get<int>();
    t.nodes.push_back(std::move(node));
  }
  const auto count = static_cast<std::int32_t>(t.nodes.size());
  if (count == 0) throw FormatError("tree has no nodes");
  for (const auto& n : t.nodes) {
    if (n.is_leaf()) continue;
    if (n.left <= 0 || n.left >= count || n.right <= 0 || n.right >= count || n.feature < 0 ||
        static_cast<std::size_t>(n.feature) >= t.dim)
      throw FormatError("tree node references out of range");
  }
  return t;
}

json trace_to_json(const std::vector<EpochTrace>& trace) {
  json out = json::array();
  for (const auto& e : trace)
    out.push_back(json{{"epoch", e.epoch}, {"loss", e.loss}, {"train_accuracy", e.train_accuracy},
                       {"test_accuracy", e.test_accuracy}});
  return out;
}

std::vector<EpochTrace> trace_from_json(const json& j) {
  std::vector<EpochTrace> out;
  for (const auto& e : j)
    out.push_back(EpochTrace{e.at("epoch").get<std::size_t>(), e.at("loss").get<double>(),
                             e.at("train_accuracy").get<double>(),
                             e.at("test_accuracy").get<double>()});
  return out;
}

json parameters_to_json(const ModelParameters& p) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, DecisionTree>) {
          return tree_to_json(m);
        } else if constexpr (std::is_same_v<T, RandomForest>) {
          json trees = json::array();
          for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
          return json{{"n_classes", m.n_classes}, {"dim", m.dim}, {"trees", std::move(trees)}};
        } else if constexpr (std::is_same_v<T, LinearSvc>) {
          return json{{"weights", matrix_to_json(m.weights)}, {"bias", m.bias}};
        } else if constexpr (std::is_same_v<T, LogReg>) {
          return json{{"weights", matrix_to_json(m.weights)}, {"bias", m.bias}};
        } else {
          const auto& w = m.weights;
          return json{{"seq_len", m.seq_len},
                      {"W_xh", matrix_to_json(w.W_xh)},
                      {"W_hh", matrix_to_json(w.W_hh)},
                      {"b_h", w.b_h},
                      {"W_hy", matrix_to_json(w.W_hy)},
                      {"b_y", w.b_y}};
        }
      },
      p);
}

ModelParameters parameters_from_json(ModelKind kind, const json& j) {
  switch (kind) {
    case ModelKind::tree:
      return tree_from_json(j);
    case ModelKind::forest: {
      RandomForest f;
      f.n_classes = j.at("n_classes").get<int>();
      f.dim = j.at("dim").get<std::size_t>();
      for (const auto& t : j.at("trees")) f.trees.push_back(tree_from_json(t));
      if (f.trees.empty()) throw FormatError("forest has no trees");
      return f;
    }
    case ModelKind::svc:
      return LinearSvc{matrix_from_json(j.at("weights")), j.at("bias").get<std::vector<double>>()};
    case ModelKind::logreg:
      return LogReg{matrix_from_json(j.at("weights")), j.at("bias").get<std::vector<double>>()};
    case ModelKind::rnn: {
      RnnModel m;
      m.seq_len = j.at("seq_len").get<std::size_t>();
      m.weights.W_xh = matrix_from_json(j.at("W_xh"));
      m.weights.W_hh = matrix_from_json(j.at("W_hh"));
      m.weights.b_h = j.at("b_h").get<std::vector<double>>();
      m.weights.W_hy = matrix_from_json(j.at("W_hy"));
      m.weights.b_y = j.at("b_y").get<std::vector<double>>();
      const auto H = m.weights.W_hh.rows();
      if (m.seq_len == 0 || m.weights.W_hh.cols() != H || m.weights.W_xh.rows() != H ||
          m.weights.b_h.size() != H || m.weights.W_hy.cols() != H ||
          m.weights.b_y.size() != m.weights.W_hy.rows())
        throw FormatError("rnn weight shapes are inconsistent");
      return m;
    }
  }
  throw FormatError("unknown model kind");
}

}  // namespace

std::optional<ModelKind> parse_model_kind(std::string_view name) noexcept {
  for (std::size_t i = 0; i < std::size(kKindNames); ++i)
    if (kKindNames[i] == name) return static_cast<ModelKind>(i);
  return std::nullopt;
}

std::string_view model_kind_name(ModelKind kind) noexcept {
  return kKindNames[static_cast<std::size_t>(kind)];
}

bool is_iterative(ModelKind kind) noexcept {
  return kind == ModelKind::svc || kind == ModelKind::logreg || kind == ModelKind::rnn;
}

Matrix predict_scores(const TrainedModel& model, const Matrix& X) {
  if (X.cols() != model.metadata.dim)
    throw ConfigError("model expects dim " + std::to_string(model.metadata.dim) + ", got " +
                      std::to_string(X.cols()));
  return std::visit(
      [&](const auto& m) -> Matrix {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LogReg> || std::is_same_v<T, RnnModel>)
          return m.predict_proba(X);
        else
          return m.predict_scores(X);
      },
      model.parameters);
}

std::vector<int> predict(const TrainedModel& model, const Matrix& X) {
  return argmax_rows(predict_scores(model, X));
}

json model_to_json(const TrainedModel& model) {
  const auto& md = model.metadata;
  json metadata{{"provider_id", md.provider_id},
                {"dim", md.dim},
                {"labels", md.labels.names},
                {"params", md.params},
                {"train_accuracy", md.train_accuracy},
                {"trace", trace_to_json(md.trace)}};
  metadata["oob_accuracy"] = md.oob_accuracy ? json(*md.oob_accuracy) : json(nullptr);
  return json{{"format_version", kModelFormatVersion},
              {"kind", model_kind_name(model.kind())},
              {"metadata", std::move(metadata)},
              {"parameters", parameters_to_json(model.parameters)}};
}

TrainedModel model_from_json(const json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      throw FormatError("unsupported model format_version " + std::to_string(version));
    const auto kind_name = j.at("kind").get<std::string>();
    const auto kind = parse_model_kind(kind_name);
    if (!kind) throw FormatError("unknown model kind '" + kind_name + "'");
    const auto& md = j.at("metadata");
    TrainedModel m{parameters_from_json(*kind, j.at("parameters")), {}};
    m.metadata.provider_id = md.at("provider_id").get<std::string>();
    m.metadata.dim = md.at("dim").get<std::size_t>();
    m.metadata.labels.names = md.at("labels").get<std::vector<std::string>>();
    m.metadata.params = md.at("params");
    m.metadata.train_accuracy = md.at("train_accuracy").get<double>();
    m.metadata.trace = trace_from_json(md.at("trace"));
    if (md.contains("oob_accuracy") && !md["oob_accuracy"].is_null())
      m.metadata.oob_accuracy = md["oob_accuracy"].get<double>();
    if (auto* f = std::get_if<RandomForest>(&m.parameters)) f->oob_accuracy = m.metadata.oob_accuracy;
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  }
}

std::string serialize_model(const TrainedModel& model) { return model_to_json(model).dump() + "\n"; }

TrainedModel deserialize_model(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("model file is not JSON: ") + e.what(), e.byte);
  }
  return model_from_json(j);
}

json hyperparams_to_json(ModelKind kind, const ModelHyperparams& hp) {
  auto tree_json = [](const TreeParams& p) {
    json j{{"max_depth", p.max_depth},
           {"min_samples_leaf", p.min_samples_leaf},
           {"min_impurity_decrease", p.min_impurity_decrease},
           {"seed", p.seed}};
    j["max_features"] = p.max_features ? json(*p.max_features) : json(nullptr);
    return j;
  };
  switch (kind) {
    case ModelKind::tree:
      return tree_json(hp.tree);
    case ModelKind::forest: {
      json j{{"n_trees", hp.forest.n_trees},
             {"bootstrap", hp.forest.bootstrap},
             {"seed", hp.forest.seed},
             {"tree", tree_json(hp.forest.tree)}};
      j["max_features"] = hp.forest.max_features ? json(*hp.forest.max_features) : json(nullptr);
      return j;
    }
    case ModelKind::svc:
      return json{{"lambda", hp.svc.lambda}, {"epochs", hp.svc.epochs}, {"seed", hp.svc.seed}};
    case ModelKind::logreg:
      return json{{"learning_rate", hp.logreg.learning_rate},
                  {"epochs", hp.logreg.epochs},
                  {"l2", hp.logreg.l2}};
    case ModelKind::rnn:
      return json{{"seq_len", hp.rnn.seq_len},         {"hidden_dim", hp.rnn.hidden_dim},
                  {"learning_rate", hp.rnn.learning_rate}, {"epochs", hp.rnn.epochs},
                  {"grad_clip", hp.rnn.grad_clip},     {"batch_size", hp.rnn.batch_size},
                  {"seed", hp.rnn.seed}};
  }
  return json::object();
}

TrainedModel fit_model(ModelKind kind, const EmbeddedDataset& train, const EmbeddedDataset* test,
                       const ModelHyperparams& hp, const LabelMapping& labels) {
  const int C = static_cast<int>(labels.size());
  for (int c : train.labels())
    if (c < 0 || c >= C)
      throw ConfigError("training label " + std::to_string(c) + " outside the label mapping");

  TrainedModel model{DecisionTree{}, {}};
  auto& md = model.metadata;
  md.provider_id = train.provider_id;
  md.dim = train.dim();
  md.labels = labels;
  md.params = hyperparams_to_json(kind, hp);

  switch (kind) {
    case ModelKind::tree:
      model.parameters = fit_tree(train, hp.tree, C);
      break;
    case ModelKind::forest: {
      auto forest = fit_forest(train, hp.forest, C);
      md.oob_accuracy = forest.oob_accuracy;
      model.parameters = std::move(forest);
      break;
    }
    case ModelKind::svc: {
      auto fit = fit_linear_svc(train, test, hp.svc, C);
      md.trace = std::move(fit.trace);
      model.parameters = std::move(fit.model);
      break;
    }
    case ModelKind::logreg: {
      auto fit = fit_logreg(train, test, hp.logreg, C);
      md.trace = std::move(fit.trace);
      model.parameters = std::move(fit.model);
      break;
    }
    case ModelKind::rnn: {
      auto fit = fit_rnn(train, test, hp.rnn, C);
      md.trace = std::move(fit.trace);
      model.parameters = std::move(fit.model);
      break;
    }
  }
  md.train_accuracy = accuracy(predict(model, train.X), train.labels());
  return model;
}

}  // namespace sentipipe
