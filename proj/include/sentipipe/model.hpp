#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "sentipipe/corpus.hpp"
#include "sentipipe/forest.hpp"
#include "sentipipe/linear_svc.hpp"
#include "sentipipe/logreg.hpp"
#include "sentipipe/rnn.hpp"
#include "sentipipe/trace.hpp"
#include "sentipipe/tree.hpp"

namespace sentipipe {

enum class ModelKind { tree, forest, svc, logreg, rnn };

inline constexpr ModelKind kAllModelKinds[] = {ModelKind::tree, ModelKind::forest, ModelKind::svc,
                                               ModelKind::logreg, ModelKind::rnn};

std::optional<ModelKind> parse_model_kind(std::string_view name) noexcept;
std::string_view model_kind_name(ModelKind kind) noexcept;
/// True for models trained by epochs (svc, logreg, rnn).
bool is_iterative(ModelKind kind) noexcept;

inline constexpr int kModelFormatVersion = 1;

struct ModelMetadata {
  std::string provider_id;
  std::size_t dim = 0;
  LabelMapping labels;
  nlohmann::json params;            // hyperparameters used for the fit
  std::vector<EpochTrace> trace;    // iterative models only
  double train_accuracy = 0.0;
  std::optional<double> oob_accuracy;

  friend bool operator==(const ModelMetadata&, const ModelMetadata&) = default;
};

using ModelParameters = std::variant<DecisionTree, RandomForest, LinearSvc, LogReg, RnnModel>;

/// A fitted classifier of any family. Immutable once built.
struct TrainedModel {
  ModelParameters parameters;
  ModelMetadata metadata;

  ModelKind kind() const noexcept { return static_cast<ModelKind>(parameters.index()); }
  int n_classes() const noexcept { return static_cast<int>(metadata.labels.size()); }

  friend bool operator==(const TrainedModel&, const TrainedModel&) = default;
};

/// Per-class scores: leaf fractions (tree), vote fractions (forest), margins
/// (svc), probabilities (logreg, rnn). Throws ConfigError on a dim mismatch.
Matrix predict_scores(const TrainedModel& model, const Matrix& X);
/// Argmax of predict_scores, ties to the lowest class code.
std::vector<int> predict(const TrainedModel& model, const Matrix& X);

/// Versioned envelope {format_version, kind, metadata, parameters}. Doubles
/// are written with round-trip precision.
nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);
std::string serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(std::string_view text);

struct ModelHyperparams {
  TreeParams tree;
  ForestParams forest;
  LinearSvcParams svc;
  LogRegParams logreg;
  RnnParams rnn;
};

nlohmann::json hyperparams_to_json(ModelKind kind, const ModelHyperparams& hp);

/// Fits one model family. `test` (may be null) only feeds the accuracy
/// columns of the training trace.
TrainedModel fit_model(ModelKind kind, const EmbeddedDataset& train, const EmbeddedDataset* test,
                       const ModelHyperparams& hp, const LabelMapping& labels);

}  // namespace sentipipe
