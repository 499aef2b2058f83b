#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sentipipe/corpus.hpp"
#include "sentipipe/dataset.hpp"
#include "sentipipe/embedding.hpp"
#include "sentipipe/metrics.hpp"
#include "sentipipe/model.hpp"
#include "sentipipe/smote.hpp"

namespace sentipipe {

struct InputSpec {
  std::filesystem::path path;
  CorpusFormat format = CorpusFormat::csv;
};

/// Everything a run needs. Stage seeds are not stored: each stochastic stage
/// uses derive_seed(seed, <stage tag>), see stage_seed().
struct PipelineConfig {
  InputSpec input;
  EmbeddingProviderSpec provider;
  bool smote_enabled = true;
  std::size_t smote_k = 5;
  SmoteStage smote_stage = SmoteStage::train_only;
  double test_fraction = 0.2;
  bool stratified = true;
  std::vector<ModelKind> models{std::begin(kAllModelKinds), std::end(kAllModelKinds)};
  ModelHyperparams hyperparams;
  std::filesystem::path output = "out";
  std::uint64_t seed = 0;
  std::size_t parallel_models = 1;
};

/// Stage tags: "embed", "smote", "split" and the model kind names.
std::uint64_t stage_seed(std::uint64_t global, std::string_view tag) noexcept;

/// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const PipelineConfig& config);
PipelineConfig load_config(const std::filesystem::path& path);

/// Checks field ranges and that the input file exists. Throws ConfigError.
void validate(const PipelineConfig& config);

/// Provider spec with the pseudo seed filled in from the global seed.
EmbeddingProviderSpec resolved_provider(const PipelineConfig& config);
SmoteParams resolved_smote(const PipelineConfig& config);
SplitSpec resolved_split(const PipelineConfig& config);
ModelHyperparams resolved_hyperparams(const PipelineConfig& config);

// Stage functions shared by run_pipeline and the stage-wise CLI. Datasets
// leaving a stage are on the 32-bit grid so that writing them to EMB1 and
// reading them back is lossless.

EmbeddedDataset embed_stage(const LabeledCorpus& corpus, const EmbeddingProviderSpec& spec);
SmoteResult resample_stage(const EmbeddedDataset& data, const SmoteParams& params);
/// Synthetic rows never reach the test side.
std::pair<EmbeddedDataset, EmbeddedDataset> split_stage(const EmbeddedDataset& data,
                                                        const SplitSpec& spec);
ClassificationReport evaluate_stage(const TrainedModel& model, const EmbeddedDataset& test);

/// `model,train_accuracy,test_accuracy` rows for non-iterative models.
std::string accuracy_summary_csv(
    const std::vector<std::pair<std::string, std::pair<double, double>>>& rows);

inline constexpr int kManifestFormatVersion = 1;

struct RunManifest {
  int format_version = kManifestFormatVersion;
  nlohmann::json config;
  std::vector<std::string> artifacts;  // relative to the output directory
  std::vector<std::pair<std::string, double>> stage_seconds;
  std::vector<std::string> warnings;
};

nlohmann::json manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& j);

struct PipelineResult {
  RunManifest manifest;
  std::vector<std::pair<ModelKind, ClassificationReport>> reports;
  std::vector<TrainedModel> models;
};

/// Runs every stage and writes the artifacts under config.output. Files are
/// written with a `.partial` suffix and renamed once every stage succeeded;
/// on failure the `.partial` files stay behind and the thrown Error names the
/// failing stage.
PipelineResult run_pipeline(const PipelineConfig& config);

}  // namespace sentipipe
