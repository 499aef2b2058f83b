#include "sentipipe/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <functional>
#include <set>
#include <thread>

#include "sentipipe/error.hpp"
#include "sentipipe/io.hpp"
#include "sentipipe/rng.hpp"

namespace sentipipe {

using json = nlohmann::json;

std::uint64_t stage_seed(std::uint64_t global, std::string_view tag) noexcept {
  return derive_seed(global, tag);
}

namespace {

void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  if (!j.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ConfigError("config: unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read_opt(const json& j, std::string_view key, T& out) {
  const std::string k(key);
  if (j.contains(k) && !j[k].is_null()) out = j[k].get<T>();
}

void read_max_features(const json& j, std::optional<std::size_t>& out) {
  if (!j.contains("max_features")) return;
  out = j["max_features"].is_null() ? std::nullopt
                                    : std::optional(j["max_features"].get<std::size_t>());
}

void read_tree(const json& j, TreeParams& p, const std::string& where) {
  check_keys(j, {"max_depth", "min_samples_leaf", "min_impurity_decrease", "max_features"}, where);
  read_opt(j, "max_depth", p.max_depth);
  read_opt(j, "min_samples_leaf", p.min_samples_leaf);
  read_opt(j, "min_impurity_decrease", p.min_impurity_decrease);
  read_max_features(j, p.max_features);
}

json tree_json(const TreeParams& p) {
  json j{{"max_depth", p.max_depth},
         {"min_samples_leaf", p.min_samples_leaf},
         {"min_impurity_decrease", p.min_impurity_decrease}};
  j["max_features"] = p.max_features ? json(*p.max_features) : json(nullptr);
  return j;
}

void read_hyperparams(const json& j, ModelHyperparams& hp) {
  check_keys(j, {"tree", "forest", "svc", "logreg", "rnn"}, "hyperparams");
  if (j.contains("tree")) read_tree(j["tree"], hp.tree, "hyperparams.tree");
  if (j.contains("forest")) {
    const auto& f = j["forest"];
    check_keys(f, {"n_trees", "max_features", "bootstrap", "tree"}, "hyperparams.forest");
    read_opt(f, "n_trees", hp.forest.n_trees);
    read_opt(f, "bootstrap", hp.forest.bootstrap);
    read_max_features(f, hp.forest.max_features);
    if (f.contains("tree")) read_tree(f["tree"], hp.forest.tree, "hyperparams.forest.tree");
  }
  if (j.contains("svc")) {
    const auto& s = j["svc"];
    check_keys(s, {"lambda", "epochs"}, "hyperparams.svc");
    read_opt(s, "lambda", hp.svc.lambda);
    read_opt(s, "epochs", hp.svc.epochs);
  }
  if (j.contains("logreg")) {
    const auto& l = j["logreg"];
    check_keys(l, {"learning_rate", "epochs", "l2"}, "hyperparams.logreg");
    read_opt(l, "learning_rate", hp.logreg.learning_rate);
    read_opt(l, "epochs", hp.logreg.epochs);
    read_opt(l, "l2", hp.logreg.l2);
  }
  if (j.contains("rnn")) {
    const auto& r = j["rnn"];
    check_keys(r, {"seq_len", "hidden_dim", "learning_rate", "epochs", "grad_clip", "batch_size"},
               "hyperparams.rnn");
    read_opt(r, "seq_len", hp.rnn.seq_len);
    read_opt(r, "hidden_dim", hp.rnn.hidden_dim);
    read_opt(r, "learning_rate", hp.rnn.learning_rate);
    read_opt(r, "epochs", hp.rnn.epochs);
    read_opt(r, "grad_clip", hp.rnn.grad_clip);
    read_opt(r, "batch_size", hp.rnn.batch_size);
  }
}

json hyperparams_json(const ModelHyperparams& hp) {
  json forest{{"n_trees", hp.forest.n_trees},
              {"bootstrap", hp.forest.bootstrap},
              {"tree", tree_json(hp.forest.tree)}};
  forest["max_features"] = hp.forest.max_features ? json(*hp.forest.max_features) : json(nullptr);
  return json{{"tree", tree_json(hp.tree)},
              {"forest", std::move(forest)},
              {"svc", {{"lambda", hp.svc.lambda}, {"epochs", hp.svc.epochs}}},
              {"logreg",
               {{"learning_rate", hp.logreg.learning_rate},
                {"epochs", hp.logreg.epochs},
                {"l2", hp.logreg.l2}}},
              {"rnn",
               {{"seq_len", hp.rnn.seq_len},
                {"hidden_dim", hp.rnn.hidden_dim},
                {"learning_rate", hp.rnn.learning_rate},
                {"epochs", hp.rnn.epochs},
                {"grad_clip", hp.rnn.grad_clip},
                {"batch_size", hp.rnn.batch_size}}}};
}

std::string format_name(CorpusFormat f) { return f == CorpusFormat::csv ? "csv" : "jsonl"; }

}  // namespace

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  try {
    check_keys(j,
               {"seed", "output", "input", "provider", "smote", "split", "models",
                "parallel_models", "hyperparams"},
               "config");
    read_opt(j, "seed", c.seed);
    if (j.contains("output")) c.output = j["output"].get<std::string>();
    read_opt(j, "parallel_models", c.parallel_models);
    if (j.contains("input")) {
      const auto& in = j["input"];
      check_keys(in, {"path", "format"}, "input");
      if (in.contains("path")) c.input.path = in["path"].get<std::string>();
      if (in.contains("format")) {
        const auto name = in["format"].get<std::string>();
        const auto f = parse_corpus_format(name);
        if (!f) throw ConfigError("config: unknown input format '" + name + "'");
        c.input.format = *f;
      }
    }
    bool dim_given = false;
    if (j.contains("provider")) {
      const auto& p = j["provider"];
      check_keys(p,
                 {"id", "dim", "endpoint", "path", "request_batch", "max_in_flight",
                  "max_attempts", "timeout_ms"},
                 "provider");
      if (p.contains("id")) {
        const auto name = p["id"].get<std::string>();
        const auto id = parse_provider_id(name);
        if (!id) throw ConfigError("config: unknown provider '" + name + "'");
        c.provider.provider = *id;
      }
      if (p.contains("dim")) {
        c.provider.dim = p["dim"].get<std::size_t>();
        dim_given = true;
      }
      if (p.contains("endpoint") && !p["endpoint"].is_null())
        c.provider.endpoint = p["endpoint"].get<std::string>();
      if (p.contains("path") && !p["path"].is_null())
        c.provider.path = p["path"].get<std::string>();
      read_opt(p, "request_batch", c.provider.request_batch);
      read_opt(p, "max_in_flight", c.provider.max_in_flight);
      read_opt(p, "max_attempts", c.provider.max_attempts);
      if (p.contains("timeout_ms"))
        c.provider.timeout = std::chrono::milliseconds(p["timeout_ms"].get<std::int64_t>());
    }
    if (!dim_given) {
      if (is_sidecar_model(c.provider.provider)) c.provider.dim = kDefaultModelDim;
      else if (c.provider.provider == ProviderId::file) c.provider.dim = 0;
      else c.provider.dim = kDefaultPseudoDim;
    }
    if (j.contains("smote")) {
      const auto& s = j["smote"];
      check_keys(s, {"enabled", "k", "stage"}, "smote");
      read_opt(s, "enabled", c.smote_enabled);
      read_opt(s, "k", c.smote_k);
      if (s.contains("stage")) {
        const auto name = s["stage"].get<std::string>();
        const auto st = parse_smote_stage(name);
        if (!st) throw ConfigError("config: unknown smote stage '" + name + "'");
        c.smote_stage = *st;
      }
    }
    if (j.contains("split")) {
      const auto& s = j["split"];
      check_keys(s, {"test_fraction", "stratified"}, "split");
      read_opt(s, "test_fraction", c.test_fraction);
      read_opt(s, "stratified", c.stratified);
    }
    if (j.contains("models")) {
      c.models.clear();
      for (const auto& m : j["models"]) {
        const auto name = m.get<std::string>();
        const auto kind = parse_model_kind(name);
        if (!kind) throw ConfigError("config: unknown model '" + name + "'");
        c.models.push_back(*kind);
      }
    }
    if (j.contains("hyperparams")) read_hyperparams(j["hyperparams"], c.hyperparams);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

json config_to_json(const PipelineConfig& c) {
  json models = json::array();
  for (auto m : c.models) models.push_back(model_kind_name(m));
  json provider{{"id", provider_name(c.provider.provider)},
                {"dim", c.provider.dim},
                {"request_batch", c.provider.request_batch},
                {"max_in_flight", c.provider.max_in_flight},
                {"max_attempts", c.provider.max_attempts},
                {"timeout_ms", c.provider.timeout.count()}};
  provider["endpoint"] = c.provider.endpoint ? json(*c.provider.endpoint) : json(nullptr);
  provider["path"] = c.provider.path ? json(c.provider.path->string()) : json(nullptr);
  return json{{"seed", c.seed},
              {"output", c.output.string()},
              {"input", {{"path", c.input.path.string()}, {"format", format_name(c.input.format)}}},
              {"provider", std::move(provider)},
              {"smote",
               {{"enabled", c.smote_enabled},
                {"k", c.smote_k},
                {"stage", smote_stage_name(c.smote_stage)}}},
              {"split", {{"test_fraction", c.test_fraction}, {"stratified", c.stratified}}},
              {"models", std::move(models)},
              {"parallel_models", c.parallel_models},
              {"hyperparams", hyperparams_json(c.hyperparams)}};
}

PipelineConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": config is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void validate(const PipelineConfig& c) {
  if (c.input.path.empty()) throw ConfigError("no input corpus configured");
  if (!std::filesystem::is_regular_file(c.input.path))
    throw ConfigError("input corpus '" + c.input.path.string() + "' does not exist");
  if (c.models.empty()) throw ConfigError("no models requested");
  std::set<ModelKind> seen;
  for (auto m : c.models)
    if (!seen.insert(m).second)
      throw ConfigError("model '" + std::string(model_kind_name(m)) + "' requested twice");
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0))
    throw ConfigError("test_fraction must lie in (0, 1) for a run that evaluates on held-out rows");
  if (c.smote_k < 1) throw ConfigError("smote k must be at least 1");
  if (c.parallel_models < 1) throw ConfigError("parallel_models must be at least 1");
  if (c.output.empty()) throw ConfigError("no output directory configured");
  const auto spec = resolved_provider(c);
  validate(spec);
  if (spec.provider == ProviderId::file && !std::filesystem::is_regular_file(*spec.path))
    throw ConfigError("embedding file '" + spec.path->string() + "' does not exist");
  const auto hp = resolved_hyperparams(c);
  validate(hp.tree);
  validate(hp.svc);
  validate(hp.logreg);
  if (hp.forest.n_trees < 1) throw ConfigError("forest n_trees must be at least 1");
  if (spec.dim > 0) {
    validate(hp.forest, spec.dim);
    if (seen.count(ModelKind::rnn)) validate(hp.rnn, spec.dim);
  }
}

EmbeddingProviderSpec resolved_provider(const PipelineConfig& c) {
  auto spec = c.provider;
  if (spec.provider == ProviderId::pseudo) {
    spec.seed = stage_seed(c.seed, "embed");
    spec.endpoint.reset();
    spec.path.reset();
  } else if (spec.provider == ProviderId::file) {
    spec.seed.reset();
    spec.endpoint.reset();
    if (spec.dim == 0 && spec.path && std::filesystem::is_regular_file(*spec.path))
      spec.dim = load_embeddings(*spec.path).dim();
  } else {
    spec.seed.reset();
    spec.path.reset();
  }
  return spec;
}

SmoteParams resolved_smote(const PipelineConfig& c) {
  SmoteParams p;
  p.k = c.smote_k;
  p.stage = c.smote_stage;
  p.seed = stage_seed(c.seed, "smote");
  return p;
}

SplitSpec resolved_split(const PipelineConfig& c) {
  return SplitSpec{c.test_fraction, stage_seed(c.seed, "split"), c.stratified};
}

ModelHyperparams resolved_hyperparams(const PipelineConfig& c) {
  auto hp = c.hyperparams;
  hp.tree.seed = stage_seed(c.seed, "tree");
  hp.forest.seed = stage_seed(c.seed, "forest");
  hp.svc.seed = stage_seed(c.seed, "svc");
  hp.rnn.seed = stage_seed(c.seed, "rnn");
  return hp;
}

EmbeddedDataset embed_stage(const LabeledCorpus& corpus, const EmbeddingProviderSpec& spec) {
  auto provider = make_provider(spec);
  auto ds = embed_corpus(*provider, corpus);
  quantize_to_f32(ds);
  return ds;
}

SmoteResult resample_stage(const EmbeddedDataset& data, const SmoteParams& params) {
  auto result = smote(data, params);
  quantize_to_f32(result.data);
  return result;
}

std::pair<EmbeddedDataset, EmbeddedDataset> split_stage(const EmbeddedDataset& data,
                                                        const SplitSpec& spec) {
  auto [train, test] = stratified_split(data, spec);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < test.size(); ++i)
    if (!is_synthetic_id(test.ids[i])) keep.push_back(i);
  if (keep.size() != test.size()) test = subset(test, keep);
  return {std::move(train), std::move(test)};
}

ClassificationReport evaluate_stage(const TrainedModel& model, const EmbeddedDataset& test) {
  if (test.size() == 0) throw ConfigError("test set is empty");
  const auto pred = predict(model, test.X);
  const auto cm = confusion_matrix(test.labels(), pred, model.n_classes());
  return classification_report(cm, model.metadata.labels.names);
}

std::string accuracy_summary_csv(
    const std::vector<std::pair<std::string, std::pair<double, double>>>& rows) {
  std::string out = "model,train_accuracy,test_accuracy\n";
  char buf[128];
  for (const auto& [name, acc] : rows) {
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f\n", acc.first, acc.second);
    out += name + buf;
  }
  return out;
}

json manifest_to_json(const RunManifest& m) {
  json timings = json::object();
  for (const auto& [stage, seconds] : m.stage_seconds) timings[stage] = seconds;
  return json{{"format_version", m.format_version}, {"config", m.config},
              {"artifacts", m.artifacts},           {"stage_seconds", std::move(timings)},
              {"warnings", m.warnings}};
}

RunManifest manifest_from_json(const json& j) {
  try {
    RunManifest m;
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != kManifestFormatVersion)
      throw FormatError("unsupported manifest format_version " +
                        std::to_string(m.format_version));
    m.config = j.at("config");
    m.artifacts = j.at("artifacts").get<std::vector<std::string>>();
    for (const auto& [stage, seconds] : j.at("stage_seconds").items())
      m.stage_seconds.emplace_back(stage, seconds.get<double>());
    m.warnings = j.at("warnings").get<std::vector<std::string>>();
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
}

namespace {

class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path root) : root_(std::move(root)) {}

  void write(const std::string& relative, std::string_view content) {
    auto path = root_ / relative;
    path += ".partial";
    write_file(path, content);
    if (std::find(written_.begin(), written_.end(), relative) == written_.end())
      written_.push_back(relative);
  }

  void commit() {
    for (const auto& rel : written_) {
      auto from = root_ / rel;
      from += ".partial";
      std::filesystem::rename(from, root_ / rel);
    }
  }

  const std::vector<std::string>& written() const { return written_; }

 private:
  std::filesystem::path root_;
  std::vector<std::string> written_;
};

template <typename F>
auto run_stage(const std::string& name, std::vector<std::pair<std::string, double>>& timings,
               F&& body) {
  const auto start = std::chrono::steady_clock::now();
  auto finish = [&] {
    const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start;
    timings.emplace_back(name, d.count());
  };
  try {
    if constexpr (std::is_void_v<std::invoke_result_t<F>>) {
      body();
      finish();
    } else {
      auto result = body();
      finish();
      return result;
    }
  } catch (const Error& e) {
    throw Error(e.kind(), "stage '" + name + "': " + e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    throw Error(ErrorKind::Config, "stage '" + name + "': " + e.what());
  }
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
  validate(config);
  PipelineResult result;
  auto& manifest = result.manifest;
  auto& timings = manifest.stage_seconds;
  manifest.config = config_to_json(config);
  ArtifactWriter out(config.output);

  const auto provider = resolved_provider(config);
  const auto smote_params = resolved_smote(config);
  const auto split_spec = resolved_split(config);
  const auto hp = resolved_hyperparams(config);

  const auto corpus = run_stage("prepare", timings,
                                [&] { return load_corpus(config.input.path, config.input.format); });
  if (corpus.dropped_empty > 0)
    manifest.warnings.push_back(std::to_string(corpus.dropped_empty) +
                                " rows dropped because their text was empty after cleaning");
  const auto labels = sentiment_mapping();

  auto embedded = run_stage("embed", timings, [&] {
    auto ds = embed_stage(corpus, provider);
    out.write("data/embeddings.emb1", encode_emb1(ds));
    return ds;
  });

  auto resample = [&](const EmbeddedDataset& data) {
    return run_stage("resample", timings, [&] {
      auto r = resample_stage(data, smote_params);
      for (auto& w : r.warnings) manifest.warnings.push_back("smote: " + w);
      out.write("data/resampled.emb1", encode_emb1(r.data));
      return std::move(r.data);
    });
  };

  const bool pre = config.smote_enabled && config.smote_stage == SmoteStage::pre_split;
  const bool post = config.smote_enabled && config.smote_stage == SmoteStage::train_only;
  if (pre) embedded = resample(embedded);
  auto [train, test] = run_stage("split", timings, [&] {
    auto parts = split_stage(embedded, split_spec);
    out.write("data/train.emb1", encode_emb1(parts.first));
    out.write("data/test.emb1", encode_emb1(parts.second));
    return parts;
  });
  if (post) {
    train = resample(train);
    out.write("data/train.emb1", encode_emb1(train));
  }

  if (train.dim() > 0) {
    // File providers learn their dim only once loaded.
    validate(hp.forest, train.dim());
    for (auto m : config.models)
      if (m == ModelKind::rnn) validate(hp.rnn, train.dim());
  }

  const std::size_t n_models = config.models.size();
  std::vector<std::optional<TrainedModel>> fitted(n_models);
  run_stage("train", timings, [&] {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n_models);
    auto worker = [&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n_models;) {
        const auto kind = config.models[i];
        try {
          fitted[i] = fit_model(kind, train, &test, hp, labels);
        } catch (const Error& e) {
          errors[i] = std::make_exception_ptr(
              Error(e.kind(), std::string(model_kind_name(kind)) + ": " + e.what()));
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    const std::size_t n_threads = std::min(config.parallel_models, n_models);
    if (n_threads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    for (std::size_t i = 0; i < n_models; ++i)
      out.write("models/" + std::string(model_kind_name(config.models[i])) + ".json",
                serialize_model(*fitted[i]));
  });

  run_stage("evaluate", timings, [&] {
    for (std::size_t i = 0; i < n_models; ++i)
      result.reports.emplace_back(config.models[i], evaluate_stage(*fitted[i], test));
  });

  run_stage("report", timings, [&] {
    std::vector<ComparisonRow> rows;
    for (const auto& [kind, report] : result.reports) {
      const std::string name(model_kind_name(kind));
      out.write("reports/" + name + ".txt", format_report(report));
      out.write("reports/" + name + ".json", report_to_json(report).dump(2) + "\n");
      rows.push_back({name, report});
    }
    const auto comparison = compare_models(std::move(rows));
    out.write("comparison.txt", format_comparison(comparison));
    out.write("comparison.json", comparison_to_json(comparison).dump(2) + "\n");
  });

  run_stage("curves", timings, [&] {
    std::vector<std::pair<std::string, std::pair<double, double>>> single_point;
    for (std::size_t i = 0; i < n_models; ++i) {
      const auto& model = *fitted[i];
      const std::string name(model_kind_name(model.kind()));
      if (is_iterative(model.kind()))
        out.write("curves/" + name + ".csv", trace_to_csv(model.metadata.trace));
      else
        single_point.push_back(
            {name, {model.metadata.train_accuracy, result.reports[i].second.accuracy}});
    }
    if (!single_point.empty())
      out.write("curves/single_point_accuracy.csv", accuracy_summary_csv(single_point));
  });

  run_stage("commit", timings, [&] { out.commit(); });
  for (auto& m : fitted) result.models.push_back(std::move(*m));

  manifest.artifacts = out.written();
  std::sort(manifest.artifacts.begin(), manifest.artifacts.end());
  manifest.artifacts.push_back("manifest.json");
  write_file(config.output / "manifest.json", manifest_to_json(manifest).dump(2) + "\n");
  return result;
}

}  // namespace sentipipe
