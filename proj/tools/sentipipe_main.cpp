// sentipipe command-line tool: full runs and stage-wise subcommands.

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sentipipe/corpus.hpp"
#include "sentipipe/dataset.hpp"
#include "sentipipe/embedding.hpp"
#include "sentipipe/error.hpp"
#include "sentipipe/io.hpp"
#include "sentipipe/metrics.hpp"
#include "sentipipe/model.hpp"
#include "sentipipe/pipeline.hpp"
#include "sentipipe/smote.hpp"

namespace fs = std::filesystem;
using namespace sentipipe;
using json = nlohmann::json;

namespace {

/// Flag overrides. Unset optionals leave the config value alone.
struct Overrides {
  std::string config_path;
  std::optional<std::string> input, format, out, provider, endpoint, embeddings_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> dim;
  std::optional<double> test_fraction;
  std::optional<std::size_t> smote_k;
  std::optional<std::string> smote_stage;
  bool no_smote = false;
  std::optional<std::string> models;
  std::optional<std::size_t> parallel_models;

  std::optional<std::size_t> tree_max_depth, tree_min_samples_leaf, tree_max_features;
  std::optional<double> tree_min_impurity_decrease;
  std::optional<std::size_t> forest_n_trees, forest_max_features, forest_max_depth;
  bool forest_no_bootstrap = false;
  std::optional<double> svc_lambda;
  std::optional<std::size_t> svc_epochs;
  std::optional<double> logreg_lr, logreg_l2;
  std::optional<std::size_t> logreg_epochs;
  std::optional<std::size_t> rnn_seq_len, rnn_hidden, rnn_epochs, rnn_batch;
  std::optional<double> rnn_lr, rnn_clip;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_path, "JSON config file (flags override it)");
  app->add_option("--seed", o.seed, "global seed");
}

void add_input(CLI::App* app, Overrides& o) {
  app->add_option("--input", o.input, "corpus file");
  app->add_option("--format", o.format, "corpus format: csv or jsonl (default from extension)");
}

void add_provider(CLI::App* app, Overrides& o) {
  app->add_option("--provider", o.provider, "bert|sbert|scibert|biobert|pseudo|file");
  app->add_option("--endpoint", o.endpoint, "sidecar base URL")->envname("SENTIPIPE_ENDPOINT");
  app->add_option("--dim", o.dim, "embedding dimension");
  app->add_option("--embeddings-file", o.embeddings_file, "precomputed embeddings (file provider)");
}

void add_smote(CLI::App* app, Overrides& o) {
  app->add_option("--smote-k", o.smote_k, "SMOTE neighbour count");
  app->add_option("--smote-stage", o.smote_stage, "pre_split or train_only");
}

void add_hyperparams(CLI::App* app, Overrides& o) {
  app->add_option("--tree-max-depth", o.tree_max_depth);
  app->add_option("--tree-min-samples-leaf", o.tree_min_samples_leaf);
  app->add_option("--tree-min-impurity-decrease", o.tree_min_impurity_decrease);
  app->add_option("--tree-max-features", o.tree_max_features);
  app->add_option("--forest-n-trees", o.forest_n_trees);
  app->add_option("--forest-max-features", o.forest_max_features);
  app->add_option("--forest-max-depth", o.forest_max_depth);
  app->add_flag("--forest-no-bootstrap", o.forest_no_bootstrap);
  app->add_option("--svc-lambda", o.svc_lambda);
  app->add_option("--svc-epochs", o.svc_epochs);
  app->add_option("--logreg-lr", o.logreg_lr);
  app->add_option("--logreg-epochs", o.logreg_epochs);
  app->add_option("--logreg-l2", o.logreg_l2);
  app->add_option("--rnn-seq-len", o.rnn_seq_len);
  app->add_option("--rnn-hidden", o.rnn_hidden);
  app->add_option("--rnn-lr", o.rnn_lr);
  app->add_option("--rnn-epochs", o.rnn_epochs);
  app->add_option("--rnn-clip", o.rnn_clip);
  app->add_option("--rnn-batch", o.rnn_batch);
}

CorpusFormat format_for(const std::optional<std::string>& flag, const fs::path& path) {
  const std::string name = flag ? *flag : (path.extension() == ".jsonl" ? "jsonl" : "csv");
  const auto f = parse_corpus_format(name);
  if (!f) throw ConfigError("unknown corpus format '" + name + "'");
  return *f;
}

template <typename T>
void set_if(const std::optional<T>& flag, T& field) {
  if (flag) field = *flag;
}

PipelineConfig build_config(const Overrides& o) {
  PipelineConfig c = o.config_path.empty() ? config_from_json(json::object())
                                           : load_config(o.config_path);
  set_if(o.seed, c.seed);
  if (o.input) {
    c.input.path = *o.input;
    c.input.format = format_for(o.format, c.input.path);
  } else if (o.format) {
    c.input.format = format_for(o.format, c.input.path);
  }
  if (o.out) c.output = *o.out;
  if (o.provider) {
    const auto id = parse_provider_id(*o.provider);
    if (!id) throw ConfigError("unknown provider '" + *o.provider + "'");
    c.provider.provider = *id;
    if (!o.dim)
      c.provider.dim = is_sidecar_model(*id)      ? kDefaultModelDim
                       : *id == ProviderId::file ? 0
                                                 : kDefaultPseudoDim;
  }
  set_if(o.dim, c.provider.dim);
  if (o.endpoint) c.provider.endpoint = *o.endpoint;
  if (o.embeddings_file) c.provider.path = *o.embeddings_file;
  set_if(o.test_fraction, c.test_fraction);
  set_if(o.smote_k, c.smote_k);
  if (o.smote_stage) {
    const auto st = parse_smote_stage(*o.smote_stage);
    if (!st) throw ConfigError("unknown smote stage '" + *o.smote_stage + "'");
    c.smote_stage = *st;
  }
  if (o.no_smote) c.smote_enabled = false;
  if (o.models) {
    c.models.clear();
    std::string rest = *o.models;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string name = rest.substr(0, comma);
      rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
      const auto kind = parse_model_kind(name);
      if (!kind) throw ConfigError("unknown model '" + name + "'");
      c.models.push_back(*kind);
    }
  }
  set_if(o.parallel_models, c.parallel_models);

  auto& hp = c.hyperparams;
  set_if(o.tree_max_depth, hp.tree.max_depth);
  set_if(o.tree_min_samples_leaf, hp.tree.min_samples_leaf);
  set_if(o.tree_min_impurity_decrease, hp.tree.min_impurity_decrease);
  if (o.tree_max_features) hp.tree.max_features = *o.tree_max_features;
  set_if(o.forest_n_trees, hp.forest.n_trees);
  if (o.forest_max_features) hp.forest.max_features = *o.forest_max_features;
  set_if(o.forest_max_depth, hp.forest.tree.max_depth);
  if (o.forest_no_bootstrap) hp.forest.bootstrap = false;
  set_if(o.svc_lambda, hp.svc.lambda);
  set_if(o.svc_epochs, hp.svc.epochs);
  set_if(o.logreg_lr, hp.logreg.learning_rate);
  set_if(o.logreg_epochs, hp.logreg.epochs);
  set_if(o.logreg_l2, hp.logreg.l2);
  set_if(o.rnn_seq_len, hp.rnn.seq_len);
  set_if(o.rnn_hidden, hp.rnn.hidden_dim);
  set_if(o.rnn_lr, hp.rnn.learning_rate);
  set_if(o.rnn_epochs, hp.rnn.epochs);
  set_if(o.rnn_clip, hp.rnn.grad_clip);
  set_if(o.rnn_batch, hp.rnn.batch_size);
  return c;
}

fs::path require(const std::optional<std::string>& v, const char* flag) {
  if (!v) throw ConfigError(std::string(flag) + " is required");
  return *v;
}

std::vector<fs::path> html_inputs(const fs::path& path) {
  if (fs::is_regular_file(path)) return {path};
  if (!fs::is_directory(path)) throw ConfigError("'" + path.string() + "' does not exist");
  std::vector<fs::path> pages;
  for (const auto& entry : fs::directory_iterator(path))
    if (entry.is_regular_file() && (entry.path().extension() == ".html" ||
                                    entry.path().extension() == ".htm"))
      pages.push_back(entry.path());
  std::sort(pages.begin(), pages.end());
  return pages;
}

std::string reviews_to_jsonl(const std::vector<RawReview>& reviews) {
  std::string out;
  for (const auto& r : reviews) {
    json line{{"id", r.id}, {"text", r.text}};
    if (r.label) line["label"] = label_name(*r.label);
    out += line.dump() + "\n";
  }
  return out;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

int run_main(int argc, char** argv) {
  CLI::App app{"Drug-review sentiment pipeline: embeddings, SMOTE, five classifiers, reports"};
  app.require_subcommand(1);
  Overrides o;

  auto* run = app.add_subcommand("run", "run every stage and write all artifacts");
  add_common(run, o);
  add_input(run, o);
  add_provider(run, o);
  add_smote(run, o);
  add_hyperparams(run, o);
  run->add_option("--out", o.out, "output directory");
  run->add_option("--test-fraction", o.test_fraction);
  run->add_flag("--no-smote", o.no_smote, "skip oversampling");
  run->add_option("--models", o.models, "comma-separated subset of tree,forest,svc,logreg,rnn");
  run->add_option("--parallel-models", o.parallel_models, "models trained concurrently");

  std::string html_path, container = ReviewSelectors{}.container,
                         text_selector = ReviewSelectors{}.text;
  auto* extract = app.add_subcommand("extract", "pull review texts out of saved HTML pages");
  extract->add_option("--html", html_path, "HTML file or directory of pages")->required();
  extract->add_option("--container", container, "review container selector");
  extract->add_option("--text-selector", text_selector, "review text selector");
  extract->add_option("--out", o.out, "output JSONL (stdout when omitted)");

  auto* prepare = app.add_subcommand("prepare", "load, clean and label-check a corpus");
  add_input(prepare, o);
  prepare->add_option("--out", o.out, "cleaned corpus (.csv or .jsonl)")->required();

  auto* embed = app.add_subcommand("embed", "embed a corpus");
  add_common(embed, o);
  add_input(embed, o);
  add_provider(embed, o);
  embed->add_option("--out", o.out, "embedding file (.emb1 or .jsonl)")->required();

  std::optional<std::string> data_in;
  auto* resample = app.add_subcommand("resample", "SMOTE-oversample an embedding file");
  add_common(resample, o);
  add_smote(resample, o);
  resample->add_option("--data", data_in, "embedding file")->required();
  resample->add_option("--out", o.out, "output embedding file")->required();

  std::optional<std::string> train_out, test_out;
  auto* split = app.add_subcommand("split", "stratified train/test split of an embedding file");
  add_common(split, o);
  split->add_option("--data", data_in, "embedding file")->required();
  split->add_option("--test-fraction", o.test_fraction);
  split->add_option("--train-out", train_out)->required();
  split->add_option("--test-out", test_out)->required();

  std::string model_name;
  std::optional<std::string> train_in, test_in, model_path;
  auto* train = app.add_subcommand("train", "fit one model");
  add_common(train, o);
  add_hyperparams(train, o);
  train->add_option("--model", model_name, "tree|forest|svc|logreg|rnn")->required();
  train->add_option("--train", train_in, "training embedding file")->required();
  train->add_option("--test", test_in, "held-out embedding file (trace accuracies only)");
  train->add_option("--out", o.out, "model JSON")->required();

  auto* evaluate = app.add_subcommand("evaluate", "score a model on held-out rows");
  evaluate->add_option("--model", model_path, "model JSON")->required();
  evaluate->add_option("--test", test_in, "test embedding file")->required();
  evaluate->add_option("--out", o.out, "report JSON (text twin written next to it)");

  std::vector<std::string> report_jsons;
  std::vector<std::string> report_names;
  auto* report = app.add_subcommand("report", "print report tables from report JSON files");
  report->add_option("--json", report_jsons, "report JSON (repeat to compare models)")
      ->required();
  report->add_option("--name", report_names, "display name per --json (default: file stem)");

  auto* curves = app.add_subcommand("curves", "write the training trace of a model as CSV");
  curves->add_option("--model", model_path, "model JSON")->required();
  curves->add_option("--out", o.out, "CSV path (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*run) {
    const auto config = build_config(o);
    const auto result = run_pipeline(config);
    print_warnings(result.manifest.warnings);
    for (const auto& [kind, rep] : result.reports)
      std::cout << "== " << model_kind_name(kind) << " ==\n" << format_report(rep) << "\n";
    std::cout << "artifacts written to " << config.output.string() << "\n";
  } else if (*extract) {
    ReviewSelectors sel{container, text_selector};
    std::vector<RawReview> all;
    for (const auto& page : html_inputs(html_path)) {
      try {
        auto found = extract_reviews(read_file(page), page.stem().string(), sel);
        all.insert(all.end(), found.begin(), found.end());
      } catch (const FormatError& e) {
        throw e.with_context(page.string());
      }
    }
    const auto text = reviews_to_jsonl(all);
    if (o.out) write_file(*o.out, text);
    else std::cout << text;
  } else if (*prepare) {
    const fs::path in = require(o.input, "--input");
    const auto corpus = load_corpus(in, format_for(o.format, in));
    if (corpus.dropped_empty)
      std::fprintf(stderr, "warning: %zu rows dropped (empty after cleaning)\n",
                   corpus.dropped_empty);
    const fs::path out = *o.out;
    write_file(out, out.extension() == ".jsonl" ? reviews_to_jsonl(corpus.reviews)
                                                : corpus_to_csv(corpus.reviews));
  } else if (*embed) {
    const auto config = build_config(o);
    const fs::path in = require(o.input, "--input");
    const auto spec = resolved_provider(config);
    validate(spec);
    const auto corpus = load_corpus(in, config.input.format);
    save_embeddings(embed_stage(corpus, spec), *o.out);
  } else if (*resample) {
    const auto config = build_config(o);
    const auto r = resample_stage(load_embeddings(*data_in), resolved_smote(config));
    print_warnings(r.warnings);
    save_embeddings(r.data, *o.out);
  } else if (*split) {
    const auto config = build_config(o);
    auto [tr, te] = split_stage(load_embeddings(*data_in), resolved_split(config));
    save_embeddings(tr, *train_out);
    save_embeddings(te, *test_out);
  } else if (*train) {
    const auto config = build_config(o);
    const auto kind = parse_model_kind(model_name);
    if (!kind) throw ConfigError("unknown model '" + model_name + "'");
    const auto tr = load_embeddings(*train_in);
    std::optional<EmbeddedDataset> te;
    if (test_in) te = load_embeddings(*test_in);
    const auto model = fit_model(*kind, tr, te ? &*te : nullptr, resolved_hyperparams(config),
                                 sentiment_mapping());
    write_file(*o.out, serialize_model(model));
  } else if (*evaluate) {
    const auto model = deserialize_model(read_file(*model_path));
    const auto rep = evaluate_stage(model, load_embeddings(*test_in));
    const auto text = format_report(rep);
    if (o.out) {
      fs::path out = *o.out;
      write_file(out, report_to_json(rep).dump(2) + "\n");
      write_file(fs::path(out).replace_extension(".txt"), text);
    }
    std::cout << text;
  } else if (*report) {
    if (!report_names.empty() && report_names.size() != report_jsons.size())
      throw ConfigError("--name must be given once per --json or not at all");
    std::vector<ComparisonRow> rows;
    for (std::size_t i = 0; i < report_jsons.size(); ++i) {
      const fs::path p = report_jsons[i];
      json j;
      try {
        j = json::parse(read_file(p));
      } catch (const json::parse_error& e) {
        throw FormatError(p.string() + ": not JSON: " + e.what(), e.byte);
      }
      rows.push_back({report_names.empty() ? p.stem().string() : report_names[i],
                      report_from_json(j)});
    }
    if (rows.size() == 1) {
      std::cout << format_report(rows[0].report);
    } else {
      for (const auto& row : rows)
        std::cout << "== " << row.name << " ==\n" << format_report(row.report) << "\n";
      std::cout << format_comparison(compare_models(rows));
    }
  } else if (*curves) {
    const auto model = deserialize_model(read_file(*model_path));
    if (!is_iterative(model.kind()))
      throw ConfigError("model '" + std::string(model_kind_name(model.kind())) +
                        "' is not trained by epochs and has no curve");
    const auto csv = trace_to_csv(model.metadata.trace);
    if (o.out) write_file(*o.out, csv);
    else std::cout << csv;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_main(argc, argv);
  } catch (const Error& e) {
    std::fprintf(stderr, "sentipipe: %s: %s\n", kind_name(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "sentipipe: %s\n", e.what());
    return 1;
  }
}
