#include "sentipipe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "sentipipe/error.hpp"

namespace sentipipe {

using json = nlohmann::json;

std::size_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (std::size_t c = 0; c < n_classes; ++c) t += (*this)(c, c);
  return t;
}

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred,
                                 int n_classes) {
  if (n_classes < 1) throw ConfigError("confusion matrix needs at least one class");
  if (y_true.size() != y_pred.size())
    throw ConfigError("label length mismatch: " + std::to_string(y_true.size()) + " true vs " +
                      std::to_string(y_pred.size()) + " predicted (first unmatched index " +
                      std::to_string(std::min(y_true.size(), y_pred.size())) + ")");
  const auto C = static_cast<std::size_t>(n_classes);
  ConfusionMatrix cm{C, std::vector<std::size_t>(C * C, 0)};
  for (std::size_t k = 0; k < y_true.size(); ++k) {
    for (int code : {y_true[k], y_pred[k]})
      if (code < 0 || code >= n_classes)
        throw ConfigError("class code " + std::to_string(code) + " at index " +
                          std::to_string(k) + " is outside [0, " + std::to_string(n_classes) +
                          ")");
    ++cm(static_cast<std::size_t>(y_true[k]), static_cast<std::size_t>(y_pred[k]));
  }
  return cm;
}

double f1_score(double precision, double recall) noexcept {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

namespace {

void fill_averages(ClassificationReport& r) {
  const double k = static_cast<double>(r.classes.size());
  std::size_t total = 0;
  double mp = 0, mr = 0, mf = 0, wp = 0, wr = 0, wf = 0;
  for (const auto& c : r.classes) {
    mp += c.precision;
    mr += c.recall;
    mf += c.f1;
    const double s = static_cast<double>(c.support);
    wp += s * c.precision;
    wr += s * c.recall;
    wf += s * c.f1;
    total += c.support;
  }
  if (total == 0) throw ConfigError("classification report has zero total support");
  const double n = static_cast<double>(total);
  r.macro_avg = {mp / k, mr / k, mf / k, total};
  r.weighted_avg = {wp / n, wr / n, wf / n, total};
}

}  // namespace

ClassificationReport classification_report(const ConfusionMatrix& cm,
                                           const std::vector<std::string>& names) {
  const std::size_t C = cm.n_classes;
  if (names.size() != C)
    throw ConfigError(std::to_string(names.size()) + " label names for " + std::to_string(C) +
                      " classes");
  const std::size_t total = cm.total();
  if (total == 0) throw ConfigError("confusion matrix is empty");

  ClassificationReport r;
  for (std::size_t c = 0; c < C; ++c) {
    std::size_t row = 0, col = 0;
    for (std::size_t j = 0; j < C; ++j) {
      row += cm(c, j);
      col += cm(j, c);
    }
    const double tp = static_cast<double>(cm(c, c));
    ClassMetrics m;
    m.name = names[c];
    m.support = row;
    m.zero_division = col == 0;
    m.precision = col ? tp / static_cast<double>(col) : 0.0;
    m.recall = row ? tp / static_cast<double>(row) : 0.0;
    m.f1 = f1_score(m.precision, m.recall);
    r.classes.push_back(std::move(m));
  }
  fill_averages(r);
  r.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
  r.weighted_avg.recall = r.accuracy;
  return r;
}

ClassificationReport aggregate_report(std::vector<ClassMetrics> rows) {
  if (rows.empty()) throw ConfigError("aggregate_report needs at least one class row");
  ClassificationReport r;
  r.classes = std::move(rows);
  fill_averages(r);
  r.accuracy = r.weighted_avg.recall;
  return r;
}

double round_half_up_2(double v) noexcept {
  // The epsilon absorbs binary representation error so that decimal ties
  // such as 0.145 round up.
  return std::floor(v * 100.0 + 0.5 + 1e-9) / 100.0;
}

namespace {

std::string cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", round_half_up_2(v));
  return buf;
}

std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

constexpr std::size_t kColumns[] = {9, 6, 8, 7};  // widths of the four headers

std::string table_row(const std::string& label, std::size_t label_width,
                      const std::string (&cells)[4]) {
  std::string line = pad_right(label, label_width);
  for (std::size_t i = 0; i < 4; ++i) line += " | " + pad_left(cells[i], kColumns[i]);
  while (!line.empty() && line.back() == ' ') line.pop_back();
  return line + "\n";
}

json average_json(const AverageMetrics& a) {
  return json{{"precision", a.precision}, {"recall", a.recall}, {"f1", a.f1},
              {"support", a.support}};
}

AverageMetrics average_from_json(const json& j) {
  return {j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>(),
          j.at("support").get<std::size_t>()};
}

}  // namespace

std::string format_report(const ClassificationReport& report) {
  std::size_t label_width = std::string_view("Weighted Avg").size();
  for (const auto& c : report.classes) label_width = std::max(label_width, c.name.size());

  std::string out = table_row("", label_width, {"Precision", "Recall", "F1-Score", "Support"});
  for (const auto& c : report.classes)
    out += table_row(c.name, label_width,
                     {cell(c.precision), cell(c.recall), cell(c.f1), std::to_string(c.support)});
  const auto total = std::to_string(report.total_support());
  out += table_row("Accuracy", label_width, {"", "", cell(report.accuracy), total});
  const auto& m = report.macro_avg;
  out += table_row("Macro Avg", label_width, {cell(m.precision), cell(m.recall), cell(m.f1), total});
  const auto& w = report.weighted_avg;
  out += table_row("Weighted Avg", label_width,
                   {cell(w.precision), cell(w.recall), cell(w.f1), total});
  return out;
}

json report_to_json(const ClassificationReport& report) {
  json classes = json::array();
  for (const auto& c : report.classes)
    classes.push_back(json{{"name", c.name},
                           {"precision", c.precision},
                           {"recall", c.recall},
                           {"f1", c.f1},
                           {"support", c.support},
                           {"zero_division", c.zero_division}});
  return json{{"classes", std::move(classes)},
              {"accuracy", report.accuracy},
              {"macro_avg", average_json(report.macro_avg)},
              {"weighted_avg", average_json(report.weighted_avg)}};
}

ClassificationReport report_from_json(const json& j) {
  try {
    ClassificationReport r;
    for (const auto& c : j.at("classes")) {
      ClassMetrics m;
      m.name = c.at("name").get<std::string>();
      m.precision = c.at("precision").get<double>();
      m.recall = c.at("recall").get<double>();
      m.f1 = c.at("f1").get<double>();
      m.support = c.at("support").get<std::size_t>();
      m.zero_division = c.value("zero_division", false);
      r.classes.push_back(std::move(m));
    }
    r.accuracy = j.at("accuracy").get<double>();
    r.macro_avg = average_from_json(j.at("macro_avg"));
    r.weighted_avg = average_from_json(j.at("weighted_avg"));
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed report JSON: ") + e.what());
  }
}

namespace {

struct MetricAccessor {
  const char* name;
  double (*get)(const ClassificationReport&);
};

constexpr MetricAccessor kMetrics[] = {
    {"accuracy", [](const ClassificationReport& r) { return r.accuracy; }},
    {"macro_precision", [](const ClassificationReport& r) { return r.macro_avg.precision; }},
    {"macro_recall", [](const ClassificationReport& r) { return r.macro_avg.recall; }},
    {"macro_f1", [](const ClassificationReport& r) { return r.macro_avg.f1; }},
    {"weighted_precision", [](const ClassificationReport& r) { return r.weighted_avg.precision; }},
    {"weighted_recall", [](const ClassificationReport& r) { return r.weighted_avg.recall; }},
    {"weighted_f1", [](const ClassificationReport& r) { return r.weighted_avg.f1; }},
};

}  // namespace

ModelComparison compare_models(std::vector<ComparisonRow> reports) {
  if (reports.empty()) throw ConfigError("compare_models needs at least one report");
  std::stable_sort(reports.begin(), reports.end(), [](const auto& a, const auto& b) {
    const double fa = round_half_up_2(a.report.weighted_avg.f1);
    const double fb = round_half_up_2(b.report.weighted_avg.f1);
    if (fa != fb) return fa > fb;
    return a.name < b.name;
  });
  ModelComparison out;
  out.rows = std::move(reports);
  for (const auto& metric : kMetrics) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < out.rows.size(); ++i)
      if (round_half_up_2(metric.get(out.rows[i].report)) >
          round_half_up_2(metric.get(out.rows[best].report)))
        best = i;
    out.best.emplace_back(metric.name, out.rows[best].name);
  }
  return out;
}

std::string format_comparison(const ModelComparison& comparison) {
  std::size_t name_width = std::string_view("Model").size();
  for (const auto& row : comparison.rows) name_width = std::max(name_width, row.name.size());
  std::string out = pad_right("Model", name_width) +
                    " | Accuracy | Macro F1 | Weighted P | Weighted R | Weighted F1\n";
  for (const auto& row : comparison.rows) {
    const auto& r = row.report;
    out += pad_right(row.name, name_width) + " | " + pad_left(cell(r.accuracy), 8) + " | " +
           pad_left(cell(r.macro_avg.f1), 8) + " | " + pad_left(cell(r.weighted_avg.precision), 10) +
           " | " + pad_left(cell(r.weighted_avg.recall), 10) + " | " +
           pad_left(cell(r.weighted_avg.f1), 11) + "\n";
  }
  out += "\nBest by metric:\n";
  for (const auto& [metric, name] : comparison.best) out += "  " + metric + ": " + name + "\n";
  return out;
}

json comparison_to_json(const ModelComparison& comparison) {
  json rows = json::array();
  for (const auto& row : comparison.rows)
    rows.push_back(json{{"name", row.name}, {"report", report_to_json(row.report)}});
  json best = json::object();
  for (const auto& [metric, name] : comparison.best) best[metric] = name;
  return json{{"rows", std::move(rows)}, {"best", std::move(best)}};
}

}  // namespace sentipipe
