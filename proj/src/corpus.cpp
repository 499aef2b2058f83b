#include "sentipipe/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "sentipipe/error.hpp"
#include "sentipipe/io.hpp"
#include "sentipipe/rng.hpp"

namespace sentipipe {

std::optional<SentimentLabel> parse_label(std::string_view name) noexcept {
  for (int c = 0; c < kNumSentimentClasses; ++c)
    if (kSentimentNames[static_cast<std::size_t>(c)] == name) return static_cast<SentimentLabel>(c);
  return std::nullopt;
}

std::string_view label_name(SentimentLabel label) noexcept {
  return kSentimentNames[static_cast<std::size_t>(label)];
}

SentimentLabel label_from_code(int code) {
  if (code < 0 || code >= kNumSentimentClasses)
    throw ConfigError("label code " + std::to_string(code) + " outside [0,3)");
  return static_cast<SentimentLabel>(code);
}

LabeledCorpus make_corpus(std::vector<RawReview> reviews) {
  LabeledCorpus corpus;
  std::set<std::string> seen;
  for (auto& r : reviews) {
    if (r.id.empty()) throw ConfigError("review with empty id");
    if (!seen.insert(r.id).second) throw ConfigError("duplicate review id '" + r.id + "'");
    if (!r.label) throw ConfigError("review '" + r.id + "' has no label");
    r.text = clean_text(r.text);
    if (r.text.empty()) {
      ++corpus.dropped_empty;
      continue;
    }
    ++corpus.class_counts[static_cast<std::size_t>(label_code(*r.label))];
    corpus.reviews.push_back(std::move(r));
  }
  return corpus;
}

std::optional<CorpusFormat> parse_corpus_format(std::string_view name) noexcept {
  if (name == "csv") return CorpusFormat::csv;
  if (name == "jsonl") return CorpusFormat::jsonl;
  return std::nullopt;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view content) {
  if (content.starts_with("\xEF\xBB\xBF")) content.remove_prefix(3);
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t quote_start = 0;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // A bare blank line is not a record.
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started && field.empty()) {
          in_quotes = true;
          field_started = true;
          quote_start = i;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < content.size() && content[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw FormatError("unterminated quoted CSV field", quote_start);
  if (field_started || !field.empty() || !record.empty()) end_record();
  return records;
}

namespace {

SentimentLabel require_label(std::string_view value, std::size_t row) {
  const auto label = parse_label(value);
  if (!label)
    throw FormatError("row " + std::to_string(row) + ": unknown label '" + std::string(value) +
                      "' (expected Negative, Neutral or Positive)");
  return *label;
}

}  // namespace

LabeledCorpus parse_corpus_csv(std::string_view content) {
  const auto records = parse_csv(content);
  if (records.empty()) throw FormatError("empty corpus file");
  const auto& header = records.front();
  auto column = [&](std::string_view name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw FormatError("CSV header is missing column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto text_col = column("Reviews");
  const auto label_col = column("Classification");
  if (header.size() != 2)
    throw FormatError("CSV header must be exactly 'Reviews,Classification'");
  if (records.size() == 1) throw FormatError("corpus file has a header but no rows");

  std::vector<RawReview> reviews;
  reviews.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != header.size())
      throw FormatError("row " + std::to_string(r) + ": expected " +
                        std::to_string(header.size()) + " fields, found " +
                        std::to_string(rec.size()));
    reviews.push_back(RawReview{"row-" + std::to_string(r - 1), rec[text_col],
                                require_label(rec[label_col], r)});
  }
  return make_corpus(std::move(reviews));
}

LabeledCorpus parse_corpus_jsonl(std::string_view content) {
  std::vector<RawReview> reviews;
  std::size_t line_no = 0;
  std::size_t offset = 0;
  while (offset < content.size()) {
    auto nl = content.find('\n', offset);
    if (nl == std::string_view::npos) nl = content.size();
    const auto line = content.substr(offset, nl - offset);
    const auto line_offset = offset;
    offset = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError("line " + std::to_string(line_no) + ": " + e.what(), line_offset);
    }
    if (!obj.is_object()) throw FormatError("line " + std::to_string(line_no) + ": not an object");
    for (const char* key : {"text", "label"})
      if (!obj.contains(key) || !obj[key].is_string())
        throw FormatError("line " + std::to_string(line_no) + ": missing string key '" + key + "'");
    std::string id = obj.contains("id") && obj["id"].is_string()
                         ? obj["id"].get<std::string>()
                         : "row-" + std::to_string(reviews.size());
    reviews.push_back(RawReview{std::move(id), obj["text"].get<std::string>(),
                                require_label(obj["label"].get<std::string>(), line_no)});
  }
  if (reviews.empty()) throw FormatError("empty corpus file");
  return make_corpus(std::move(reviews));
}

LabeledCorpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  const auto content = read_file(path);
  try {
    return format == CorpusFormat::csv ? parse_corpus_csv(content) : parse_corpus_jsonl(content);
  } catch (const FormatError& e) {
    throw e.with_context(path.string());
  }
}

std::string corpus_to_csv(std::span<const RawReview> reviews) {
  auto quote = [](std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
      if (c == '"') out += "\"\"";
      else out.push_back(c);
    }
    out.push_back('"');
    return out;
  };
  std::string out = "Reviews,Classification\n";
  for (const auto& r : reviews) {
    out += quote(r.text);
    out.push_back(',');
    out += r.label ? std::string(label_name(*r.label)) : std::string();
    out.push_back('\n');
  }
  return out;
}

// ---------------------------------------------------------------------------

int LabelMapping::encode(std::string_view name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ConfigError("label '" + std::string(name) + "' not in mapping");
  return static_cast<int>(it - names.begin());
}

const std::string& LabelMapping::decode(int code) const {
  if (code < 0 || static_cast<std::size_t>(code) >= names.size())
    throw ConfigError("label code " + std::to_string(code) + " not in mapping");
  return names[static_cast<std::size_t>(code)];
}

LabelMapping sentiment_mapping() {
  return LabelMapping{{kSentimentNames.begin(), kSentimentNames.end()}};
}

EncodedLabels encode_labels(const LabeledCorpus& corpus) {
  EncodedLabels out{{}, sentiment_mapping()};
  out.codes.reserve(corpus.size());
  for (const auto& r : corpus.reviews) out.codes.push_back(label_code(r.label.value()));
  return out;
}

std::vector<std::string> decode_labels(std::span<const int> codes, const LabelMapping& mapping) {
  std::vector<std::string> out;
  out.reserve(codes.size());
  for (int c : codes) out.push_back(mapping.decode(c));
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> stratified_test_counts(std::span<const std::size_t> class_counts,
                                                double test_fraction) {
  const std::size_t n = std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0});
  const auto total = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  std::vector<std::size_t> quota(class_counts.size());
  std::vector<double> remainder(class_counts.size());
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < class_counts.size(); ++c) {
    const double exact = static_cast<double>(class_counts[c]) * test_fraction;
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    remainder[c] = exact - static_cast<double>(quota[c]);
    assigned += quota[c];
  }
  std::vector<std::size_t> order(class_counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < total && k < order.size(); ++k) {
    const auto c = order[k];
    if (quota[c] < class_counts[c]) {
      ++quota[c];
      ++assigned;
    }
  }
  return quota;
}

SplitIndices split_indices(std::span<const int> y, const SplitSpec& spec) {
  if (!(spec.test_fraction >= 0.0 && spec.test_fraction < 1.0))
    throw ConfigError("test_fraction must lie in [0,1), got " + std::to_string(spec.test_fraction));
  SplitIndices out;
  Rng rng(spec.seed);

  if (!spec.stratified) {
    std::vector<std::size_t> perm(y.size());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span(perm));
    const auto n_test = static_cast<std::size_t>(
        std::llround(static_cast<double>(y.size()) * spec.test_fraction));
    out.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
    out.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  } else {
    int max_code = -1;
    for (int c : y) {
      if (c < 0) throw ConfigError("negative label code in split");
      max_code = std::max(max_code, c);
    }
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(max_code + 1));
    for (std::size_t i = 0; i < y.size(); ++i) members[static_cast<std::size_t>(y[i])].push_back(i);
    std::vector<std::size_t> counts;
    for (const auto& m : members) counts.push_back(m.size());
    const auto quota = stratified_test_counts(counts, spec.test_fraction);
    for (std::size_t c = 0; c < members.size(); ++c) {
      if (members[c].empty()) continue;
      if (quota[c] >= members[c].size())
        throw ConfigError("stratified split leaves class " + std::to_string(c) +
                          " with no training rows (" + std::to_string(members[c].size()) +
                          " rows, " + std::to_string(quota[c]) + " to test)");
      rng.shuffle(std::span(members[c]));
      out.test.insert(out.test.end(), members[c].begin(),
                      members[c].begin() + static_cast<std::ptrdiff_t>(quota[c]));
      out.train.insert(out.train.end(),
                       members[c].begin() + static_cast<std::ptrdiff_t>(quota[c]),
                       members[c].end());
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

}  // namespace sentipipe
