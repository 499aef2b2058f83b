#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sentipipe {

/// The three sentiment classes. Codes follow the lexicographic order of the
/// label strings, so they agree with a conventional sorted label encoder.
enum class SentimentLabel : int { Negative = 0, Neutral = 1, Positive = 2 };

inline constexpr int kNumSentimentClasses = 3;
inline constexpr std::array<std::string_view, kNumSentimentClasses> kSentimentNames = {
    "Negative", "Neutral", "Positive"};

std::optional<SentimentLabel> parse_label(std::string_view name) noexcept;
std::string_view label_name(SentimentLabel label) noexcept;
inline int label_code(SentimentLabel label) noexcept { return static_cast<int>(label); }
/// Throws ConfigError for codes outside [0,3).
SentimentLabel label_from_code(int code);

struct RawReview {
  std::string id;
  std::string text;
  std::optional<SentimentLabel> label;

  friend bool operator==(const RawReview&, const RawReview&) = default;
};

struct LabeledCorpus {
  std::vector<RawReview> reviews;  // every entry has a label
  std::array<std::size_t, kNumSentimentClasses> class_counts{};
  std::size_t dropped_empty = 0;   // rows whose text was empty after cleaning

  std::size_t size() const noexcept { return reviews.size(); }
};

/// Builds a corpus, cleaning every text and dropping rows that clean to
/// empty. Throws ConfigError on missing labels or duplicate ids.
LabeledCorpus make_corpus(std::vector<RawReview> reviews);

// ---------------------------------------------------------------------------
// Text normalization

/// Entity decoding (repeated until stable), control-character removal,
/// lowercasing, canonical composition (NFC), whitespace collapsing and
/// trimming. Punctuation and stopwords are kept. Idempotent.
std::string clean_text(std::string_view text);

/// Decodes one level of HTML character references (named and numeric).
std::string decode_entities(std::string_view text);

// ---------------------------------------------------------------------------
// HTML extraction

/// Compound selector chain, e.g. `div.review p.text` (descendant combinator
/// only). Each compound supports a tag name, `.class`, `#id` and `[attr=v]`.
struct ReviewSelectors {
  std::string container = "div.review";
  std::string text = ".review-text";
};

/// One RawReview per element matching `selectors.container`, in document
/// order. The text is the text content of the first descendant matching
/// `selectors.text`. Ids are `<page_stem>-<ordinal>` (0-based). Throws
/// FormatError with a byte offset on malformed markup or invalid UTF-8.
std::vector<RawReview> extract_reviews(std::string_view html, std::string_view page_stem,
                                       const ReviewSelectors& selectors = {});

// ---------------------------------------------------------------------------
// Files

enum class CorpusFormat { csv, jsonl };

std::optional<CorpusFormat> parse_corpus_format(std::string_view name) noexcept;

/// CSV needs header `Reviews,Classification`; JSONL needs keys `text` and
/// `label` (optional `id`). Row ids default to `row-<index>`.
LabeledCorpus load_corpus(const std::filesystem::path& path, CorpusFormat format);
LabeledCorpus parse_corpus_csv(std::string_view content);
LabeledCorpus parse_corpus_jsonl(std::string_view content);

/// Writes `Reviews,Classification` CSV, quoting every field that needs it.
std::string corpus_to_csv(std::span<const RawReview> reviews);

/// RFC 4180 records. Throws FormatError on an unterminated quoted field.
std::vector<std::vector<std::string>> parse_csv(std::string_view content);

// ---------------------------------------------------------------------------
// Label encoding

struct LabelMapping {
  std::vector<std::string> names;  // index = code

  int encode(std::string_view name) const;          // throws ConfigError
  const std::string& decode(int code) const;        // throws ConfigError
  std::size_t size() const noexcept { return names.size(); }

  friend bool operator==(const LabelMapping&, const LabelMapping&) = default;
};

LabelMapping sentiment_mapping();

struct EncodedLabels {
  std::vector<int> codes;
  LabelMapping mapping;
};

EncodedLabels encode_labels(const LabeledCorpus& corpus);
std::vector<std::string> decode_labels(std::span<const int> codes, const LabelMapping& mapping);

// ---------------------------------------------------------------------------
// Splitting

struct SplitSpec {
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct SplitIndices {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

/// Per-class test quotas: floor(n_c·f) plus one extra for the classes with
/// the largest remainders until the total reaches round(n·f). Remainder ties
/// go to the lower class code.
std::vector<std::size_t> stratified_test_counts(std::span<const std::size_t> class_counts,
                                                double test_fraction);

/// Row partition for labels `y`. The permutation is a pure function of the
/// seed. Throws ConfigError when a class would be left with no training rows.
SplitIndices split_indices(std::span<const int> y, const SplitSpec& spec);

}  // namespace sentipipe
