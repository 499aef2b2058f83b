#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sentipipe/corpus.hpp"
#include "sentipipe/matrix.hpp"

namespace sentipipe {

/// Dense feature matrix with stable row ids and optional integer labels.
struct EmbeddedDataset {
  std::vector<std::string> ids;
  Matrix X;
  std::optional<std::vector<int>> y;
  std::string provider_id;

  std::size_t size() const noexcept { return X.rows(); }
  std::size_t dim() const noexcept { return X.cols(); }
  bool has_labels() const noexcept { return y.has_value(); }
  const std::vector<int>& labels() const;  // throws ConfigError when absent

  friend bool operator==(const EmbeddedDataset&, const EmbeddedDataset&) = default;
};

/// Throws ConfigError on shape mismatches and NumericalError naming the
/// first row id holding a NaN or infinity.
void validate(const EmbeddedDataset& ds);

/// Rows selected by `indices`, in that order.
EmbeddedDataset subset(const EmbeddedDataset& ds, std::span<const std::size_t> indices);

/// Rounds every feature to the nearest 32-bit float, the precision stored in
/// embedding files.
void quantize_to_f32(EmbeddedDataset& ds);

/// Number of classes implied by the labels (max code + 1).
int num_classes(const EmbeddedDataset& ds);

std::pair<EmbeddedDataset, EmbeddedDataset> stratified_split(const EmbeddedDataset& ds,
                                                             const SplitSpec& spec);

// ---------------------------------------------------------------------------
// Files.
//
// EMB1 layout (little-endian):
//   "EMB1" | u32 n | u32 d | u8 has_labels | n × (u16 len, id bytes)
//   | [n × u8 code] | n·d × f32 row-major | u16 len, provider_id bytes

std::string encode_emb1(const EmbeddedDataset& ds);
/// Throws FormatError naming the byte offset of the first inconsistency.
EmbeddedDataset decode_emb1(std::string_view bytes);

/// JSONL twin: a header line {"provider_id","dim","n"} then one
/// {"id","label"?,"vector"} object per row.
std::string encode_jsonl(const EmbeddedDataset& ds);
EmbeddedDataset decode_jsonl(std::string_view text);

/// Format chosen by extension: `.jsonl` for JSONL, anything else EMB1.
void save_embeddings(const EmbeddedDataset& ds, const std::filesystem::path& path);
EmbeddedDataset load_embeddings(const std::filesystem::path& path);

}  // namespace sentipipe
