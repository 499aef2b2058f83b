#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sentipipe/dataset.hpp"
#include "sentipipe/kernels.hpp"

namespace sentipipe {

enum class SmoteStage { pre_split, train_only };

std::optional<SmoteStage> parse_smote_stage(std::string_view name) noexcept;
std::string_view smote_stage_name(SmoteStage stage) noexcept;

struct SmoteParams {
  std::size_t k = 5;
  /// Per-class target counts. Empty means equalize every class to the
  /// majority count. Targets below the current count leave a class as is.
  std::map<int, std::size_t> targets;
  std::uint64_t seed = 0;
  SmoteStage stage = SmoteStage::train_only;
};

struct SmoteResult {
  EmbeddedDataset data;
  std::vector<std::string> warnings;
  std::size_t synthesized = 0;
};

/// Synthetic ids have this prefix: `synth-<class>-<ordinal>`.
inline constexpr std::string_view kSyntheticPrefix = "synth-";
bool is_synthetic_id(std::string_view id) noexcept;

/// Indices of the k nearest same-class rows of `members[m]` (self excluded),
/// by ascending squared distance, ties to the lower row index. `dist` holds
/// pairwise squared distances over `members`.
std::vector<std::size_t> nearest_neighbors(const Matrix& dist, std::size_t m, std::size_t k);

/// Oversamples classes below their target. Original rows come first and are
/// untouched; synthetic rows follow grouped by class then ordinal. Each
/// synthetic row is x + u·(x_nn − x) with a per-sample counter-based stream,
/// so the result does not depend on thread scheduling.
SmoteResult smote(const EmbeddedDataset& data, const SmoteParams& params,
                  kernels::Exec exec = kernels::Exec::parallel);

}  // namespace sentipipe
