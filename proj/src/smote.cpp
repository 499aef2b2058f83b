#include "sentipipe/smote.hpp"

#include <algorithm>
#include <numeric>

#include "sentipipe/error.hpp"
#include "sentipipe/rng.hpp"

namespace sentipipe {

std::optional<SmoteStage> parse_smote_stage(std::string_view name) noexcept {
  if (name == "pre_split") return SmoteStage::pre_split;
  if (name == "train_only") return SmoteStage::train_only;
  return std::nullopt;
}

std::string_view smote_stage_name(SmoteStage stage) noexcept {
  return stage == SmoteStage::pre_split ? "pre_split" : "train_only";
}

bool is_synthetic_id(std::string_view id) noexcept { return id.starts_with(kSyntheticPrefix); }

std::vector<std::size_t> nearest_neighbors(const Matrix& dist, std::size_t m, std::size_t k) {
  std::vector<std::size_t> others;
  others.reserve(dist.rows() - 1);
  for (std::size_t j = 0; j < dist.rows(); ++j)
    if (j != m) others.push_back(j);
  k = std::min(k, others.size());
  std::partial_sort(others.begin(), others.begin() + static_cast<std::ptrdiff_t>(k), others.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double da = dist(m, a), db = dist(m, b);
                      return da < db || (da == db && a < b);
                    });
  others.resize(k);
  return others;
}

SmoteResult smote(const EmbeddedDataset& data, const SmoteParams& params, kernels::Exec exec) {
  if (params.k < 1) throw ConfigError("SMOTE k must be at least 1");
  const auto& y = data.labels();
  validate(data);

  const int n_classes = num_classes(data);
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(std::max(n_classes, 0)));
  for (std::size_t i = 0; i < y.size(); ++i) members[static_cast<std::size_t>(y[i])].push_back(i);

  std::size_t majority = 0;
  for (const auto& m : members) majority = std::max(majority, m.size());

  SmoteResult result;
  result.data = data;

  for (std::size_t c = 0; c < members.size(); ++c) {
    const auto& idx = members[c];
    if (idx.empty()) continue;
    std::size_t target = majority;
    if (!params.targets.empty()) {
      const auto it = params.targets.find(static_cast<int>(c));
      target = it == params.targets.end() ? idx.size() : it->second;
    }
    if (target <= idx.size()) continue;
    if (idx.size() < 2)
      throw ConfigError("SMOTE needs at least 2 samples of class " + std::to_string(c) +
                        " to synthesize, found " + std::to_string(idx.size()));

    std::size_t k = params.k;
    if (k >= idx.size()) {
      k = idx.size() - 1;
      result.warnings.push_back("SMOTE k=" + std::to_string(params.k) + " clamped to " +
                                std::to_string(k) + " for class " + std::to_string(c) + " (" +
                                std::to_string(idx.size()) + " samples)");
    }

    const Matrix points = gather_rows(data.X, idx);
    const Matrix dist = kernels::pairwise_sq_distances(points, exec);
    std::vector<std::vector<std::size_t>> neighbors(idx.size());
    for (std::size_t m = 0; m < idx.size(); ++m) neighbors[m] = nearest_neighbors(dist, m, k);

    const std::size_t deficit = target - idx.size();
    const std::uint64_t class_key = mix64(params.seed ^ mix64(c + 1));
    std::vector<double> z(data.dim());
    for (std::size_t s = 0; s < deficit; ++s) {
      const std::uint64_t base = 3 * s;
      const auto m = static_cast<std::size_t>(counter_u64(class_key, base) % idx.size());
      const auto& nn = neighbors[m];
      const auto pick = nn[static_cast<std::size_t>(counter_u64(class_key, base + 1) % nn.size())];
      const double u = to_unit(counter_u64(class_key, base + 2));
      const auto x = points.row(m);
      const auto xn = points.row(pick);
      for (std::size_t d = 0; d < z.size(); ++d) z[d] = x[d] + u * (xn[d] - x[d]);
      result.data.X.append_row(z);
      result.data.ids.push_back(std::string(kSyntheticPrefix) + std::to_string(c) + "-" +
                                std::to_string(s));
      result.data.y->push_back(static_cast<int>(c));
    }
    result.synthesized += deficit;
  }
  return result;
}

}  // namespace sentipipe
