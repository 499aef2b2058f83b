#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sentipipe/corpus.hpp"
#include "sentipipe/dataset.hpp"
#include "sentipipe/matrix.hpp"

namespace sentipipe {

enum class ProviderId { bert, sbert, scibert, biobert, pseudo, file };

std::optional<ProviderId> parse_provider_id(std::string_view name) noexcept;
std::string_view provider_name(ProviderId id) noexcept;
/// The four transformer encoders served by the sidecar.
bool is_sidecar_model(ProviderId id) noexcept;

struct EmbeddingProviderSpec {
  ProviderId provider = ProviderId::pseudo;
  std::size_t dim = 64;
  std::optional<std::string> endpoint;            // sidecar models
  std::optional<std::filesystem::path> path;      // file provider
  std::optional<std::uint64_t> seed;              // pseudo provider

  // Sidecar client tuning.
  std::size_t request_batch = 32;
  std::size_t max_in_flight = 4;
  int max_attempts = 3;
  std::chrono::milliseconds timeout{30000};
  std::chrono::milliseconds retry_backoff{200};
};

inline constexpr std::size_t kDefaultModelDim = 768;
inline constexpr std::size_t kDefaultPseudoDim = 64;

/// Checks dim > 0 and that exactly the field matching the provider class is
/// populated. Throws ConfigError.
void validate(const EmbeddingProviderSpec& spec);

/// Deterministic stand-in embedding of clean_text(text). Entries lie in
/// [-1,1]: a 0.25-weighted seeded noise term plus a 0.75-weighted
/// max-normalized signed bag of character trigrams, so lexically similar
/// texts get nearby vectors.
std::vector<double> pseudo_embed(std::string_view text, std::size_t dim, std::uint64_t seed);

/// A text item to embed; the id is used by the file provider.
struct TextItem {
  std::string id;
  std::string text;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string_view id() const noexcept = 0;
  virtual std::size_t dim() const noexcept = 0;
  /// Row i corresponds to items[i].
  virtual Matrix embed(std::span<const TextItem> items) const = 0;
};

std::unique_ptr<EmbeddingProvider> make_provider(const EmbeddingProviderSpec& spec);

/// Validates inputs (nonempty batch, nonempty texts), embeds, and checks the
/// result is |items| × spec.dim and finite.
Matrix embed_batch(const EmbeddingProviderSpec& spec, std::span<const TextItem> items);
Matrix embed_batch(const EmbeddingProvider& provider, std::span<const TextItem> items);

/// Embeds a labeled corpus into a dataset with codes per encode_labels.
EmbeddedDataset embed_corpus(const EmbeddingProvider& provider, const LabeledCorpus& corpus);

// ---------------------------------------------------------------------------
// Sidecar wire protocol.

/// Body for POST {endpoint}/embed.
std::string make_embed_request(std::string_view model, std::span<const TextItem> items);

struct EmbedResponse {
  std::string model;
  std::size_t dim = 0;
  Matrix vectors;
};

/// Parses and shape-checks a /embed response. Throws FormatError.
EmbedResponse parse_embed_response(std::string_view body);

struct HealthStatus {
  std::string status;
  std::vector<std::string> models;
};

HealthStatus parse_health_response(std::string_view body);
/// GET {endpoint}/health. Throws TransportError.
HealthStatus check_health(const EmbeddingProviderSpec& spec);

}  // namespace sentipipe
