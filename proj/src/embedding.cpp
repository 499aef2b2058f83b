#include "sentipipe/embedding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "sentipipe/error.hpp"
#include "sentipipe/rng.hpp"

namespace sentipipe {

namespace {

constexpr std::string_view kProviderNames[] = {"bert", "sbert", "scibert", "biobert", "pseudo",
                                               "file"};

}  // namespace

std::optional<ProviderId> parse_provider_id(std::string_view name) noexcept {
  for (std::size_t i = 0; i < std::size(kProviderNames); ++i)
    if (kProviderNames[i] == name) return static_cast<ProviderId>(i);
  return std::nullopt;
}

std::string_view provider_name(ProviderId id) noexcept {
  return kProviderNames[static_cast<std::size_t>(id)];
}

bool is_sidecar_model(ProviderId id) noexcept {
  return id == ProviderId::bert || id == ProviderId::sbert || id == ProviderId::scibert ||
         id == ProviderId::biobert;
}

void validate(const EmbeddingProviderSpec& spec) {
  const std::string name(provider_name(spec.provider));
  if (spec.dim == 0) throw ConfigError("embedding dim must be positive");
  const int populated = int{spec.endpoint.has_value()} + int{spec.path.has_value()} +
                        int{spec.seed.has_value()};
  if (populated != 1)
    throw ConfigError("provider '" + name +
                      "' needs exactly one of endpoint, path or seed to be set");
  if (is_sidecar_model(spec.provider) && !spec.endpoint)
    throw ConfigError("provider '" + name + "' needs an endpoint");
  if (spec.provider == ProviderId::file && !spec.path)
    throw ConfigError("provider 'file' needs a path");
  if (spec.provider == ProviderId::pseudo && !spec.seed)
    throw ConfigError("provider 'pseudo' needs a seed");
  if (spec.request_batch == 0 || spec.max_in_flight == 0 || spec.max_attempts < 1)
    throw ConfigError("sidecar batch size, in-flight limit and attempts must be positive");
}

std::vector<double> pseudo_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
  const std::string norm = clean_text(text);
  const std::uint64_t key = hash_bytes(norm) ^ mix64(seed);

  std::vector<double> noise(dim);
  for (std::size_t j = 0; j < dim; ++j) noise[j] = 2.0 * to_unit(counter_u64(key, j)) - 1.0;

  std::vector<double> bag(dim, 0.0);
  const std::string padded = " " + norm + " ";
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    const std::uint64_t h = hash_bytes(std::string_view(padded).substr(i, 3));
    bag[h % dim] += (h >> 63) ? 1.0 : -1.0;
  }
  double peak = 0.0;
  for (double b : bag) peak = std::max(peak, std::abs(b));

  std::vector<double> out(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    const double trig = peak > 0.0 ? bag[j] / peak : 0.0;
    // Stored embeddings are 32-bit; keep in-memory values on that grid.
    out[j] = static_cast<double>(static_cast<float>(0.25 * noise[j] + 0.75 * trig));
  }
  return out;
}

namespace {

class PseudoProvider final : public EmbeddingProvider {
 public:
  PseudoProvider(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {}
  std::string_view id() const noexcept override { return "pseudo"; }
  std::size_t dim() const noexcept override { return dim_; }
  Matrix embed(std::span<const TextItem> items) const override {
    Matrix out(items.size(), dim_);
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto v = pseudo_embed(items[i].text, dim_, seed_);
      std::copy(v.begin(), v.end(), out.row(i).begin());
    }
    return out;
  }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

class FileProvider final : public EmbeddingProvider {
 public:
  FileProvider(const std::filesystem::path& path, std::size_t dim)
      : data_(load_embeddings(path)) {
    if (data_.dim() != dim)
      throw ConfigError("embedding file '" + path.string() + "' has dim " +
                        std::to_string(data_.dim()) + ", configured dim is " +
                        std::to_string(dim));
    for (std::size_t r = 0; r < data_.size(); ++r) index_.emplace(data_.ids[r], r);
  }
  std::string_view id() const noexcept override { return data_.provider_id; }
  std::size_t dim() const noexcept override { return data_.dim(); }
  Matrix embed(std::span<const TextItem> items) const override {
    Matrix out(items.size(), data_.dim());
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto it = index_.find(items[i].id);
      if (it == index_.end())
        throw ConfigError("id '" + items[i].id + "' not present in the embedding file");
      const auto src = data_.X.row(it->second);
      std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
  }

 private:
  EmbeddedDataset data_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Endpoint {
  std::string scheme_host_port;
  std::string prefix;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  const auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
  const auto slash = url.find('/', host_start);
  Endpoint ep;
  ep.scheme_host_port = slash == std::string::npos ? url : url.substr(0, slash);
  ep.prefix = slash == std::string::npos ? "" : url.substr(slash);
  while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
  return ep;
}

httplib::Client make_client(const Endpoint& ep, std::chrono::milliseconds timeout) {
  httplib::Client cli(ep.scheme_host_port);
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);
  return cli;
}

class SidecarProvider final : public EmbeddingProvider {
 public:
  explicit SidecarProvider(EmbeddingProviderSpec spec)
      : spec_(std::move(spec)), endpoint_(split_endpoint(*spec_.endpoint)) {}

  std::string_view id() const noexcept override { return provider_name(spec_.provider); }
  std::size_t dim() const noexcept override { return spec_.dim; }

  Matrix embed(std::span<const TextItem> items) const override {
    Matrix out(items.size(), spec_.dim);
    const std::size_t chunk = spec_.request_batch;
    const std::size_t n_chunks = (items.size() + chunk - 1) / chunk;
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&] {
      for (;;) {
        const std::size_t k = next.fetch_add(1);
        if (k >= n_chunks) return;
        {
          std::lock_guard lock(error_mutex);
          if (first_error) return;
        }
        try {
          const std::size_t begin = k * chunk;
          const std::size_t len = std::min(chunk, items.size() - begin);
          const auto vectors = request(items.subspan(begin, len));
          for (std::size_t r = 0; r < len; ++r) {
            const auto src = vectors.row(r);
            std::copy(src.begin(), src.end(), out.row(begin + r).begin());
          }
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    };

    const std::size_t n_threads = std::min(spec_.max_in_flight, n_chunks);
    if (n_threads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return out;
  }

 private:
  Matrix request(std::span<const TextItem> items) const {
    const std::string body = make_embed_request(id(), items);
    std::string last_failure;
    for (int attempt = 1; attempt <= spec_.max_attempts; ++attempt) {
      auto cli = make_client(endpoint_, spec_.timeout);
      auto res = cli.Post(endpoint_.prefix + "/embed", body, "application/json");
      if (res && res->status == 200) {
        auto parsed = parse_embed_response(res->body);
        if (parsed.dim != spec_.dim)
          throw ConfigError("sidecar model '" + std::string(id()) + "' reports dim " +
                            std::to_string(parsed.dim) + " but the configured dim is " +
                            std::to_string(spec_.dim));
        if (parsed.vectors.rows() != items.size())
          throw FormatError("sidecar returned " + std::to_string(parsed.vectors.rows()) +
                            " vectors for " + std::to_string(items.size()) + " texts");
        return std::move(parsed.vectors);
      }
      last_failure = res ? "HTTP " + std::to_string(res->status)
                         : "request failed: " + httplib::to_string(res.error());
      if (attempt < spec_.max_attempts)
        std::this_thread::sleep_for(spec_.retry_backoff * attempt);
    }
    throw TransportError("sidecar " + *spec_.endpoint + "/embed: " + last_failure,
                         spec_.max_attempts);
  }

  EmbeddingProviderSpec spec_;
  Endpoint endpoint_;
};

}  // namespace

std::unique_ptr<EmbeddingProvider> make_provider(const EmbeddingProviderSpec& spec) {
  validate(spec);
  switch (spec.provider) {
    case ProviderId::pseudo:
      return std::make_unique<PseudoProvider>(spec.dim, *spec.seed);
    case ProviderId::file:
      return std::make_unique<FileProvider>(*spec.path, spec.dim);
    default:
      return std::make_unique<SidecarProvider>(spec);
  }
}

Matrix embed_batch(const EmbeddingProvider& provider, std::span<const TextItem> items) {
  if (items.empty()) throw ConfigError("embed_batch called with no texts");
  for (std::size_t i = 0; i < items.size(); ++i)
    if (clean_text(items[i].text).empty())
      throw ConfigError("text at index " + std::to_string(i) + " is empty after cleaning");
  Matrix out = provider.embed(items);
  if (out.rows() != items.size() || out.cols() != provider.dim())
    throw ConfigError("provider '" + std::string(provider.id()) + "' returned a " +
                      std::to_string(out.rows()) + "x" + std::to_string(out.cols()) +
                      " matrix, expected " + std::to_string(items.size()) + "x" +
                      std::to_string(provider.dim()));
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (double v : out.row(r))
      if (!std::isfinite(v))
        throw NumericalError("non-finite embedding for item '" + items[r].id + "'");
  return out;
}

Matrix embed_batch(const EmbeddingProviderSpec& spec, std::span<const TextItem> items) {
  return embed_batch(*make_provider(spec), items);
}

EmbeddedDataset embed_corpus(const EmbeddingProvider& provider, const LabeledCorpus& corpus) {
  std::vector<TextItem> items;
  items.reserve(corpus.size());
  for (const auto& r : corpus.reviews) items.push_back({r.id, r.text});
  EmbeddedDataset ds;
  ds.X = embed_batch(provider, items);
  for (const auto& r : corpus.reviews) ds.ids.push_back(r.id);
  ds.y = encode_labels(corpus).codes;
  ds.provider_id = std::string(provider.id());
  return ds;
}

// ---------------------------------------------------------------------------

std::string make_embed_request(std::string_view model, std::span<const TextItem> items) {
  nlohmann::json texts = nlohmann::json::array();
  for (const auto& it : items) texts.push_back(it.text);
  return nlohmann::json{{"model", model}, {"texts", std::move(texts)}}.dump();
}

EmbedResponse parse_embed_response(std::string_view body) {
  EmbedResponse out;
  try {
    const auto j = nlohmann::json::parse(body);
    out.model = j.at("model").get<std::string>();
    out.dim = j.at("dim").get<std::size_t>();
    const auto& vectors = j.at("vectors");
    if (!vectors.is_array()) throw FormatError("'vectors' is not an array");
    out.vectors = Matrix(vectors.size(), out.dim);
    for (std::size_t r = 0; r < vectors.size(); ++r) {
      const auto& row = vectors[r];
      if (!row.is_array() || row.size() != out.dim)
        throw FormatError("vector " + std::to_string(r) + " does not have dim " +
                          std::to_string(out.dim));
      for (std::size_t c = 0; c < out.dim; ++c) out.vectors(r, c) = row[c].get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed /embed response: ") + e.what());
  }
  return out;
}

HealthStatus parse_health_response(std::string_view body) {
  try {
    const auto j = nlohmann::json::parse(body);
    return HealthStatus{j.at("status").get<std::string>(),
                        j.at("models").get<std::vector<std::string>>()};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed /health response: ") + e.what());
  }
}

HealthStatus check_health(const EmbeddingProviderSpec& spec) {
  if (!spec.endpoint) throw ConfigError("no sidecar endpoint configured");
  const auto ep = split_endpoint(*spec.endpoint);
  auto cli = make_client(ep, spec.timeout);
  auto res = cli.Get(ep.prefix + "/health");
  if (!res) throw TransportError("sidecar /health: " + httplib::to_string(res.error()), 1);
  if (res->status != 200)
    throw TransportError("sidecar /health: HTTP " + std::to_string(res->status), 1);
  return parse_health_response(res->body);
}

}  // namespace sentipipe
