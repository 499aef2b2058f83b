#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstring>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "sentipipe/dataset.hpp"
#include "sentipipe/embedding.hpp"
#include "sentipipe/error.hpp"
#include "sentipipe/io.hpp"
#include "test_support.hpp"

using namespace sentipipe;
using json = nlohmann::json;

namespace {

EmbeddingProviderSpec pseudo_spec(std::size_t dim, std::uint64_t seed) {
  EmbeddingProviderSpec s;
  s.provider = ProviderId::pseudo;
  s.dim = dim;
  s.seed = seed;
  return s;
}

std::vector<TextItem> items_of(const std::vector<std::string>& texts) {
  std::vector<TextItem> out;
  for (std::size_t i = 0; i < texts.size(); ++i) out.push_back({"t" + std::to_string(i), texts[i]});
  return out;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

// Little-endian byte writers for hand-built EMB1 files.
void u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void u16(std::string& s, std::uint16_t v) {
  s.push_back(static_cast<char>(v & 0xFF));
  s.push_back(static_cast<char>(v >> 8));
}

}  // namespace

TEST_CASE("provider ids") {
  for (auto name : {"bert", "sbert", "scibert", "biobert", "pseudo", "file"}) {
    const auto id = parse_provider_id(name);
    REQUIRE(id);
    CHECK(provider_name(*id) == name);
  }
  CHECK_FALSE(parse_provider_id("gpt"));
  CHECK(is_sidecar_model(ProviderId::biobert));
  CHECK_FALSE(is_sidecar_model(ProviderId::pseudo));
}

TEST_CASE("provider settings: exactly one source per provider") {
  auto s = pseudo_spec(8, 1);
  CHECK_NOTHROW(validate(s));
  s.endpoint = "http://localhost:1";
  CHECK_THROWS_AS(validate(s), ConfigError);
  s = pseudo_spec(0, 1);
  CHECK_THROWS_AS(validate(s), ConfigError);
  EmbeddingProviderSpec bert;
  bert.provider = ProviderId::bert;
  bert.dim = 768;
  CHECK_THROWS_AS(validate(bert), ConfigError);
  bert.endpoint = "http://localhost:1";
  CHECK_NOTHROW(validate(bert));
  EmbeddingProviderSpec file;
  file.provider = ProviderId::file;
  file.seed = 3;
  CHECK_THROWS_AS(validate(file), ConfigError);
}

TEST_CASE("pseudo_embed determinism, range and seed sensitivity") {
  const auto a = pseudo_embed("works well", 64, 5);
  CHECK(a == pseudo_embed("works well", 64, 5));
  CHECK(a == pseudo_embed("  Works   WELL ", 64, 5));  // function of the normalized text
  CHECK(a != pseudo_embed("works well", 64, 6));
  for (double v : a) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }
  const auto tiny = pseudo_embed("a", 4, 0);
  CHECK(tiny.size() == 4);
  for (double v : tiny) CHECK(std::isfinite(v));
  CHECK(cosine(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  // Shared trigrams pull vectors together.
  const auto near = pseudo_embed("works well today", 64, 5);
  const auto far = pseudo_embed("zzqx vvkj", 64, 5);
  CHECK(cosine(a, near) > cosine(a, far));
}

TEST_CASE("embed_batch with the pseudo provider") {
  const auto spec = pseudo_spec(64, 9);
  const auto texts = items_of({"one", "two", "three", "two", "five"});
  const auto m = embed_batch(spec, texts);
  CHECK(m.rows() == 5);
  CHECK(m.cols() == 64);
  for (double v : m.data()) CHECK(std::abs(v) <= 1.0);
  CHECK(std::equal(m.row(1).begin(), m.row(1).end(), m.row(3).begin()));

  // Batching invariance: parts concatenated equal the whole.
  const auto head = embed_batch(spec, std::span(texts).subspan(0, 2));
  const auto tail = embed_batch(spec, std::span(texts).subspan(2));
  for (std::size_t r = 0; r < 5; ++r) {
    const auto part = r < 2 ? head.row(r) : tail.row(r - 2);
    CHECK(std::equal(part.begin(), part.end(), m.row(r).begin()));
  }

  CHECK_THROWS_AS(embed_batch(spec, std::vector<TextItem>{}), ConfigError);
  try {
    embed_batch(spec, items_of({"fine", "  ", "ok"}));
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("index 1") != std::string::npos);
  }
}

TEST_CASE("EMB1: hand-written minimal file decodes") {
  std::string bytes = "EMB1";
  u32(bytes, 1);
  u32(bytes, 2);
  bytes.push_back('\0');  // no labels
  u16(bytes, 1);
  bytes += "a";
  u32(bytes, 0x3F000000);  //  0.5f
  u32(bytes, 0xBE800000);  // -0.25f
  u16(bytes, 4);
  bytes += "hand";

  const auto ds = decode_emb1(bytes);
  CHECK(ds.size() == 1);
  CHECK(ds.dim() == 2);
  CHECK(ds.X(0, 0) == 0.5);
  CHECK(ds.X(0, 1) == -0.25);
  CHECK(ds.ids == std::vector<std::string>{"a"});
  CHECK_FALSE(ds.has_labels());
  CHECK(ds.provider_id == "hand");
  CHECK(encode_emb1(ds) == bytes);
}

TEST_CASE("EMB1: malformed files report offsets") {
  EmbeddedDataset ds = testsupport::random_dataset(3, 4, 2, 1);
  quantize_to_f32(ds);
  const auto good = encode_emb1(ds);

  auto bad_magic = good;
  bad_magic.replace(0, 4, "XXX1");
  try {
    decode_emb1(bad_magic);
    FAIL("expected an error");
  } catch (const FormatError& e) {
    REQUIRE(e.offset());
    CHECK(*e.offset() == 0);
  }
  for (std::size_t cut : {std::size_t{2}, std::size_t{10}, good.size() - 5, good.size() - 1}) {
    try {
      decode_emb1(std::string_view(good).substr(0, cut));
      FAIL("expected an error at cut " << cut);
    } catch (const FormatError& e) {
      REQUIRE(e.offset());
      CHECK(*e.offset() <= cut);
    }
  }
  CHECK_THROWS_AS(decode_emb1(good + "x"), FormatError);
}

TEST_CASE("EMB1 and JSONL round trips") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto ds = testsupport::random_dataset(10 + seed, 3 + seed, 3, seed);
    quantize_to_f32(ds);
    CHECK(decode_emb1(encode_emb1(ds)) == ds);
    CHECK(decode_jsonl(encode_jsonl(ds)) == ds);
    auto unlabeled = ds;
    unlabeled.y.reset();
    CHECK(decode_emb1(encode_emb1(unlabeled)) == unlabeled);
  }
  const auto dir = testsupport::temp_dir("emb-files");
  auto ds = testsupport::random_dataset(7, 5, 3, 11);
  quantize_to_f32(ds);
  save_embeddings(ds, dir / "a.emb1");
  save_embeddings(ds, dir / "a.jsonl");
  CHECK(load_embeddings(dir / "a.emb1") == ds);
  CHECK(load_embeddings(dir / "a.jsonl") == ds);
  CHECK(read_file(dir / "a.jsonl").front() == '{');
}

TEST_CASE("validate rejects non-finite rows naming the id") {
  auto ds = testsupport::random_dataset(3, 2, 2, 1);
  ds.X(1, 1) = std::nan("");
  try {
    validate(ds);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("r1") != std::string::npos);
  }
}

TEST_CASE("file provider looks rows up by id") {
  const auto dir = testsupport::temp_dir("file-provider");
  auto ds = testsupport::random_dataset(4, 3, 2, 2);
  quantize_to_f32(ds);
  ds.provider_id = "sbert";
  save_embeddings(ds, dir / "pre.emb1");
  EmbeddingProviderSpec spec;
  spec.provider = ProviderId::file;
  spec.dim = 3;
  spec.path = dir / "pre.emb1";
  const auto provider = make_provider(spec);
  CHECK(provider->id() == "sbert");
  const std::vector<TextItem> items{{"r2", "x"}, {"r0", "y"}};
  const auto m = embed_batch(*provider, items);
  CHECK(std::equal(m.row(0).begin(), m.row(0).end(), ds.X.row(2).begin()));
  CHECK(std::equal(m.row(1).begin(), m.row(1).end(), ds.X.row(0).begin()));
  CHECK_THROWS_AS(embed_batch(*provider, std::vector<TextItem>{{"nope", "z"}}), ConfigError);
  spec.dim = 4;
  CHECK_THROWS_AS(make_provider(spec), ConfigError);
}

namespace {

/// In-process stand-in for the embedding sidecar.
class MockSidecar {
 public:
  explicit MockSidecar(std::size_t reported_dim) : dim_(reported_dim) {
    server_.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"status":"ok","models":["bert","sbert","scibert","biobert"]})",
                      "application/json");
    });
    server_.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      if (fail_.load()) {
        res.status = 503;
        res.set_content(R"({"error":"unavailable"})", "application/json");
        return;
      }
      json body;
      try {
        body = json::parse(req.body);
      } catch (...) {
        res.status = 400;
        return;
      }
      // Request schema: exactly {model, texts}.
      if (!body.is_object() || body.size() != 2 || !body.contains("model") ||
          !body["model"].is_string() || !body.contains("texts") || !body["texts"].is_array() ||
          body["texts"].empty()) {
        res.status = 400;
        res.set_content(R"({"error":"bad request"})", "application/json");
        return;
      }
      json vectors = json::array();
      for (const auto& t : body["texts"]) {
        const auto v = pseudo_embed(t.get<std::string>(), dim_, 0);
        vectors.push_back(v);
      }
      res.set_content(json{{"model", body["model"]}, {"dim", dim_}, {"vectors", vectors}}.dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockSidecar() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int requests() const { return requests_.load(); }
  void set_failing(bool f) { fail_ = f; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::size_t dim_;
  std::atomic<int> requests_{0};
  std::atomic<bool> fail_{false};
};

EmbeddingProviderSpec sidecar_spec(const std::string& endpoint, std::size_t dim) {
  EmbeddingProviderSpec s;
  s.provider = ProviderId::sbert;
  s.dim = dim;
  s.endpoint = endpoint;
  s.request_batch = 4;
  s.max_in_flight = 3;
  s.max_attempts = 2;
  s.retry_backoff = std::chrono::milliseconds(1);
  s.timeout = std::chrono::milliseconds(5000);
  return s;
}

}  // namespace

TEST_CASE("sidecar client: wire protocol, chunking and row order") {
  MockSidecar mock(8);
  const auto spec = sidecar_spec(mock.endpoint(), 8);

  const auto health = check_health(spec);
  CHECK(health.status == "ok");
  CHECK(health.models == std::vector<std::string>{"bert", "sbert", "scibert", "biobert"});

  std::vector<std::string> texts;
  for (int i = 0; i < 11; ++i) texts.push_back("review number " + std::to_string(i));
  const auto items = items_of(texts);
  const auto m = embed_batch(spec, items);
  CHECK(mock.requests() == 3);  // ceil(11 / 4)
  REQUIRE(m.rows() == 11);
  for (std::size_t r = 0; r < 11; ++r) {
    const auto expected = pseudo_embed(texts[r], 8, 0);
    CHECK(std::equal(expected.begin(), expected.end(), m.row(r).begin()));
  }
}

TEST_CASE("sidecar client: dim mismatch is a configuration error") {
  MockSidecar mock(768);
  const auto spec = sidecar_spec(mock.endpoint(), 512);
  CHECK_THROWS_AS(embed_batch(spec, items_of({"a text"})), ConfigError);
}

TEST_CASE("sidecar client: non-200 responses become transport errors with attempt counts") {
  MockSidecar mock(8);
  mock.set_failing(true);
  const auto spec = sidecar_spec(mock.endpoint(), 8);
  try {
    embed_batch(spec, items_of({"x"}));
    FAIL("expected a transport error");
  } catch (const TransportError& e) {
    CHECK(e.attempts() == 2);
    CHECK(e.retryable());
    CHECK(e.kind() == ErrorKind::Transport);
  }
  CHECK(mock.requests() == 2);
}

TEST_CASE("sidecar client: unreachable endpoint") {
  auto spec = sidecar_spec("http://127.0.0.1:1", 8);
  spec.max_attempts = 1;
  CHECK_THROWS_AS(embed_batch(spec, items_of({"x"})), TransportError);
  CHECK_THROWS_AS(check_health(spec), TransportError);
}

TEST_CASE("wire message helpers") {
  const std::vector<TextItem> items{{"a", "first"}, {"b", "second"}};
  const auto req = json::parse(make_embed_request("bert", items));
  CHECK(req == json{{"model", "bert"}, {"texts", {"first", "second"}}});

  const auto resp = parse_embed_response(R"({"model":"bert","dim":2,"vectors":[[1,2],[3,4.5]]})");
  CHECK(resp.dim == 2);
  CHECK(resp.vectors(1, 1) == 4.5);
  CHECK_THROWS_AS(parse_embed_response(R"({"model":"bert","dim":3,"vectors":[[1,2]]})"),
                  FormatError);
  CHECK_THROWS_AS(parse_embed_response("not json"), FormatError);
  const auto h = parse_health_response(R"({"status":"degraded","models":["bert"]})");
  CHECK(h.status == "degraded");
  CHECK_THROWS_AS(parse_health_response(R"({"status":"ok"})"), FormatError);
}
