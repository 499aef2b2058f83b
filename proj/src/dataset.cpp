#include "sentipipe/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sentipipe/error.hpp"
#include "sentipipe/io.hpp"

namespace sentipipe {

static_assert(std::endian::native == std::endian::little, "EMB1 codec assumes little-endian");

const std::vector<int>& EmbeddedDataset::labels() const {
  if (!y) throw ConfigError("dataset from provider '" + provider_id + "' has no labels");
  return *y;
}

void validate(const EmbeddedDataset& ds) {
  if (ds.ids.size() != ds.X.rows())
    throw ConfigError("dataset has " + std::to_string(ds.ids.size()) + " ids but " +
                      std::to_string(ds.X.rows()) + " rows");
  if (ds.y && ds.y->size() != ds.X.rows())
    throw ConfigError("dataset has " + std::to_string(ds.y->size()) + " labels but " +
                      std::to_string(ds.X.rows()) + " rows");
  for (std::size_t r = 0; r < ds.X.rows(); ++r)
    for (double v : ds.X.row(r))
      if (!std::isfinite(v)) throw NumericalError("non-finite feature in row '" + ds.ids[r] + "'");
}

EmbeddedDataset subset(const EmbeddedDataset& ds, std::span<const std::size_t> indices) {
  EmbeddedDataset out;
  out.provider_id = ds.provider_id;
  out.X = gather_rows(ds.X, indices);
  out.ids.reserve(indices.size());
  for (auto i : indices) out.ids.push_back(ds.ids[i]);
  if (ds.y) {
    out.y.emplace();
    out.y->reserve(indices.size());
    for (auto i : indices) out.y->push_back((*ds.y)[i]);
  }
  return out;
}

void quantize_to_f32(EmbeddedDataset& ds) {
  for (auto& v : ds.X.data()) v = static_cast<double>(static_cast<float>(v));
}

int num_classes(const EmbeddedDataset& ds) {
  int m = -1;
  for (int c : ds.labels()) m = std::max(m, c);
  return m + 1;
}

std::pair<EmbeddedDataset, EmbeddedDataset> stratified_split(const EmbeddedDataset& ds,
                                                             const SplitSpec& spec) {
  const auto parts = split_indices(ds.labels(), spec);
  return {subset(ds, parts.train), subset(ds, parts.test)};
}

// ---------------------------------------------------------------------------

namespace {

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n)
      throw FormatError(std::string("truncated EMB1 payload reading ") + what, pos_);
  }

  std::size_t pos() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

constexpr std::string_view kMagic = "EMB1";

}  // namespace

std::string encode_emb1(const EmbeddedDataset& ds) {
  validate(ds);
  if (ds.X.rows() > std::numeric_limits<std::uint32_t>::max() ||
      ds.X.cols() > std::numeric_limits<std::uint32_t>::max())
    throw ConfigError("dataset too large for EMB1");
  std::string out(kMagic);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ds.X.rows()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ds.X.cols()));
  put<std::uint8_t>(out, ds.y ? 1 : 0);
  for (const auto& id : ds.ids) {
    if (id.size() > 0xFFFF) throw ConfigError("row id longer than 65535 bytes");
    put<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
    out += id;
  }
  if (ds.y)
    for (int c : *ds.y) {
      if (c < 0 || c > 255) throw ConfigError("label code " + std::to_string(c) + " not a u8");
      put<std::uint8_t>(out, static_cast<std::uint8_t>(c));
    }
  for (double v : ds.X.data()) put<float>(out, static_cast<float>(v));
  if (ds.provider_id.size() > 0xFFFF) throw ConfigError("provider id too long");
  put<std::uint16_t>(out, static_cast<std::uint16_t>(ds.provider_id.size()));
  out += ds.provider_id;
  return out;
}

EmbeddedDataset decode_emb1(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(kMagic.size(), "magic") != kMagic) throw FormatError("bad EMB1 magic", 0);
  const auto n = in.get<std::uint32_t>("row count");
  const auto d = in.get<std::uint32_t>("dimension");
  const auto flag_pos = in.pos();
  const auto has_labels = in.get<std::uint8_t>("label flag");
  if (has_labels > 1) throw FormatError("label flag must be 0 or 1", flag_pos);

  EmbeddedDataset ds;
  ds.ids.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto len = in.get<std::uint16_t>("id length");
    ds.ids.emplace_back(in.take(len, "id bytes"));
  }
  if (has_labels) {
    ds.y.emplace();
    ds.y->reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) ds.y->push_back(in.get<std::uint8_t>("label"));
  }
  const std::uint64_t values = std::uint64_t{n} * d;
  const auto payload_pos = in.pos();
  if (in.remaining() < values * sizeof(float) + sizeof(std::uint16_t))
    throw FormatError("n·d = " + std::to_string(values) + " floats do not fit in the remaining " +
                          std::to_string(in.remaining()) + " bytes",
                      payload_pos);
  ds.X = Matrix(n, d);
  for (auto& v : ds.X.data()) v = static_cast<double>(in.get<float>("matrix"));
  const auto len = in.get<std::uint16_t>("provider id length");
  ds.provider_id = std::string(in.take(len, "provider id"));
  if (in.remaining() != 0) throw FormatError("trailing bytes after EMB1 payload", in.pos());
  for (std::size_t r = 0; r < ds.X.rows(); ++r)
    for (double v : ds.X.row(r))
      if (!std::isfinite(v)) throw FormatError("non-finite value in row '" + ds.ids[r] + "'", payload_pos);
  return ds;
}

std::string encode_jsonl(const EmbeddedDataset& ds) {
  validate(ds);
  nlohmann::json header = {{"provider_id", ds.provider_id}, {"dim", ds.dim()}, {"n", ds.size()}};
  std::string out = header.dump() + "\n";
  for (std::size_t r = 0; r < ds.size(); ++r) {
    nlohmann::json row;
    row["id"] = ds.ids[r];
    if (ds.y) row["label"] = (*ds.y)[r];
    std::vector<float> v;
    for (double x : ds.X.row(r)) v.push_back(static_cast<float>(x));
    row["vector"] = v;
    out += row.dump() + "\n";
  }
  return out;
}

EmbeddedDataset decode_jsonl(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t offset = 0;
  auto parse = [&](const std::string& l) {
    try {
      return nlohmann::json::parse(l);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("embedding JSONL: ") + e.what(), offset);
    }
  };
  if (!std::getline(in, line)) throw FormatError("empty embedding JSONL", 0);
  const auto header = parse(line);
  offset += line.size() + 1;
  EmbeddedDataset ds;
  std::size_t dim = 0, n = 0;
  try {
    ds.provider_id = header.at("provider_id").get<std::string>();
    dim = header.at("dim").get<std::size_t>();
    n = header.at("n").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("embedding JSONL header: ") + e.what(), 0);
  }
  ds.X = Matrix(0, dim);
  std::vector<double> row;
  while (std::getline(in, line)) {
    if (line.empty()) {
      offset += 1;
      continue;
    }
    const auto obj = parse(line);
    try {
      ds.ids.push_back(obj.at("id").get<std::string>());
      if (obj.contains("label")) {
        if (!ds.y) {
          if (ds.ids.size() != 1) throw FormatError("label present on some rows only", offset);
          ds.y.emplace();
        }
        ds.y->push_back(obj["label"].get<int>());
      } else if (ds.y) {
        throw FormatError("label present on some rows only", offset);
      }
      const auto vec = obj.at("vector").get<std::vector<float>>();
      if (vec.size() != dim)
        throw FormatError("vector of length " + std::to_string(vec.size()) + ", expected " +
                              std::to_string(dim),
                          offset);
      row.assign(vec.begin(), vec.end());
      ds.X.append_row(row);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("embedding JSONL row: ") + e.what(), offset);
    }
    offset += line.size() + 1;
  }
  if (ds.size() != n)
    throw FormatError("header declares " + std::to_string(n) + " rows, found " +
                          std::to_string(ds.size()),
                      offset);
  return ds;
}

void save_embeddings(const EmbeddedDataset& ds, const std::filesystem::path& path) {
  write_file(path, path.extension() == ".jsonl" ? encode_jsonl(ds) : encode_emb1(ds));
}

EmbeddedDataset load_embeddings(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return path.extension() == ".jsonl" ? decode_jsonl(bytes) : decode_emb1(bytes);
  } catch (const FormatError& e) {
    throw e.with_context(path.string());
  }
}

}  // namespace sentipipe
