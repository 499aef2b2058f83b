#pragma once

#include <filesystem>
#include <string>

#include "sentipipe/dataset.hpp"
#include "sentipipe/rng.hpp"

namespace testsupport {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(SENTIPIPE_FIXTURES_DIR) / name;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("sentipipe-test-" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Random labelled dataset with values uniform in [-1, 1].
inline sentipipe::EmbeddedDataset random_dataset(std::size_t n, std::size_t d, int classes,
                                                 std::uint64_t seed) {
  sentipipe::Rng rng(seed);
  sentipipe::EmbeddedDataset ds;
  ds.X = sentipipe::Matrix(n, d);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    ds.ids.push_back("r" + std::to_string(i));
    for (std::size_t j = 0; j < d; ++j) ds.X(i, j) = rng.uniform(-1.0, 1.0);
    y[i] = static_cast<int>(i % static_cast<std::size_t>(classes));
  }
  ds.y = std::move(y);
  ds.provider_id = "test";
  return ds;
}

}  // namespace testsupport
