#pragma once

// The bundled 300-row corpus pushed through the default embed, split and
// resample stages, as a pipeline run would at the given seed.

#include "sentipipe/pipeline.hpp"
#include "test_support.hpp"

namespace testsupport {

struct MiniData {
  sentipipe::PipelineConfig config;
  sentipipe::EmbeddedDataset train;  // resampled
  sentipipe::EmbeddedDataset test;
};

inline sentipipe::PipelineConfig mini_config(std::uint64_t seed) {
  sentipipe::PipelineConfig c;
  c.input.path = fixture("mini_corpus.csv");
  c.provider.provider = sentipipe::ProviderId::pseudo;
  c.provider.dim = 64;
  c.seed = seed;
  return c;
}

inline MiniData mini_data(std::uint64_t seed = 0) {
  MiniData m;
  m.config = mini_config(seed);
  const auto corpus = sentipipe::load_corpus(m.config.input.path, m.config.input.format);
  const auto embedded = sentipipe::embed_stage(corpus, sentipipe::resolved_provider(m.config));
  auto [train, test] = sentipipe::split_stage(embedded, sentipipe::resolved_split(m.config));
  m.train = sentipipe::resample_stage(train, sentipipe::resolved_smote(m.config)).data;
  m.test = std::move(test);
  return m;
}

}  // namespace testsupport
