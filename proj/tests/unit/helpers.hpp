#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "pear/corpus.hpp"
#include "pear/model.hpp"

namespace testing {

inline pear::SynthResult toy_synth(std::size_t segments, std::size_t systems,
                                   std::uint64_t seed, double noise = 0.0) {
  pear::SynthConfig c;
  c.n_segments = segments;
  c.n_systems = systems;
  c.noise_sd = noise;
  c.vocab_size = 12;
  c.min_length = 3;
  c.max_length = 6;
  c.seed = seed;
  return pear::generate_synthetic(c);
}

inline pear::Model toy_model(const pear::EvalDataset& data, std::uint64_t seed,
                             std::size_t d = 8,
                             pear::HeadKind head = pear::HeadKind::kPairwise,
                             pear::EncoderKind kind =
                                 pear::EncoderKind::kTransformer) {
  auto vocab = pear::Vocabulary::from_dataset(data, 4);
  auto cfg = pear::make_model_config(vocab, d, 1, 2, 48, 0.1, head, kind);
  return pear::Model(cfg, vocab, seed);
}

inline std::string random_text(std::mt19937_64& rng, std::size_t max_words,
                               std::size_t vocab = 20) {
  std::uniform_int_distribution<std::size_t> len(0, max_words);
  std::uniform_int_distribution<std::size_t> w(0, vocab - 1);
  std::string s;
  const auto n = len(rng);
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += "w" + std::to_string(w(rng));
  }
  return s;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) {
    path = std::filesystem::temp_directory_path() /
           ("pear_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace testing
