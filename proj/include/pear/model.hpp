#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pear/encoder.hpp"
#include "pear/head.hpp"
#include "pear/scorer.hpp"
#include "pear/tokenizer.hpp"

namespace pear {

enum class HeadKind {
  kPairwise,  // relative score of two candidates
  kSingle,    // absolute score of one candidate (matched baseline)
};

struct ModelConfig {
  EncoderConfig encoder;
  HeadKind head_kind = HeadKind::kPairwise;
  double head_dropout = 0.1;
};

struct ModelParams {
  EncoderParams encoder;
  HeadParams head;

  template <typename Self, typename Fn>
  static void visit(Self& self, Fn&& fn) {
    EncoderParams::visit(self.encoder, fn);
    HeadParams::visit(self.head, fn);
  }

  // Same shapes, all zeros.
  ModelParams zeros_like() const;
  std::size_t count() const;
  ModelParams& operator+=(const ModelParams& other);
  ModelParams& operator*=(double factor);
  bool operator==(const ModelParams& other) const;
};

struct SpanVectors {
  RowVector src, a, b;
};

// Everything the backward pass needs from one forward pass.
struct PairTrace {
  SerializedInput input;
  EncoderCache encoder;
  SpanVectors spans;
  UtilityTrace util_a, util_b;
  PairScore score;
};

struct SingleTrace {
  SerializedInput input;
  EncoderCache encoder;
  SpanVectors spans;
  UtilityTrace util;
  double value = 0.0;
};

// Joint cross-encoder with a pairwise (or single-candidate) head. As a
// PairScorer it runs one eval-mode forward pass; a single-head model scores
// a pair as the difference of its two absolute scores.
class Model final : public PairScorer {
 public:
  Model() = default;
  Model(ModelConfig config, Vocabulary vocab, std::uint64_t seed);
  Model(ModelConfig config, Vocabulary vocab, ModelParams params);

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  const ModelParams& params() const { return params_; }
  ModelParams& params() { return params_; }

  SerializedInput serialize(const std::string& source, const std::string& mt_a,
                            const std::string& mt_b) const;
  SerializedInput serialize(const std::string& source,
                            const std::string& mt) const;

  PairScore forward_pair(const SerializedInput& input, Mode mode,
                         std::uint64_t seed = 0,
                         PairTrace* trace = nullptr) const;
  // Accumulates dL/dtheta given dL/d(delta_hat). alpha_raw receives no
  // gradient when `alpha_trainable` is false.
  void backward_pair(const PairTrace& trace, double d_delta,
                     ModelParams& grads, bool alpha_trainable = true) const;

  double forward_single(const SerializedInput& input, Mode mode,
                        std::uint64_t seed = 0,
                        SingleTrace* trace = nullptr) const;
  void backward_single(const SingleTrace& trace, double d_value,
                       ModelParams& grads) const;

  SpanVectors span_vectors(const std::string& source, const std::string& mt_a,
                           const std::string& mt_b) const;

  // Eval-mode relative score f(s, a, b).
  double score(const std::string& source, const std::string& mt_a,
               const std::string& mt_b) const override;
  PairScore score_detail(const std::string& source, const std::string& mt_a,
                         const std::string& mt_b) const;
  // Eval-mode absolute score (single-head models only).
  double score_single(const std::string& source, const std::string& mt) const;

  // Binary container: "PEARCKPT", u32 version, u64 header length, JSON
  // header (config + vocabulary), u32 tensor count, then per tensor
  // u32 name length, name, u64 rows, u64 cols, column-major f64 data.
  // All integers and doubles little-endian.
  void save(const std::filesystem::path& path) const;
  static Model load(const std::filesystem::path& path);
  std::string to_bytes() const;
  static Model from_bytes(const std::string& bytes);

 private:
  ModelConfig config_;
  Vocabulary vocab_;
  ModelParams params_;
};

// Encoder sized to the vocabulary with the given architecture defaults.
ModelConfig make_model_config(const Vocabulary& vocab, std::size_t hidden_dim,
                              std::size_t layers, std::size_t heads,
                              std::size_t max_length, double dropout,
                              HeadKind head_kind = HeadKind::kPairwise,
                              EncoderKind kind = EncoderKind::kTransformer);

}  // namespace pear
