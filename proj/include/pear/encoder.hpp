#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pear {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

enum class EncoderKind {
  kTransformer,
  // Token embeddings only: no positions, no attention. Every pooled span
  // depends on its own tokens alone.
  kContextFree,
};

enum class Mode { kTrain, kEval };

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t hidden_dim = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  // Inner width of the position-wise feed-forward; 0 means 4 * hidden_dim.
  std::size_t ffn_dim = 0;
  std::size_t max_length = 256;
  EncoderKind kind = EncoderKind::kTransformer;
  double dropout = 0.1;
  std::uint64_t seed = 0;

  std::size_t inner_dim() const { return ffn_dim ? ffn_dim : 4 * hidden_dim; }
  // Throws DataError(kInvalidArgument) on inconsistent dimensions.
  void validate() const;
};

struct LayerParams {
  Matrix ln1_gain, ln1_bias;
  Matrix wq, bq, wk, wv, bv, wo, bo;  // no key bias: softmax cancels it
  Matrix ln2_gain, ln2_bias;
  Matrix w1, b1, w2, b2;

  template <typename Self, typename Fn>
  static void visit(Self& self, const std::string& prefix, Fn&& fn) {
    fn(prefix + "ln1_gain", self.ln1_gain, false);
    fn(prefix + "ln1_bias", self.ln1_bias, false);
    fn(prefix + "wq", self.wq, true);
    fn(prefix + "bq", self.bq, false);
    fn(prefix + "wk", self.wk, true);
    fn(prefix + "wv", self.wv, true);
    fn(prefix + "bv", self.bv, false);
    fn(prefix + "wo", self.wo, true);
    fn(prefix + "bo", self.bo, false);
    fn(prefix + "ln2_gain", self.ln2_gain, false);
    fn(prefix + "ln2_bias", self.ln2_bias, false);
    fn(prefix + "w1", self.w1, true);
    fn(prefix + "b1", self.b1, false);
    fn(prefix + "w2", self.w2, true);
    fn(prefix + "b2", self.b2, false);
  }
};

struct EncoderParams {
  Matrix token_embedding;     // vocab x d
  Matrix position_embedding;  // max_length x d (empty when context-free)
  std::vector<LayerParams> layers;
  Matrix final_ln_gain, final_ln_bias;

  static EncoderParams init(const EncoderConfig& config, std::uint64_t seed);

  // fn(name, matrix, decays) over every tensor in a fixed order.
  template <typename Self, typename Fn>
  static void visit(Self& self, Fn&& fn) {
    fn(std::string("encoder.token_embedding"), self.token_embedding, true);
    if (self.position_embedding.size())
      fn(std::string("encoder.position_embedding"), self.position_embedding,
         true);
    for (std::size_t i = 0; i < self.layers.size(); ++i)
      LayerParams::visit(self.layers[i],
                         "encoder.layers." + std::to_string(i) + ".", fn);
    if (self.final_ln_gain.size()) {
      fn(std::string("encoder.final_ln_gain"), self.final_ln_gain, false);
      fn(std::string("encoder.final_ln_bias"), self.final_ln_bias, false);
    }
  }
};

struct LayerNormCache {
  Matrix normalized;
  Eigen::VectorXd inv_std;
};

struct LayerCache {
  Matrix input, n1, q, k, v;
  std::vector<Matrix> attention;  // per head, T x T
  Matrix context, attn_dropout, mid, n2, f1, f2_dropout, gelu_out;
  LayerNormCache ln1, ln2;
};

struct EncoderCache {
  std::vector<int> ids;
  Matrix embed_dropout;
  std::vector<LayerCache> layers;
  LayerNormCache final_ln;
};

// Final-layer token representations, T x d. Eval mode is deterministic;
// train mode draws dropout masks from `dropout_seed`. Throws
// DataError(kInvalidArgument) for over-length input or out-of-range ids.
Matrix encode(const EncoderConfig& config, const EncoderParams& params,
              std::span<const int> ids, Mode mode,
              std::uint64_t dropout_seed = 0, EncoderCache* cache = nullptr);

// Accumulates parameter gradients given dL/dH.
void encode_backward(const EncoderConfig& config, const EncoderParams& params,
                     const EncoderCache& cache, const Matrix& d_hidden,
                     EncoderParams& grads);

inline constexpr double kPoolEpsilon = 1e-9;

// sum_t m_t H_t / max(sum_t m_t, eps). An all-zero mask gives the zero vector.
RowVector masked_mean_pool(const Matrix& hidden,
                           std::span<const std::uint8_t> mask,
                           double eps = kPoolEpsilon);

// Adds the pooling gradient into d_hidden.
void masked_mean_pool_backward(std::span<const std::uint8_t> mask,
                               const RowVector& d_pooled, Matrix& d_hidden,
                               double eps = kPoolEpsilon);

// Normal(0, sd) resampled outside two standard deviations.
Matrix truncated_normal(std::size_t rows, std::size_t cols, double sd,
                        std::mt19937_64& rng);

double gelu(double x);
double gelu_derivative(double x);

}  // namespace pear
