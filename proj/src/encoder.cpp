#include "pear/encoder.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "pear/error.hpp"

namespace pear {

namespace {

constexpr double kLayerNormEps = 1e-5;

void add_bias(Matrix& y, const Matrix& bias) { y.rowwise() += bias.row(0); }

Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate,
                    std::mt19937_64& rng) {
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = keep(rng) ? scale : 0.0;
  return m;
}

Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias,
                  LayerNormCache& cache) {
  const auto d = static_cast<double>(x.cols());
  cache.normalized.resize(x.rows(), x.cols());
  cache.inv_std.resize(x.rows());
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    const double mean = x.row(t).sum() / d;
    const RowVector centered = x.row(t).array() - mean;
    const double var = centered.squaredNorm() / d;
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.inv_std(t) = inv;
    cache.normalized.row(t) = centered * inv;
  }
  Matrix y = cache.normalized.array().rowwise() * gain.row(0).array();
  add_bias(y, bias);
  return y;
}

Matrix layer_norm_backward(const Matrix& dy, const Matrix& gain,
                           const LayerNormCache& cache, Matrix& d_gain,
                           Matrix& d_bias) {
  const auto& xhat = cache.normalized;
  d_gain.row(0) += (dy.array() * xhat.array()).colwise().sum().matrix();
  d_bias.row(0) += dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * gain.row(0).array();
  const auto d = static_cast<double>(dy.cols());
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index t = 0; t < dy.rows(); ++t) {
    const double mean_dxhat = dxhat.row(t).sum() / d;
    const double mean_dxhat_xhat = dxhat.row(t).dot(xhat.row(t)) / d;
    dx.row(t) = cache.inv_std(t) *
                (dxhat.row(t).array() - mean_dxhat -
                 xhat.row(t).array() * mean_dxhat_xhat)
                    .matrix();
  }
  return dx;
}

Matrix gelu_matrix(const Matrix& x) {
  return x.unaryExpr([](double v) { return gelu(v); });
}

void softmax_rows(Matrix& s) {
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const double mx = s.row(i).maxCoeff();
    s.row(i) = (s.row(i).array() - mx).exp();
    s.row(i) /= s.row(i).sum();
  }
}

}  // namespace

Matrix truncated_normal(std::size_t rows, std::size_t cols, double sd,
                        std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      double z;
      do {
        z = dist(rng);
      } while (std::abs(z) > 2.0);
      m(i, j) = sd * z;
    }
  }
  return m;
}

double gelu(double x) {
  return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
}

double gelu_derivative(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf =
      std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

void EncoderConfig::validate() const {
  auto fail = [](const std::string& msg) {
    throw DataError(DataError::Code::kInvalidArgument,
                    "encoder config: " + msg);
  };
  if (vocab_size < 1) fail("vocab_size must be >= 1");
  if (hidden_dim < 1) fail("hidden_dim must be >= 1");
  if (max_length < 1) fail("max_length must be >= 1");
  if (kind == EncoderKind::kTransformer) {
    if (heads < 1) fail("heads must be >= 1");
    if (hidden_dim % heads != 0) fail("hidden_dim must be divisible by heads");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
}

EncoderParams EncoderParams::init(const EncoderConfig& c, std::uint64_t seed) {
  c.validate();
  std::mt19937_64 rng(seed);
  const auto d = c.hidden_dim;
  const auto f = c.inner_dim();
  EncoderParams p;
  p.token_embedding = truncated_normal(c.vocab_size, d, 1.0 / std::sqrt(d), rng);
  if (c.kind == EncoderKind::kContextFree) return p;

  p.position_embedding =
      truncated_normal(c.max_length, d, 1.0 / std::sqrt(d), rng);
  const double sd_d = 1.0 / std::sqrt(static_cast<double>(d));
  const double sd_f = 1.0 / std::sqrt(static_cast<double>(f));
  for (std::size_t l = 0; l < c.layers; ++l) {
    LayerParams L;
    L.ln1_gain = Matrix::Ones(1, d);
    L.ln1_bias = Matrix::Zero(1, d);
    L.wq = truncated_normal(d, d, sd_d, rng);
    L.bq = Matrix::Zero(1, d);
    L.wk = truncated_normal(d, d, sd_d, rng);
    L.wv = truncated_normal(d, d, sd_d, rng);
    L.bv = Matrix::Zero(1, d);
    L.wo = truncated_normal(d, d, sd_d, rng);
    L.bo = Matrix::Zero(1, d);
    L.ln2_gain = Matrix::Ones(1, d);
    L.ln2_bias = Matrix::Zero(1, d);
    L.w1 = truncated_normal(d, f, sd_d, rng);
    L.b1 = Matrix::Zero(1, f);
    L.w2 = truncated_normal(f, d, sd_f, rng);
    L.b2 = Matrix::Zero(1, d);
    p.layers.push_back(std::move(L));
  }
  p.final_ln_gain = Matrix::Ones(1, d);
  p.final_ln_bias = Matrix::Zero(1, d);
  return p;
}

Matrix encode(const EncoderConfig& c, const EncoderParams& p,
              std::span<const int> ids, Mode mode, std::uint64_t dropout_seed,
              EncoderCache* cache) {
  const auto T = static_cast<Eigen::Index>(ids.size());
  const auto d = static_cast<Eigen::Index>(c.hidden_dim);
  if (ids.size() > c.max_length)
    throw DataError(DataError::Code::kInvalidArgument,
                    "sequence of length " + std::to_string(ids.size()) +
                        " exceeds max_length " + std::to_string(c.max_length));
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= c.vocab_size)
      throw DataError(DataError::Code::kInvalidArgument,
                      "token id " + std::to_string(id) +
                          " outside vocabulary of size " +
                          std::to_string(c.vocab_size));
  }

  EncoderCache local;
  EncoderCache& k = cache ? *cache : local;
  k.ids.assign(ids.begin(), ids.end());
  k.layers.clear();

  Matrix x(T, d);
  for (Eigen::Index t = 0; t < T; ++t) x.row(t) = p.token_embedding.row(ids[t]);
  if (c.kind == EncoderKind::kContextFree) return x;

  x += p.position_embedding.topRows(T);
  const bool dropout = mode == Mode::kTrain && c.dropout > 0.0;
  std::mt19937_64 rng(dropout_seed);
  if (dropout) {
    k.embed_dropout = dropout_mask(T, d, c.dropout, rng);
    x.array() *= k.embed_dropout.array();
  } else {
    k.embed_dropout.resize(0, 0);
  }

  const auto heads = static_cast<Eigen::Index>(c.heads);
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  k.layers.resize(p.layers.size());
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& L = p.layers[l];
    auto& lc = k.layers[l];
    lc.input = x;
    lc.n1 = layer_norm(x, L.ln1_gain, L.ln1_bias, lc.ln1);
    lc.q = lc.n1 * L.wq;
    add_bias(lc.q, L.bq);
    lc.k = lc.n1 * L.wk;
    lc.v = lc.n1 * L.wv;
    add_bias(lc.v, L.bv);
    lc.context.resize(T, d);
    lc.attention.resize(heads);
    for (Eigen::Index h = 0; h < heads; ++h) {
      Matrix s = lc.q.middleCols(h * dh, dh) *
                 lc.k.middleCols(h * dh, dh).transpose() * scale;
      softmax_rows(s);
      lc.context.middleCols(h * dh, dh) = s * lc.v.middleCols(h * dh, dh);
      lc.attention[h] = std::move(s);
    }
    Matrix attn = lc.context * L.wo;
    add_bias(attn, L.bo);
    if (dropout) {
      lc.attn_dropout = dropout_mask(T, d, c.dropout, rng);
      attn.array() *= lc.attn_dropout.array();
    }
    lc.mid = x + attn;
    lc.n2 = layer_norm(lc.mid, L.ln2_gain, L.ln2_bias, lc.ln2);
    lc.f1 = lc.n2 * L.w1;
    add_bias(lc.f1, L.b1);
    lc.gelu_out = gelu_matrix(lc.f1);
    Matrix f2 = lc.gelu_out * L.w2;
    add_bias(f2, L.b2);
    if (dropout) {
      lc.f2_dropout = dropout_mask(T, d, c.dropout, rng);
      f2.array() *= lc.f2_dropout.array();
    }
    x = lc.mid + f2;
  }
  return layer_norm(x, p.final_ln_gain, p.final_ln_bias, k.final_ln);
}

void encode_backward(const EncoderConfig& c, const EncoderParams& p,
                     const EncoderCache& k, const Matrix& d_hidden,
                     EncoderParams& g) {
  const auto T = static_cast<Eigen::Index>(k.ids.size());
  if (c.kind == EncoderKind::kContextFree) {
    for (Eigen::Index t = 0; t < T; ++t)
      g.token_embedding.row(k.ids[t]) += d_hidden.row(t);
    return;
  }
  const auto d = static_cast<Eigen::Index>(c.hidden_dim);
  const auto heads = static_cast<Eigen::Index>(c.heads);
  const Eigen::Index dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix dx = layer_norm_backward(d_hidden, p.final_ln_gain, k.final_ln,
                                  g.final_ln_gain, g.final_ln_bias);
  for (std::size_t li = p.layers.size(); li-- > 0;) {
    const auto& L = p.layers[li];
    auto& G = g.layers[li];
    const auto& lc = k.layers[li];

    // x_out = mid + drop(gelu(n2 W1 + b1) W2 + b2)
    Matrix d_f2 = dx;
    if (lc.f2_dropout.size()) d_f2.array() *= lc.f2_dropout.array();
    G.w2 += lc.gelu_out.transpose() * d_f2;
    G.b2.row(0) += d_f2.colwise().sum();
    Matrix d_f1 = (d_f2 * L.w2.transpose()).array() *
                  lc.f1.unaryExpr([](double v) { return gelu_derivative(v); })
                      .array();
    G.w1 += lc.n2.transpose() * d_f1;
    G.b1.row(0) += d_f1.colwise().sum();
    Matrix d_n2 = d_f1 * L.w1.transpose();
    Matrix d_mid =
        dx + layer_norm_backward(d_n2, L.ln2_gain, lc.ln2, G.ln2_gain,
                                 G.ln2_bias);

    // mid = input + drop(context Wo + bo)
    Matrix d_attn = d_mid;
    if (lc.attn_dropout.size()) d_attn.array() *= lc.attn_dropout.array();
    G.wo += lc.context.transpose() * d_attn;
    G.bo.row(0) += d_attn.colwise().sum();
    const Matrix d_context = d_attn * L.wo.transpose();

    Matrix dq(T, d), dk(T, d), dv(T, d);
    for (Eigen::Index h = 0; h < heads; ++h) {
      const Matrix& a = lc.attention[h];
      const auto d_ctx = d_context.middleCols(h * dh, dh);
      dv.middleCols(h * dh, dh) = a.transpose() * d_ctx;
      const Matrix da = d_ctx * lc.v.middleCols(h * dh, dh).transpose();
      const Eigen::VectorXd row_dot = (da.array() * a.array()).rowwise().sum();
      const Matrix ds =
          (a.array() * (da.array().colwise() - row_dot.array())).matrix() *
          scale;
      dq.middleCols(h * dh, dh) = ds * lc.k.middleCols(h * dh, dh);
      dk.middleCols(h * dh, dh) = ds.transpose() * lc.q.middleCols(h * dh, dh);
    }
    G.wq += lc.n1.transpose() * dq;
    G.bq.row(0) += dq.colwise().sum();
    G.wk += lc.n1.transpose() * dk;
    G.wv += lc.n1.transpose() * dv;
    G.bv.row(0) += dv.colwise().sum();
    const Matrix d_n1 =
        dq * L.wq.transpose() + dk * L.wk.transpose() + dv * L.wv.transpose();
    dx = d_mid + layer_norm_backward(d_n1, L.ln1_gain, lc.ln1, G.ln1_gain,
                                     G.ln1_bias);
  }
  if (k.embed_dropout.size()) dx.array() *= k.embed_dropout.array();
  g.position_embedding.topRows(T) += dx;
  for (Eigen::Index t = 0; t < T; ++t)
    g.token_embedding.row(k.ids[t]) += dx.row(t);
}

RowVector masked_mean_pool(const Matrix& hidden,
                           std::span<const std::uint8_t> mask, double eps) {
  RowVector sum = RowVector::Zero(hidden.cols());
  double count = 0.0;
  for (std::size_t t = 0; t < mask.size(); ++t) {
    if (!mask[t]) continue;
    sum += hidden.row(static_cast<Eigen::Index>(t));
    count += 1.0;
  }
  return sum / std::max(count, eps);
}

void masked_mean_pool_backward(std::span<const std::uint8_t> mask,
                               const RowVector& d_pooled, Matrix& d_hidden,
                               double eps) {
  double count = 0.0;
  for (auto m : mask) count += m ? 1.0 : 0.0;
  const double inv = 1.0 / std::max(count, eps);
  for (std::size_t t = 0; t < mask.size(); ++t)
    if (mask[t]) d_hidden.row(static_cast<Eigen::Index>(t)) += inv * d_pooled;
}

}  // namespace pear
