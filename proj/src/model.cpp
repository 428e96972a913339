#include "pear/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pear/error.hpp"
#include "pear/parallel.hpp"

namespace pear {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'P', 'E', 'A', 'R', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

constexpr std::uint64_t kEncoderSalt = 1;
constexpr std::uint64_t kHeadSalt = 2;

}  // namespace

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  ModelParams::visit(z, [](const std::string&, Matrix& m, bool) { m.setZero(); });
  return z;
}

std::size_t ModelParams::count() const {
  std::size_t n = 0;
  ModelParams::visit(*this, [&n](const std::string&, const Matrix& m, bool) {
    n += static_cast<std::size_t>(m.size());
  });
  return n;
}

ModelParams& ModelParams::operator+=(const ModelParams& other) {
  std::vector<const Matrix*> src;
  ModelParams::visit(other, [&src](const std::string&, const Matrix& m, bool) {
    src.push_back(&m);
  });
  std::size_t i = 0;
  ModelParams::visit(*this, [&](const std::string&, Matrix& m, bool) {
    m += *src[i++];
  });
  return *this;
}

ModelParams& ModelParams::operator*=(double factor) {
  ModelParams::visit(*this,
                     [factor](const std::string&, Matrix& m, bool) { m *= factor; });
  return *this;
}

bool ModelParams::operator==(const ModelParams& other) const {
  std::vector<const Matrix*> mine, theirs;
  ModelParams::visit(*this, [&mine](const std::string&, const Matrix& m, bool) {
    mine.push_back(&m);
  });
  ModelParams::visit(other, [&theirs](const std::string&, const Matrix& m, bool) {
    theirs.push_back(&m);
  });
  if (mine.size() != theirs.size()) return false;
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (mine[i]->rows() != theirs[i]->rows() ||
        mine[i]->cols() != theirs[i]->cols())
      return false;
    if (std::memcmp(mine[i]->data(), theirs[i]->data(),
                    sizeof(double) * mine[i]->size()) != 0)
      return false;
  }
  return true;
}

Model::Model(ModelConfig config, Vocabulary vocab, std::uint64_t seed)
    : config_(std::move(config)), vocab_(std::move(vocab)) {
  if (config_.encoder.vocab_size != vocab_.size())
    throw DataError(DataError::Code::kInvalidArgument,
                    "encoder vocab_size " +
                        std::to_string(config_.encoder.vocab_size) +
                        " does not match vocabulary size " +
                        std::to_string(vocab_.size()));
  params_.encoder =
      EncoderParams::init(config_.encoder, derive_seed(seed, kEncoderSalt));
  params_.head =
      HeadParams::init(config_.encoder.hidden_dim, derive_seed(seed, kHeadSalt));
}

Model::Model(ModelConfig config, Vocabulary vocab, ModelParams params)
    : config_(std::move(config)),
      vocab_(std::move(vocab)),
      params_(std::move(params)) {
  config_.encoder.validate();
}

SerializedInput Model::serialize(const std::string& source,
                                 const std::string& mt_a,
                                 const std::string& mt_b) const {
  return serialize_pair(vocab_, config_.encoder.max_length, source, mt_a, mt_b);
}

SerializedInput Model::serialize(const std::string& source,
                                 const std::string& mt) const {
  return serialize_single(vocab_, config_.encoder.max_length, source, mt);
}

PairScore Model::forward_pair(const SerializedInput& input, Mode mode,
                              std::uint64_t seed, PairTrace* trace) const {
  PairTrace local;
  PairTrace& t = trace ? *trace : local;
  const Matrix hidden =
      encode(config_.encoder, params_.encoder, input.ids, mode,
             derive_seed(seed, kEncoderSalt), &t.encoder);
  t.spans.src = masked_mean_pool(hidden, input.masks.src);
  t.spans.a = masked_mean_pool(hidden, input.masks.a);
  t.spans.b = masked_mean_pool(hidden, input.masks.b);

  std::mt19937_64 rng(derive_seed(seed, kHeadSalt));
  const double u_a =
      utility(pair_features(t.spans.a, t.spans.src), params_.head, mode,
              config_.head_dropout, &rng, &t.util_a);
  const double u_b =
      utility(pair_features(t.spans.b, t.spans.src), params_.head, mode,
              config_.head_dropout, &rng, &t.util_b);
  t.score = relative_score(u_a, u_b, params_.head.alpha_raw_value());
  // Bias-free, so the shared output bias cancels exactly.
  t.score.z = t.util_a.linear - t.util_b.linear;
  t.score.delta_hat = t.score.alpha * t.score.z;
  if (trace) t.input = input;
  return t.score;
}

void Model::backward_pair(const PairTrace& t, double d_delta,
                          ModelParams& g, bool alpha_trainable) const {
  const auto& s = t.score;
  if (alpha_trainable)
    g.head.alpha_raw(0, 0) +=
        d_delta * s.z * sigmoid(params_.head.alpha_raw_value());
  const double dz = d_delta * s.alpha;

  const auto d = static_cast<Eigen::Index>(config_.encoder.hidden_dim);
  RowVector d_src = RowVector::Zero(d), d_a = RowVector::Zero(d),
            d_b = RowVector::Zero(d);
  const RowVector d_phi_a = utility_backward(t.util_a, params_.head, dz, g.head);
  const RowVector d_phi_b =
      utility_backward(t.util_b, params_.head, -dz, g.head);
  pair_features_backward(t.spans.a, t.spans.src, d_phi_a, d_a, d_src);
  pair_features_backward(t.spans.b, t.spans.src, d_phi_b, d_b, d_src);

  Matrix d_hidden = Matrix::Zero(t.input.length(), d);
  masked_mean_pool_backward(t.input.masks.src, d_src, d_hidden);
  masked_mean_pool_backward(t.input.masks.a, d_a, d_hidden);
  masked_mean_pool_backward(t.input.masks.b, d_b, d_hidden);
  encode_backward(config_.encoder, params_.encoder, t.encoder, d_hidden,
                  g.encoder);
}

double Model::forward_single(const SerializedInput& input, Mode mode,
                             std::uint64_t seed, SingleTrace* trace) const {
  SingleTrace local;
  SingleTrace& t = trace ? *trace : local;
  const Matrix hidden =
      encode(config_.encoder, params_.encoder, input.ids, mode,
             derive_seed(seed, kEncoderSalt), &t.encoder);
  t.spans.src = masked_mean_pool(hidden, input.masks.src);
  t.spans.a = masked_mean_pool(hidden, input.masks.a);
  std::mt19937_64 rng(derive_seed(seed, kHeadSalt));
  t.value = utility(pair_features(t.spans.a, t.spans.src), params_.head, mode,
                    config_.head_dropout, &rng, &t.util);
  if (trace) t.input = input;
  return t.value;
}

void Model::backward_single(const SingleTrace& t, double d_value,
                            ModelParams& g) const {
  const auto d = static_cast<Eigen::Index>(config_.encoder.hidden_dim);
  RowVector d_src = RowVector::Zero(d), d_mt = RowVector::Zero(d);
  const RowVector d_phi = utility_backward(t.util, params_.head, d_value, g.head);
  pair_features_backward(t.spans.a, t.spans.src, d_phi, d_mt, d_src);
  Matrix d_hidden = Matrix::Zero(t.input.length(), d);
  masked_mean_pool_backward(t.input.masks.src, d_src, d_hidden);
  masked_mean_pool_backward(t.input.masks.a, d_mt, d_hidden);
  encode_backward(config_.encoder, params_.encoder, t.encoder, d_hidden,
                  g.encoder);
}

SpanVectors Model::span_vectors(const std::string& source,
                                const std::string& mt_a,
                                const std::string& mt_b) const {
  const auto input = serialize(source, mt_a, mt_b);
  const Matrix hidden =
      encode(config_.encoder, params_.encoder, input.ids, Mode::kEval);
  return {masked_mean_pool(hidden, input.masks.src),
          masked_mean_pool(hidden, input.masks.a),
          masked_mean_pool(hidden, input.masks.b)};
}

double Model::score(const std::string& source, const std::string& mt_a,
                    const std::string& mt_b) const {
  if (config_.head_kind == HeadKind::kSingle)
    return score_single(source, mt_a) - score_single(source, mt_b);
  return score_detail(source, mt_a, mt_b).delta_hat;
}

PairScore Model::score_detail(const std::string& source,
                              const std::string& mt_a,
                              const std::string& mt_b) const {
  return forward_pair(serialize(source, mt_a, mt_b), Mode::kEval);
}

double Model::score_single(const std::string& source,
                           const std::string& mt) const {
  return forward_single(serialize(source, mt), Mode::kEval);
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

const char* kind_name(EncoderKind k) {
  return k == EncoderKind::kContextFree ? "context_free" : "transformer";
}

const char* head_name(HeadKind k) {
  return k == HeadKind::kSingle ? "single" : "pairwise";
}

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n)
      throw DataError(DataError::Code::kParse, "checkpoint truncated");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string Model::to_bytes() const {
  nlohmann::json header;
  const auto& e = config_.encoder;
  header["encoder"] = {{"vocab_size", e.vocab_size},
                       {"hidden_dim", e.hidden_dim},
                       {"layers", e.layers},
                       {"heads", e.heads},
                       {"ffn_dim", e.ffn_dim},
                       {"max_length", e.max_length},
                       {"kind", kind_name(e.kind)},
                       {"dropout", e.dropout},
                       {"seed", e.seed}};
  header["head"] = {{"kind", head_name(config_.head_kind)},
                    {"dropout", config_.head_dropout}};
  std::vector<std::string> words(vocab_.tokens().begin() + special::kCount,
                                 vocab_.tokens().end());
  header["vocab"] = {{"tokens", words},
                     {"hash_buckets", vocab_.hash_buckets()}};
  const std::string header_text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, header_text.size());
  out += header_text;
  std::uint32_t n = 0;
  ModelParams::visit(params_, [&n](const std::string&, const Matrix&, bool) { ++n; });
  put<std::uint32_t>(out, n);
  ModelParams::visit(params_, [&out](const std::string& name, const Matrix& m,
                                     bool) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    out.append(reinterpret_cast<const char*>(m.data()),
               sizeof(double) * static_cast<std::size_t>(m.size()));
  });
  return out;
}

Model Model::from_bytes(const std::string& bytes) {
  using Code = DataError::Code;
  Reader r(bytes);
  if (r.take(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic)))
    throw DataError(Code::kParse, "not a checkpoint (bad magic)");
  if (const auto v = r.get<std::uint32_t>(); v != kVersion)
    throw DataError(Code::kParse,
                    "unsupported checkpoint version " + std::to_string(v));
  const auto header_len = r.get<std::uint64_t>();
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.take(header_len));
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(Code::kParse, std::string("checkpoint header: ") + ex.what());
  }

  ModelConfig cfg;
  try {
    const auto& e = header.at("encoder");
    cfg.encoder.vocab_size = e.at("vocab_size").get<std::size_t>();
    cfg.encoder.hidden_dim = e.at("hidden_dim").get<std::size_t>();
    cfg.encoder.layers = e.at("layers").get<std::size_t>();
    cfg.encoder.heads = e.at("heads").get<std::size_t>();
    cfg.encoder.ffn_dim = e.at("ffn_dim").get<std::size_t>();
    cfg.encoder.max_length = e.at("max_length").get<std::size_t>();
    cfg.encoder.kind = e.at("kind").get<std::string>() == "context_free"
                           ? EncoderKind::kContextFree
                           : EncoderKind::kTransformer;
    cfg.encoder.dropout = e.at("dropout").get<double>();
    cfg.encoder.seed = e.at("seed").get<std::uint64_t>();
    cfg.head_kind = header.at("head").at("kind").get<std::string>() == "single"
                        ? HeadKind::kSingle
                        : HeadKind::kPairwise;
    cfg.head_dropout = header.at("head").at("dropout").get<double>();
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(Code::kParse, std::string("checkpoint header: ") + ex.what());
  }
  Vocabulary vocab(header.at("vocab").at("tokens").get<std::vector<std::string>>(),
                   header.at("vocab").at("hash_buckets").get<std::size_t>());

  // Shapes come from the config; the stored names and shapes must match.
  ModelParams params;
  params.encoder = EncoderParams::init(cfg.encoder, 0);
  params.head = HeadParams::zeros(cfg.encoder.hidden_dim);
  std::uint32_t expected = 0;
  ModelParams::visit(params, [&expected](const std::string&, Matrix&, bool) {
    ++expected;
  });
  if (const auto n = r.get<std::uint32_t>(); n != expected)
    throw DataError(Code::kParse, "checkpoint has " + std::to_string(n) +
                                      " tensors, config implies " +
                                      std::to_string(expected));
  ModelParams::visit(params, [&r](const std::string& name, Matrix& m, bool) {
    const auto len = r.get<std::uint32_t>();
    const std::string stored = r.take(len);
    if (stored != name)
      throw DataError(Code::kParse,
                      "checkpoint tensor '" + stored + "', expected '" + name + "'");
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    if (rows != static_cast<std::uint64_t>(m.rows()) ||
        cols != static_cast<std::uint64_t>(m.cols()))
      throw DataError(Code::kParse, "checkpoint tensor '" + name +
                                        "' has unexpected shape");
    const std::string data = r.take(sizeof(double) * rows * cols);
    std::memcpy(m.data(), data.data(), data.size());
  });
  if (!r.done())
    throw DataError(Code::kParse, "trailing bytes after checkpoint tensors");
  return Model(std::move(cfg), std::move(vocab), std::move(params));
}

void Model::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw DataError(DataError::Code::kIo, "cannot write '" + path.string() + "'");
  const auto bytes = to_bytes();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Model Model::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError(DataError::Code::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_bytes(ss.str());
}

ModelConfig make_model_config(const Vocabulary& vocab, std::size_t hidden_dim,
                              std::size_t layers, std::size_t heads,
                              std::size_t max_length, double dropout,
                              HeadKind head_kind, EncoderKind kind) {
  ModelConfig c;
  c.encoder.vocab_size = vocab.size();
  c.encoder.hidden_dim = hidden_dim;
  c.encoder.layers = layers;
  c.encoder.heads = heads;
  c.encoder.max_length = max_length;
  c.encoder.dropout = dropout;
  c.encoder.kind = kind;
  c.head_kind = head_kind;
  c.head_dropout = dropout;
  return c;
}

}  // namespace pear
