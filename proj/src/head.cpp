#include "pear/head.hpp"

#include <cmath>

namespace pear {

HeadParams HeadParams::init(std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  HeadParams p;
  p.proj_w = truncated_normal(3 * d, d, 1.0 / std::sqrt(3.0 * d), rng);
  p.proj_b = Matrix::Zero(1, d);
  p.ffn_w = truncated_normal(d, 1, 1.0 / std::sqrt(static_cast<double>(d)), rng);
  p.ffn_b = Matrix::Zero(1, 1);
  p.alpha_raw = Matrix::Constant(1, 1, kInitialAlphaRaw);
  return p;
}

HeadParams HeadParams::zeros(std::size_t d) {
  HeadParams p;
  p.proj_w = Matrix::Zero(3 * d, d);
  p.proj_b = Matrix::Zero(1, d);
  p.ffn_w = Matrix::Zero(d, 1);
  p.ffn_b = Matrix::Zero(1, 1);
  p.alpha_raw = Matrix::Zero(1, 1);
  return p;
}

RowVector pair_features(const RowVector& h, const RowVector& h_src) {
  const auto d = h.size();
  RowVector phi(3 * d);
  phi.segment(0, d) = h;
  phi.segment(d, d) = h.array() * h_src.array();
  phi.segment(2 * d, d) = (h - h_src).cwiseAbs();
  return phi;
}

void pair_features_backward(const RowVector& h, const RowVector& h_src,
                            const RowVector& d_phi, RowVector& d_h,
                            RowVector& d_src) {
  const auto d = h.size();
  const RowVector sign =
      (h - h_src).unaryExpr([](double v) { return double((v > 0) - (v < 0)); });
  const auto d_first = d_phi.segment(0, d);
  const auto d_prod = d_phi.segment(d, d);
  const auto d_abs = d_phi.segment(2 * d, d);
  d_h += d_first + (d_prod.array() * h_src.array()).matrix() +
         (d_abs.array() * sign.array()).matrix();
  d_src += (d_prod.array() * h.array()).matrix() -
           (d_abs.array() * sign.array()).matrix();
}

double utility(const RowVector& phi, const HeadParams& p, Mode mode,
               double dropout, std::mt19937_64* rng, UtilityTrace* trace) {
  RowVector pre = phi * p.proj_w + p.proj_b.row(0);
  RowVector hidden = pre.unaryExpr([](double v) { return gelu(v); });
  RowVector mask;
  if (mode == Mode::kTrain && dropout > 0.0 && rng) {
    std::bernoulli_distribution keep(1.0 - dropout);
    mask.resize(hidden.size());
    for (Eigen::Index i = 0; i < mask.size(); ++i)
      mask(i) = keep(*rng) ? 1.0 / (1.0 - dropout) : 0.0;
    hidden.array() *= mask.array();
  }
  const double linear = hidden.dot(p.ffn_w.col(0).transpose());
  const double u = linear + p.ffn_b(0, 0);
  if (trace) {
    trace->linear = linear;
    trace->phi = phi;
    trace->pre_activation = std::move(pre);
    trace->dropout_mask = std::move(mask);
    trace->hidden = std::move(hidden);
    trace->value = u;
  }
  return u;
}

RowVector utility_backward(const UtilityTrace& t, const HeadParams& p,
                           double du, HeadParams& g) {
  g.ffn_w.col(0) += du * t.hidden.transpose();
  g.ffn_b(0, 0) += du;
  RowVector d_hidden = du * p.ffn_w.col(0).transpose();
  if (t.dropout_mask.size()) d_hidden.array() *= t.dropout_mask.array();
  const RowVector d_pre =
      d_hidden.array() *
      t.pre_activation.unaryExpr([](double v) { return gelu_derivative(v); })
          .array();
  g.proj_w += t.phi.transpose() * d_pre;
  g.proj_b.row(0) += d_pre;
  return d_pre * p.proj_w.transpose();
}

double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

PairScore relative_score(double u_a, double u_b, double alpha_raw,
                         double eps) {
  PairScore s;
  s.u_a = u_a;
  s.u_b = u_b;
  s.z = u_a - u_b;
  s.alpha = softplus(alpha_raw) + eps;
  s.delta_hat = s.alpha * s.z;
  return s;
}

}  // namespace pear
