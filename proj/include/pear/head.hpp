#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "pear/encoder.hpp"

namespace pear {

inline constexpr double kAlphaEpsilon = 1e-4;
inline constexpr double kInitialAlphaRaw = 1.0;

// Proj (3d -> d) -> GELU -> dropout -> FFN (d -> 1), plus the output scale.
struct HeadParams {
  Matrix proj_w;     // 3d x d
  Matrix proj_b;     // 1 x d
  Matrix ffn_w;      // d x 1
  Matrix ffn_b;      // 1 x 1
  Matrix alpha_raw;  // 1 x 1

  static HeadParams init(std::size_t hidden_dim, std::uint64_t seed);
  static HeadParams zeros(std::size_t hidden_dim);

  double alpha_raw_value() const { return alpha_raw(0, 0); }

  template <typename Self, typename Fn>
  static void visit(Self& self, Fn&& fn) {
    fn(std::string("head.proj_w"), self.proj_w, true);
    fn(std::string("head.proj_b"), self.proj_b, false);
    fn(std::string("head.ffn_w"), self.ffn_w, true);
    fn(std::string("head.ffn_b"), self.ffn_b, false);
    fn(std::string("head.alpha_raw"), self.alpha_raw, false);
  }
};

// [h ; h * h_src ; |h - h_src|]
RowVector pair_features(const RowVector& h, const RowVector& h_src);

// Adds the feature gradient into d_h and d_src. The |.| block uses
// sign(0) = 0.
void pair_features_backward(const RowVector& h, const RowVector& h_src,
                            const RowVector& d_phi, RowVector& d_h,
                            RowVector& d_src);

struct UtilityTrace {
  RowVector phi, pre_activation, dropout_mask, hidden;
  double linear = 0.0;  // value without the output bias
  double value = 0.0;
};

// Scalar utility of one candidate's features. `rng` is only used in train
// mode with a positive dropout rate.
double utility(const RowVector& phi, const HeadParams& params, Mode mode,
               double dropout, std::mt19937_64* rng = nullptr,
               UtilityTrace* trace = nullptr);

// Accumulates head-parameter gradients and returns dL/dphi.
RowVector utility_backward(const UtilityTrace& trace, const HeadParams& params,
                           double d_utility, HeadParams& grads);

struct PairScore {
  double delta_hat = 0.0;
  double u_a = 0.0;
  double u_b = 0.0;
  double z = 0.0;
  double alpha = 0.0;
};

double softplus(double x);
double sigmoid(double x);

// z = u_a - u_b, alpha = softplus(alpha_raw) + eps, delta_hat = alpha z.
PairScore relative_score(double u_a, double u_b, double alpha_raw,
                         double eps = kAlphaEpsilon);

}  // namespace pear
