#include <doctest.h>

#include <cmath>
#include <limits>

#include "helpers.hpp"
#include "pear/head.hpp"

using namespace pear;

TEST_CASE("pair features") {
  RowVector h{{1.0, 2.0}}, src{{3.0, -1.0}};
  RowVector expected{{1, 2, 3, -2, 2, 3}};
  CHECK(pair_features(h, src) == expected);
  RowVector v{{0.5, -4.0, 2.0}};
  RowVector same = pair_features(v, v);
  CHECK(same.segment(0, 3) == v);
  CHECK(same.segment(3, 3) == v.cwiseProduct(v));
  CHECK(same.segment(6, 3).isZero(0.0));
}

TEST_CASE("pair feature gradient") {
  RowVector h = RowVector::Random(4), src = RowVector::Random(4);
  RowVector w = RowVector::Random(12);
  RowVector dh = RowVector::Zero(4), ds = RowVector::Zero(4);
  pair_features_backward(h, src, w, dh, ds);
  for (int i = 0; i < 4; ++i) {
    RowVector hp = h, hm = h, sp = src, sm = src;
    hp(i) += 1e-6;
    hm(i) -= 1e-6;
    sp(i) += 1e-6;
    sm(i) -= 1e-6;
    CHECK(dh(i) == doctest::Approx((pair_features(hp, src).dot(w) -
                                    pair_features(hm, src).dot(w)) /
                                   2e-6)
                       .epsilon(1e-7));
    CHECK(ds(i) == doctest::Approx((pair_features(h, sp).dot(w) -
                                    pair_features(h, sm).dot(w)) /
                                   2e-6)
                       .epsilon(1e-7));
  }
}

TEST_CASE("utility") {
  auto zero = HeadParams::zeros(4);
  RowVector phi = RowVector::Random(12);
  CHECK(utility(phi, zero, Mode::kEval, 0.1) == 0.0);
  auto p = HeadParams::init(4, 7);
  CHECK(utility(phi, p, Mode::kEval, 0.1) == utility(phi, p, Mode::kEval, 0.1));
  CHECK(p.alpha_raw_value() == kInitialAlphaRaw);
  std::mt19937_64 r1(3), r2(3);
  CHECK(utility(phi, p, Mode::kTrain, 0.5, &r1) ==
        utility(phi, p, Mode::kTrain, 0.5, &r2));
}

TEST_CASE("relative score") {
  CHECK(relative_score(0.3, 0.3, 5.0).delta_hat == 0.0);
  CHECK(relative_score(-2.0, -2.0, -50.0).delta_hat == 0.0);
  auto s = relative_score(1.0, 0.0, 0.0);
  CHECK(s.delta_hat == doctest::Approx(0.69324718).epsilon(1e-8));
  CHECK(s.alpha == std::log(2.0) + kAlphaEpsilon);
  CHECK(s.z == 1.0);
}

TEST_CASE("property: relative score sign inversion and positive alpha") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 5.0);
  for (int i = 0; i < 10000; ++i) {
    const double ua = n(rng), ub = n(rng), ar = 20.0 * n(rng);
    const auto ab = relative_score(ua, ub, ar), ba = relative_score(ub, ua, ar);
    CHECK(ab.delta_hat == -ba.delta_hat);
    CHECK(ab.alpha > 0.0);
    CHECK(ab.z == ua - ub);
  }
  CHECK(relative_score(1, 0, -1000.0).alpha >= kAlphaEpsilon);
  CHECK(std::isfinite(relative_score(1, 0, 1000.0).alpha));
}

TEST_CASE("softplus and sigmoid are stable") {
  CHECK(softplus(0.0) == std::log(2.0));
  CHECK(softplus(800.0) == 800.0);
  CHECK(softplus(-800.0) >= 0.0);
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) == 1.0);
}

TEST_CASE("head gradients match finite differences") {
  const std::size_t d = 5;
  auto p = HeadParams::init(d, 4);
  p.alpha_raw(0, 0) = 0.3;
  RowVector phi_a = RowVector::Random(3 * d), phi_b = RowVector::Random(3 * d);
  auto objective = [&](const HeadParams& q) {
    const double ua = utility(phi_a, q, Mode::kEval, 0.0);
    const double ub = utility(phi_b, q, Mode::kEval, 0.0);
    return relative_score(ua, ub, q.alpha_raw_value()).delta_hat;
  };
  UtilityTrace ta, tb;
  const double ua = utility(phi_a, p, Mode::kEval, 0.0, nullptr, &ta);
  const double ub = utility(phi_b, p, Mode::kEval, 0.0, nullptr, &tb);
  const auto s = relative_score(ua, ub, p.alpha_raw_value());
  auto g = HeadParams::zeros(d);
  utility_backward(ta, p, s.alpha, g);
  utility_backward(tb, p, -s.alpha, g);
  g.alpha_raw(0, 0) = s.z * sigmoid(p.alpha_raw_value());

  HeadParams::visit(p, [&](const std::string& name, Matrix& m, bool) {
    Matrix* gm = nullptr;
    HeadParams::visit(g, [&](const std::string& n2, Matrix& m2, bool) {
      if (n2 == name) gm = &m2;
    });
    if (name == "head.ffn_b") {
      // The shared output bias cancels in u_a - u_b.
      CHECK(gm->isZero(0.0));
      return;
    }
    double worst = 0, scale = 1e-8;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double keep = m.data()[i];
      m.data()[i] = keep + 1e-5;
      const double up = objective(p);
      m.data()[i] = keep - 1e-5;
      const double down = objective(p);
      m.data()[i] = keep;
      const double num = (up - down) / 2e-5;
      worst = std::max(worst, std::abs(num - gm->data()[i]));
      scale = std::max({scale, std::abs(num), std::abs(gm->data()[i])});
    }
    INFO(name);
    CHECK(worst / scale <= 1e-4);
  });
}
