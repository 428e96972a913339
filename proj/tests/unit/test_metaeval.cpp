#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "pear/error.hpp"
#include "pear/metaeval.hpp"

using namespace pear;

namespace {

const char* const kGoldenRanks =
    "variant\tref\tsys0\tsys2\n"
    "partial\t2\t2\t2\n"
    "oracle\t1\t1\t1\n";

int sgn(double x) { return (x > 0) - (x < 0); }

// Brute force over every breakpoint and the midpoints between them.
TieCalibration oracle_tie(const std::vector<double>& h,
                          const std::vector<double>& m) {
  std::vector<double> bps{0.0};
  for (double x : m) bps.push_back(std::abs(x));
  std::sort(bps.begin(), bps.end());
  auto acc = [&](double eps) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      const int d = std::abs(m[i]) <= eps ? 0 : sgn(m[i]);
      ok += d == sgn(h[i]);
    }
    return static_cast<double>(ok) / h.size();
  };
  TieCalibration best{-1, 0, h.size()};
  for (double b : bps) {
    const double a = acc(b);
    if (a > best.accuracy) best = {a, b, h.size()};
  }
  for (std::size_t k = 0; k + 1 < bps.size(); ++k)
    CHECK(acc(0.5 * (bps[k] + bps[k + 1])) <= best.accuracy);
  CHECK(acc(bps.back() + 1.0) <= best.accuracy);
  return best;
}

// Exhaustive two-sided sign-flip p-value for integer-valued data.
double oracle_p(const std::vector<double>& x) {
  const std::size_t n = x.size();
  double obs = 0;
  for (double v : x) obs += v;
  std::size_t hits = 0;
  for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += (mask >> i & 1) ? -x[i] : x[i];
    hits += std::abs(s) >= std::abs(obs);
  }
  return static_cast<double>(hits) / static_cast<double>(1ULL << n);
}

ScoreTable table_from(const std::map<std::string, std::vector<double>>& by_pair) {
  std::vector<ScoreRow> rows;
  for (const auto& [pair, v] : by_pair) {
    const auto a = pair.substr(0, 1), b = pair.substr(1, 1);
    for (std::size_t i = 0; i < v.size(); ++i) {
      rows.push_back({"s" + std::to_string(i), a, b, v[i]});
      rows.push_back({"s" + std::to_string(i), b, a, -v[i]});
    }
  }
  return ScoreTable(rows);
}

double textbook_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = x.size();
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) /
         std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

}  // namespace

TEST_CASE("tie calibration examples") {
  std::vector<double> h0{0, 0, 0}, m0{0, 0, 0};
  auto r0 = tie_calibrated_accuracy(h0, m0);
  CHECK(r0.accuracy == 1.0);
  CHECK(r0.epsilon == 0.0);

  std::vector<double> h{1, -1, 0}, m{0.5, -0.4, 0.1};
  auto r = tie_calibrated_accuracy(h, m);
  CHECK(r.accuracy == 1.0);
  CHECK(r.epsilon == 0.1);
  CHECK(accuracy_at(h, m, 0.0) == doctest::Approx(2.0 / 3.0));
  CHECK(accuracy_at(h, m, 0.45) == doctest::Approx(2.0 / 3.0));
  CHECK(accuracy_at(h, m, 0.6) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("property: tie calibration equals the brute-force oracle") {
  std::mt19937_64 rng(21);
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t n = 1 + rng() % 200;
    std::vector<double> h(n), m(n);
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = static_cast<double>(static_cast<int>(rng() % 5) - 2);
      const int kind = rng() % 4;
      m[i] = kind == 0 ? 0.0
                       : std::round((static_cast<double>(rng() % 2001) - 1000.0)) /
                             (kind == 1 ? 100.0 : 250.0);
    }
    auto got = tie_calibrated_accuracy(h, m);
    auto want = oracle_tie(h, m);
    CHECK(got.accuracy == want.accuracy);
    CHECK(got.epsilon == want.epsilon);
  }
}

TEST_CASE("property: human vs itself") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  std::vector<double> h(50);
  for (auto& x : h) x = n(rng);
  auto r = tie_calibrated_accuracy(h, h);
  CHECK(r.accuracy == 1.0);
  CHECK(r.epsilon == 0.0);
  h[3] = 0.0;
  h[9] = 0.0;
  CHECK(tie_calibrated_accuracy(h, h).accuracy == 1.0);
}

TEST_CASE("spa and avg corr arithmetic") {
  std::vector<double> ph{0.2}, pm{0.5};
  CHECK(spa_from_p_values(ph, pm) == doctest::Approx(0.7));
  std::vector<double> a{0.1, 0.9, 0.4}, b{0.3, 0.9, 0.0};
  CHECK(spa_from_p_values(a, b) == spa_from_p_values(b, a));
  CHECK(avg_corr(1, 1) == 1.0);
  CHECK(avg_corr(0.8, 0.6) == doctest::Approx(0.7));
  CHECK(avg_corr(0.6, 0.8) == avg_corr(0.8, 0.6));
}

TEST_CASE("exhaustive sign-flip p-values match an oracle") {
  std::mt19937_64 rng(5);
  SpaOptions o;
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 1 + rng() % 12;
    std::vector<double> h(n), m(n);
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = static_cast<double>(static_cast<int>(rng() % 21) - 8);
      m[i] = static_cast<double>(static_cast<int>(rng() % 11) - 5);
    }
    auto r = sign_flip_p_values(h, m, o, 1);
    CHECK(r.exhaustive);
    CHECK(r.p_human == oracle_p(h));
    CHECK(r.p_metric == oracle_p(m));
  }
}

TEST_CASE("one-sided tail") {
  SpaOptions o;
  o.tail = SpaTail::kOneSided;
  std::vector<double> pos{1, 2, 3}, neg{-1, -2, -3};
  auto r = sign_flip_p_values(pos, neg, o, 1);
  CHECK(r.p_human == 1.0 / 8.0);
  CHECK(r.p_metric == 1.0);
  o.tail = SpaTail::kTwoSided;
  r = sign_flip_p_values(pos, neg, o, 1);
  CHECK(r.p_human == 2.0 / 8.0);
  CHECK(r.p_metric == 2.0 / 8.0);
}

TEST_CASE("sampled p-values use the add-one estimator") {
  SpaOptions o;
  o.exhaustive_below = 0;
  o.resamples = 99;
  std::vector<double> big(20, 5.0);
  auto r = sign_flip_p_values(big, big, o, 3);
  CHECK_FALSE(r.exhaustive);
  CHECK(r.p_human == r.p_metric);
  CHECK(r.p_human >= 1.0 / 100.0);
  CHECK(std::fmod(r.p_human * 100.0, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("SPA of a table with itself is exactly one") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0, 3);
  for (std::size_t segs : {5, 30}) {
    std::map<std::string, std::vector<double>> d;
    for (const char* p : {"AB", "AC", "BC", "AD"}) {
      auto& v = d[p];
      for (std::size_t i = 0; i < segs; ++i) v.push_back(n(rng) + 0.5);
    }
    auto t = table_from(d);
    SpaOptions o;
    o.resamples = 2000;
    o.jobs = 3;
    auto r = soft_pairwise_accuracy(t, t, o);
    CHECK(r.spa == 1.0);
    CHECK(r.pairs.size() == 4);
  }
}

TEST_CASE("property: SPA lies in [0, 1] and follows its seed") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0, 3);
  for (int t = 0; t < 10; ++t) {
    std::map<std::string, std::vector<double>> hd, md;
    for (const char* p : {"AB", "AC", "BC"})
      for (int i = 0; i < 20; ++i) {
        hd[p].push_back(n(rng) + 0.3);
        md[p].push_back(n(rng) - 0.2);
      }
    SpaOptions o;
    o.resamples = 500;
    o.seed = t;
    auto h = table_from(hd), m = table_from(md);
    const double spa = soft_pairwise_accuracy(h, m, o).spa;
    CHECK(spa >= 0.0);
    CHECK(spa <= 1.0);
    CHECK(soft_pairwise_accuracy(h, m, o).spa == spa);
  }
}

TEST_CASE("SPA needs matching pairs") {
  auto h = table_from({{"AB", {1, 2}}, {"AC", {1, 2}}});
  auto m = table_from({{"AB", {1, 2}}});
  CHECK_THROWS_AS(soft_pairwise_accuracy(h, m), DataError);
}

TEST_CASE("table-level tie calibration and meta evaluation") {
  auto h = table_from({{"AB", {1, 0, -2}}, {"BC", {3, 1, 0}}});
  auto m = table_from({{"AB", {0.5, 0.1, -0.2}}, {"BC", {0.9, 0.3, -0.05}}});
  auto tc = tie_calibrated_accuracy(h, m);
  CHECK(tc.rows == 6);
  CHECK(tc.accuracy == 1.0);
  CHECK(tc.epsilon == 0.1);
  auto rep = meta_evaluate(h, m);
  CHECK(rep.acc_eq_star == 1.0);
  CHECK(rep.avg_corr == doctest::Approx((rep.spa + 1.0) / 2));
  CHECK(rep.to_json()["pairs"].size() == 2);
}

TEST_CASE("pearson") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  std::vector<double> x(40), y(40), negx(40);
  for (int i = 0; i < 40; ++i) {
    x[i] = n(rng);
    y[i] = 0.3 * x[i] + n(rng);
    negx[i] = -x[i];
  }
  CHECK(pearson(x, x) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pearson(x, negx) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(pearson(x, y) == doctest::Approx(textbook_pearson(x, y)).epsilon(1e-12));
  std::vector<double> flat(40, 2.0);
  CHECK(std::isnan(pearson(x, flat)));
}

TEST_CASE("pearson matrix") {
  auto a = table_from({{"AB", {1, 2, -1, 0.5}}, {"BC", {0.3, -2, 1, 1}}});
  auto b = table_from({{"AB", {0.5, 1, 0.2, 0.1}}, {"BC", {2, -1, 0.1, 0.4}}});
  auto neg = table_from({{"AB", {-1, -2, 1, -0.5}}, {"BC", {-0.3, 2, -1, -1}}});
  auto flat = table_from({{"AB", {0, 0, 0, 0}}, {"BC", {0, 0, 0, 0}}});
  auto pm = pearson_diff_matrix({{"a", a}, {"b", b}, {"neg", neg}, {"flat", flat}});
  CHECK(pm.rows == 8);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(pm.r[i][i] == 1.0);
    for (std::size_t j = 0; j < 3; ++j) CHECK(pm.r[i][j] == pm.r[j][i]);
  }
  CHECK(pm.r[0][2] == doctest::Approx(-1.0));
  CHECK_FALSE(pm.defined(0, 3));
  CHECK(pm.to_json()["r"][0][3].is_null());
  std::vector<double> xa, xb;
  for (const auto& row : a.canonical().rows()) xa.push_back(row.score);
  for (const auto& row : b.canonical().rows()) xb.push_back(row.score);
  CHECK(pm.r[0][1] == doctest::Approx(textbook_pearson(xa, xb)).epsilon(1e-12));
}

TEST_CASE("anchor rank stability golden table") {
  auto data = testing::toy_synth(30, 4, 13, 0.5).dataset;
  // Counts correct tokens; the second variant only sees the first half.
  FunctionScorer oracle([](const std::string&, const std::string& a,
                           const std::string& b) {
    auto q = [](const std::string& t) {
      return static_cast<double>(synthetic_correct_tokens(t)) /
             split_whitespace(t).size();
    };
    return q(a) - q(b);
  });
  FunctionScorer partial([](const std::string&, const std::string& a,
                            const std::string& b) {
    auto q = [](const std::string& t) {
      auto w = split_whitespace(t);
      std::size_t ok = 0;
      for (std::size_t i = 0; i < w.size() / 2; ++i) ok += w[i][0] != 'x';
      return static_cast<double>(ok);
    };
    return q(a) - q(b);
  });
  std::vector<MetricVariant> variants{{"partial", &partial}, {"oracle", &oracle}};
  std::vector<Anchor> anchors{Anchor::parse("ref"), Anchor::parse("sys0"),
                              Anchor::parse("sys2")};
  SpaOptions o;
  o.resamples = 1000;
  o.seed = 5;
  auto t = anchor_rank_stability(variants, data, anchors, ScoreMode::kBoth, o);
  CHECK(t.variants == std::vector<std::string>{"partial", "oracle"});
  CHECK(t.anchors == std::vector<std::string>{"ref", "sys0", "sys2"});
  for (std::size_t a = 0; a < 3; ++a) {
    CHECK(t.ranks[1][a] == 1);
    CHECK(t.ranks[0][a] == 2);
    CHECK(t.avg_corr[1][a] > t.avg_corr[0][a]);
  }
  MESSAGE(t.to_tsv());
  CHECK(t.to_tsv() == std::string(kGoldenRanks));
}
