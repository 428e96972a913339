#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "pear/consistency.hpp"
#include "pear/error.hpp"
#include "pear/inference.hpp"

using namespace pear;

namespace {

SystemScores scores(std::map<std::pair<std::string, std::string>, double> d) {
  SystemScores s;
  for (const auto& [k, v] : d) {
    s.systems.push_back(k.first);
    s.systems.push_back(k.second);
  }
  std::sort(s.systems.begin(), s.systems.end());
  s.systems.erase(std::unique(s.systems.begin(), s.systems.end()), s.systems.end());
  s.delta = std::move(d);
  return s;
}

}  // namespace

TEST_CASE("system scores are segment means") {
  ScoreTable t({{"1", "A", "B", 1.0}, {"2", "A", "B", -0.5}, {"3", "A", "B", 0.5},
                {"1", "B", "A", 2.0}});
  auto s = system_level_scores(t);
  CHECK(s.at("A", "B") == doctest::Approx(1.0 / 3.0));
  CHECK(s.at("B", "A") == 2.0);
  CHECK_THROWS_AS(s.at("A", "C"), DataError);
}

TEST_CASE("antisymmetry residuals") {
  auto s = scores({{{"A", "B"}, 1.0}, {{"B", "A"}, -0.8}});
  auto r = antisymmetry_residuals(s);
  REQUIRE(r.size() == 1);
  CHECK(r[0].value == doctest::Approx(0.2));
  auto ok = scores({{{"A", "B"}, 1.5}, {{"B", "A"}, -1.5}});
  CHECK(antisymmetry_residuals(ok)[0].value == 0.0);
}

TEST_CASE("transitivity residuals") {
  auto s = scores({{{"A", "B"}, 1.0}, {{"B", "C"}, 1.0}, {{"A", "C"}, 1.5},
                   {{"B", "A"}, -1.0}, {{"C", "B"}, -1.0}, {{"C", "A"}, -1.5}});
  auto r = transitivity_residuals(s);
  CHECK(r.size() == 6);
  bool found = false;
  for (const auto& t : r)
    if (t.system_a == "A" && t.system_b == "B" && t.system_c == "C") {
      found = true;
      CHECK(t.value == doctest::Approx(0.5));
    }
  CHECK(found);
  CHECK_THROWS_AS(transitivity_residuals(scores({{{"A", "B"}, 1.0}, {{"B", "A"}, -1.0}})),
                  DataError);
}

TEST_CASE("additive scores have zero residuals") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 4);
  std::map<std::string, double> v;
  for (const char* s : {"A", "B", "C", "D", "E"}) v[s] = n(rng);
  std::map<std::pair<std::string, std::string>, double> d;
  for (const auto& [x, vx] : v)
    for (const auto& [y, vy] : v)
      if (x != y) d[{x, y}] = vx - vy;
  auto rep = audit_consistency(scores(d));
  CHECK(rep.max_eps_as() <= 1e-12);
  CHECK(rep.max_eps_tr() <= 1e-12);
  CHECK(rep.deviations.rho_as <= 1e-12);
}

TEST_CASE("relative deviations by hand") {
  // Three systems, hand-made and deliberately inconsistent.
  std::map<std::pair<std::string, std::string>, double> d{
      {{"A", "B"}, 2.0}, {{"B", "A"}, -1.0}, {{"A", "C"}, 3.0},
      {{"C", "A"}, -3.5}, {{"B", "C"}, 0.5}, {{"C", "B"}, 0.0}};
  auto rep = audit_consistency(scores(d));
  const double mu = (2.0 + 1.0 + 3.0 + 3.5 + 0.5 + 0.0) / 6.0;
  const double as = (1.0 + 0.5 + 0.5) / 3.0;
  // |D(a,c) - D(a,b) - D(b,c)| for the six orderings:
  // ABC |3 - 2 - 0.5|      = 0.5
  // ACB |2 - 3 - 0|        = 1.0
  // BAC |0.5 + 1 - 3|      = 1.5
  // BCA |-1 - 0.5 + 3.5|   = 2.0
  // CAB |0 + 3.5 - 2|      = 1.5
  // CBA |-3.5 - 0 + 1|     = 2.5
  const double tr = (0.5 + 1.0 + 1.5 + 2.0 + 1.5 + 2.5) / 6.0;
  CHECK(rep.deviations.mu_delta == doctest::Approx(mu));
  CHECK(rep.deviations.rho_as == doctest::Approx(as / mu));
  CHECK(rep.deviations.rho_tr == doctest::Approx(tr / mu));
  for (const auto& e : rep.eps_as) CHECK(e.value >= 0);
  for (const auto& e : rep.eps_tr) CHECK(e.value >= 0);
}

TEST_CASE("property: relative deviations are scale invariant") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0, 2);
  for (int t = 0; t < 20; ++t) {
    std::map<std::pair<std::string, std::string>, double> d, scaled;
    const double c = std::exp(n(rng));
    for (const char* a : {"A", "B", "C", "D"})
      for (const char* b : {"A", "B", "C", "D"})
        if (std::string(a) != b) {
          d[{a, b}] = n(rng);
          scaled[{a, b}] = c * d[{a, b}];
        }
    auto x = audit_consistency(scores(d)).deviations;
    auto y = audit_consistency(scores(scaled)).deviations;
    CHECK(y.rho_as == doctest::Approx(x.rho_as).epsilon(1e-12));
    CHECK(y.rho_tr == doctest::Approx(x.rho_tr).epsilon(1e-12));
  }
}

TEST_CASE("all-zero scores are degenerate") {
  auto rep = audit_consistency(scores({{{"A", "B"}, 0.0}, {{"B", "A"}, 0.0},
                                       {{"A", "C"}, 0.0}, {{"C", "A"}, 0.0},
                                       {{"B", "C"}, 0.0}, {{"C", "B"}, 0.0}}));
  CHECK(rep.deviations.degenerate);
  CHECK(std::isnan(rep.deviations.rho_as));
  CHECK(rep.to_json()["rho_as"].is_null());
}

TEST_CASE("context-free encoder gives structurally consistent scores") {
  auto data = testing::toy_synth(12, 4, 9, 1.0).dataset;
  for (auto head : {HeadKind::kPairwise, HeadKind::kSingle}) {
    auto model = testing::toy_model(data, 4, 8, head, EncoderKind::kContextFree);
    auto t = score_matrix(model, data, {}, ScoreMode::kSinglePass).table;
    auto rep = audit_consistency(t);
    CHECK(rep.max_eps_as() <= 1e-12);
    CHECK(rep.max_eps_tr() <= 1e-12);
    CHECK(rep.deviations.mu_delta > 0);
  }
}

TEST_CASE("both-mode transformer scores are antisymmetric") {
  auto data = testing::toy_synth(12, 4, 9, 1.0).dataset;
  auto model = testing::toy_model(data, 4);
  auto both = audit_consistency(score_matrix(model, data, {}, ScoreMode::kBoth).table);
  auto single =
      audit_consistency(score_matrix(model, data, {}, ScoreMode::kSinglePass).table);
  CHECK(both.max_eps_as() <= 1e-12);
  CHECK(single.max_eps_as() > 1e-12);
}
