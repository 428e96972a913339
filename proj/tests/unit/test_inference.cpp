#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "pear/consistency.hpp"
#include "pear/error.hpp"
#include "pear/inference.hpp"

using namespace pear;

namespace {

EvalDataset grid(std::size_t systems, std::size_t segments, bool refs = true) {
  std::vector<Segment> segs;
  std::vector<SystemOutput> outs;
  std::map<std::string, std::string> r;
  for (std::size_t s = 0; s < segments; ++s) {
    const auto id = "seg" + std::to_string(s);
    segs.push_back({id, "source " + std::to_string(s), ""});
    if (refs) r[id] = "reference " + std::to_string(s);
    for (std::size_t k = 0; k < systems; ++k)
      outs.push_back({"S" + std::to_string(k), id,
                      "out " + std::to_string(k) + " " + std::to_string(s)});
  }
  return EvalDataset(segs, outs, {}, r);
}

// A deliberately non-antisymmetric mock.
FunctionScorer lopsided() {
  return FunctionScorer([](const std::string& s, const std::string& a,
                           const std::string& b) {
    return 0.1 * a.size() - 0.07 * b.size() + 0.01 * s.size();
  });
}

}  // namespace

TEST_CASE("mode parsing") {
  CHECK(parse_score_mode("single") == ScoreMode::kSinglePass);
  CHECK(parse_score_mode("single_pass") == ScoreMode::kSinglePass);
  CHECK(parse_score_mode("both") == ScoreMode::kBoth);
  CHECK(parse_score_mode("anchored") == ScoreMode::kAnchored);
  CHECK_THROWS_AS(parse_score_mode("bogus"), UsageError);
  CHECK(passes_per_evaluation(ScoreMode::kBoth) == 2);
  CHECK(passes_per_evaluation(ScoreMode::kSinglePass) == 1);
}

TEST_CASE("both mode combines the two orders") {
  FunctionScorer mock([](const std::string&, const std::string& a,
                         const std::string&) { return a == "A" ? 0.8 : -0.6; });
  CHECK(score_pair(mock, "s", "A", "B", ScoreMode::kSinglePass) == 0.8);
  CHECK(score_pair(mock, "s", "A", "B", ScoreMode::kBoth) == doctest::Approx(0.7));
  auto m = lopsided();
  CHECK(score_pair(m, "src", "same", "same", ScoreMode::kBoth) == 0.0);
  CHECK(score_anchored(m, "src", "ref", "ref", ScoreMode::kBoth) == 0.0);
  CHECK(score_pair(m, "src", "same", "same", ScoreMode::kSinglePass) != 0.0);
}

TEST_CASE("property: both mode inverts sign exactly for a real model") {
  auto data = testing::toy_synth(5, 3, 1).dataset;
  auto model = testing::toy_model(data, 8);
  std::mt19937_64 rng(3);
  double worst_single = 0;
  for (int i = 0; i < 200; ++i) {
    auto s = testing::random_text(rng, 5, 12);
    if (s.empty()) s = "s1";
    const auto a = testing::random_text(rng, 6, 12);
    const auto b = testing::random_text(rng, 6, 12);
    const double ab = score_pair(model, s, a, b, ScoreMode::kBoth);
    const double ba = score_pair(model, s, b, a, ScoreMode::kBoth);
    CHECK(std::abs(ab + ba) <= 1e-12);
    worst_single = std::max(
        worst_single, std::abs(score_pair(model, s, a, b, ScoreMode::kSinglePass) +
                               score_pair(model, s, b, a, ScoreMode::kSinglePass)));
  }
  MESSAGE("largest single-pass antisymmetry gap: " << worst_single);
  CHECK(worst_single > 0.0);
}

TEST_CASE("system comparison is a segment mean") {
  std::map<std::string, double> v{{"x", 1.0}, {"y", -0.5}, {"z", 0.5}};
  FunctionScorer mock([&](const std::string& s, const std::string&,
                          const std::string&) { return v.at(s); });
  EvalDataset d({{"1", "x", ""}, {"2", "y", ""}, {"3", "z", ""}},
                {{"A", "1", "a"}, {"A", "2", "a"}, {"A", "3", "a"},
                 {"B", "1", "b"}, {"B", "2", "b"}, {"B", "3", "b"}},
                {});
  auto c = system_compare(mock, d, "A", "B", ScoreMode::kSinglePass);
  CHECK(c.system.score == doctest::Approx(1.0 / 3.0));
  CHECK(c.system.n_segments == 3);

  auto g = grid(3, 6);
  auto m = lopsided();
  auto ab = system_compare(m, g, "S0", "S1", ScoreMode::kBoth, 3);
  auto ba = system_compare(m, g, "S1", "S0", ScoreMode::kBoth);
  CHECK(ab.system.score == -ba.system.score);
  CHECK(system_compare(m, g, "S2", "S2", ScoreMode::kBoth).system.score == 0.0);
}

TEST_CASE("coverage handling") {
  EvalDataset d({{"1", "x", ""}, {"2", "y", ""}},
                {{"A", "1", "a"}, {"B", "2", "b"}, {"C", "1", "c"}, {"C", "2", "c"}},
                {});
  auto m = lopsided();
  try {
    system_compare(m, d, "A", "B", ScoreMode::kBoth);
    FAIL("expected a coverage error");
  } catch (const DataError& e) {
    CHECK(e.code() == DataError::Code::kCoverage);
  }
  auto c = system_compare(m, d, "A", "C", ScoreMode::kBoth);
  CHECK(c.system.n_segments == 1);
  CHECK(c.only_b == std::vector<std::string>{"2"});
}

TEST_CASE("anchored scoring counts") {
  auto d = grid(5, 10);
  auto base = lopsided();
  CountingScorer counter(base);
  auto r = system_scores_anchored(counter, d, {}, Anchor::parse("ref"),
                                  ScoreMode::kBoth, 2);
  CHECK(r.pair_evaluations == 50);
  CHECK(r.forward_passes == 100);
  CHECK(counter.calls() == 100);
  CHECK(r.systems.size() == 5);
  counter.reset();
  auto single = system_scores_anchored(counter, d, {}, Anchor::parse("ref"),
                                       ScoreMode::kSinglePass);
  CHECK(counter.calls() == 50);
  CHECK(single.forward_passes == 50);
}

TEST_CASE("anchored vs pairwise evaluation growth") {
  auto base = lopsided();
  for (std::size_t n : {3, 6, 9}) {
    auto d = grid(n, 4);
    CountingScorer a(base), p(base);
    system_scores_anchored(a, d, {}, Anchor::parse("ref"), ScoreMode::kSinglePass);
    score_matrix(p, d, {}, ScoreMode::kBoth);
    CHECK(a.calls() == n * 4);
    CHECK(p.calls() == n * (n - 1) / 2 * 4 * 2);
  }
}

TEST_CASE("system anchor is removed from the scored set") {
  auto d = grid(5, 4);
  auto m = lopsided();
  auto r = system_scores_anchored(m, d, {}, Anchor::parse("S3"), ScoreMode::kBoth);
  REQUIRE(r.systems.size() == 4);
  for (const auto& s : r.systems) CHECK(s.system_id != "S3");
  CHECK(r.anchor == "S3");
  try {
    system_scores_anchored(m, d, {}, Anchor::parse("S9"), ScoreMode::kBoth);
    FAIL("expected a missing anchor");
  } catch (const DataError& e) {
    CHECK(e.code() == DataError::Code::kMissingAnchor);
  }
}

TEST_CASE("missing reference names the segment") {
  auto g = grid(2, 3, false);
  std::map<std::string, std::string> refs{{"seg0", "r"}, {"seg2", "r"}};
  EvalDataset d(g.segments(), g.outputs(), {}, refs);
  auto m = lopsided();
  try {
    system_scores_anchored(m, d, {}, Anchor::parse("ref"), ScoreMode::kBoth);
    FAIL("expected a missing anchor");
  } catch (const DataError& e) {
    CHECK(e.code() == DataError::Code::kMissingAnchor);
    CHECK(std::string(e.what()).find("seg1") != std::string::npos);
  }
}

TEST_CASE("score matrix rows and negation fill") {
  auto d = grid(3, 5);
  auto m = lopsided();
  auto single = score_matrix(m, d, {}, ScoreMode::kSinglePass);
  CHECK(single.table.size() == 30);
  CHECK(single.table.system_pairs().size() == 3);
  CHECK(single.scorer_calls == 30);

  auto both = score_matrix(m, d, {}, ScoreMode::kBoth, 4);
  CHECK(both.scorer_calls == 30);
  for (const auto& row : both.table.rows()) {
    const auto* seg = d.find_segment(row.segment_id);
    const double direct =
        score_pair(m, seg->source_text,
                   d.find_output(row.system_a, row.segment_id)->translation,
                   d.find_output(row.system_b, row.segment_id)->translation,
                   ScoreMode::kBoth);
    CHECK(std::abs(row.score - direct) <= 1e-12);
  }
  CHECK(score_matrix(m, d, {}, ScoreMode::kBoth, 1).table == both.table);
  CHECK(audit_consistency(both.table).max_eps_as() <= 1e-12);
  CHECK(audit_consistency(single.table).max_eps_as() > 0.0);
}

TEST_CASE("score matrix reports coverage gaps") {
  EvalDataset d({{"1", "x", ""}, {"2", "y", ""}},
                {{"A", "1", "a"}, {"A", "2", "a"}, {"B", "1", "b"}}, {});
  auto m = lopsided();
  auto r = score_matrix(m, d, {}, ScoreMode::kSinglePass);
  CHECK(r.table.size() == 2);
  REQUIRE(r.gaps.size() == 1);
  CHECK(r.gaps[0].missing_segments == std::vector<std::string>{"2"});
}
