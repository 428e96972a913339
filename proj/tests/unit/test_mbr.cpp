#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "pear/error.hpp"
#include "pear/mbr.hpp"

using namespace pear;

namespace {

std::size_t oracle_select(const Matrix& u) {
  const auto n = u.rows();
  std::size_t best = 0;
  double best_eu = -INFINITY;
  for (Eigen::Index i = 0; i < n; ++i) {
    double eu = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) eu += u(i, j);
    eu /= static_cast<double>(n - 1);
    if (eu > best_eu) {
      best_eu = eu;
      best = i;
    }
  }
  return best;
}

CandidateList list_of(std::vector<std::string> cands) {
  return {"seg", "s1 s2 s3", std::move(cands), {}};
}

FunctionScorer lopsided() {
  return FunctionScorer([](const std::string&, const std::string& a,
                           const std::string& b) {
    return 0.3 * a.size() - 0.1 * b.size() + 0.05;
  });
}

}  // namespace

TEST_CASE("selection examples") {
  Matrix u(3, 3);
  u << 0, 1, 2, -1, 0, 1, -2, -1, 0;
  auto s = mbr_select(u);
  CHECK(s.index == 0);
  CHECK(s.expected_utility[0] == 1.5);
  CHECK(s.expected_utility[1] == 0.0);
  CHECK(s.expected_utility[2] == -1.5);
  CHECK(mbr_select(Matrix::Zero(5, 5)).index == 0);
  auto one = mbr_select(Matrix::Zero(1, 1));
  CHECK(one.index == 0);
  CHECK_FALSE(one.defined);
}

TEST_CASE("property: selection equals the exhaustive oracle") {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> n;
  for (int t = 0; t < 200; ++t) {
    const int N = 2 + static_cast<int>(rng() % 15);
    Matrix u(N, N);
    const bool antisym = t % 2 == 0;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        u(i, j) = i == j ? 0.0 : std::round(n(rng) * 4) / 4;
    if (antisym)
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < i; ++j) u(i, j) = -u(j, i);
    CHECK(mbr_select(u).index == oracle_select(u));
  }
}

TEST_CASE("property: constant shift keeps the selection") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int t = 0; t < 50; ++t) {
    const int N = 2 + static_cast<int>(rng() % 8);
    Matrix u = Matrix::Zero(N, N), v = u;
    const double c = std::round(n(rng) * 8) / 8;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        if (i != j) {
          u(i, j) = std::round(n(rng) * 2) / 2;
          v(i, j) = u(i, j) + c;
        }
    auto a = mbr_select(u), b = mbr_select(v);
    CHECK(a.index == b.index);
    for (int i = 0; i < N; ++i)
      CHECK(b.expected_utility[i] == doctest::Approx(a.expected_utility[i] + c));
  }
}

TEST_CASE("two candidates") {
  for (double x : {-1.0, 0.0, 2.0}) {
    Matrix u(2, 2);
    u << 0, x, -x, 0;
    CHECK(mbr_select(u).index == (x >= 0 ? 0u : 1u));
  }
}

TEST_CASE("utility matrix counts") {
  auto m = lopsided();
  auto l = list_of({"a", "bb", "ccc"});
  auto tri = utility_matrix(m, l, UtilityMode::kTriangular);
  auto full = utility_matrix(m, l, UtilityMode::kFull);
  CHECK(tri.forward_pass_count == 3);
  CHECK(full.forward_pass_count == 6);
  for (std::size_t N : {2, 5, 9, 16}) {
    std::vector<std::string> c;
    for (std::size_t i = 0; i < N; ++i) c.push_back(std::string(i + 1, 'w'));
    CountingScorer ct(m), cf(m);
    auto t = utility_matrix(ct, list_of(c), UtilityMode::kTriangular, ScoreMode::kSinglePass, 3);
    auto f = utility_matrix(cf, list_of(c), UtilityMode::kFull);
    CHECK(ct.calls() == N * (N - 1) / 2);
    CHECK(cf.calls() == N * (N - 1));
    CHECK(t.forward_pass_count * 2 == f.forward_pass_count);
    CHECK(t.u.diagonal().isZero(0.0));
    CHECK((t.u + t.u.transpose()).isZero(0.0));
    CountingScorer cb(m);
    auto b = utility_matrix(cb, list_of(c), UtilityMode::kTriangular, ScoreMode::kBoth);
    CHECK(cb.calls() == N * (N - 1));
    CHECK(b.forward_pass_count == N * (N - 1));
  }
}

TEST_CASE("both-mode model: triangular equals full") {
  auto data = testing::toy_synth(4, 3, 2).dataset;
  auto model = testing::toy_model(data, 5);
  CandidateList l{"seg", "s1 s3 s5", {"t1 t3 t5", "t1 x3 t5", "x1 x2", "t1", "t3 t5 x9"}, {}};
  auto full = utility_matrix(model, l, UtilityMode::kFull, ScoreMode::kBoth);
  auto tri = utility_matrix(model, l, UtilityMode::kTriangular, ScoreMode::kBoth, 2);
  CHECK((full.u - tri.u).cwiseAbs().maxCoeff() <= 1e-12);
  auto single = utility_matrix(model, l, UtilityMode::kFull);
  CHECK((single.u + single.u.transpose()).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("candidate list files") {
  testing::TempDir tmp("mbr");
  CandidateSynthConfig c;
  c.n_segments = 12;
  c.seed = 4;
  auto lists = generate_candidate_lists(c);
  CHECK(lists.size() == 12);
  CHECK(generate_candidate_lists(c) == lists);
  for (const auto& l : lists) {
    CHECK(l.candidates.size() == 8);
    REQUIRE(l.gold.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
      const double q = 10.0 * synthetic_correct_tokens(l.candidates[i]) /
                       split_whitespace(l.candidates[i]).size();
      CHECK(l.gold[i] == doctest::Approx(q));
    }
  }
  save_candidate_lists(lists, tmp.path / "c.jsonl");
  CHECK(load_candidate_lists(tmp.path / "c.jsonl") == lists);
  auto bare = parse_candidate_lists(
      "{\"seg\":\"a\",\"src\":\"s1\",\"cands\":[\"x\",\"y\"]}\n", "inline");
  REQUIRE(bare.size() == 1);
  CHECK(bare[0].gold.empty());
  CHECK_THROWS_AS(parse_candidate_lists("{\"seg\":\"a\"}\n", "inline"), DataError);
  CHECK_THROWS_AS(
      parse_candidate_lists("{\"seg\":\"a\",\"src\":\"s\",\"cands\":[]}\n", "inline"),
      DataError);
}

TEST_CASE("mbr run reports both modes and failures") {
  auto base = lopsided();
  FunctionScorer flaky([&](const std::string& s, const std::string& a,
                           const std::string& b) {
    if (s == "boom") return std::nan("");
    return base.score(s, a, b);
  });
  std::vector<CandidateList> lists{
      {"1", "ok", {"a", "bbb", "cc"}, {1.0, 3.0, 2.0}},
      {"2", "boom", {"a", "b"}, {0.0, 1.0}},
      {"3", "ok", {"only"}, {5.0}}};
  auto r = mbr_run(flaky, lists, UtilityMode::kTriangular);
  CHECK(r.failures == 1);
  CHECK_FALSE(r.segments[1].error.empty());
  CHECK(r.segments[0].selected == 1);
  CHECK_FALSE(r.segments[2].defined);
  CHECK(r.triangular_forward_passes == 3);
  CHECK(r.full_forward_passes == 6);
  CHECK(r.pass_ratio() == 0.5);
  REQUIRE(r.mean_gold);
  CHECK(*r.mean_gold == doctest::Approx(4.0));
  CHECK(r.selections_tsv().rfind("segment_id\tselected_index\texpected_utility\n", 0) == 0);
  CHECK(mbr_run(flaky, lists, UtilityMode::kTriangular, ScoreMode::kSinglePass, 3)
            .selections_tsv() == r.selections_tsv());
}
