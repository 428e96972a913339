#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "pear/error.hpp"
#include "pear/score_table.hpp"

using namespace pear;

TEST_CASE("rows are sorted and looked up by ordered key") {
  ScoreTable t({{"s2", "B", "A", -1.0}, {"s1", "A", "B", 0.5}, {"s2", "A", "B", 1.0}});
  CHECK(t.rows().front().segment_id == "s1");
  CHECK(*t.find("s2", "B", "A") == -1.0);
  CHECK_FALSE(t.find("s1", "B", "A"));
  CHECK(t.canonical().size() == 2);
  CHECK(t.systems() == std::vector<std::string>{"A", "B"});
  CHECK(t.system_pairs().size() == 1);
  CHECK(t.segments_for("A", "B") == std::vector<std::string>{"s1", "s2"});
  CHECK(t.segments_for("B", "A") == std::vector<std::string>{"s2"});
}

TEST_CASE("table integrity") {
  CHECK_THROWS_AS(ScoreTable({{"s", "A", "B", 1.0}, {"s", "A", "B", 2.0}}),
                  DataError);
  CHECK_THROWS_AS(ScoreTable({{"s", "A", "A", 0.0}}), DataError);
  CHECK_THROWS_AS(ScoreTable({{"s", "A", "B", INFINITY}}), DataError);
}

TEST_CASE("tsv round trip is exact") {
  testing::TempDir tmp("score_table");
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  std::vector<ScoreRow> rows;
  for (int s = 0; s < 20; ++s)
    rows.push_back({"seg" + std::to_string(s), "A\tx", "B", n(rng) / 3.0});
  ScoreTable t(rows);
  save_score_table(t, tmp.path / "t.tsv");
  CHECK(load_score_table(tmp.path / "t.tsv") == t);
  CHECK(score_table_to_tsv(t).rfind("segment_id\tsystem_a\tsystem_b\tscore\n", 0) == 0);
}

TEST_CASE("diff table from absolute scores") {
  auto r = diff_table_from_absolute({{"s", "A", 0.9}, {"s", "B", 0.7}});
  REQUIRE(r.table.size() == 2);
  CHECK(*r.table.find("s", "A", "B") == doctest::Approx(0.2));
  CHECK(*r.table.find("s", "B", "A") == doctest::Approx(-0.2));

  auto c = diff_table_from_absolute(
      {{"s", "A", 3.0}, {"s", "B", 3.0}, {"s", "C", 3.0}});
  for (const auto& row : c.table.rows()) CHECK(row.score == 0.0);
  CHECK(c.table.size() == 6);

  auto gap = diff_table_from_absolute(
      {{"s1", "A", 1.0}, {"s1", "B", 2.0}, {"s2", "A", 1.0}});
  REQUIRE(gap.gaps.size() == 1);
  CHECK(gap.gaps[0].segment_id == "s2");
  CHECK(gap.gaps[0].system_id == "B");
}

TEST_CASE("property: derived tables are antisymmetric and additive") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0, 10);
  std::vector<AbsoluteScore> abs;
  for (int s = 0; s < 15; ++s)
    for (const char* sys : {"A", "B", "C", "D"})
      abs.push_back({"s" + std::to_string(s), sys, n(rng)});
  auto t = diff_table_from_absolute(abs).table;
  for (const auto& row : t.rows()) {
    CHECK(std::abs(row.score + *t.find(row.segment_id, row.system_b,
                                       row.system_a)) <= 1e-12);
    for (const char* c : {"A", "B", "C", "D"}) {
      if (c == row.system_a || c == row.system_b) continue;
      const double ac = *t.find(row.segment_id, row.system_a, c);
      const double bc = *t.find(row.segment_id, row.system_b, c);
      CHECK(std::abs(ac - row.score - bc) <= 1e-12);
    }
  }
}

TEST_CASE("human table uses judged pairs") {
  auto d = load_dataset(PEAR_FIXTURES "/three_segments.jsonl",
                        DatasetFormat::kJsonl);
  auto h = human_score_table(d);
  CHECK(h.size() == 4);
  CHECK(*h.find("s1", "A", "B") == 5.0);
  CHECK(*h.find("s2", "B", "A") == 0.0);
  CHECK_FALSE(h.find("s3", "A", "B"));
}
