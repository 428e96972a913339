#include "pear/score_table.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pear/error.hpp"
#include "pear/textio.hpp"

namespace pear {

using Code = DataError::Code;

ScoreTable::ScoreTable(std::vector<ScoreRow> rows) : rows_(std::move(rows)) {
  std::sort(rows_.begin(), rows_.end(), [](const ScoreRow& x, const ScoreRow& y) {
    return std::tie(x.segment_id, x.system_a, x.system_b) <
           std::tie(y.segment_id, y.system_a, y.system_b);
  });
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& r = rows_[i];
    if (!std::isfinite(r.score))
      throw DataError(Code::kIntegrity, "non-finite score for (" +
                                            r.segment_id + ", " + r.system_a +
                                            ", " + r.system_b + ")");
    if (r.system_a == r.system_b)
      throw DataError(Code::kIntegrity,
                      "self-comparison row for system '" + r.system_a + "'");
    if (!index_.emplace(Key{r.segment_id, r.system_a, r.system_b}, i).second)
      throw DataError(Code::kIntegrity, "duplicate row (" + r.segment_id +
                                            ", " + r.system_a + ", " +
                                            r.system_b + ")");
  }
}

std::optional<double> ScoreTable::find(const std::string& segment_id,
                                       const std::string& system_a,
                                       const std::string& system_b) const {
  auto it = index_.find(Key{segment_id, system_a, system_b});
  if (it == index_.end()) return std::nullopt;
  return rows_[it->second].score;
}

ScoreTable ScoreTable::canonical() const {
  std::vector<ScoreRow> out;
  for (const auto& r : rows_)
    if (r.system_a < r.system_b) out.push_back(r);
  return ScoreTable(std::move(out));
}

std::vector<std::string> ScoreTable::systems() const {
  std::set<std::string> s;
  for (const auto& r : rows_) {
    s.insert(r.system_a);
    s.insert(r.system_b);
  }
  return {s.begin(), s.end()};
}

std::vector<std::pair<std::string, std::string>> ScoreTable::system_pairs()
    const {
  std::set<std::pair<std::string, std::string>> s;
  for (const auto& r : rows_)
    s.insert(std::minmax(r.system_a, r.system_b));
  return {s.begin(), s.end()};
}

std::vector<std::string> ScoreTable::segments_for(
    const std::string& system_a, const std::string& system_b) const {
  std::vector<std::string> out;
  for (const auto& r : rows_)
    if (r.system_a == system_a && r.system_b == system_b)
      out.push_back(r.segment_id);
  return out;
}

namespace {
const std::vector<std::string> kHeader = {"segment_id", "system_a", "system_b",
                                          "score"};
}

std::string score_table_to_tsv(const ScoreTable& table) {
  std::string out = "segment_id\tsystem_a\tsystem_b\tscore\n";
  for (const auto& r : table.rows())
    out += textio::tsv_escape(r.segment_id) + '\t' +
           textio::tsv_escape(r.system_a) + '\t' +
           textio::tsv_escape(r.system_b) + '\t' +
           textio::format_double(r.score) + '\n';
  return out;
}

void save_score_table(const ScoreTable& table,
                      const std::filesystem::path& path) {
  textio::write_file(path, score_table_to_tsv(table));
}

ScoreTable load_score_table(const std::filesystem::path& path) {
  std::vector<ScoreRow> rows;
  std::size_t n = 0;
  for (auto& cols : textio::read_tsv(path, kHeader)) {
    ++n;
    const std::string where = path.string() + ": row " + std::to_string(n);
    rows.push_back({cols[0], cols[1], cols[2],
                    textio::parse_double(cols[3], where)});
  }
  return ScoreTable(std::move(rows));
}

DiffTableResult diff_table_from_absolute(
    const std::vector<AbsoluteScore>& scores) {
  std::map<std::string, std::map<std::string, double>> by_segment;
  std::set<std::string> systems;
  for (const auto& s : scores) {
    if (!std::isfinite(s.score))
      throw DataError(Code::kIntegrity, "non-finite score for (" +
                                            s.segment_id + ", " + s.system_id +
                                            ")");
    if (!by_segment[s.segment_id].emplace(s.system_id, s.score).second)
      throw DataError(Code::kIntegrity, "duplicate score for (" +
                                            s.segment_id + ", " + s.system_id +
                                            ")");
    systems.insert(s.system_id);
  }
  if (systems.size() < 2)
    throw DataError(Code::kInvalidArgument,
                    "difference table needs scores for >= 2 systems");
  DiffTableResult result;
  std::vector<ScoreRow> rows;
  for (const auto& [seg, m] : by_segment) {
    for (const auto& sys : systems)
      if (!m.count(sys)) result.gaps.push_back({seg, sys});
    for (const auto& [a, va] : m)
      for (const auto& [b, vb] : m)
        if (a != b) rows.push_back({seg, a, b, va - vb});
  }
  result.table = ScoreTable(std::move(rows));
  return result;
}

ScoreTable human_score_table(const EvalDataset& dataset) {
  std::vector<AbsoluteScore> scores;
  for (const auto& j : dataset.judgments())
    scores.push_back({j.segment_id, j.system_id, j.score});
  std::set<std::string> systems;
  for (const auto& s : scores) systems.insert(s.system_id);
  if (systems.size() < 2) return ScoreTable();
  return diff_table_from_absolute(scores).table;
}

}  // namespace pear
