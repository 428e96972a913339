#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "pear/corpus.hpp"

namespace pear {

struct ScoreRow {
  std::string segment_id;
  std::string system_a;
  std::string system_b;
  double score = 0.0;

  bool operator==(const ScoreRow&) const = default;
};

// Per-segment pairwise difference scores from one scorer. Rows are kept
// sorted by (segment_id, system_a, system_b); at most one row per key.
class ScoreTable {
 public:
  using Key = std::tuple<std::string, std::string, std::string>;

  ScoreTable() = default;
  explicit ScoreTable(std::vector<ScoreRow> rows);

  const std::vector<ScoreRow>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }

  std::optional<double> find(const std::string& segment_id,
                             const std::string& system_a,
                             const std::string& system_b) const;

  // Rows with system_a < system_b.
  ScoreTable canonical() const;
  // Sorted systems appearing in any row.
  std::vector<std::string> systems() const;
  // Sorted unordered system pairs (a < b) present in either orientation.
  std::vector<std::pair<std::string, std::string>> system_pairs() const;
  // Segment ids having a row for the ordered pair, sorted.
  std::vector<std::string> segments_for(const std::string& system_a,
                                        const std::string& system_b) const;

  bool operator==(const ScoreTable& other) const { return rows_ == other.rows_; }

 private:
  std::vector<ScoreRow> rows_;
  std::map<Key, std::size_t> index_;
};

// TSV with header: segment_id system_a system_b score.
ScoreTable load_score_table(const std::filesystem::path& path);
void save_score_table(const ScoreTable& table,
                      const std::filesystem::path& path);
std::string score_table_to_tsv(const ScoreTable& table);

struct AbsoluteScore {
  std::string segment_id;
  std::string system_id;
  double score = 0.0;
};

struct CoverageGap {
  std::string segment_id;
  std::string system_id;
};

struct DiffTableResult {
  ScoreTable table;
  // (segment, system) combinations absent while other systems are scored.
  std::vector<CoverageGap> gaps;
};

// m(s, a) - m(s, b) for every ordered pair of distinct systems scored on s.
DiffTableResult diff_table_from_absolute(
    const std::vector<AbsoluteScore>& scores);

// Human gold differences for all ordered pairs judged on the same segment.
ScoreTable human_score_table(const EvalDataset& dataset);

}  // namespace pear
