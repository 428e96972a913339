#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pear/corpus.hpp"
#include "pear/score_table.hpp"
#include "pear/scorer.hpp"

namespace pear {

enum class ScoreMode { kSinglePass, kBoth, kAnchored };

// Accepts "single", "single_pass", "both", "anchored".
ScoreMode parse_score_mode(const std::string& text);
std::string to_string(ScoreMode mode);

// single_pass: f(s, a, b). both: (f(s, a, b) - f(s, b, a)) / 2.
double score_pair(const PairScorer& scorer, const std::string& source,
                  const std::string& mt_a, const std::string& mt_b,
                  ScoreMode mode);

// f(s, mt, anchor), or its bidirectional combination in both mode.
double score_anchored(const PairScorer& scorer, const std::string& source,
                      const std::string& mt, const std::string& anchor,
                      ScoreMode mode);

// Scorer calls per pair evaluation.
inline std::size_t passes_per_evaluation(ScoreMode mode) {
  return mode == ScoreMode::kBoth ? 2 : 1;
}

struct SegmentPairScore {
  std::string segment_id;
  std::string system_a;
  std::string system_b;
  double score = 0.0;
};

struct SystemPairScore {
  std::string system_a;
  std::string system_b;
  double score = 0.0;
  std::size_t n_segments = 0;
};

struct SystemComparison {
  SystemPairScore system;
  std::vector<SegmentPairScore> segments;
  // Segments covered by only one of the two systems.
  std::vector<std::string> only_a;
  std::vector<std::string> only_b;

  nlohmann::ordered_json to_json() const;
};

// Mean segment score over the segments both systems cover.
SystemComparison system_compare(const PairScorer& scorer,
                                const EvalDataset& dataset,
                                const std::string& system_a,
                                const std::string& system_b, ScoreMode mode,
                                int jobs = 1);

struct Anchor {
  enum class Kind { kHumanRef, kSystem };
  Kind kind = Kind::kHumanRef;
  std::string system_id;

  // "ref" selects the human reference, anything else a system id.
  static Anchor parse(const std::string& text);
  std::string label() const;
};

struct AnchoredSystemScore {
  std::string system_id;
  double score = 0.0;
  std::size_t n_segments = 0;
};

struct AnchoredScores {
  std::string anchor;
  ScoreMode mode = ScoreMode::kBoth;
  std::vector<AnchoredSystemScore> systems;
  std::vector<AbsoluteScore> segment_scores;
  // Segments skipped because the anchor system has no output there.
  std::vector<std::string> anchor_gaps;
  std::size_t pair_evaluations = 0;
  std::size_t forward_passes = 0;

  nlohmann::ordered_json to_json() const;
};

// Scores each system against the anchor: one pair evaluation per
// (system, segment). An anchor system is removed from the scored set.
// `systems` empty means every system in the dataset. `mode` is the
// combination rule (single_pass or both).
AnchoredScores system_scores_anchored(const PairScorer& scorer,
                                      const EvalDataset& dataset,
                                      std::vector<std::string> systems,
                                      const Anchor& anchor, ScoreMode mode,
                                      int jobs = 1);

struct PairCoverageGap {
  std::string system_a;
  std::string system_b;
  std::vector<std::string> missing_segments;
};

struct ScoreMatrixResult {
  ScoreTable table;
  std::vector<PairCoverageGap> gaps;
  std::size_t scorer_calls = 0;
};

// All ordered system pairs on their shared segments. In both mode only
// a < b is computed and b > a is filled by negation.
ScoreMatrixResult score_matrix(const PairScorer& scorer,
                               const EvalDataset& dataset,
                               std::vector<std::string> systems,
                               ScoreMode mode, int jobs = 1);

}  // namespace pear
