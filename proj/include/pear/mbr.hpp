#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pear/encoder.hpp"
#include "pear/inference.hpp"
#include "pear/scorer.hpp"

namespace pear {

struct CandidateList {
  std::string segment_id;
  std::string source;
  std::vector<std::string> candidates;
  // Latent quality per candidate, present for synthetic lists.
  std::vector<double> gold;

  bool operator==(const CandidateList&) const = default;
};

// JSONL: {"seg":...,"src":...,"cands":[...]} with an optional "gold" array.
std::vector<CandidateList> load_candidate_lists(
    const std::filesystem::path& path);
std::vector<CandidateList> parse_candidate_lists(const std::string& text,
                                                 const std::string& origin);
void save_candidate_lists(const std::vector<CandidateList>& lists,
                          const std::filesystem::path& path);
std::string candidate_lists_to_jsonl(const std::vector<CandidateList>& lists);

struct CandidateSynthConfig {
  std::size_t n_segments = 200;
  std::size_t n_candidates = 8;
  std::size_t vocab_size = 60;
  std::size_t min_length = 6;
  std::size_t max_length = 12;
  double latent_gap_scale = 10.0;
  std::uint64_t seed = 1;
};

// N-best lists in the token scheme of generate_synthetic: each candidate
// keeps a random share of the ideal tokens; gold = scale * kept / length.
std::vector<CandidateList> generate_candidate_lists(
    const CandidateSynthConfig& config);

enum class UtilityMode { kFull, kTriangular };

UtilityMode parse_utility_mode(const std::string& text);
std::string to_string(UtilityMode mode);

struct UtilityMatrix {
  Matrix u;
  UtilityMode mode = UtilityMode::kFull;
  std::size_t pair_evaluations = 0;
  std::size_t forward_pass_count = 0;
};

// u[i][j] = score(src, c_i, c_j); zero diagonal without a scorer call.
// Triangular mode evaluates i < j and fills u[j][i] = -u[i][j].
UtilityMatrix utility_matrix(const PairScorer& scorer,
                             const CandidateList& list, UtilityMode mode,
                             ScoreMode scoring = ScoreMode::kSinglePass,
                             int jobs = 1);

struct MbrSelection {
  std::size_t index = 0;
  std::vector<double> expected_utility;
  // False for N = 1, where expected utility is undefined.
  bool defined = true;
};

// EU(i) = sum_{j != i} u[i][j] / (N - 1); smallest index among maxima.
MbrSelection mbr_select(const Matrix& u);
inline MbrSelection mbr_select(const UtilityMatrix& m) { return mbr_select(m.u); }

struct MbrSegmentResult {
  std::string segment_id;
  std::size_t selected = 0;
  double expected_utility = 0.0;
  bool defined = true;
  // Selection under the other utility mode, for disagreement accounting.
  std::size_t other_mode_selected = 0;
  std::optional<double> gold;
  std::string error;
};

struct MbrReport {
  UtilityMode mode = UtilityMode::kTriangular;
  ScoreMode scoring = ScoreMode::kSinglePass;
  std::vector<MbrSegmentResult> segments;
  std::size_t forward_passes = 0;
  std::size_t full_forward_passes = 0;
  std::size_t triangular_forward_passes = 0;
  std::size_t disagreements = 0;
  std::size_t failures = 0;
  std::optional<double> mean_gold;

  double pass_ratio() const;
  std::string selections_tsv() const;
  nlohmann::ordered_json to_json() const;
};

// Runs MBR per list. The full matrix is evaluated once; the triangular
// matrix reuses its upper triangle, so both selections are reported.
// Forward-pass counts are those each mode would need on its own. A failing
// list is recorded and skipped.
MbrReport mbr_run(const PairScorer& scorer,
                  const std::vector<CandidateList>& lists, UtilityMode mode,
                  ScoreMode scoring = ScoreMode::kSinglePass, int jobs = 1);

}  // namespace pear
