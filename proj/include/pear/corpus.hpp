#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pear {

struct Segment {
  std::string id;
  std::string source_text;
  std::string language_pair;

  bool operator==(const Segment&) const = default;
};

struct SystemOutput {
  std::string system_id;
  std::string segment_id;
  std::string translation;

  bool operator==(const SystemOutput&) const = default;
};

struct HumanJudgment {
  std::string segment_id;
  std::string system_id;
  double score = 0.0;

  bool operator==(const HumanJudgment&) const = default;
};

// One supervised comparison: candidate a vs candidate b of one source.
// delta_star = score(a) - score(b) in raw human units.
struct PairwiseExample {
  std::string segment_id;
  std::string system_a;
  std::string system_b;
  std::string source;
  std::string mt_a;
  std::string mt_b;
  double delta_star = 0.0;

  // The same comparison seen from the other side.
  PairwiseExample reversed() const;
};

// Segments, outputs, judgments and optional references. Collections are kept
// sorted by id so iteration order is deterministic regardless of input order.
// Construction validates referential integrity and throws DataError.
class EvalDataset {
 public:
  EvalDataset() = default;
  EvalDataset(std::vector<Segment> segments, std::vector<SystemOutput> outputs,
              std::vector<HumanJudgment> judgments,
              std::map<std::string, std::string> references = {});

  const std::vector<Segment>& segments() const { return segments_; }
  const std::vector<SystemOutput>& outputs() const { return outputs_; }
  const std::vector<HumanJudgment>& judgments() const { return judgments_; }
  const std::map<std::string, std::string>& references() const {
    return references_;
  }

  // Sorted, de-duplicated system ids appearing in outputs.
  std::vector<std::string> systems() const;

  const Segment* find_segment(const std::string& id) const;
  const SystemOutput* find_output(const std::string& system_id,
                                  const std::string& segment_id) const;
  std::optional<double> find_judgment(const std::string& segment_id,
                                      const std::string& system_id) const;
  const std::string* find_reference(const std::string& segment_id) const;

  // Segment ids for which `system_id` has an output, sorted.
  std::vector<std::string> segments_covered_by(
      const std::string& system_id) const;

  // Restricts the dataset to the given segment ids.
  EvalDataset subset(const std::vector<std::string>& segment_ids) const;

  bool operator==(const EvalDataset& other) const;

 private:
  void index();

  std::vector<Segment> segments_;
  std::vector<SystemOutput> outputs_;
  std::vector<HumanJudgment> judgments_;
  std::map<std::string, std::string> references_;

  std::map<std::string, std::size_t> segment_index_;
  std::map<std::pair<std::string, std::string>, std::size_t> output_index_;
  std::map<std::pair<std::string, std::string>, std::size_t> judgment_index_;
};

enum class DatasetFormat { kJsonl, kTsv };

// JSONL: one file. TSV: a directory holding segments.tsv, outputs.tsv,
// judgments.tsv and (optionally) refs.tsv, each with a header row.
EvalDataset load_dataset(const std::filesystem::path& path,
                         DatasetFormat format);
void save_dataset(const EvalDataset& dataset,
                  const std::filesystem::path& path, DatasetFormat format);

// Parses JSONL from a string; `origin` names the source in error messages.
EvalDataset parse_dataset_jsonl(const std::string& text,
                                const std::string& origin = "<string>");
std::string dataset_to_jsonl(const EvalDataset& dataset);

struct PairingPolicy {
  enum class Kind { kAllSystemPairs, kSampledPerSegment };
  Kind kind = Kind::kAllSystemPairs;
  std::size_t k = 0;
  std::uint64_t seed = 0;

  static PairingPolicy all_pairs() { return {}; }
  static PairingPolicy sampled(std::size_t k, std::uint64_t seed) {
    return {Kind::kSampledPerSegment, k, seed};
  }
};

struct PairBuildResult {
  std::vector<PairwiseExample> examples;
  // System pairs with outputs on a segment where a judgment was missing.
  std::size_t skipped = 0;
};

// Each unordered system pair with both judgments is emitted once per
// segment, oriented so system_a < system_b. Throws DataError
// (kEmptySupervision) when no segment has two judged systems.
PairBuildResult build_pairwise_examples(const EvalDataset& dataset,
                                        const PairingPolicy& policy = {});

struct SynthConfig {
  std::size_t n_segments = 200;
  std::size_t n_systems = 4;
  // Human-score units spanned by a candidate going from no correct token
  // to a perfect copy of the ideal sequence.
  double latent_gap_scale = 10.0;
  double noise_sd = 0.0;
  std::size_t vocab_size = 60;
  std::size_t min_length = 6;
  std::size_t max_length = 12;
  std::uint64_t seed = 1;
};

struct SynthResult {
  EvalDataset dataset;
  // Latent quality per (segment_id, system_id).
  std::map<std::pair<std::string, std::string>, double> latent;
  // Pearson correlation between emitted human scores and latent quality.
  double score_latent_correlation = 0.0;
};

// Seeded toy corpus. Source tokens are "s<k>", the hidden ideal translation
// is the matching "t<k>" sequence, and each system output keeps a subset of
// the ideal tokens, replacing the rest with noise tokens "x<k>". Latent
// quality is latent_gap_scale * kept / length, so it is recoverable from the
// text; human score = latent + N(0, noise_sd). References hold the ideal.
SynthResult generate_synthetic(const SynthConfig& config);

// Counts tokens of a synthetic candidate that are not noise tokens.
std::size_t synthetic_correct_tokens(const std::string& candidate);

// Segment-level split. Fractions are of the segment count.
std::pair<EvalDataset, EvalDataset> split_dataset(const EvalDataset& dataset,
                                                  double train_fraction,
                                                  double dev_fraction,
                                                  std::uint64_t seed);

std::vector<std::string> split_whitespace(const std::string& text);

}  // namespace pear
