#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pear/corpus.hpp"
#include "pear/inference.hpp"
#include "pear/score_table.hpp"
#include "pear/scorer.hpp"

namespace pear {

enum class SpaTail { kTwoSided, kOneSided };

struct SpaOptions {
  std::size_t resamples = 10000;
  std::uint64_t seed = 0;
  // Enumerate all 2^n sign patterns when n <= this.
  std::size_t exhaustive_below = 14;
  SpaTail tail = SpaTail::kTwoSided;
  int jobs = 1;
};

struct SignFlipResult {
  double p_human = 1.0;
  double p_metric = 1.0;
  bool exhaustive = false;
};

// Paired sign-flip permutation p-values of the mean for two aligned
// difference vectors, using the same sign patterns for both (common random
// numbers). Two-sided: share of patterns with |mean*| >= |mean|; one-sided:
// mean* >= mean. Sampled p-values are (count + 1) / (R + 1).
SignFlipResult sign_flip_p_values(std::span<const double> human,
                                  std::span<const double> metric,
                                  const SpaOptions& options,
                                  std::uint64_t seed);

struct SpaPair {
  std::string system_a;
  std::string system_b;
  std::size_t n_segments = 0;
  double human_mean = 0.0;
  double metric_mean = 0.0;
  double p_human = 1.0;
  double p_metric = 1.0;
  bool exhaustive = false;
};

struct SpaResult {
  double spa = 0.0;
  std::vector<SpaPair> pairs;
};

// Mean over unordered system pairs of 1 - |p_human - p_metric|. Each pair
// draws its sign patterns from derive_seed(options.seed, "a\tb").
SpaResult soft_pairwise_accuracy(const ScoreTable& human,
                                 const ScoreTable& metric,
                                 const SpaOptions& options = {});

double spa_from_p_values(std::span<const double> p_human,
                         std::span<const double> p_metric);

struct TieCalibration {
  double accuracy = 0.0;
  double epsilon = 0.0;
  std::size_t rows = 0;
};

// Three-way agreement of sign(human) with the metric decision under the
// best tie threshold; the smallest maximizing threshold is returned.
TieCalibration tie_calibrated_accuracy(std::span<const double> human,
                                       std::span<const double> metric);
// Accuracy at a fixed threshold.
double accuracy_at(std::span<const double> human,
                   std::span<const double> metric, double epsilon);
// Uses canonical rows (a < b) of `human`; each must exist in `metric`.
TieCalibration tie_calibrated_accuracy(const ScoreTable& human,
                                       const ScoreTable& metric);

double avg_corr(double spa, double acc_eq_star);

struct MetaEvalReport {
  double spa = 0.0;
  double acc_eq_star = 0.0;
  double epsilon_star = 0.0;
  double avg_corr = 0.0;
  std::size_t rows = 0;
  std::vector<SpaPair> pairs;

  nlohmann::ordered_json to_json() const;
};

MetaEvalReport meta_evaluate(const ScoreTable& human, const ScoreTable& metric,
                             const SpaOptions& options = {});

struct PearsonMatrix {
  std::vector<std::string> names;
  // NaN where undefined (zero variance).
  std::vector<std::vector<double>> r;
  std::size_t rows = 0;

  bool defined(std::size_t i, std::size_t j) const;
  nlohmann::ordered_json to_json() const;
};

double pearson(std::span<const double> x, std::span<const double> y);

// Pearson r over the canonical rows shared by every table.
PearsonMatrix pearson_diff_matrix(
    const std::vector<std::pair<std::string, ScoreTable>>& tables);

struct MetricVariant {
  std::string name;
  const PairScorer* scorer = nullptr;
};

struct RankTable {
  std::vector<std::string> variants;
  std::vector<std::string> anchors;
  // [variant][anchor]
  std::vector<std::vector<std::size_t>> ranks;
  std::vector<std::vector<double>> avg_corr;

  std::string to_tsv() const;
  nlohmann::ordered_json to_json() const;
};

// For each anchor, scores the remaining systems with every variant, meta-
// evaluates against human differences among those systems and ranks the
// variants by avg_corr (1 = best, ties by name).
RankTable anchor_rank_stability(const std::vector<MetricVariant>& variants,
                                const EvalDataset& dataset,
                                const std::vector<Anchor>& anchors,
                                ScoreMode mode, const SpaOptions& options);

}  // namespace pear
