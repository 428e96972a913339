#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pear/corpus.hpp"
#include "pear/model.hpp"

namespace pear {

enum class RegressionKind { kHuber, kMse };

struct LossConfig {
  double delta = 4.5;
  double lambda_flip = 0.1;
  RegressionKind regression = RegressionKind::kHuber;
  // Off for flip-only objectives (gradient checks of the regularizer).
  bool regression_term = true;

  void validate() const;
};

struct LossValue {
  double value = 0.0;
  double derivative = 0.0;
};

// r^2 / 2 inside [-delta, delta], delta (|r| - delta / 2) outside.
LossValue huber(double r, double delta);
// r^2 / 2, the ablation counterpart of huber.
LossValue half_squared(double r);
// (ab + ba)^2; `derivative` is the partial w.r.t. either argument.
LossValue flip_loss(double delta_ab, double delta_ba);

struct LossBreakdown {
  double total = 0.0;
  double diff = 0.0;  // mean regression term
  double flip = 0.0;  // mean flip term (unweighted)
};

// Combines per-example predictions into the batch objective
//   L = mean regression(ab - star) + lambda * mean (ab + ba)^2.
// When the gradient spans are non-empty they receive dL/d(ab), dL/d(ba).
LossBreakdown combine_losses(std::span<const double> delta_ab,
                             std::span<const double> delta_ba,
                             std::span<const double> delta_star,
                             const LossConfig& config,
                             std::span<double> grad_ab = {},
                             std::span<double> grad_ba = {});

struct LossOptions {
  Mode mode = Mode::kEval;
  std::uint64_t dropout_seed = 0;
  bool alpha_trainable = true;
  int jobs = 1;
};

// Scores each example in both orders, forms the objective and, if `grads`
// is given, accumulates parameter gradients in example order (so the sum is
// independent of `jobs`). Throws NumericError on a non-finite forward value.
LossBreakdown total_loss(std::span<const PairwiseExample> batch,
                         const Model& model, const LossConfig& config,
                         ModelParams* grads = nullptr,
                         const LossOptions& options = {});

// Absolute-score regression for single-head baselines.
struct ScoredCandidate {
  std::string source;
  std::string translation;
  double score = 0.0;
};

LossBreakdown single_loss(std::span<const ScoredCandidate> batch,
                          const Model& model, const LossConfig& config,
                          ModelParams* grads = nullptr,
                          const LossOptions& options = {});

enum class Stage { kStage1, kStage2 };

struct TrainConfig {
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 16;
  std::size_t epochs = 5;
  std::uint64_t seed = 0;
  Stage stage = Stage::kStage2;
  int jobs = 1;
  // Swap candidate order per example with probability 1/2 each epoch.
  bool randomize_orientation = true;
  double divergence_threshold = 1e6;

  // alpha_raw stays fixed during stage 1.
  bool alpha_frozen() const { return stage == Stage::kStage1; }
};

// Decoupled-weight-decay Adam. Tensors flagged as non-decaying (biases,
// layer-norm parameters, alpha_raw) only get the Adam step.
class AdamW {
 public:
  AdamW(const ModelParams& like, const TrainConfig& config);
  void step(ModelParams& params, const ModelParams& grads, bool skip_alpha);
  std::size_t steps() const { return t_; }

 private:
  TrainConfig config_;
  ModelParams m_, v_;
  std::size_t t_ = 0;
};

struct TrainReport {
  std::vector<double> epoch_train_loss;
  std::vector<double> dev_metric;  // tie-calibrated pairwise accuracy
  std::size_t selected_epoch = 0;  // 1-based
  std::string selected_checkpoint;
  std::uint64_t seed = 0;
  std::string stage;
  double alpha_raw_initial = 0.0;
  double alpha_raw_final = 0.0;
  std::size_t steps = 0;
  std::size_t train_examples = 0;
  std::size_t dev_examples = 0;

  nlohmann::ordered_json to_json() const;
};

struct TrainResult {
  Model model;  // best epoch by dev metric
  TrainReport report;
};

// Trains for `epochs` epochs and returns the parameters of the epoch with
// the best dev metric (earliest on ties). Pairwise models train on
// pairwise examples; single-head models regress absolute judgments of the
// same training segments. Throws DataError if train and dev share a
// segment, NumericError on divergence.
TrainResult train(const EvalDataset& train_set, const EvalDataset& dev_set,
                  Model model, const TrainConfig& train_config,
                  const LossConfig& loss_config);

// Dev statistic used for checkpoint selection.
double dev_pair_accuracy(const Model& model,
                         std::span<const PairwiseExample> examples, int jobs);

struct GradCheckGroup {
  std::string name;
  double max_rel_error = 0.0;
  bool excluded = false;
  std::size_t entries = 0;
};

struct GradCheckReport {
  std::vector<GradCheckGroup> groups;
  double max_rel_error = 0.0;
  bool passed(double tolerance) const { return max_rel_error <= tolerance; }
  nlohmann::ordered_json to_json() const;
};

// Central differences (L(p + h) - L(p - h)) / 2h against the analytic
// gradient, per tensor: max|a - n| / max(max|a|, max|n|, 1e-8). Eval mode.
// alpha_raw is reported as excluded when frozen.
GradCheckReport grad_check(const Model& model,
                           std::span<const PairwiseExample> batch,
                           const LossConfig& loss_config, double step,
                           bool alpha_frozen = false);

}  // namespace pear
