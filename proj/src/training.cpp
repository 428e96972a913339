#include "pear/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "pear/error.hpp"
#include "pear/metaeval.hpp"
#include "pear/parallel.hpp"

namespace pear {

void LossConfig::validate() const {
  if (!(delta > 0.0))
    throw DataError(DataError::Code::kInvalidArgument, "huber delta must be > 0");
  if (!(lambda_flip >= 0.0))
    throw DataError(DataError::Code::kInvalidArgument,
                    "lambda_flip must be >= 0");
}

LossValue huber(double r, double delta) {
  const double a = std::abs(r);
  if (a <= delta) return {0.5 * r * r, r};
  return {delta * (a - 0.5 * delta), r > 0 ? delta : -delta};
}

LossValue half_squared(double r) { return {0.5 * r * r, r}; }

LossValue flip_loss(double delta_ab, double delta_ba) {
  const double s = delta_ab + delta_ba;
  return {s * s, 2.0 * s};
}

LossBreakdown combine_losses(std::span<const double> ab,
                             std::span<const double> ba,
                             std::span<const double> star,
                             const LossConfig& cfg, std::span<double> grad_ab,
                             std::span<double> grad_ba) {
  const std::size_t n = ab.size();
  if (n == 0 || ba.size() != n || star.size() != n)
    throw DataError(DataError::Code::kInvalidArgument,
                    "loss batch must be non-empty and aligned");
  const bool want_grad = !grad_ab.empty();
  const double inv_n = 1.0 / static_cast<double>(n);
  LossBreakdown out;
  for (std::size_t i = 0; i < n; ++i) {
    double d_ab = 0.0, d_ba = 0.0;
    if (cfg.regression_term) {
      const double r = ab[i] - star[i];
      const auto reg = cfg.regression == RegressionKind::kHuber
                           ? huber(r, cfg.delta)
                           : half_squared(r);
      out.diff += reg.value * inv_n;
      d_ab += reg.derivative * inv_n;
    }
    const auto flip = flip_loss(ab[i], ba[i]);
    out.flip += flip.value * inv_n;
    d_ab += cfg.lambda_flip * flip.derivative * inv_n;
    d_ba += cfg.lambda_flip * flip.derivative * inv_n;
    if (want_grad) {
      grad_ab[i] = d_ab;
      grad_ba[i] = d_ba;
    }
  }
  out.total = out.diff + cfg.lambda_flip * out.flip;
  return out;
}

namespace {

constexpr std::uint64_t kOrderAb = 0;
constexpr std::uint64_t kOrderBa = 1;

void check_finite(double v, const std::string& what, std::size_t index) {
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "non-finite " << what << " (" << v << ") for batch example "
        << index;
    throw NumericError(msg.str());
  }
}

// Per-slot gradient buffers reused across steps.
class GradientSlots {
 public:
  void ensure(const ModelParams& like, std::size_t n) {
    while (slots_.size() < n) slots_.push_back(like.zeros_like());
  }
  ModelParams& operator[](std::size_t i) { return slots_[i]; }
  void zero(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) slots_[i] *= 0.0;
  }

 private:
  std::vector<ModelParams> slots_;
};

}  // namespace

LossBreakdown total_loss(std::span<const PairwiseExample> batch,
                         const Model& model, const LossConfig& cfg,
                         ModelParams* grads, const LossOptions& opt) {
  cfg.validate();
  const std::size_t n = batch.size();
  if (n == 0)
    throw DataError(DataError::Code::kInvalidArgument, "empty loss batch");

  std::vector<PairTrace> trace_ab(grads ? n : 0), trace_ba(grads ? n : 0);
  std::vector<double> ab(n), ba(n), star(n);
  parallel_for(n, opt.jobs, [&](std::size_t i) {
    const auto& ex = batch[i];
    const auto seed = derive_seed(opt.dropout_seed, i);
    ab[i] = model
                .forward_pair(model.serialize(ex.source, ex.mt_a, ex.mt_b),
                              opt.mode, derive_seed(seed, kOrderAb),
                              grads ? &trace_ab[i] : nullptr)
                .delta_hat;
    ba[i] = model
                .forward_pair(model.serialize(ex.source, ex.mt_b, ex.mt_a),
                              opt.mode, derive_seed(seed, kOrderBa),
                              grads ? &trace_ba[i] : nullptr)
                .delta_hat;
    star[i] = ex.delta_star;
  });
  for (std::size_t i = 0; i < n; ++i) {
    check_finite(ab[i], "forward score (a, b)", i);
    check_finite(ba[i], "forward score (b, a)", i);
  }

  std::vector<double> g_ab(n), g_ba(n);
  const auto loss = combine_losses(ab, ba, star, cfg, grads ? std::span(g_ab) : std::span<double>{},
                                   grads ? std::span(g_ba) : std::span<double>{});
  if (!grads) return loss;

  std::vector<ModelParams> per_example(n);
  parallel_for(n, opt.jobs, [&](std::size_t i) {
    per_example[i] = model.params().zeros_like();
    model.backward_pair(trace_ab[i], g_ab[i], per_example[i],
                        opt.alpha_trainable);
    model.backward_pair(trace_ba[i], g_ba[i], per_example[i],
                        opt.alpha_trainable);
    trace_ab[i] = {};
    trace_ba[i] = {};
  });
  for (const auto& g : per_example) *grads += g;
  return loss;
}

LossBreakdown single_loss(std::span<const ScoredCandidate> batch,
                          const Model& model, const LossConfig& cfg,
                          ModelParams* grads, const LossOptions& opt) {
  cfg.validate();
  const std::size_t n = batch.size();
  if (n == 0)
    throw DataError(DataError::Code::kInvalidArgument, "empty loss batch");
  std::vector<SingleTrace> traces(grads ? n : 0);
  std::vector<double> pred(n);
  parallel_for(n, opt.jobs, [&](std::size_t i) {
    pred[i] = model.forward_single(
        model.serialize(batch[i].source, batch[i].translation), opt.mode,
        derive_seed(opt.dropout_seed, i), grads ? &traces[i] : nullptr);
  });
  const double inv_n = 1.0 / static_cast<double>(n);
  LossBreakdown out;
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    check_finite(pred[i], "single score", i);
    const double r = pred[i] - batch[i].score;
    const auto reg = cfg.regression == RegressionKind::kHuber
                         ? huber(r, cfg.delta)
                         : half_squared(r);
    out.diff += reg.value * inv_n;
    d[i] = reg.derivative * inv_n;
  }
  out.total = out.diff;
  if (!grads) return out;
  std::vector<ModelParams> per_example(n);
  parallel_for(n, opt.jobs, [&](std::size_t i) {
    per_example[i] = model.params().zeros_like();
    model.backward_single(traces[i], d[i], per_example[i]);
    traces[i] = {};
  });
  for (const auto& g : per_example) *grads += g;
  return out;
}

// ---------------------------------------------------------------------------

AdamW::AdamW(const ModelParams& like, const TrainConfig& config)
    : config_(config), m_(like.zeros_like()), v_(like.zeros_like()) {}

void AdamW::step(ModelParams& params, const ModelParams& grads,
                 bool skip_alpha) {
  ++t_;
  const double lr = config_.learning_rate;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));

  std::vector<const Matrix*> g_list;
  ModelParams::visit(grads, [&g_list](const std::string&, const Matrix& g, bool) {
    g_list.push_back(&g);
  });
  std::vector<Matrix*> m_list, v_list;
  ModelParams::visit(m_, [&m_list](const std::string&, Matrix& m, bool) {
    m_list.push_back(&m);
  });
  ModelParams::visit(v_, [&v_list](const std::string&, Matrix& v, bool) {
    v_list.push_back(&v);
  });

  std::size_t i = 0;
  ModelParams::visit(params, [&](const std::string& name, Matrix& p, bool decays) {
    const std::size_t k = i++;
    if (skip_alpha && name == "head.alpha_raw") return;
    const Matrix& g = *g_list[k];
    Matrix& m = *m_list[k];
    Matrix& v = *v_list[k];
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    if (decays && config_.weight_decay != 0.0)
      p *= 1.0 - lr * config_.weight_decay;
    p.array() -= lr * (m.array() / c1) /
                 ((v.array() / c2).sqrt() + config_.adam_eps);
  });
}

// ---------------------------------------------------------------------------

nlohmann::ordered_json TrainReport::to_json() const {
  nlohmann::ordered_json j;
  j["epoch_train_loss"] = epoch_train_loss;
  j["dev_metric"] = dev_metric;
  j["dev_metric_name"] = "tie_calibrated_pairwise_accuracy";
  j["selected_epoch"] = selected_epoch;
  j["selected_checkpoint"] = selected_checkpoint;
  j["seed"] = seed;
  j["stage"] = stage;
  j["alpha_raw_initial"] = alpha_raw_initial;
  j["alpha_raw_final"] = alpha_raw_final;
  j["steps"] = steps;
  j["train_examples"] = train_examples;
  j["dev_examples"] = dev_examples;
  return j;
}

double dev_pair_accuracy(const Model& model,
                         std::span<const PairwiseExample> examples, int jobs) {
  std::vector<double> human(examples.size()), metric(examples.size());
  parallel_for(examples.size(), jobs, [&](std::size_t i) {
    human[i] = examples[i].delta_star;
    metric[i] =
        model.score(examples[i].source, examples[i].mt_a, examples[i].mt_b);
  });
  return tie_calibrated_accuracy(human, metric).accuracy;
}

namespace {

std::vector<ScoredCandidate> absolute_items(const EvalDataset& d) {
  std::vector<ScoredCandidate> items;
  for (const auto& j : d.judgments()) {
    const auto* seg = d.find_segment(j.segment_id);
    const auto* out = d.find_output(j.system_id, j.segment_id);
    items.push_back({seg->source_text, out->translation, j.score});
  }
  return items;
}

}  // namespace

TrainResult train(const EvalDataset& train_set, const EvalDataset& dev_set,
                  Model model, const TrainConfig& tc, const LossConfig& lc) {
  lc.validate();
  if (tc.batch_size == 0 || tc.epochs == 0)
    throw DataError(DataError::Code::kInvalidArgument,
                    "batch_size and epochs must be >= 1");
  {
    std::set<std::string> train_ids;
    for (const auto& s : train_set.segments()) train_ids.insert(s.id);
    for (const auto& s : dev_set.segments())
      if (train_ids.count(s.id))
        throw DataError(DataError::Code::kInvalidArgument,
                        "segment '" + s.id + "' is in both train and dev sets");
  }
  const bool single = model.config().head_kind == HeadKind::kSingle;
  const auto train_pairs = build_pairwise_examples(train_set).examples;
  const auto dev_pairs = build_pairwise_examples(dev_set).examples;
  const auto train_items = single ? absolute_items(train_set)
                                  : std::vector<ScoredCandidate>{};

  if (tc.stage == Stage::kStage2)
    model.params().head.alpha_raw(0, 0) = kInitialAlphaRaw;

  TrainReport report;
  report.seed = tc.seed;
  report.stage = tc.stage == Stage::kStage1 ? "stage1" : "stage2";
  report.alpha_raw_initial = model.params().head.alpha_raw_value();
  report.train_examples = single ? train_items.size() : train_pairs.size();
  report.dev_examples = dev_pairs.size();

  AdamW opt(model.params(), tc);
  Model best = model;
  double best_metric = -1.0;
  const std::size_t n = report.train_examples;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_rng(derive_seed(tc.seed, "shuffle"));
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < tc.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += tc.batch_size) {
      const std::size_t end = std::min(n, start + tc.batch_size);
      const std::uint64_t step_seed = derive_seed(tc.seed, 1'000'003ULL + step);
      LossOptions opts{Mode::kTrain, step_seed, !tc.alpha_frozen(), tc.jobs};
      ModelParams grads = model.params().zeros_like();
      LossBreakdown loss;
      try {
        if (single) {
          std::vector<ScoredCandidate> batch;
          for (std::size_t i = start; i < end; ++i)
            batch.push_back(train_items[order[i]]);
          loss = single_loss(batch, model, lc, &grads, opts);
        } else {
          std::vector<PairwiseExample> batch;
          std::mt19937_64 flip_rng(derive_seed(step_seed, "orientation"));
          std::bernoulli_distribution coin(0.5);
          for (std::size_t i = start; i < end; ++i) {
            const auto& ex = train_pairs[order[i]];
            batch.push_back(tc.randomize_orientation && coin(flip_rng)
                                ? ex.reversed()
                                : ex);
          }
          loss = total_loss(batch, model, lc, &grads, opts);
        }
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at step " +
                               std::to_string(step),
                           static_cast<long>(step));
      }
      if (!std::isfinite(loss.total) || loss.total > tc.divergence_threshold) {
        std::ostringstream msg;
        msg << "training diverged at step " << step << " (loss " << loss.total
            << ")";
        throw NumericError(msg.str(), static_cast<long>(step));
      }
      opt.step(model.params(), grads, tc.alpha_frozen());
      loss_sum += loss.total * static_cast<double>(end - start);
      ++step;
    }
    report.epoch_train_loss.push_back(loss_sum / static_cast<double>(n));
    const double metric = dev_pair_accuracy(model, dev_pairs, tc.jobs);
    report.dev_metric.push_back(metric);
    if (metric > best_metric) {
      best_metric = metric;
      best = model;
      report.selected_epoch = epoch + 1;
    }
  }
  report.steps = step;
  report.selected_checkpoint = "epoch-" + std::to_string(report.selected_epoch);
  report.alpha_raw_final = best.params().head.alpha_raw_value();
  return {std::move(best), std::move(report)};
}

// ---------------------------------------------------------------------------

nlohmann::ordered_json GradCheckReport::to_json() const {
  nlohmann::ordered_json j;
  j["max_rel_error"] = max_rel_error;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& g : groups) {
    arr.push_back({{"group", g.name},
                   {"max_rel_error", g.max_rel_error},
                   {"excluded", g.excluded},
                   {"entries", g.entries}});
  }
  j["groups"] = std::move(arr);
  return j;
}

GradCheckReport grad_check(const Model& model,
                           std::span<const PairwiseExample> batch,
                           const LossConfig& cfg, double h, bool alpha_frozen) {
  LossOptions opts{Mode::kEval, 0, !alpha_frozen, 1};
  ModelParams analytic = model.params().zeros_like();
  total_loss(batch, model, cfg, &analytic, opts);

  std::vector<const Matrix*> grads;
  ModelParams::visit(analytic, [&grads](const std::string&, const Matrix& g, bool) {
    grads.push_back(&g);
  });

  Model probe = model;
  GradCheckReport report;
  std::size_t k = 0;
  ModelParams::visit(probe.params(), [&](const std::string& name, Matrix& p, bool) {
    const Matrix& a = *grads[k++];
    GradCheckGroup group{name, 0.0, false, static_cast<std::size_t>(p.size())};
    if (alpha_frozen && name == "head.alpha_raw") {
      group.excluded = true;
      report.groups.push_back(group);
      return;
    }
    Matrix numeric(p.rows(), p.cols());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double saved = p.data()[i];
      p.data()[i] = saved + h;
      const double up = total_loss(batch, probe, cfg, nullptr, opts).total;
      p.data()[i] = saved - h;
      const double down = total_loss(batch, probe, cfg, nullptr, opts).total;
      p.data()[i] = saved;
      numeric.data()[i] = (up - down) / (2.0 * h);
    }
    const double scale =
        std::max({a.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff(), 1e-8});
    group.max_rel_error = (a - numeric).cwiseAbs().maxCoeff() / scale;
    report.max_rel_error = std::max(report.max_rel_error, group.max_rel_error);
    report.groups.push_back(group);
  });
  return report;
}

}  // namespace pear
