#include <random>

#include "pear/consistency.hpp"
#include "pear/error.hpp"
#include "pear/inference.hpp"
#include "pear/mbr.hpp"
#include "pear/textio.hpp"
#include "run.hpp"

namespace pear::cli {

namespace {

struct Corpus {
  EvalDataset train, dev;
  double correlation = 0.0;
};

Corpus make_corpus(Run& run) {
  const auto& s = run.settings();
  SynthConfig c;
  c.n_segments = s.count("synth.n_segments");
  c.n_systems = s.count("synth.n_systems");
  c.noise_sd = s.real("synth.noise_sd");
  c.latent_gap_scale = s.real("synth.gap_scale");
  c.vocab_size = s.count("synth.vocab_size");
  c.min_length = s.count("synth.min_length");
  c.max_length = s.count("synth.max_length");
  c.seed = run.seed_for("synth");
  auto res = generate_synthetic(c);
  auto [train, dev] =
      split_dataset(res.dataset, s.real("train.train_fraction"),
                    s.real("train.dev_fraction"), run.seed_for("split"));
  run.write_text("data/train.jsonl", dataset_to_jsonl(train));
  run.write_text("data/dev.jsonl", dataset_to_jsonl(dev));
  return {std::move(train), std::move(dev), res.score_latent_correlation};
}

// Saves the model and its report under `dir`; returns the dev evaluation.
ojson evaluate_variant(Run& run, const std::string& dir,
                       const std::string& name, const TrainResult& result,
                       const EvalDataset& dev, const ScoreTable& human) {
  result.model.save(run.output(dir + "/model.ckpt"));
  run.write_json(dir + "/train_report.json", result.report.to_json());
  const auto table =
      score_matrix(result.model, dev, {}, ScoreMode::kSinglePass, run.jobs())
          .table;
  save_score_table(table, run.output(dir + "/scores.tsv"));
  const auto meta = meta_evaluate(human, table, spa_options_from(run));
  run.write_json(dir + "/metaeval.json", meta.to_json());
  ojson j;
  j["variant"] = name;
  j["spa"] = meta.spa;
  j["acc_eq_star"] = meta.acc_eq_star;
  j["epsilon_star"] = meta.epsilon_star;
  j["avg_corr"] = meta.avg_corr;
  j["selected_epoch"] = result.report.selected_epoch;
  j["epoch_train_loss"] = result.report.epoch_train_loss;
  j["dev_metric"] = result.report.dev_metric;
  return j;
}

ojson pairwise_vs_single(Run& run) {
  const auto corpus = make_corpus(run);
  const auto human = human_score_table(corpus.dev);
  const auto loss = loss_config_from(run.settings());
  const auto pear = train_fresh(run, corpus.train, corpus.dev, loss,
                                HeadKind::kPairwise);
  const auto single = train_fresh(run, corpus.train, corpus.dev, loss,
                                  HeadKind::kSingle);
  ojson r;
  r["recipe"] = "pairwise_vs_single";
  r["compared_by"] = "acc_eq_star";
  r["variants"] = {
      evaluate_variant(run, "pairwise", "pairwise", pear, corpus.dev, human),
      evaluate_variant(run, "single", "single", single, corpus.dev, human)};
  return r;
}

ojson flip_ablation(Run& run) {
  const auto corpus = make_corpus(run);
  const auto human = human_score_table(corpus.dev);
  ojson rows = ojson::array();
  std::vector<RelativeDeviations> dev;
  for (double lambda : {0.0, 0.1}) {
    auto loss = loss_config_from(run.settings());
    loss.lambda_flip = lambda;
    const auto res = train_fresh(run, corpus.train, corpus.dev, loss);
    const std::string dir = lambda == 0.0 ? "lambda_0" : "lambda_0.1";
    auto row = evaluate_variant(run, dir, dir, res, corpus.dev, human);
    const auto audit = audit_consistency(
        load_score_table(run.output(dir + "/scores.tsv")));
    run.write_json(dir + "/consistency.json", audit.to_json());
    row["lambda_flip"] = lambda;
    row["mu_delta"] = audit.deviations.mu_delta;
    row["rho_as"] = audit.to_json()["rho_as"];
    row["rho_tr"] = audit.to_json()["rho_tr"];
    dev.push_back(audit.deviations);
    rows.push_back(std::move(row));
  }
  ojson r;
  r["recipe"] = "flip_ablation";
  r["scoring"] = "single_pass";
  r["variants"] = std::move(rows);
  r["rho_as_decreased"] = dev[1].rho_as < dev[0].rho_as;
  r["rho_tr_not_increased"] = dev[1].rho_tr <= dev[0].rho_tr;
  return r;
}

ojson huber_vs_mse(Run& run) {
  const auto corpus = make_corpus(run);
  const auto human = human_score_table(corpus.dev);
  ojson rows = ojson::array();
  for (auto kind : {RegressionKind::kHuber, RegressionKind::kMse}) {
    auto loss = loss_config_from(run.settings());
    loss.regression = kind;
    const std::string name = kind == RegressionKind::kHuber ? "huber" : "mse";
    const auto res = train_fresh(run, corpus.train, corpus.dev, loss);
    rows.push_back(evaluate_variant(run, name, name, res, corpus.dev, human));
  }
  ojson r;
  r["recipe"] = "huber_vs_mse";
  r["variants"] = std::move(rows);
  return r;
}

ojson anchor_stability(Run& run) {
  const auto corpus = make_corpus(run);
  auto loss = loss_config_from(run.settings());
  std::vector<std::pair<std::string, Model>> models;
  models.emplace_back(
      "pear", train_fresh(run, corpus.train, corpus.dev, loss).model);
  auto no_flip = loss;
  no_flip.lambda_flip = 0.0;
  models.emplace_back(
      "pear_no_flip", train_fresh(run, corpus.train, corpus.dev, no_flip).model);
  models.emplace_back("single", train_fresh(run, corpus.train, corpus.dev, loss,
                                            HeadKind::kSingle)
                                    .model);
  std::vector<MetricVariant> variants;
  for (auto& [name, model] : models) {
    model.save(run.output(name + "/model.ckpt"));
    variants.push_back({name, &model});
  }
  std::vector<Anchor> anchors{Anchor::parse("ref")};
  for (const auto& s : corpus.dev.systems()) anchors.push_back(Anchor::parse(s));
  const auto table = anchor_rank_stability(
      variants, corpus.dev, anchors,
      parse_score_mode(run.settings().str("score.anchored_combine")),
      spa_options_from(run));
  run.write_text("ranks.tsv", table.to_tsv());
  ojson r = table.to_json();
  r["recipe"] = "anchor_stability";
  return r;
}

ojson mbr_demo(Run& run) {
  const auto& s = run.settings();
  const auto corpus = make_corpus(run);
  const auto res =
      train_fresh(run, corpus.train, corpus.dev, loss_config_from(s));
  res.model.save(run.output("model.ckpt"));
  CandidateSynthConfig cc;
  cc.n_segments = std::max<std::size_t>(200, s.count("synth.candidate_lists"));
  cc.n_candidates = s.count("synth.candidates");
  cc.vocab_size = s.count("synth.vocab_size");
  cc.min_length = s.count("synth.min_length");
  cc.max_length = s.count("synth.max_length");
  cc.latent_gap_scale = s.real("synth.gap_scale");
  cc.seed = run.seed_for("candidates");
  const auto lists = generate_candidate_lists(cc);
  run.write_text("candidates.jsonl", candidate_lists_to_jsonl(lists));

  const auto mode = parse_utility_mode(s.str("mbr.utility"));
  const auto scoring = parse_score_mode(s.str("score.mode"));
  const auto report = mbr_run(res.model, lists, mode, scoring, run.jobs());
  run.write_text("selections.tsv", report.selections_tsv());
  run.write_json("mbr_report.json", report.to_json());

  std::mt19937_64 rng(run.seed_for("random_selection"));
  double random_sum = 0.0, oracle_sum = 0.0, mbr_sum = 0.0;
  std::size_t wins = 0, n = 0;
  for (std::size_t i = 0; i < lists.size(); ++i) {
    if (!report.segments[i].error.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(
        0, lists[i].candidates.size() - 1);
    const double rnd = lists[i].gold[pick(rng)];
    const double sel = *report.segments[i].gold;
    random_sum += rnd;
    mbr_sum += sel;
    oracle_sum += *std::max_element(lists[i].gold.begin(), lists[i].gold.end());
    wins += sel > rnd ? 1 : 0;
    ++n;
  }
  if (n == 0) throw DataError(DataError::Code::kInvalidArgument, "no MBR result");
  ojson r;
  r["recipe"] = "mbr_demo";
  r["segments"] = n;
  r["utility"] = to_string(mode);
  r["scoring"] = to_string(scoring);
  r["mean_gold_mbr"] = mbr_sum / n;
  r["mean_gold_random"] = random_sum / n;
  r["mean_gold_oracle"] = oracle_sum / n;
  r["segments_mbr_better_than_random"] = wins;
  r["forward_passes"] = report.forward_passes;
  r["full_forward_passes"] = report.full_forward_passes;
  r["triangular_forward_passes"] = report.triangular_forward_passes;
  r["full_vs_triangular_disagreements"] = report.disagreements;
  return r;
}

}  // namespace

ojson run_recipe(Run& run, const std::string& recipe) {
  if (recipe == "pairwise_vs_single") return pairwise_vs_single(run);
  if (recipe == "flip_ablation") return flip_ablation(run);
  if (recipe == "huber_vs_mse") return huber_vs_mse(run);
  if (recipe == "anchor_stability") return anchor_stability(run);
  if (recipe == "mbr_demo") return mbr_demo(run);
  throw UsageError("unknown recipe '" + recipe + "'");
}

}  // namespace pear::cli
