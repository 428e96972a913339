#include <CLI11.hpp>

#include <algorithm>
#include <deque>
#include <fstream>
#include <iostream>
#include <sstream>

#include "pear/cli.hpp"
#include "pear/consistency.hpp"
#include "pear/error.hpp"
#include "pear/inference.hpp"
#include "pear/mbr.hpp"
#include "pear/parallel.hpp"
#include "pear/textio.hpp"
#include "run.hpp"

namespace pear::cli {

namespace fs = std::filesystem;

namespace {

// Flag storage for one subcommand: generic flags shared by every command,
// setting-backed flags and command-specific strings.
struct Spec {
  CLI::App* app = nullptr;
  std::string config;
  std::string out;
  std::vector<std::string> sets;
  struct Bound {
    CLI::Option* option;
    std::string key;
    std::string value;
  };
  std::deque<Bound> bound;
  std::map<std::string, std::string> text;
  std::map<std::string, std::vector<std::string>> lists;

  void setting(const std::string& flag, const std::string& key,
               const std::string& help,
               const std::vector<std::string>& choices = {}) {
    auto& b = bound.emplace_back();
    b.key = key;
    b.option = app->add_option(flag, b.value, help + " [" + key + "]");
    if (!choices.empty()) b.option->check(CLI::IsMember(choices));
  }
  void string(const std::string& flag, const std::string& help,
              bool required = false) {
    const std::string name = flag.substr(flag.find_first_not_of('-'));
    auto* o = app->add_option(flag, text[name], help);
    if (required) o->required();
  }
  void many(const std::string& flag, const std::string& help) {
    const std::string name = flag.substr(flag.find_first_not_of('-'));
    app->add_option(flag, lists[name], help);
  }
  const std::string& get(const std::string& name) { return text[name]; }
};

Spec& make(std::deque<Spec>& specs, CLI::App& root, const std::string& name,
           const std::string& help, bool needs_out = true) {
  auto& s = specs.emplace_back();
  s.app = root.add_subcommand(name, help);
  s.app->add_option("--config", s.config, "INI file with [section] key = value");
  auto* out = s.app->add_option("--out", s.out, "output directory");
  if (needs_out) out->required();
  s.app->add_option("--set", s.sets, "override a setting: section.key=value");
  s.setting("--seed", "run.seed", "base random seed");
  s.setting("--jobs", "run.jobs", "worker threads");
  return s;
}

Settings resolve(Spec& s) {
  Settings settings(default_settings());
  if (!s.config.empty()) settings.merge_ini(s.config);
  for (const auto& kv : s.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw UsageError("--set expects section.key=value, got '" + kv + "'");
    settings.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  for (const auto& b : s.bound)
    if (b.option->count()) settings.set(b.key, b.value);
  return settings;
}

void print_summary(Run& run, ojson summary) {
  ojson line;
  line["command"] = run.command();
  line["out"] = run.out_dir().string();
  for (auto& [k, v] : summary.items()) line[k] = v;
  run.out() << line.dump() << '\n';
}

ScoreMode pair_mode(const Settings& s) {
  return parse_score_mode(s.str("score.mode"));
}

// ---------------------------------------------------------------------------

void cmd_gen_synth(Run& run) {
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
  const auto res = generate_synthetic(c);

  const auto& fmt = s.str("synth.format");
  std::string data_name;
  if (fmt == "jsonl") {
    data_name = "dataset.jsonl";
    run.write_text(data_name, dataset_to_jsonl(res.dataset));
  } else if (fmt == "tsv") {
    data_name = "dataset";
    const auto dir = run.output(data_name);
    fs::create_directories(dir);
    save_dataset(res.dataset, dir, DatasetFormat::kTsv);
  } else {
    throw UsageError("synth.format must be jsonl or tsv");
  }

  std::string latent = "segment_id\tsystem_id\tlatent\n";
  for (const auto& [key, q] : res.latent)
    latent += key.first + '\t' + key.second + '\t' + textio::format_double(q) +
              '\n';
  run.write_text("latent.tsv", latent);

  ojson report;
  report["dataset"] = data_name;
  report["segments"] = res.dataset.segments().size();
  report["systems"] = res.dataset.systems().size();
  report["judgments"] = res.dataset.judgments().size();
  report["score_latent_correlation"] = res.score_latent_correlation;

  const auto lists = s.count("synth.candidate_lists");
  if (lists > 0) {
    CandidateSynthConfig cc;
    cc.n_segments = lists;
    cc.n_candidates = s.count("synth.candidates");
    cc.vocab_size = c.vocab_size;
    cc.min_length = c.min_length;
    cc.max_length = c.max_length;
    cc.latent_gap_scale = c.latent_gap_scale;
    cc.seed = run.seed_for("candidates");
    run.write_text("candidates.jsonl",
                   candidate_lists_to_jsonl(generate_candidate_lists(cc)));
    report["candidate_lists"] = lists;
  }
  run.write_json("synth_report.json", report);
  print_summary(run, {{"score_latent_correlation", res.score_latent_correlation}});
}

void cmd_train(Run& run, Spec& spec) {
  const auto& s = run.settings();
  const auto data = read_dataset(run, spec.get("data"));
  EvalDataset train_set, dev_set;
  if (!spec.get("dev").empty()) {
    train_set = data;
    dev_set = read_dataset(run, spec.get("dev"));
  } else {
    std::tie(train_set, dev_set) =
        split_dataset(data, s.real("train.train_fraction"),
                      s.real("train.dev_fraction"), run.seed_for("split"));
  }
  const auto loss = loss_config_from(s);
  TrainResult result;
  if (!spec.get("init").empty()) {
    run.input("init", spec.get("init"));
    result = train(train_set, dev_set, Model::load(spec.get("init")),
                   train_config_from(run), loss);
  } else {
    result = train_fresh(run, train_set, dev_set, loss);
  }
  result.model.save(run.output("model.ckpt"));
  result.model.vocab().save(run.output("vocab.txt"));
  auto report = result.report.to_json();
  report["lambda_flip"] = loss.lambda_flip;
  report["delta"] = loss.delta;
  report["loss"] = s.str("train.loss");
  run.write_json("train_report.json", report);
  print_summary(run, {{"selected_epoch", result.report.selected_epoch},
                      {"dev_metric", result.report.dev_metric}});
}

void cmd_score(Run& run, Spec& spec) {
  const auto& s = run.settings();
  run.input("model", spec.get("model"));
  const auto model = Model::load(spec.get("model"));
  const auto data = read_dataset(run, spec.get("data"));
  const auto mode = pair_mode(s);
  if (mode == ScoreMode::kAnchored) {
    const auto anchored = system_scores_anchored(
        model, data, {}, Anchor::parse(s.str("score.anchor")),
        parse_score_mode(s.str("score.anchored_combine")), run.jobs());
    std::string tsv = "segment_id\tsystem_id\tscore\n";
    for (const auto& r : anchored.segment_scores)
      tsv += textio::tsv_escape(r.segment_id) + '\t' +
             textio::tsv_escape(r.system_id) + '\t' +
             textio::format_double(r.score) + '\n';
    run.write_text("anchored_scores.tsv", tsv);
    run.write_json("score_report.json", anchored.to_json());
    print_summary(run, {{"pair_evaluations", anchored.pair_evaluations}});
    return;
  }
  const auto res = score_matrix(model, data, {}, mode, run.jobs());
  save_score_table(res.table, run.output("scores.tsv"));
  ojson report;
  report["mode"] = to_string(mode);
  report["rows"] = res.table.size();
  report["scorer_calls"] = res.scorer_calls;
  auto gaps = ojson::array();
  for (const auto& g : res.gaps)
    gaps.push_back({{"system_a", g.system_a},
                    {"system_b", g.system_b},
                    {"missing_segments", g.missing_segments}});
  report["coverage_gaps"] = std::move(gaps);
  run.write_json("score_report.json", report);
  print_summary(run, {{"rows", res.table.size()}});
}

void cmd_eval_systems(Run& run, Spec& spec) {
  const auto& s = run.settings();
  run.input("model", spec.get("model"));
  const auto model = Model::load(spec.get("model"));
  const auto data = read_dataset(run, spec.get("data"));
  const auto mode = pair_mode(s);
  ojson report;
  if (mode == ScoreMode::kAnchored) {
    report = system_scores_anchored(
                 model, data, {}, Anchor::parse(s.str("score.anchor")),
                 parse_score_mode(s.str("score.anchored_combine")), run.jobs())
                 .to_json();
  } else {
    report["mode"] = to_string(mode);
    auto pairs = ojson::array();
    const auto systems = data.systems();
    for (const auto& a : systems)
      for (const auto& b : systems) {
        if (a == b) continue;
        pairs.push_back(
            system_compare(model, data, a, b, mode, run.jobs()).to_json());
      }
    report["pairs"] = std::move(pairs);
  }
  run.write_json("system_scores.json", report);
  print_summary(run, {});
}

void cmd_metaeval(Run& run, Spec& spec) {
  ScoreTable human;
  if (!spec.get("human").empty()) {
    run.input("human", spec.get("human"));
    human = load_score_table(spec.get("human"));
  } else if (!spec.get("data").empty()) {
    human = human_score_table(read_dataset(run, spec.get("data")));
  } else {
    throw UsageError("metaeval needs --data or --human");
  }
  run.input("metric", spec.get("metric"));
  const auto metric = load_score_table(spec.get("metric"));
  const auto report = meta_evaluate(human, metric, spa_options_from(run));
  run.write_json("metaeval.json", report.to_json());
  print_summary(run, {{"spa", report.spa},
                      {"acc_eq_star", report.acc_eq_star},
                      {"avg_corr", report.avg_corr}});
}

void cmd_audit(Run& run, Spec& spec) {
  run.input("scores", spec.get("scores"));
  const auto report = audit_consistency(load_score_table(spec.get("scores")));
  run.write_json("consistency.json", report.to_json());
  print_summary(run, {{"rho_as", report.to_json()["rho_as"]},
                      {"rho_tr", report.to_json()["rho_tr"]}});
}

std::pair<std::string, std::string> named_path(const std::string& arg,
                                               const std::string& flag) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size())
    throw UsageError(flag + " expects name=path, got '" + arg + "'");
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

void cmd_corr(Run& run, Spec& spec) {
  std::vector<std::pair<std::string, ScoreTable>> tables;
  for (const auto& arg : spec.lists["table"]) {
    auto [name, path] = named_path(arg, "--table");
    run.input("table:" + name, path);
    tables.emplace_back(name, load_score_table(path));
  }
  if (tables.empty()) throw UsageError("corr needs at least one --table");
  const auto m = pearson_diff_matrix(tables);
  run.write_json("pearson.json", m.to_json());
  print_summary(run, {{"rows", m.rows}});
}

void cmd_mbr(Run& run, Spec& spec) {
  const auto& s = run.settings();
  run.input("model", spec.get("model"));
  const auto model = Model::load(spec.get("model"));
  run.input("lists", spec.get("lists"));
  const auto lists = load_candidate_lists(spec.get("lists"));
  auto mode = pair_mode(s);
  if (mode == ScoreMode::kAnchored)
    throw UsageError("mbr takes --mode single or both");
  const auto report = mbr_run(model, lists, parse_utility_mode(s.str("mbr.utility")),
                              mode, run.jobs());
  run.write_text("selections.tsv", report.selections_tsv());
  run.write_json("mbr_report.json", report.to_json());
  print_summary(run, {{"disagreements", report.disagreements},
                      {"pass_ratio", report.pass_ratio()}});
}

ojson run_grad_check(Run& run, bool& passed) {
  const auto& s = run.settings();
  SynthConfig sc;
  sc.n_segments = 4;
  sc.n_systems = 3;
  sc.vocab_size = 12;
  sc.min_length = 3;
  sc.max_length = 6;
  sc.seed = run.seed_for("gradcheck.data");
  const auto data = generate_synthetic(sc).dataset;
  auto examples = build_pairwise_examples(data).examples;
  std::mt19937_64 rng(run.seed_for("gradcheck.batch"));
  std::shuffle(examples.begin(), examples.end(), rng);
  examples.resize(std::min(examples.size(), s.count("gradcheck.batch")));

  const auto vocab = Vocabulary::from_dataset(data, 4);
  auto cfg = make_model_config(vocab, s.count("gradcheck.hidden_dim"),
                               s.count("gradcheck.layers"),
                               s.count("gradcheck.heads"), 64, 0.1);
  Model model(cfg, vocab, run.seed_for("gradcheck.init"));
  // Move alpha away from its initial value so its gradient path is generic.
  model.params().head.alpha_raw(0, 0) = 0.3;
  const double h = s.real("gradcheck.step");
  const double tol = s.real("gradcheck.tolerance");

  struct Objective {
    const char* name;
    LossConfig loss;
    bool alpha_frozen;
  };
  LossConfig full = loss_config_from(s);
  LossConfig regression = full;
  regression.lambda_flip = 0.0;
  LossConfig flip = full;
  flip.lambda_flip = 1.0;
  flip.regression_term = false;
  LossConfig mse = full;
  mse.regression = RegressionKind::kMse;
  const std::vector<Objective> objectives = {
      {"full", full, false},
      {"regression_only", regression, false},
      {"flip_only", flip, false},
      {"mse", mse, false},
      {"full_alpha_frozen", full, true},
  };
  ojson report;
  report["step"] = h;
  report["tolerance"] = tol;
  report["batch"] = examples.size();
  report["hidden_dim"] = cfg.encoder.hidden_dim;
  report["layers"] = cfg.encoder.layers;
  report["parameters"] = model.params().count();
  auto arr = ojson::array();
  passed = true;
  for (const auto& o : objectives) {
    const auto r = grad_check(model, examples, o.loss, h, o.alpha_frozen);
    auto j = r.to_json();
    j["objective"] = o.name;
    j["passed"] = r.passed(tol);
    passed = passed && r.passed(tol);
    arr.push_back(std::move(j));
  }
  report["objectives"] = std::move(arr);
  report["passed"] = passed;
  return report;
}

void cmd_grad_check(Run& run) {
  bool passed = false;
  const auto report = run_grad_check(run, passed);
  run.write_json("grad_check.json", report);
  print_summary(run, {{"passed", passed}});
  if (!passed) {
    run.write_manifest();
    throw NumericError("gradient check exceeded tolerance");
  }
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void cmd_rank_stability(Run& run, Spec& spec) {
  const auto& s = run.settings();
  const auto data = read_dataset(run, spec.get("data"));
  std::vector<Model> models;
  std::vector<std::string> names;
  for (const auto& arg : spec.lists["variant"]) {
    auto [name, path] = named_path(arg, "--variant");
    run.input("variant:" + name, path);
    models.push_back(Model::load(path));
    names.push_back(name);
  }
  if (models.empty()) throw UsageError("rank-stability needs --variant");
  std::vector<MetricVariant> variants;
  for (std::size_t i = 0; i < models.size(); ++i)
    variants.push_back({names[i], &models[i]});
  std::vector<Anchor> anchors;
  const auto anchor_list = spec.get("anchors").empty()
                               ? std::vector<std::string>{}
                               : split_commas(spec.get("anchors"));
  if (anchor_list.empty()) {
    anchors.push_back(Anchor::parse("ref"));
    for (const auto& sys : data.systems()) anchors.push_back(Anchor::parse(sys));
  } else {
    for (const auto& a : anchor_list) anchors.push_back(Anchor::parse(a));
  }
  const auto table = anchor_rank_stability(
      variants, data, anchors,
      parse_score_mode(s.str("score.anchored_combine")), spa_options_from(run));
  run.write_text("ranks.tsv", table.to_tsv());
  run.write_json("ranks.json", table.to_json());
  print_summary(run, {});
}

void cmd_recipe(Run& run, Spec& spec) {
  const auto report = run_recipe(run, spec.get("recipe"));
  run.write_json("report.json", report);
  print_summary(run, {{"recipe", spec.get("recipe")}});
}

int report_error(std::ostream& err, const std::string& kind,
                 const std::string& message, int code) {
  ojson e;
  e["error"] = kind;
  e["message"] = message;
  e["exit_code"] = code;
  err << e.dump() << '\n';
  return code;
}

int dispatch_impl(const std::vector<std::string>& args, std::ostream& out,
                  std::ostream& err, int depth);

int replay(const std::string& manifest_path, const std::string& out_override,
           const std::string& jobs_override, std::ostream& out,
           std::ostream& err, int depth) {
  ojson m;
  try {
    m = ojson::parse(textio::read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(DataError::Code::kParse,
                    manifest_path + ": " + std::string(e.what()));
  }
  if (!m.contains("argv") || !m["argv"].is_array())
    throw DataError(DataError::Code::kParse, manifest_path + ": missing argv");
  auto argv = m["argv"].get<std::vector<std::string>>();
  auto override_flag = [&argv](const std::string& flag, const std::string& v) {
    if (v.empty()) return;
    for (std::size_t i = 0; i + 1 < argv.size(); ++i)
      if (argv[i] == flag) {
        argv[i + 1] = v;
        return;
      }
    argv.push_back(flag);
    argv.push_back(v);
  };
  const fs::path here = fs::current_path();
  std::string out_abs = out_override.empty()
                            ? std::string()
                            : fs::absolute(out_override).string();
  override_flag("--out", out_abs);
  override_flag("--jobs", jobs_override);
  if (m.contains("cwd") && m["cwd"].is_string())
    fs::current_path(m["cwd"].get<std::string>());
  int code;
  try {
    code = dispatch_impl(argv, out, err, depth + 1);
  } catch (...) {
    fs::current_path(here);
    throw;
  }
  fs::current_path(here);
  return code;
}

int dispatch_impl(const std::vector<std::string>& args, std::ostream& out,
                  std::ostream& err, int depth) {
  CLI::App root{"Pairwise translation quality estimation toolkit", "pear"};
  root.require_subcommand(1);
  std::deque<Spec> specs;
  const std::vector<std::string> modes = {"single", "single_pass", "both",
                                          "anchored"};

  auto& gen = make(specs, root, "gen-synth", "generate a seeded synthetic corpus");
  gen.setting("--n-segments", "synth.n_segments", "segments");
  gen.setting("--n-systems", "synth.n_systems", "systems");
  gen.setting("--noise-sd", "synth.noise_sd", "human score noise");
  gen.setting("--candidate-lists", "synth.candidate_lists",
              "also write this many MBR candidate lists");
  gen.setting("--format", "synth.format", "dataset format", {"jsonl", "tsv"});

  auto add_train_flags = [&](Spec& s) {
    s.setting("--lambda-flip", "train.lambda_flip", "flip loss weight");
    s.setting("--delta", "train.delta", "Huber transition");
    s.setting("--loss", "train.loss", "regression loss", {"huber", "mse"});
    s.setting("--stage", "train.stage", "training stage", {"1", "2"});
    s.setting("--epochs", "train.epochs", "epochs");
    s.setting("--head", "model.head", "head kind", {"pairwise", "single"});
    s.setting("--encoder", "model.encoder", "encoder kind",
              {"transformer", "context_free"});
  };
  auto& tr = make(specs, root, "train", "train a model");
  tr.string("--data", "training dataset (JSONL file or TSV directory)", true);
  tr.string("--dev", "dev dataset; default splits --data");
  tr.string("--init", "start from this checkpoint");
  add_train_flags(tr);

  auto add_mode = [&](Spec& s) {
    s.setting("--mode", "score.mode", "inference mode", modes);
    s.setting("--anchor", "score.anchor", "anchor: ref or a system id");
  };
  auto& sc = make(specs, root, "score", "segment-level scores for all system pairs");
  sc.string("--model", "checkpoint", true);
  sc.string("--data", "dataset", true);
  add_mode(sc);

  auto& ev = make(specs, root, "eval-systems", "system-level scores");
  ev.string("--model", "checkpoint", true);
  ev.string("--data", "dataset", true);
  add_mode(ev);

  auto& me = make(specs, root, "metaeval", "SPA, acc_eq* and Avg Corr");
  me.string("--data", "dataset providing human scores");
  me.string("--human", "human score table (TSV)");
  me.string("--metric", "metric score table (TSV)", true);
  me.setting("--resamples", "metaeval.resamples", "permutation resamples");
  me.setting("--tail", "metaeval.tail", "p-value tail",
             {"two_sided", "one_sided"});

  auto& au = make(specs, root, "audit", "antisymmetry and transitivity residuals");
  au.string("--scores", "single-pass score table (TSV)", true);

  auto& co = make(specs, root, "corr", "Pearson matrix over difference tables");
  co.many("--table", "name=path, repeatable");

  auto& mb = make(specs, root, "mbr", "MBR selection over candidate lists");
  mb.string("--model", "checkpoint", true);
  mb.string("--lists", "candidate lists (JSONL)", true);
  mb.setting("--utility", "mbr.utility", "utility matrix mode",
             {"full", "triangular"});
  mb.setting("--mode", "score.mode", "pair scoring mode", modes);

  auto& gc = make(specs, root, "grad-check", "finite-difference gradient check");
  gc.setting("--lambda-flip", "train.lambda_flip", "flip loss weight");
  gc.setting("--delta", "train.delta", "Huber transition");

  auto& rs = make(specs, root, "rank-stability", "variant ranks across anchors");
  rs.string("--data", "dataset", true);
  rs.many("--variant", "name=checkpoint, repeatable");
  rs.string("--anchors", "comma-separated anchors (default: ref and every system)");

  auto& rc = make(specs, root, "recipe", "paired experiment recipes");
  rc.app->add_option("recipe", rc.text["recipe"], "recipe id")
      ->required()
      ->check(CLI::IsMember({"pairwise_vs_single", "flip_ablation",
                             "huber_vs_mse", "anchor_stability", "mbr_demo"}));
  add_train_flags(rc);
  rc.setting("--n-segments", "synth.n_segments", "synthetic segments");

  std::string manifest, replay_out, replay_jobs;
  auto* rp = root.add_subcommand("replay", "re-run a command from its manifest");
  rp->add_option("manifest", manifest, "manifest.json")->required();
  rp->add_option("--out", replay_out, "redirect outputs");
  rp->add_option("--jobs", replay_jobs, "override worker threads");

  try {
    root.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp& e) {
    out << root.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << root.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    const auto subs = root.get_subcommands();
    err << (subs.empty() ? root.help() : subs.front()->help());
    return report_error(err, "usage", e.what(), 1);
  }

  if (rp->parsed()) {
    if (depth > 0) throw UsageError("a manifest cannot replay another replay");
    return replay(manifest, replay_out, replay_jobs, out, err, depth);
  }

  Spec* spec = nullptr;
  for (auto& s : specs)
    if (s.app->parsed()) spec = &s;
  const std::string name = spec->app->get_name();
  Run run(name, args, resolve(*spec), spec->out, out);
  if (name == "gen-synth") cmd_gen_synth(run);
  else if (name == "train") cmd_train(run, *spec);
  else if (name == "score") cmd_score(run, *spec);
  else if (name == "eval-systems") cmd_eval_systems(run, *spec);
  else if (name == "metaeval") cmd_metaeval(run, *spec);
  else if (name == "audit") cmd_audit(run, *spec);
  else if (name == "corr") cmd_corr(run, *spec);
  else if (name == "mbr") cmd_mbr(run, *spec);
  else if (name == "grad-check") cmd_grad_check(run);
  else if (name == "rank-stability") cmd_rank_stability(run, *spec);
  else if (name == "recipe") cmd_recipe(run, *spec);
  run.write_manifest();
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  try {
    return dispatch_impl(args, out, err, 0);
  } catch (const Error& e) {
    return report_error(err, e.kind(), e.what(),
                        static_cast<int>(e.exit_code()));
  } catch (const fs::filesystem_error& e) {
    return report_error(err, "io", e.what(), 2);
  } catch (const std::exception& e) {
    return report_error(err, "internal", e.what(), 2);
  }
}

}  // namespace pear::cli
