#include "run.hpp"

#include <ostream>

#include "pear/error.hpp"
#include "pear/parallel.hpp"
#include "pear/textio.hpp"

namespace pear::cli {

namespace fs = std::filesystem;

Run::Run(std::string command, std::vector<std::string> argv, Settings settings,
         fs::path out_dir, std::ostream& out)
    : command_(std::move(command)),
      argv_(std::move(argv)),
      settings_(std::move(settings)),
      out_dir_(std::move(out_dir)),
      out_(out),
      start_(std::chrono::steady_clock::now()) {
  if (settings_.integer("run.jobs") < 1)
    throw UsageError("--jobs must be >= 1");
  std::error_code ec;
  fs::create_directories(out_dir_, ec);
  if (ec)
    throw DataError(DataError::Code::kIo, "cannot create output directory '" +
                                              out_dir_.string() + "'");
}

std::uint64_t Run::seed_for(const std::string& purpose) {
  const auto s = derive_seed(seed(), purpose);
  seeds_[purpose] = s;
  return s;
}

fs::path Run::input(const std::string& role, const std::string& path) {
  if (!fs::exists(path))
    throw DataError(DataError::Code::kIo, "input '" + path + "' not found");
  inputs_.emplace_back(role, fs::path(path));
  return path;
}

fs::path Run::output(const std::string& relative) {
  const fs::path rel(relative);
  if (rel.is_absolute() || relative.find("..") != std::string::npos)
    throw UsageError("output '" + relative + "' escapes the output directory");
  const fs::path p = out_dir_ / rel;
  fs::create_directories(p.parent_path());
  for (const auto& o : outputs_)
    if (o == p) return p;
  outputs_.push_back(p);
  return p;
}

void Run::write_text(const std::string& relative, const std::string& content) {
  textio::write_file(output(relative), content);
}

void Run::write_json(const std::string& relative, const ojson& value) {
  write_text(relative, value.dump(2) + "\n");
}

void Run::write_manifest() {
  ojson m;
  m["command"] = command_;
  m["argv"] = argv_;
  m["cwd"] = fs::current_path().string();
  m["config"] = settings_.to_json();
  ojson seeds = ojson::object();
  seeds["run.seed"] = seed();
  for (const auto& [k, v] : seeds_) seeds[k] = v;
  m["seeds"] = std::move(seeds);
  auto ins = ojson::array();
  for (const auto& [role, p] : inputs_)
    ins.push_back({{"role", role}, {"path", p.string()},
                   {"hash", artifact_hash(p)}});
  m["inputs"] = std::move(ins);
  auto outs = ojson::array();
  for (const auto& p : outputs_)
    outs.push_back({{"path", fs::relative(p, out_dir_).generic_string()},
                    {"hash", artifact_hash(p)}});
  m["outputs"] = std::move(outs);
  m["wall_time_s"] = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start_)
                         .count();
  textio::write_file(out_dir_ / "manifest.json", m.dump(2) + "\n");
}

EvalDataset read_dataset(Run& run, const std::string& path) {
  run.input("dataset", path);
  return load_dataset(path, fs::is_directory(path) ? DatasetFormat::kTsv
                                                   : DatasetFormat::kJsonl);
}

ModelConfig model_config_from(const Settings& s, const Vocabulary& vocab) {
  const auto& enc = s.str("model.encoder");
  EncoderKind kind;
  if (enc == "transformer")
    kind = EncoderKind::kTransformer;
  else if (enc == "context_free")
    kind = EncoderKind::kContextFree;
  else
    throw UsageError("model.encoder must be transformer or context_free");
  const auto& head = s.str("model.head");
  HeadKind hk;
  if (head == "pairwise")
    hk = HeadKind::kPairwise;
  else if (head == "single")
    hk = HeadKind::kSingle;
  else
    throw UsageError("model.head must be pairwise or single");
  return make_model_config(vocab, s.count("model.hidden_dim"),
                           s.count("model.layers"), s.count("model.heads"),
                           s.count("model.max_length"), s.real("model.dropout"),
                           hk, kind);
}

TrainConfig train_config_from(Run& run) {
  const auto& s = run.settings();
  TrainConfig tc;
  tc.learning_rate = s.real("train.learning_rate");
  tc.weight_decay = s.real("train.weight_decay");
  tc.beta1 = s.real("train.beta1");
  tc.beta2 = s.real("train.beta2");
  tc.adam_eps = s.real("train.adam_eps");
  tc.batch_size = s.count("train.batch_size");
  tc.epochs = s.count("train.epochs");
  const auto stage = s.str("train.stage");
  if (stage == "1")
    tc.stage = Stage::kStage1;
  else if (stage == "2")
    tc.stage = Stage::kStage2;
  else
    throw UsageError("train.stage must be 1 or 2");
  tc.seed = run.seed_for("train");
  tc.jobs = run.jobs();
  return tc;
}

LossConfig loss_config_from(const Settings& s) {
  LossConfig lc;
  lc.delta = s.real("train.delta");
  lc.lambda_flip = s.real("train.lambda_flip");
  const auto& loss = s.str("train.loss");
  if (loss == "huber")
    lc.regression = RegressionKind::kHuber;
  else if (loss == "mse")
    lc.regression = RegressionKind::kMse;
  else
    throw UsageError("train.loss must be huber or mse");
  try {
    lc.validate();
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  return lc;
}

SpaOptions spa_options_from(Run& run) {
  const auto& s = run.settings();
  SpaOptions o;
  o.resamples = s.count("metaeval.resamples");
  o.exhaustive_below = s.count("metaeval.exhaustive_below");
  const auto& tail = s.str("metaeval.tail");
  if (tail == "two_sided")
    o.tail = SpaTail::kTwoSided;
  else if (tail == "one_sided")
    o.tail = SpaTail::kOneSided;
  else
    throw UsageError("metaeval.tail must be two_sided or one_sided");
  o.seed = run.seed_for("spa");
  o.jobs = run.jobs();
  return o;
}

TrainResult train_fresh(Run& run, const EvalDataset& train,
                        const EvalDataset& dev, const LossConfig& loss,
                        std::optional<HeadKind> head) {
  const auto vocab = Vocabulary::from_dataset(
      train, run.settings().count("model.hash_buckets"));
  ModelConfig cfg = model_config_from(run.settings(), vocab);
  if (head) cfg.head_kind = *head;
  Model model(cfg, vocab, run.seed_for("init"));
  return pear::train(train, dev, std::move(model), train_config_from(run),
                     loss);
}

}  // namespace pear::cli
