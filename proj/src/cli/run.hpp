#pragma once

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pear/cli.hpp"
#include "pear/corpus.hpp"
#include "pear/metaeval.hpp"
#include "pear/model.hpp"
#include "pear/training.hpp"

namespace pear::cli {

using ojson = nlohmann::ordered_json;

// One command invocation: resolved settings, the declared output directory
// and the artifacts read and written, which end up in the run manifest.
class Run {
 public:
  Run(std::string command, std::vector<std::string> argv, Settings settings,
      std::filesystem::path out_dir, std::ostream& out);

  const std::string& command() const { return command_; }
  const Settings& settings() const { return settings_; }
  const std::filesystem::path& out_dir() const { return out_dir_; }
  std::ostream& out() { return out_; }

  std::uint64_t seed() const { return settings_.u64("run.seed"); }
  int jobs() const { return static_cast<int>(settings_.integer("run.jobs")); }
  // Seed for a named purpose, recorded in the manifest.
  std::uint64_t seed_for(const std::string& purpose);

  std::filesystem::path input(const std::string& role, const std::string& path);
  // Path inside the output directory; parent directories are created.
  std::filesystem::path output(const std::string& relative);

  void write_text(const std::string& relative, const std::string& content);
  void write_json(const std::string& relative, const ojson& value);

  void write_manifest();

 private:
  std::string command_;
  std::vector<std::string> argv_;
  Settings settings_;
  std::filesystem::path out_dir_;
  std::ostream& out_;
  std::map<std::string, std::uint64_t> seeds_;
  std::vector<std::pair<std::string, std::filesystem::path>> inputs_;
  std::vector<std::filesystem::path> outputs_;
  std::chrono::steady_clock::time_point start_;
};

EvalDataset read_dataset(Run& run, const std::string& path);
ModelConfig model_config_from(const Settings& s, const Vocabulary& vocab);
TrainConfig train_config_from(Run& run);
LossConfig loss_config_from(const Settings& s);
SpaOptions spa_options_from(Run& run);

// Builds a fresh model from the run's settings (vocabulary from the
// training text) and trains it.
TrainResult train_fresh(Run& run, const EvalDataset& train,
                        const EvalDataset& dev, const LossConfig& loss,
                        std::optional<HeadKind> head = std::nullopt);

ojson run_recipe(Run& run, const std::string& recipe);

}  // namespace pear::cli
