#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>

#include "pear/cli.hpp"
#include "pear/error.hpp"
#include "pear/parallel.hpp"
#include "pear/textio.hpp"

namespace pear::cli {

std::map<std::string, std::string> default_settings() {
  return {
      {"run.seed", "1"},
      {"run.jobs", "1"},
      {"synth.n_segments", "500"},
      {"synth.n_systems", "4"},
      {"synth.noise_sd", "0"},
      {"synth.gap_scale", "10"},
      {"synth.vocab_size", "60"},
      {"synth.min_length", "6"},
      {"synth.max_length", "12"},
      {"synth.candidate_lists", "0"},
      {"synth.candidates", "8"},
      {"synth.format", "jsonl"},
      {"model.hidden_dim", "16"},
      {"model.layers", "1"},
      {"model.heads", "2"},
      {"model.max_length", "64"},
      {"model.dropout", "0.1"},
      {"model.encoder", "transformer"},
      {"model.head", "pairwise"},
      {"model.hash_buckets", "64"},
      {"train.learning_rate", "0.001"},
      {"train.weight_decay", "0.01"},
      {"train.beta1", "0.9"},
      {"train.beta2", "0.999"},
      {"train.adam_eps", "1e-08"},
      {"train.batch_size", "16"},
      {"train.epochs", "5"},
      {"train.stage", "2"},
      {"train.lambda_flip", "0.1"},
      {"train.delta", "4.5"},
      {"train.loss", "huber"},
      {"train.train_fraction", "0.8"},
      {"train.dev_fraction", "0.2"},
      {"score.mode", "single"},
      {"score.anchor", "ref"},
      {"score.anchored_combine", "both"},
      {"metaeval.resamples", "10000"},
      {"metaeval.exhaustive_below", "14"},
      {"metaeval.tail", "two_sided"},
      {"mbr.utility", "triangular"},
      {"gradcheck.hidden_dim", "8"},
      {"gradcheck.layers", "1"},
      {"gradcheck.heads", "2"},
      {"gradcheck.batch", "4"},
      {"gradcheck.step", "1e-05"},
      {"gradcheck.tolerance", "0.0001"},
  };
}

Settings::Settings(std::map<std::string, std::string> defaults)
    : values_(std::move(defaults)) {}

void Settings::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw UsageError("unknown setting '" + key + "'");
  it->second = value;
}

void Settings::merge_ini(const std::filesystem::path& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw DataError(DataError::Code::kParse, e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty())
      throw UsageError(path.string() + ": key '" + section +
                       "' outside a section");
    for (const auto& [key, value] : body)
      set(section + "." + key, value.get_value<std::string>());
  }
}

const std::string& Settings::str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw UsageError("unknown setting '" + key + "'");
  return it->second;
}

double Settings::real(const std::string& key) const {
  const auto& s = str(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("setting '" + key + "' expects a number, got '" + s + "'");
}

std::int64_t Settings::integer(const std::string& key) const {
  const auto& s = str(key);
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw UsageError("setting '" + key + "' expects an integer, got '" + s +
                     "'");
  return v;
}

std::size_t Settings::count(const std::string& key) const {
  const auto v = integer(key);
  if (v < 0)
    throw UsageError("setting '" + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

std::uint64_t Settings::u64(const std::string& key) const {
  const auto& s = str(key);
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw UsageError("setting '" + key + "' expects an unsigned integer, got '" +
                     s + "'");
  return v;
}

nlohmann::ordered_json Settings::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : values_) j[k] = v;
  return j;
}

std::string artifact_hash(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  std::uint64_t h = 0;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(path))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string acc;
    for (const auto& f : files)
      acc += fs::relative(f, path).generic_string() + '\0' +
             artifact_hash(f) + '\n';
    h = fnv1a(acc);
  } else {
    h = fnv1a(textio::read_file(path));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace pear::cli
