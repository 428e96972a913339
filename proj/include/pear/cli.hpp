#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pear::cli {

// Resolved key-value configuration ("section.key" -> value). Later layers
// override earlier ones: built-in defaults, then --config, then flags.
class Settings {
 public:
  explicit Settings(std::map<std::string, std::string> defaults);

  // Plain-text INI: [section] headers, key = value lines, ';' or '#'
  // comments. Unknown keys are rejected.
  void merge_ini(const std::filesystem::path& path);
  // Throws UsageError for unknown keys.
  void set(const std::string& key, const std::string& value);

  const std::string& str(const std::string& key) const;
  double real(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  std::uint64_t u64(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  nlohmann::ordered_json to_json() const;

 private:
  std::map<std::string, std::string> values_;
};

// Every key the CLI understands, with its default.
std::map<std::string, std::string> default_settings();

// Runs one command. argv excludes the program name. Returns the process
// exit code: 0 ok, 1 usage, 2 data, 3 numeric.
int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

// Hex FNV-1a of a file's bytes (directories: of their files, sorted).
std::string artifact_hash(const std::filesystem::path& path);

}  // namespace pear::cli
