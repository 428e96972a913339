#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pear/score_table.hpp"

namespace pear {

// System-level scores over ordered pairs.
struct SystemScores {
  std::vector<std::string> systems;
  std::map<std::pair<std::string, std::string>, double> delta;

  // Throws DataError (missing pair) when absent.
  double at(const std::string& a, const std::string& b) const;
};

// Arithmetic mean per ordered pair of the table's segment scores.
SystemScores system_level_scores(const ScoreTable& table);

struct PairResidual {
  std::string system_a;
  std::string system_b;
  double value = 0.0;
};

struct TripleResidual {
  std::string system_a;
  std::string system_b;
  std::string system_c;
  double value = 0.0;
};

// |D(A,B) + D(B,A)| over unordered pairs.
std::vector<PairResidual> antisymmetry_residuals(const SystemScores& scores);
// |D(A,C) - D(A,B) - D(B,C)| over ordered triples of distinct systems.
std::vector<TripleResidual> transitivity_residuals(const SystemScores& scores);

struct RelativeDeviations {
  double mu_delta = 0.0;  // mean |D| over ordered pairs
  double rho_as = 0.0;
  double rho_tr = 0.0;
  bool degenerate = false;  // mu_delta == 0, rho undefined
};

RelativeDeviations relative_deviations(const std::vector<PairResidual>& eps_as,
                                       const std::vector<TripleResidual>& eps_tr,
                                       const SystemScores& scores);

struct ConsistencyReport {
  std::vector<PairResidual> eps_as;
  std::vector<TripleResidual> eps_tr;
  RelativeDeviations deviations;

  double max_eps_as() const;
  double max_eps_tr() const;
  nlohmann::ordered_json to_json() const;
};

ConsistencyReport audit_consistency(const SystemScores& scores);
ConsistencyReport audit_consistency(const ScoreTable& table);

}  // namespace pear
