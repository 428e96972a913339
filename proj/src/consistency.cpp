#include "pear/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pear/error.hpp"

namespace pear {

using Code = DataError::Code;

double SystemScores::at(const std::string& a, const std::string& b) const {
  auto it = delta.find({a, b});
  if (it == delta.end())
    throw DataError(Code::kMissingPair,
                    "no system-level score for (" + a + ", " + b + ")");
  return it->second;
}

SystemScores system_level_scores(const ScoreTable& table) {
  std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>>
      acc;
  for (const auto& r : table.rows()) {
    auto& [sum, n] = acc[{r.system_a, r.system_b}];
    sum += r.score;
    ++n;
  }
  SystemScores out;
  out.systems = table.systems();
  for (const auto& [key, v] : acc)
    out.delta[key] = v.first / static_cast<double>(v.second);
  return out;
}

std::vector<PairResidual> antisymmetry_residuals(const SystemScores& s) {
  std::vector<PairResidual> out;
  for (std::size_t i = 0; i < s.systems.size(); ++i)
    for (std::size_t j = i + 1; j < s.systems.size(); ++j) {
      const auto& a = s.systems[i];
      const auto& b = s.systems[j];
      out.push_back({a, b, std::abs(s.at(a, b) + s.at(b, a))});
    }
  return out;
}

std::vector<TripleResidual> transitivity_residuals(const SystemScores& s) {
  if (s.systems.size() < 3)
    throw DataError(Code::kInvalidArgument,
                    "transitivity residuals need at least three systems");
  std::vector<TripleResidual> out;
  for (const auto& a : s.systems)
    for (const auto& b : s.systems)
      for (const auto& c : s.systems) {
        if (a == b || b == c || a == c) continue;
        out.push_back(
            {a, b, c, std::abs(s.at(a, c) - (s.at(a, b) + s.at(b, c)))});
      }
  return out;
}

namespace {

template <typename T>
double mean_value(const std::vector<T>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (const auto& x : v) s += x.value;
  return s / static_cast<double>(v.size());
}

}  // namespace

RelativeDeviations relative_deviations(const std::vector<PairResidual>& eps_as,
                                       const std::vector<TripleResidual>& eps_tr,
                                       const SystemScores& s) {
  RelativeDeviations out;
  std::size_t n = 0;
  for (const auto& a : s.systems)
    for (const auto& b : s.systems) {
      if (a == b) continue;
      out.mu_delta += std::abs(s.at(a, b));
      ++n;
    }
  if (n) out.mu_delta /= static_cast<double>(n);
  if (out.mu_delta == 0.0) {
    out.degenerate = true;
    out.rho_as = out.rho_tr = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.rho_as = mean_value(eps_as) / out.mu_delta;
  out.rho_tr = mean_value(eps_tr) / out.mu_delta;
  return out;
}

double ConsistencyReport::max_eps_as() const {
  double m = 0.0;
  for (const auto& r : eps_as) m = std::max(m, r.value);
  return m;
}

double ConsistencyReport::max_eps_tr() const {
  double m = 0.0;
  for (const auto& r : eps_tr) m = std::max(m, r.value);
  return m;
}

nlohmann::ordered_json ConsistencyReport::to_json() const {
  auto num = [](double v) {
    return std::isnan(v) ? nlohmann::ordered_json(nullptr)
                         : nlohmann::ordered_json(v);
  };
  nlohmann::ordered_json j;
  j["mu_delta"] = deviations.mu_delta;
  j["rho_as"] = num(deviations.rho_as);
  j["rho_tr"] = num(deviations.rho_tr);
  j["degenerate"] = deviations.degenerate;
  j["mean_eps_as"] = mean_value(eps_as);
  j["mean_eps_tr"] = mean_value(eps_tr);
  auto as = nlohmann::ordered_json::array();
  for (const auto& r : eps_as)
    as.push_back({{"a", r.system_a}, {"b", r.system_b}, {"eps", r.value}});
  j["eps_as"] = std::move(as);
  auto tr = nlohmann::ordered_json::array();
  for (const auto& r : eps_tr)
    tr.push_back({{"a", r.system_a},
                  {"b", r.system_b},
                  {"c", r.system_c},
                  {"eps", r.value}});
  j["eps_tr"] = std::move(tr);
  return j;
}

ConsistencyReport audit_consistency(const SystemScores& scores) {
  ConsistencyReport r;
  r.eps_as = antisymmetry_residuals(scores);
  r.eps_tr = transitivity_residuals(scores);
  r.deviations = relative_deviations(r.eps_as, r.eps_tr, scores);
  return r;
}

ConsistencyReport audit_consistency(const ScoreTable& table) {
  return audit_consistency(system_level_scores(table));
}

}  // namespace pear
