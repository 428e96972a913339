#include "pear/mbr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "pear/error.hpp"
#include "pear/parallel.hpp"
#include "pear/textio.hpp"

namespace pear {

using Code = DataError::Code;
using ojson = nlohmann::ordered_json;

std::vector<CandidateList> parse_candidate_lists(const std::string& text,
                                                 const std::string& origin) {
  std::vector<CandidateList> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    ojson rec;
    try {
      rec = ojson::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(Code::kParse, where + ": " + e.what());
    }
    try {
      CandidateList c;
      c.segment_id = rec.at("seg").get<std::string>();
      c.source = rec.at("src").get<std::string>();
      c.candidates = rec.at("cands").get<std::vector<std::string>>();
      if (rec.contains("gold")) c.gold = rec.at("gold").get<std::vector<double>>();
      if (c.candidates.empty())
        throw DataError(Code::kParse, where + ": empty candidate list");
      if (!c.gold.empty() && c.gold.size() != c.candidates.size())
        throw DataError(Code::kParse,
                        where + ": gold and cands differ in length");
      out.push_back(std::move(c));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(Code::kParse, where + ": " + e.what());
    }
  }
  return out;
}

std::vector<CandidateList> load_candidate_lists(
    const std::filesystem::path& path) {
  return parse_candidate_lists(textio::read_file(path), path.string());
}

std::string candidate_lists_to_jsonl(const std::vector<CandidateList>& lists) {
  std::string out;
  for (const auto& c : lists) {
    ojson j;
    j["seg"] = c.segment_id;
    j["src"] = c.source;
    j["cands"] = c.candidates;
    if (!c.gold.empty()) j["gold"] = c.gold;
    out += j.dump() + '\n';
  }
  return out;
}

void save_candidate_lists(const std::vector<CandidateList>& lists,
                          const std::filesystem::path& path) {
  textio::write_file(path, candidate_lists_to_jsonl(lists));
}

std::vector<CandidateList> generate_candidate_lists(
    const CandidateSynthConfig& c) {
  if (c.n_segments < 1 || c.n_candidates < 1 || c.vocab_size < 1 ||
      c.min_length < 1 || c.max_length < c.min_length ||
      !(c.latent_gap_scale > 0.0))
    throw DataError(Code::kInvalidArgument, "invalid candidate synth config");
  std::mt19937_64 rng(c.seed);
  std::uniform_int_distribution<std::size_t> concept_dist(0, c.vocab_size - 1);
  std::uniform_int_distribution<std::size_t> len_dist(c.min_length,
                                                      c.max_length);
  std::uniform_real_distribution<double> keep_rate(0.1, 0.95);
  std::vector<CandidateList> out;
  const std::size_t width = std::to_string(c.n_segments - 1).size();
  for (std::size_t i = 0; i < c.n_segments; ++i) {
    std::string id = std::to_string(i);
    CandidateList list;
    list.segment_id = "seg" + std::string(width - id.size(), '0') + id;
    const std::size_t len = len_dist(rng);
    std::vector<std::size_t> ideal(len);
    for (auto& k : ideal) k = concept_dist(rng);
    for (std::size_t t = 0; t < len; ++t)
      list.source += (t ? " s" : "s") + std::to_string(ideal[t]);
    for (std::size_t j = 0; j < c.n_candidates; ++j) {
      std::bernoulli_distribution keep(keep_rate(rng));
      std::string mt;
      std::size_t kept = 0;
      for (std::size_t t = 0; t < len; ++t) {
        if (t) mt += ' ';
        if (keep(rng)) {
          mt += "t" + std::to_string(ideal[t]);
          ++kept;
        } else {
          mt += "x" + std::to_string(concept_dist(rng));
        }
      }
      list.candidates.push_back(std::move(mt));
      list.gold.push_back(c.latent_gap_scale * static_cast<double>(kept) /
                          static_cast<double>(len));
    }
    out.push_back(std::move(list));
  }
  return out;
}

UtilityMode parse_utility_mode(const std::string& text) {
  if (text == "full") return UtilityMode::kFull;
  if (text == "triangular" || text == "tri") return UtilityMode::kTriangular;
  throw UsageError("unknown utility mode '" + text +
                   "' (expected full or triangular)");
}

std::string to_string(UtilityMode mode) {
  return mode == UtilityMode::kFull ? "full" : "triangular";
}

UtilityMatrix utility_matrix(const PairScorer& scorer,
                             const CandidateList& list, UtilityMode mode,
                             ScoreMode scoring, int jobs) {
  const std::size_t n = list.candidates.size();
  if (n == 0)
    throw DataError(Code::kInvalidArgument,
                    "segment '" + list.segment_id + "' has no candidates");
  std::vector<std::pair<std::size_t, std::size_t>> work;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && (mode == UtilityMode::kFull || i < j)) work.push_back({i, j});
  std::vector<double> values(work.size());
  parallel_for(work.size(), jobs, [&](std::size_t k) {
    const auto [i, j] = work[k];
    try {
      values[k] = score_pair(scorer, list.source, list.candidates[i],
                             list.candidates[j], scoring);
    } catch (const Error& e) {
      std::ostringstream msg;
      msg << "segment '" << list.segment_id << "' pair (" << i << ", " << j
          << "): " << e.what();
      if (e.exit_code() == ExitCode::kNumeric) throw NumericError(msg.str());
      throw DataError(Code::kInvalidArgument, msg.str());
    }
    if (!std::isfinite(values[k])) {
      std::ostringstream msg;
      msg << "segment '" << list.segment_id << "' pair (" << i << ", " << j
          << "): non-finite utility";
      throw NumericError(msg.str());
    }
  });
  UtilityMatrix out;
  out.mode = mode;
  out.u = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < work.size(); ++k) {
    const auto [i, j] = work[k];
    out.u(i, j) = values[k];
    if (mode == UtilityMode::kTriangular) out.u(j, i) = -values[k];
  }
  out.pair_evaluations = work.size();
  out.forward_pass_count = work.size() * passes_per_evaluation(scoring);
  return out;
}

MbrSelection mbr_select(const Matrix& u) {
  const auto n = static_cast<std::size_t>(u.rows());
  if (n == 0 || u.cols() != u.rows())
    throw DataError(Code::kInvalidArgument, "utility matrix must be square");
  MbrSelection out;
  if (n == 1) {
    out.defined = false;
    out.expected_utility = {std::nan("")};
    return out;
  }
  out.expected_utility.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) s += u(i, j);
    out.expected_utility[i] = s / static_cast<double>(n - 1);
    if (out.expected_utility[i] > out.expected_utility[out.index]) out.index = i;
  }
  return out;
}

double MbrReport::pass_ratio() const {
  return full_forward_passes
             ? static_cast<double>(triangular_forward_passes) /
                   static_cast<double>(full_forward_passes)
             : 0.0;
}

std::string MbrReport::selections_tsv() const {
  std::string out = "segment_id\tselected_index\texpected_utility\n";
  for (const auto& s : segments) {
    if (!s.error.empty()) continue;
    out += textio::tsv_escape(s.segment_id) + '\t' +
           std::to_string(s.selected) + '\t' +
           (s.defined ? textio::format_double(s.expected_utility) : "nan") +
           '\n';
  }
  return out;
}

ojson MbrReport::to_json() const {
  ojson j;
  j["mode"] = to_string(mode);
  j["scoring"] = to_string(scoring);
  j["segments"] = segments.size();
  j["forward_passes"] = forward_passes;
  j["full_forward_passes"] = full_forward_passes;
  j["triangular_forward_passes"] = triangular_forward_passes;
  j["pass_ratio"] = pass_ratio();
  j["disagreements"] = disagreements;
  j["failures"] = failures;
  j["continue_on_error"] = true;
  j["mean_gold"] = mean_gold ? ojson(*mean_gold) : ojson(nullptr);
  auto errors = ojson::array();
  for (const auto& s : segments)
    if (!s.error.empty())
      errors.push_back({{"segment_id", s.segment_id}, {"error", s.error}});
  j["errors"] = std::move(errors);
  return j;
}

MbrReport mbr_run(const PairScorer& scorer,
                  const std::vector<CandidateList>& lists, UtilityMode mode,
                  ScoreMode scoring, int jobs) {
  if (lists.empty())
    throw DataError(Code::kInvalidArgument, "no candidate lists");
  MbrReport report;
  report.mode = mode;
  report.scoring = scoring;
  double gold_sum = 0.0;
  std::size_t gold_n = 0;
  for (const auto& list : lists) {
    MbrSegmentResult r;
    r.segment_id = list.segment_id;
    const std::size_t n = list.candidates.size();
    const std::size_t per = passes_per_evaluation(scoring);
    try {
      const auto full =
          utility_matrix(scorer, list, UtilityMode::kFull, scoring, jobs);
      Matrix tri = full.u;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) tri(i, j) = -tri(j, i);
      const auto sel_full = mbr_select(full.u);
      const auto sel_tri = mbr_select(tri);
      const auto& sel = mode == UtilityMode::kFull ? sel_full : sel_tri;
      const auto& other = mode == UtilityMode::kFull ? sel_tri : sel_full;
      r.selected = sel.index;
      r.defined = sel.defined;
      r.expected_utility = sel.expected_utility[sel.index];
      r.other_mode_selected = other.index;
      if (sel.index != other.index) ++report.disagreements;
      const std::size_t full_passes = n * (n - 1) * per;
      report.full_forward_passes += full_passes;
      report.triangular_forward_passes += full_passes / 2;
      report.forward_passes +=
          mode == UtilityMode::kFull ? full_passes : full_passes / 2;
      if (!list.gold.empty()) {
        r.gold = list.gold[sel.index];
        gold_sum += *r.gold;
        ++gold_n;
      }
    } catch (const Error& e) {
      r.error = e.what();
      ++report.failures;
    }
    report.segments.push_back(std::move(r));
  }
  if (gold_n) report.mean_gold = gold_sum / static_cast<double>(gold_n);
  return report;
}

}  // namespace pear
