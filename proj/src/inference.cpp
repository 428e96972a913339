#include "pear/inference.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pear/error.hpp"
#include "pear/parallel.hpp"

namespace pear {

using Code = DataError::Code;

ScoreMode parse_score_mode(const std::string& text) {
  if (text == "single" || text == "single_pass") return ScoreMode::kSinglePass;
  if (text == "both") return ScoreMode::kBoth;
  if (text == "anchored") return ScoreMode::kAnchored;
  throw UsageError("unknown score mode '" + text +
                   "' (expected single, both or anchored)");
}

std::string to_string(ScoreMode mode) {
  switch (mode) {
    case ScoreMode::kSinglePass: return "single_pass";
    case ScoreMode::kBoth: return "both";
    case ScoreMode::kAnchored: return "anchored";
  }
  return "?";
}

namespace {

void require_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw NumericError("non-finite score for " + what);
}

}  // namespace

double score_pair(const PairScorer& scorer, const std::string& source,
                  const std::string& mt_a, const std::string& mt_b,
                  ScoreMode mode) {
  switch (mode) {
    case ScoreMode::kSinglePass:
      return scorer.score(source, mt_a, mt_b);
    case ScoreMode::kBoth: {
      const double ab = scorer.score(source, mt_a, mt_b);
      const double ba = scorer.score(source, mt_b, mt_a);
      return 0.5 * (ab - ba);
    }
    case ScoreMode::kAnchored:
      break;
  }
  throw DataError(Code::kInvalidArgument,
                  "score_pair takes single_pass or both mode");
}

double score_anchored(const PairScorer& scorer, const std::string& source,
                      const std::string& mt, const std::string& anchor,
                      ScoreMode mode) {
  return score_pair(scorer, source, mt, anchor,
                    mode == ScoreMode::kAnchored ? ScoreMode::kBoth : mode);
}

nlohmann::ordered_json SystemComparison::to_json() const {
  nlohmann::ordered_json j;
  j["system_a"] = system.system_a;
  j["system_b"] = system.system_b;
  j["score"] = system.score;
  j["n_segments"] = system.n_segments;
  j["only_a"] = only_a;
  j["only_b"] = only_b;
  return j;
}

SystemComparison system_compare(const PairScorer& scorer,
                                const EvalDataset& dataset,
                                const std::string& system_a,
                                const std::string& system_b, ScoreMode mode,
                                int jobs) {
  const auto seg_a = dataset.segments_covered_by(system_a);
  const auto seg_b = dataset.segments_covered_by(system_b);
  SystemComparison out;
  std::vector<std::string> shared;
  std::set_intersection(seg_a.begin(), seg_a.end(), seg_b.begin(), seg_b.end(),
                        std::back_inserter(shared));
  std::set_difference(seg_a.begin(), seg_a.end(), seg_b.begin(), seg_b.end(),
                      std::back_inserter(out.only_a));
  std::set_difference(seg_b.begin(), seg_b.end(), seg_a.begin(), seg_a.end(),
                      std::back_inserter(out.only_b));
  if (shared.empty())
    throw DataError(Code::kCoverage, "systems '" + system_a + "' and '" +
                                         system_b +
                                         "' share no covered segment");
  out.segments.resize(shared.size());
  parallel_for(shared.size(), jobs, [&](std::size_t i) {
    const auto& seg = shared[i];
    const double v = score_pair(
        scorer, dataset.find_segment(seg)->source_text,
        dataset.find_output(system_a, seg)->translation,
        dataset.find_output(system_b, seg)->translation, mode);
    out.segments[i] = {seg, system_a, system_b, v};
  });
  double sum = 0.0;
  for (const auto& s : out.segments) {
    require_finite(s.score, "segment '" + s.segment_id + "'");
    sum += s.score;
  }
  out.system = {system_a, system_b, sum / static_cast<double>(shared.size()),
                shared.size()};
  return out;
}

Anchor Anchor::parse(const std::string& text) {
  if (text.empty()) throw UsageError("empty anchor");
  if (text == "ref") return {Kind::kHumanRef, ""};
  return {Kind::kSystem, text};
}

std::string Anchor::label() const {
  return kind == Kind::kHumanRef ? "ref" : system_id;
}

nlohmann::ordered_json AnchoredScores::to_json() const {
  nlohmann::ordered_json j;
  j["anchor"] = anchor;
  j["mode"] = to_string(mode);
  auto arr = nlohmann::ordered_json::array();
  for (const auto& s : systems)
    arr.push_back({{"system", s.system_id},
                   {"score", s.score},
                   {"n_segments", s.n_segments}});
  j["systems"] = std::move(arr);
  j["anchor_gaps"] = anchor_gaps;
  j["pair_evaluations"] = pair_evaluations;
  j["forward_passes"] = forward_passes;
  return j;
}

AnchoredScores system_scores_anchored(const PairScorer& scorer,
                                      const EvalDataset& dataset,
                                      std::vector<std::string> systems,
                                      const Anchor& anchor, ScoreMode mode,
                                      int jobs) {
  if (mode == ScoreMode::kAnchored) mode = ScoreMode::kBoth;
  const auto all = dataset.systems();
  if (systems.empty()) systems = all;
  std::sort(systems.begin(), systems.end());
  systems.erase(std::unique(systems.begin(), systems.end()), systems.end());
  for (const auto& s : systems)
    if (!std::binary_search(all.begin(), all.end(), s))
      throw DataError(Code::kInvalidArgument,
                      "unknown system '" + s + "'");
  if (anchor.kind == Anchor::Kind::kSystem) {
    if (!std::binary_search(all.begin(), all.end(), anchor.system_id))
      throw DataError(Code::kMissingAnchor, "anchor system '" +
                                                anchor.system_id +
                                                "' is absent from the dataset");
    std::erase(systems, anchor.system_id);
  }

  AnchoredScores out;
  out.anchor = anchor.label();
  out.mode = mode;

  struct Job {
    std::string system, segment;
    const std::string* source;
    const std::string* mt;
    const std::string* anchor_text;
  };
  std::vector<Job> work;
  std::set<std::string> gaps;
  for (const auto& sys : systems) {
    for (const auto& seg : dataset.segments_covered_by(sys)) {
      const std::string* anchor_text = nullptr;
      if (anchor.kind == Anchor::Kind::kHumanRef) {
        anchor_text = dataset.find_reference(seg);
        if (!anchor_text)
          throw DataError(Code::kMissingAnchor,
                          "segment '" + seg + "' has no reference");
      } else {
        const auto* o = dataset.find_output(anchor.system_id, seg);
        if (!o) {
          gaps.insert(seg);
          continue;
        }
        anchor_text = &o->translation;
      }
      work.push_back({sys, seg, &dataset.find_segment(seg)->source_text,
                      &dataset.find_output(sys, seg)->translation,
                      anchor_text});
    }
  }
  std::vector<double> values(work.size());
  parallel_for(work.size(), jobs, [&](std::size_t i) {
    values[i] = score_anchored(scorer, *work[i].source, *work[i].mt,
                               *work[i].anchor_text, mode);
  });

  std::size_t i = 0;
  for (const auto& sys : systems) {
    AnchoredSystemScore s{sys, 0.0, 0};
    double sum = 0.0;
    for (; i < work.size() && work[i].system == sys; ++i) {
      require_finite(values[i], "(" + work[i].segment + ", " + sys + ")");
      sum += values[i];
      ++s.n_segments;
      out.segment_scores.push_back({work[i].segment, sys, values[i]});
    }
    if (s.n_segments) s.score = sum / static_cast<double>(s.n_segments);
    out.systems.push_back(s);
  }
  out.anchor_gaps.assign(gaps.begin(), gaps.end());
  out.pair_evaluations = work.size();
  out.forward_passes = work.size() * passes_per_evaluation(mode);
  return out;
}

ScoreMatrixResult score_matrix(const PairScorer& scorer,
                               const EvalDataset& dataset,
                               std::vector<std::string> systems,
                               ScoreMode mode, int jobs) {
  if (mode == ScoreMode::kAnchored)
    throw DataError(Code::kInvalidArgument,
                    "score_matrix takes single_pass or both mode");
  if (systems.empty()) systems = dataset.systems();
  std::sort(systems.begin(), systems.end());
  systems.erase(std::unique(systems.begin(), systems.end()), systems.end());
  if (systems.size() < 2)
    throw DataError(Code::kInvalidArgument,
                    "score_matrix needs at least two systems");

  struct Job {
    std::string segment, a, b;
  };
  std::vector<Job> work;
  ScoreMatrixResult out;
  for (std::size_t x = 0; x < systems.size(); ++x) {
    for (std::size_t y = 0; y < systems.size(); ++y) {
      if (x == y) continue;
      const auto& a = systems[x];
      const auto& b = systems[y];
      const auto sa = dataset.segments_covered_by(a);
      const auto sb = dataset.segments_covered_by(b);
      std::vector<std::string> shared, missing;
      std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(),
                            std::back_inserter(shared));
      if (x < y) {
        std::set_symmetric_difference(sa.begin(), sa.end(), sb.begin(),
                                      sb.end(), std::back_inserter(missing));
        if (!missing.empty()) out.gaps.push_back({a, b, missing});
      }
      if (mode == ScoreMode::kBoth && x > y) continue;
      for (auto& seg : shared) work.push_back({seg, a, b});
    }
  }
  std::vector<double> values(work.size());
  parallel_for(work.size(), jobs, [&](std::size_t i) {
    const auto& w = work[i];
    values[i] = score_pair(scorer, dataset.find_segment(w.segment)->source_text,
                           dataset.find_output(w.a, w.segment)->translation,
                           dataset.find_output(w.b, w.segment)->translation,
                           mode);
  });
  std::vector<ScoreRow> rows;
  for (std::size_t i = 0; i < work.size(); ++i) {
    require_finite(values[i], "(" + work[i].segment + ", " + work[i].a + ", " +
                                  work[i].b + ")");
    rows.push_back({work[i].segment, work[i].a, work[i].b, values[i]});
    if (mode == ScoreMode::kBoth)
      rows.push_back({work[i].segment, work[i].b, work[i].a, -values[i]});
  }
  out.table = ScoreTable(std::move(rows));
  out.scorer_calls = work.size() * passes_per_evaluation(mode);
  return out;
}

}  // namespace pear
