#include "pear/metaeval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "pear/error.hpp"
#include "pear/parallel.hpp"
#include "pear/textio.hpp"

namespace pear {

using Code = DataError::Code;

namespace {

double abs_sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

// Signed sum under a sign pattern; bit i set flips element i.
template <typename Bits>
double flipped_sum(std::span<const double> v, Bits&& bit) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += bit(i) ? -v[i] : v[i];
  return s;
}

struct Counter {
  double observed;
  double tol;
  bool two_sided;
  std::size_t count = 0;

  void add(double s) {
    const bool hit = two_sided ? std::abs(s) >= std::abs(observed) - tol
                               : s >= observed - tol;
    count += hit ? 1 : 0;
  }
};

}  // namespace

SignFlipResult sign_flip_p_values(std::span<const double> human,
                                  std::span<const double> metric,
                                  const SpaOptions& options,
                                  std::uint64_t seed) {
  const std::size_t n = human.size();
  if (metric.size() != n)
    throw DataError(Code::kMissingPair, "sign-flip inputs are not aligned");
  SignFlipResult out;
  if (n == 0) return out;
  const bool two = options.tail == SpaTail::kTwoSided;
  auto none = [](std::size_t) { return false; };
  Counter ch{flipped_sum(human, none), 1e-9 * abs_sum(human), two};
  Counter cm{flipped_sum(metric, none), 1e-9 * abs_sum(metric), two};

  if (n <= options.exhaustive_below && n < 63) {
    const std::uint64_t patterns = std::uint64_t{1} << n;
    for (std::uint64_t mask = 0; mask < patterns; ++mask) {
      auto bit = [mask](std::size_t i) { return (mask >> i) & 1U; };
      ch.add(flipped_sum(human, bit));
      cm.add(flipped_sum(metric, bit));
    }
    out.p_human = static_cast<double>(ch.count) / static_cast<double>(patterns);
    out.p_metric = static_cast<double>(cm.count) / static_cast<double>(patterns);
    out.exhaustive = true;
    return out;
  }
  if (options.resamples == 0)
    throw DataError(Code::kInvalidArgument, "resamples must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> words((n + 63) / 64);
  for (std::size_t r = 0; r < options.resamples; ++r) {
    for (auto& w : words) w = rng();
    auto bit = [&words](std::size_t i) { return (words[i / 64] >> (i % 64)) & 1U; };
    ch.add(flipped_sum(human, bit));
    cm.add(flipped_sum(metric, bit));
  }
  const double denom = static_cast<double>(options.resamples) + 1.0;
  out.p_human = (static_cast<double>(ch.count) + 1.0) / denom;
  out.p_metric = (static_cast<double>(cm.count) + 1.0) / denom;
  return out;
}

double spa_from_p_values(std::span<const double> p_human,
                         std::span<const double> p_metric) {
  if (p_human.empty() || p_human.size() != p_metric.size())
    throw DataError(Code::kInvalidArgument,
                    "p-value lists must be non-empty and aligned");
  double s = 0.0;
  for (std::size_t i = 0; i < p_human.size(); ++i)
    s += 1.0 - std::abs(p_human[i] - p_metric[i]);
  return s / static_cast<double>(p_human.size());
}

SpaResult soft_pairwise_accuracy(const ScoreTable& human,
                                 const ScoreTable& metric,
                                 const SpaOptions& options) {
  const auto h = human.canonical();
  const auto m = metric.canonical();
  const auto pairs = h.system_pairs();
  if (pairs.empty())
    throw DataError(Code::kInvalidArgument, "human table has no system pair");
  if (m.system_pairs() != pairs)
    throw DataError(Code::kMissingPair,
                    "human and metric tables cover different system pairs");

  SpaResult out;
  out.pairs.resize(pairs.size());
  std::vector<std::vector<double>> hv(pairs.size()), mv(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& [a, b] = pairs[k];
    for (const auto& seg : h.segments_for(a, b)) {
      const auto v = m.find(seg, a, b);
      if (!v)
        throw DataError(Code::kMissingPair, "metric table lacks (" + seg +
                                                ", " + a + ", " + b + ")");
      hv[k].push_back(*h.find(seg, a, b));
      mv[k].push_back(*v);
    }
  }
  parallel_for(pairs.size(), options.jobs, [&](std::size_t k) {
    const auto& [a, b] = pairs[k];
    const auto r = sign_flip_p_values(hv[k], mv[k], options,
                                      derive_seed(options.seed, a + "\t" + b));
    const double n = static_cast<double>(hv[k].size());
    out.pairs[k] = {a,
                    b,
                    hv[k].size(),
                    std::accumulate(hv[k].begin(), hv[k].end(), 0.0) / n,
                    std::accumulate(mv[k].begin(), mv[k].end(), 0.0) / n,
                    r.p_human,
                    r.p_metric,
                    r.exhaustive};
  });
  std::vector<double> ph, pm;
  for (const auto& p : out.pairs) {
    ph.push_back(p.p_human);
    pm.push_back(p.p_metric);
  }
  out.spa = spa_from_p_values(ph, pm);
  return out;
}

namespace {

int sign_of(double x) { return (x > 0) - (x < 0); }

}  // namespace

double accuracy_at(std::span<const double> human,
                   std::span<const double> metric, double epsilon) {
  if (human.empty() || human.size() != metric.size())
    throw DataError(Code::kInvalidArgument,
                    "tie calibration needs non-empty aligned rows");
  std::size_t ok = 0;
  for (std::size_t i = 0; i < human.size(); ++i) {
    const int md = metric[i] > epsilon ? 1 : (metric[i] < -epsilon ? -1 : 0);
    ok += md == sign_of(human[i]) ? 1 : 0;
  }
  return static_cast<double>(ok) / static_cast<double>(human.size());
}

TieCalibration tie_calibrated_accuracy(std::span<const double> human,
                                       std::span<const double> metric) {
  const std::size_t n = human.size();
  if (n == 0 || metric.size() != n)
    throw DataError(Code::kInvalidArgument,
                    "tie calibration needs non-empty aligned rows");
  // Human ties are correct once eps >= |m|; decided rows stay correct
  // while eps < |m| provided the signs agree.
  std::vector<double> tie_mag, hit_mag, cands{0.0};
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(human[i]) || !std::isfinite(metric[i]))
      throw DataError(Code::kInvalidArgument, "non-finite tie-calibration row");
    const double a = std::abs(metric[i]);
    cands.push_back(a);
    const int h = sign_of(human[i]);
    if (h == 0)
      tie_mag.push_back(a);
    else if (sign_of(metric[i]) == h)
      hit_mag.push_back(a);
  }
  std::sort(tie_mag.begin(), tie_mag.end());
  std::sort(hit_mag.begin(), hit_mag.end());
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end()), cands.end());

  TieCalibration best{-1.0, 0.0, n};
  std::size_t best_count = 0;
  bool have = false;
  for (double eps : cands) {
    const auto ties_ok = static_cast<std::size_t>(
        std::upper_bound(tie_mag.begin(), tie_mag.end(), eps) - tie_mag.begin());
    const auto hits_ok = static_cast<std::size_t>(
        hit_mag.end() - std::upper_bound(hit_mag.begin(), hit_mag.end(), eps));
    const std::size_t count = ties_ok + hits_ok;
    if (!have || count > best_count) {
      have = true;
      best_count = count;
      best.epsilon = eps;
    }
  }
  best.accuracy = static_cast<double>(best_count) / static_cast<double>(n);
  return best;
}

TieCalibration tie_calibrated_accuracy(const ScoreTable& human,
                                       const ScoreTable& metric) {
  std::vector<double> h, m;
  const auto canon = human.canonical();
  for (const auto& r : canon.rows()) {
    const auto v = metric.find(r.segment_id, r.system_a, r.system_b);
    if (!v)
      throw DataError(Code::kMissingPair, "metric table lacks (" +
                                              r.segment_id + ", " + r.system_a +
                                              ", " + r.system_b + ")");
    h.push_back(r.score);
    m.push_back(*v);
  }
  if (h.empty())
    throw DataError(Code::kInvalidArgument, "no rows to calibrate");
  return tie_calibrated_accuracy(h, m);
}

double avg_corr(double spa, double acc_eq_star) {
  if (!(spa >= 0.0 && spa <= 1.0 && acc_eq_star >= 0.0 && acc_eq_star <= 1.0))
    throw DataError(Code::kInvalidArgument,
                    "avg_corr inputs must lie in [0, 1]");
  return 0.5 * (spa + acc_eq_star);
}

nlohmann::ordered_json MetaEvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["spa"] = spa;
  j["acc_eq_star"] = acc_eq_star;
  j["epsilon_star"] = epsilon_star;
  j["avg_corr"] = avg_corr;
  j["rows"] = rows;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& p : pairs)
    arr.push_back({{"system_a", p.system_a},
                   {"system_b", p.system_b},
                   {"n_segments", p.n_segments},
                   {"human_mean", p.human_mean},
                   {"metric_mean", p.metric_mean},
                   {"p_human", p.p_human},
                   {"p_metric", p.p_metric},
                   {"exhaustive", p.exhaustive}});
  j["pairs"] = std::move(arr);
  return j;
}

MetaEvalReport meta_evaluate(const ScoreTable& human, const ScoreTable& metric,
                             const SpaOptions& options) {
  MetaEvalReport r;
  auto spa = soft_pairwise_accuracy(human, metric, options);
  const auto tc = tie_calibrated_accuracy(human, metric);
  r.spa = spa.spa;
  r.pairs = std::move(spa.pairs);
  r.acc_eq_star = tc.accuracy;
  r.epsilon_star = tc.epsilon;
  r.rows = tc.rows;
  r.avg_corr = avg_corr(r.spa, r.acc_eq_star);
  return r;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n == 0 || y.size() != n) return std::numeric_limits<double>::quiet_NaN();
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

bool PearsonMatrix::defined(std::size_t i, std::size_t j) const {
  return !std::isnan(r[i][j]);
}

nlohmann::ordered_json PearsonMatrix::to_json() const {
  nlohmann::ordered_json j;
  j["names"] = names;
  j["rows"] = rows;
  auto mat = nlohmann::ordered_json::array();
  for (const auto& row : r) {
    auto jr = nlohmann::ordered_json::array();
    for (double v : row)
      jr.push_back(std::isnan(v) ? nlohmann::ordered_json(nullptr)
                                 : nlohmann::ordered_json(v));
    mat.push_back(std::move(jr));
  }
  j["r"] = std::move(mat);
  return j;
}

PearsonMatrix pearson_diff_matrix(
    const std::vector<std::pair<std::string, ScoreTable>>& tables) {
  if (tables.empty())
    throw DataError(Code::kInvalidArgument, "no tables to correlate");
  std::vector<ScoreTable> canon;
  for (const auto& [name, t] : tables) canon.push_back(t.canonical());
  std::vector<const ScoreRow*> shared;
  for (const auto& row : canon[0].rows()) {
    bool everywhere = true;
    for (std::size_t k = 1; k < canon.size() && everywhere; ++k)
      everywhere = canon[k].find(row.segment_id, row.system_a, row.system_b)
                       .has_value();
    if (everywhere) shared.push_back(&row);
  }
  if (shared.empty())
    throw DataError(Code::kMissingPair, "tables share no row");
  std::vector<std::vector<double>> vecs(canon.size());
  for (std::size_t k = 0; k < canon.size(); ++k)
    for (const auto* row : shared)
      vecs[k].push_back(
          *canon[k].find(row->segment_id, row->system_a, row->system_b));

  PearsonMatrix out;
  out.rows = shared.size();
  const std::size_t m = tables.size();
  out.r.assign(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    out.names.push_back(tables[i].first);
    for (std::size_t j = i; j < m; ++j) {
      double v = pearson(vecs[i], vecs[j]);
      if (i == j && !std::isnan(v)) v = 1.0;
      out.r[i][j] = out.r[j][i] = v;
    }
  }
  return out;
}

std::string RankTable::to_tsv() const {
  std::string out = "variant";
  for (const auto& a : anchors) out += '\t' + textio::tsv_escape(a);
  out += '\n';
  for (std::size_t v = 0; v < variants.size(); ++v) {
    out += textio::tsv_escape(variants[v]);
    for (std::size_t a = 0; a < anchors.size(); ++a)
      out += '\t' + std::to_string(ranks[v][a]);
    out += '\n';
  }
  return out;
}

nlohmann::ordered_json RankTable::to_json() const {
  nlohmann::ordered_json j;
  j["variants"] = variants;
  j["anchors"] = anchors;
  j["ranks"] = ranks;
  j["avg_corr"] = avg_corr;
  return j;
}

RankTable anchor_rank_stability(const std::vector<MetricVariant>& variants,
                                const EvalDataset& dataset,
                                const std::vector<Anchor>& anchors,
                                ScoreMode mode, const SpaOptions& options) {
  if (variants.empty() || anchors.empty())
    throw DataError(Code::kInvalidArgument,
                    "rank stability needs variants and anchors");
  RankTable out;
  for (const auto& v : variants) out.variants.push_back(v.name);
  out.ranks.assign(variants.size(), std::vector<std::size_t>(anchors.size()));
  out.avg_corr.assign(variants.size(), std::vector<double>(anchors.size()));
  const ScoreTable human_all = human_score_table(dataset);

  for (std::size_t a = 0; a < anchors.size(); ++a) {
    const Anchor& anchor = anchors[a];
    out.anchors.push_back(anchor.label());
    for (std::size_t v = 0; v < variants.size(); ++v) {
      const auto scores = system_scores_anchored(*variants[v].scorer, dataset,
                                                 {}, anchor, mode, options.jobs);
      const auto metric = diff_table_from_absolute(scores.segment_scores).table;
      std::vector<ScoreRow> kept;
      for (const auto& r : human_all.rows())
        if (metric.find(r.segment_id, r.system_a, r.system_b))
          kept.push_back(r);
      const auto report =
          meta_evaluate(ScoreTable(std::move(kept)), metric, options);
      out.avg_corr[v][a] = report.avg_corr;
    }
    std::vector<std::size_t> order(variants.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
      if (out.avg_corr[x][a] != out.avg_corr[y][a])
        return out.avg_corr[x][a] > out.avg_corr[y][a];
      return variants[x].name < variants[y].name;
    });
    for (std::size_t r = 0; r < order.size(); ++r)
      out.ranks[order[r]][a] = r + 1;
  }
  return out;
}

}  // namespace pear
