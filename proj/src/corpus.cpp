#include "pear/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pear/error.hpp"
#include "pear/parallel.hpp"
#include "pear/textio.hpp"

namespace pear {

using ojson = nlohmann::ordered_json;

PairwiseExample PairwiseExample::reversed() const {
  return {segment_id, system_b, system_a, source, mt_b, mt_a, -delta_star};
}

EvalDataset::EvalDataset(std::vector<Segment> segments,
                         std::vector<SystemOutput> outputs,
                         std::vector<HumanJudgment> judgments,
                         std::map<std::string, std::string> references)
    : segments_(std::move(segments)),
      outputs_(std::move(outputs)),
      judgments_(std::move(judgments)),
      references_(std::move(references)) {
  std::sort(segments_.begin(), segments_.end(),
            [](const Segment& a, const Segment& b) { return a.id < b.id; });
  std::sort(outputs_.begin(), outputs_.end(),
            [](const SystemOutput& a, const SystemOutput& b) {
              return std::tie(a.segment_id, a.system_id) <
                     std::tie(b.segment_id, b.system_id);
            });
  std::sort(judgments_.begin(), judgments_.end(),
            [](const HumanJudgment& a, const HumanJudgment& b) {
              return std::tie(a.segment_id, a.system_id) <
                     std::tie(b.segment_id, b.system_id);
            });
  index();
}

void EvalDataset::index() {
  using Code = DataError::Code;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    if (s.id.empty()) throw DataError(Code::kIntegrity, "segment with empty id");
    if (s.source_text.empty())
      throw DataError(Code::kIntegrity,
                      "segment '" + s.id + "' has empty source text");
    if (!segment_index_.emplace(s.id, i).second)
      throw DataError(Code::kIntegrity, "duplicate segment id '" + s.id + "'");
  }
  for (std::size_t i = 0; i < outputs_.size(); ++i) {
    const auto& o = outputs_[i];
    if (!segment_index_.count(o.segment_id))
      throw DataError(Code::kIntegrity, "output of system '" + o.system_id +
                                            "' references unknown segment '" +
                                            o.segment_id + "'");
    if (!output_index_.emplace(std::make_pair(o.system_id, o.segment_id), i)
             .second)
      throw DataError(Code::kIntegrity, "duplicate output for system '" +
                                            o.system_id + "' on segment '" +
                                            o.segment_id + "'");
  }
  for (std::size_t i = 0; i < judgments_.size(); ++i) {
    const auto& j = judgments_[i];
    if (!std::isfinite(j.score))
      throw DataError(Code::kIntegrity, "non-finite judgment for segment '" +
                                            j.segment_id + "', system '" +
                                            j.system_id + "'");
    if (!segment_index_.count(j.segment_id))
      throw DataError(Code::kIntegrity,
                      "judgment references unknown segment '" + j.segment_id +
                          "'");
    if (!output_index_.count({j.system_id, j.segment_id}))
      throw DataError(Code::kIntegrity, "judgment for system '" + j.system_id +
                                            "' on segment '" + j.segment_id +
                                            "' has no matching output");
    if (!judgment_index_.emplace(std::make_pair(j.segment_id, j.system_id), i)
             .second)
      throw DataError(Code::kIntegrity, "duplicate judgment for segment '" +
                                            j.segment_id + "', system '" +
                                            j.system_id + "'");
  }
  for (const auto& [seg, ref] : references_) {
    if (!segment_index_.count(seg))
      throw DataError(Code::kIntegrity,
                      "reference references unknown segment '" + seg + "'");
  }
}

std::vector<std::string> EvalDataset::systems() const {
  std::set<std::string> ids;
  for (const auto& o : outputs_) ids.insert(o.system_id);
  return {ids.begin(), ids.end()};
}

const Segment* EvalDataset::find_segment(const std::string& id) const {
  auto it = segment_index_.find(id);
  return it == segment_index_.end() ? nullptr : &segments_[it->second];
}

const SystemOutput* EvalDataset::find_output(
    const std::string& system_id, const std::string& segment_id) const {
  auto it = output_index_.find({system_id, segment_id});
  return it == output_index_.end() ? nullptr : &outputs_[it->second];
}

std::optional<double> EvalDataset::find_judgment(
    const std::string& segment_id, const std::string& system_id) const {
  auto it = judgment_index_.find({segment_id, system_id});
  if (it == judgment_index_.end()) return std::nullopt;
  return judgments_[it->second].score;
}

const std::string* EvalDataset::find_reference(
    const std::string& segment_id) const {
  auto it = references_.find(segment_id);
  return it == references_.end() ? nullptr : &it->second;
}

std::vector<std::string> EvalDataset::segments_covered_by(
    const std::string& system_id) const {
  std::vector<std::string> ids;
  for (const auto& o : outputs_)
    if (o.system_id == system_id) ids.push_back(o.segment_id);
  return ids;  // outputs are sorted by segment id
}

EvalDataset EvalDataset::subset(
    const std::vector<std::string>& segment_ids) const {
  std::set<std::string> keep(segment_ids.begin(), segment_ids.end());
  std::vector<Segment> segs;
  std::vector<SystemOutput> outs;
  std::vector<HumanJudgment> judg;
  std::map<std::string, std::string> refs;
  for (const auto& s : segments_)
    if (keep.count(s.id)) segs.push_back(s);
  for (const auto& o : outputs_)
    if (keep.count(o.segment_id)) outs.push_back(o);
  for (const auto& j : judgments_)
    if (keep.count(j.segment_id)) judg.push_back(j);
  for (const auto& [k, v] : references_)
    if (keep.count(k)) refs.emplace(k, v);
  return EvalDataset(std::move(segs), std::move(outs), std::move(judg),
                     std::move(refs));
}

bool EvalDataset::operator==(const EvalDataset& other) const {
  return segments_ == other.segments_ && outputs_ == other.outputs_ &&
         judgments_ == other.judgments_ && references_ == other.references_;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using Code = DataError::Code;
using namespace textio;

std::string field_string(const ojson& rec, const char* key,
                         const std::string& where) {
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_string())
    throw DataError(Code::kParse,
                    where + ": missing or non-string field '" + key + "'");
  return it->get<std::string>();
}

double field_number(const ojson& rec, const char* key,
                    const std::string& where) {
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_number())
    throw DataError(Code::kParse,
                    where + ": missing or non-numeric field '" + key + "'");
  return it->get<double>();
}

}  // namespace

EvalDataset parse_dataset_jsonl(const std::string& text,
                                const std::string& origin) {
  std::vector<Segment> segs;
  std::vector<SystemOutput> outs;
  std::vector<HumanJudgment> judg;
  std::map<std::string, std::string> refs;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    ojson rec;
    try {
      rec = ojson::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(Code::kParse, where + ": " + e.what());
    }
    if (!rec.is_object())
      throw DataError(Code::kParse, where + ": record is not an object");
    const std::string kind = field_string(rec, "kind", where);
    if (kind == "segment") {
      segs.push_back({field_string(rec, "id", where),
                      field_string(rec, "src", where),
                      rec.contains("lp") ? field_string(rec, "lp", where)
                                         : std::string()});
    } else if (kind == "output") {
      outs.push_back({field_string(rec, "sys", where),
                      field_string(rec, "seg", where),
                      field_string(rec, "mt", where)});
    } else if (kind == "judgment") {
      judg.push_back({field_string(rec, "seg", where),
                      field_string(rec, "sys", where),
                      field_number(rec, "score", where)});
    } else if (kind == "ref") {
      auto seg = field_string(rec, "seg", where);
      if (!refs.emplace(seg, field_string(rec, "ref", where)).second)
        throw DataError(Code::kIntegrity,
                        where + ": duplicate reference for segment '" + seg +
                            "'");
    } else {
      throw DataError(Code::kParse, where + ": unknown record kind '" + kind +
                                        "'");
    }
  }
  return EvalDataset(std::move(segs), std::move(outs), std::move(judg),
                     std::move(refs));
}

std::string dataset_to_jsonl(const EvalDataset& d) {
  std::string out;
  auto emit = [&out](const ojson& j) {
    out += j.dump();
    out += '\n';
  };
  for (const auto& s : d.segments())
    emit({{"kind", "segment"},
          {"id", s.id},
          {"src", s.source_text},
          {"lp", s.language_pair}});
  for (const auto& o : d.outputs())
    emit({{"kind", "output"},
          {"sys", o.system_id},
          {"seg", o.segment_id},
          {"mt", o.translation}});
  for (const auto& j : d.judgments())
    emit({{"kind", "judgment"},
          {"sys", j.system_id},
          {"seg", j.segment_id},
          {"score", j.score}});
  for (const auto& [seg, ref] : d.references())
    emit({{"kind", "ref"}, {"seg", seg}, {"ref", ref}});
  return out;
}

EvalDataset load_dataset(const std::filesystem::path& path,
                         DatasetFormat format) {
  if (format == DatasetFormat::kJsonl)
    return parse_dataset_jsonl(read_file(path), path.string());

  std::vector<Segment> segs;
  std::vector<SystemOutput> outs;
  std::vector<HumanJudgment> judg;
  std::map<std::string, std::string> refs;
  for (auto& r : read_tsv(path / "segments.tsv", {"id", "src", "lp"}))
    segs.push_back({r[0], r[1], r[2]});
  for (auto& r : read_tsv(path / "outputs.tsv", {"sys", "seg", "mt"}))
    outs.push_back({r[0], r[1], r[2]});
  std::size_t row = 0;
  for (auto& r : read_tsv(path / "judgments.tsv", {"sys", "seg", "score"})) {
    ++row;
    judg.push_back({r[1], r[0],
                    parse_double(r[2], (path / "judgments.tsv").string() +
                                           " row " + std::to_string(row))});
  }
  if (std::filesystem::exists(path / "refs.tsv")) {
    for (auto& r : read_tsv(path / "refs.tsv", {"seg", "ref"})) {
      if (!refs.emplace(r[0], r[1]).second)
        throw DataError(Code::kIntegrity,
                        "duplicate reference for segment '" + r[0] + "'");
    }
  }
  return EvalDataset(std::move(segs), std::move(outs), std::move(judg),
                     std::move(refs));
}

void save_dataset(const EvalDataset& d, const std::filesystem::path& path,
                  DatasetFormat format) {
  if (format == DatasetFormat::kJsonl) {
    write_file(path, dataset_to_jsonl(d));
    return;
  }
  std::filesystem::create_directories(path);
  std::string segs = "id\tsrc\tlp\n";
  for (const auto& s : d.segments())
    segs += tsv_escape(s.id) + '\t' + tsv_escape(s.source_text) + '\t' +
            tsv_escape(s.language_pair) + '\n';
  std::string outs = "sys\tseg\tmt\n";
  for (const auto& o : d.outputs())
    outs += tsv_escape(o.system_id) + '\t' + tsv_escape(o.segment_id) + '\t' +
            tsv_escape(o.translation) + '\n';
  std::string judg = "sys\tseg\tscore\n";
  for (const auto& j : d.judgments())
    judg += tsv_escape(j.system_id) + '\t' + tsv_escape(j.segment_id) + '\t' +
            format_double(j.score) + '\n';
  write_file(path / "segments.tsv", segs);
  write_file(path / "outputs.tsv", outs);
  write_file(path / "judgments.tsv", judg);
  if (!d.references().empty()) {
    std::string refs = "seg\tref\n";
    for (const auto& [seg, ref] : d.references())
      refs += tsv_escape(seg) + '\t' + tsv_escape(ref) + '\n';
    write_file(path / "refs.tsv", refs);
  }
}

// ---------------------------------------------------------------------------
// Pairwise supervision

PairBuildResult build_pairwise_examples(const EvalDataset& dataset,
                                        const PairingPolicy& policy) {
  PairBuildResult result;
  const auto systems = dataset.systems();
  for (const auto& seg : dataset.segments()) {
    std::vector<PairwiseExample> complete;
    for (std::size_t i = 0; i < systems.size(); ++i) {
      const auto* out_a = dataset.find_output(systems[i], seg.id);
      if (!out_a) continue;
      for (std::size_t j = i + 1; j < systems.size(); ++j) {
        const auto* out_b = dataset.find_output(systems[j], seg.id);
        if (!out_b) continue;
        auto score_a = dataset.find_judgment(seg.id, systems[i]);
        auto score_b = dataset.find_judgment(seg.id, systems[j]);
        if (!score_a || !score_b) {
          ++result.skipped;
          continue;
        }
        complete.push_back({seg.id, systems[i], systems[j], seg.source_text,
                            out_a->translation, out_b->translation,
                            *score_a - *score_b});
      }
    }
    if (policy.kind == PairingPolicy::Kind::kSampledPerSegment &&
        complete.size() > policy.k) {
      std::mt19937_64 rng(derive_seed(policy.seed, seg.id));
      std::vector<std::size_t> idx(complete.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(policy.k);
      std::sort(idx.begin(), idx.end());
      for (auto i : idx) result.examples.push_back(std::move(complete[i]));
    } else {
      for (auto& ex : complete) result.examples.push_back(std::move(ex));
    }
  }
  if (result.examples.empty())
    throw DataError(Code::kEmptySupervision,
                    "no segment has two or more judged systems (" +
                        std::to_string(result.skipped) +
                        " incomplete pairs skipped)");
  return result;
}

// ---------------------------------------------------------------------------
// Synthetic data

std::vector<std::string> split_whitespace(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::size_t synthetic_correct_tokens(const std::string& candidate) {
  std::size_t n = 0;
  for (const auto& tok : split_whitespace(candidate))
    if (!tok.empty() && tok[0] != 'x') ++n;
  return n;
}

namespace {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0 || syy <= 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::string padded(const char* prefix, std::size_t i, std::size_t width) {
  std::string num = std::to_string(i);
  if (num.size() < width) num.insert(0, width - num.size(), '0');
  return prefix + num;
}

std::size_t digits(std::size_t n) {
  return std::to_string(n > 0 ? n - 1 : 0).size();
}

}  // namespace

SynthResult generate_synthetic(const SynthConfig& c) {
  if (c.n_segments < 1 || c.n_systems < 1 || c.vocab_size < 1 ||
      c.min_length < 1 || c.max_length < c.min_length)
    throw DataError(Code::kInvalidArgument,
                    "synthetic config: counts must be >= 1 and "
                    "min_length <= max_length");
  if (!(c.noise_sd >= 0.0) || !(c.latent_gap_scale > 0.0))
    throw DataError(Code::kInvalidArgument,
                    "synthetic config: noise_sd must be >= 0 and "
                    "latent_gap_scale > 0");

  std::mt19937_64 rng(c.seed);
  std::uniform_int_distribution<std::size_t> concept_dist(0,
                                                          c.vocab_size - 1);
  std::uniform_int_distribution<std::size_t> len_dist(c.min_length,
                                                      c.max_length);
  std::normal_distribution<double> jitter(0.0, 0.2);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // System base qualities spread across [0.25, 0.85] with a small jitter.
  std::vector<double> base(c.n_systems);
  for (std::size_t j = 0; j < c.n_systems; ++j) {
    const double slot = c.n_systems == 1
                            ? 0.5
                            : static_cast<double>(j) / (c.n_systems - 1);
    base[j] = 0.25 + 0.6 * slot + 0.05 * (unit(rng) - 0.5);
  }

  SynthResult result;
  std::vector<Segment> segs;
  std::vector<SystemOutput> outs;
  std::vector<HumanJudgment> judg;
  std::map<std::string, std::string> refs;
  std::vector<double> xs, ys;

  const auto seg_width = digits(c.n_segments);
  const auto sys_width = digits(c.n_systems);
  for (std::size_t i = 0; i < c.n_segments; ++i) {
    const std::string seg_id = padded("seg", i, seg_width);
    const std::size_t len = len_dist(rng);
    std::vector<std::size_t> ideal(len);
    for (auto& k : ideal) k = concept_dist(rng);

    std::string src, ref;
    for (std::size_t t = 0; t < len; ++t) {
      if (t) {
        src += ' ';
        ref += ' ';
      }
      src += "s" + std::to_string(ideal[t]);
      ref += "t" + std::to_string(ideal[t]);
    }
    segs.push_back({seg_id, src, "src-tgt"});
    refs.emplace(seg_id, ref);

    for (std::size_t j = 0; j < c.n_systems; ++j) {
      const std::string sys_id = padded("sys", j, sys_width);
      const double p = std::clamp(base[j] + jitter(rng), 0.0, 1.0);
      std::binomial_distribution<std::size_t> kept_dist(len, p);
      const std::size_t kept = kept_dist(rng);
      std::vector<std::size_t> order(len);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<bool> keep(len, false);
      for (std::size_t t = 0; t < kept; ++t) keep[order[t]] = true;

      std::string mt;
      for (std::size_t t = 0; t < len; ++t) {
        if (t) mt += ' ';
        mt += keep[t] ? "t" + std::to_string(ideal[t])
                      : "x" + std::to_string(concept_dist(rng));
      }
      const double q = c.latent_gap_scale * static_cast<double>(kept) /
                       static_cast<double>(len);
      const double eps = noise(rng);
      const double score = q + c.noise_sd * eps;
      outs.push_back({sys_id, seg_id, mt});
      judg.push_back({seg_id, sys_id, score});
      result.latent.emplace(std::make_pair(seg_id, sys_id), q);
      xs.push_back(score);
      ys.push_back(q);
    }
  }
  result.dataset = EvalDataset(std::move(segs), std::move(outs),
                               std::move(judg), std::move(refs));
  result.score_latent_correlation = pearson(xs, ys);
  return result;
}

std::pair<EvalDataset, EvalDataset> split_dataset(const EvalDataset& dataset,
                                                  double train_fraction,
                                                  double dev_fraction,
                                                  std::uint64_t seed) {
  if (!(train_fraction >= 0.0) || !(dev_fraction >= 0.0) ||
      train_fraction + dev_fraction > 1.0 + 1e-12)
    throw DataError(Code::kInvalidArgument,
                    "split fractions must be non-negative and sum to <= 1");
  std::vector<std::string> ids;
  for (const auto& s : dataset.segments()) ids.push_back(s.id);
  const auto n = ids.size();
  const auto n_train =
      static_cast<std::size_t>(std::llround(train_fraction * n));
  const auto n_dev = std::min<std::size_t>(
      static_cast<std::size_t>(std::llround(dev_fraction * n)), n - n_train);
  if (n_train == 0)
    throw DataError(Code::kEmptySplit, "split leaves the train side empty");
  if (n_dev == 0)
    throw DataError(Code::kEmptySplit, "split leaves the dev side empty");
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  std::vector<std::string> train(ids.begin(), ids.begin() + n_train);
  std::vector<std::string> dev(ids.begin() + n_train,
                               ids.begin() + n_train + n_dev);
  return {dataset.subset(train), dataset.subset(dev)};
}

}  // namespace pear
