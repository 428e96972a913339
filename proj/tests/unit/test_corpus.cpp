#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "pear/error.hpp"

using namespace pear;

namespace {

EvalDataset one_segment(std::vector<std::pair<std::string, double>> judged,
                        std::vector<std::string> unjudged = {}) {
  std::vector<SystemOutput> outs;
  std::vector<HumanJudgment> js;
  for (const auto& [sys, score] : judged) {
    outs.push_back({sys, "seg", "mt of " + sys});
    js.push_back({"seg", sys, score});
  }
  for (const auto& sys : unjudged) outs.push_back({sys, "seg", "mt of " + sys});
  return EvalDataset({{"seg", "src text", "xx-yy"}}, outs, js);
}

}  // namespace

TEST_CASE("pairwise examples subtract judgments") {
  auto r = build_pairwise_examples(one_segment({{"A", 90}, {"B", 85}}));
  REQUIRE(r.examples.size() == 1);
  CHECK(r.examples[0].system_a == "A");
  CHECK(r.examples[0].delta_star == 5.0);
  CHECK(r.skipped == 0);
}

TEST_CASE("tied judgments are kept") {
  auto r = build_pairwise_examples(one_segment({{"A", 70}, {"B", 70}}));
  REQUIRE(r.examples.size() == 1);
  CHECK(r.examples[0].delta_star == 0.0);
}

TEST_CASE("missing judgment skips the pair") {
  auto data = one_segment({{"A", 90}, {"C", 80}}, {"B"});
  auto r = build_pairwise_examples(data);
  CHECK(r.examples.size() == 1);
  CHECK(r.skipped == 2);
  CHECK_THROWS_AS(build_pairwise_examples(one_segment({{"A", 90}}, {"B"})),
                  DataError);
}

TEST_CASE("n judged systems give n(n-1)/2 examples") {
  for (std::size_t n = 2; n <= 7; ++n) {
    std::vector<std::pair<std::string, double>> judged;
    for (std::size_t i = 0; i < n; ++i)
      judged.emplace_back("S" + std::to_string(i), 10.0 * i);
    CHECK(build_pairwise_examples(one_segment(judged)).examples.size() ==
          n * (n - 1) / 2);
  }
}

TEST_CASE("reversed example negates delta_star") {
  auto r = build_pairwise_examples(testing::toy_synth(20, 4, 3, 1.0).dataset);
  for (const auto& e : r.examples) {
    const auto rev = e.reversed();
    CHECK(rev.delta_star == -e.delta_star);
    CHECK(rev.mt_a == e.mt_b);
    CHECK(rev.system_b == e.system_a);
  }
}

TEST_CASE("sampled pairing is seeded") {
  auto data = testing::toy_synth(10, 5, 2).dataset;
  auto a = build_pairwise_examples(data, PairingPolicy::sampled(3, 9));
  auto b = build_pairwise_examples(data, PairingPolicy::sampled(3, 9));
  CHECK(a.examples.size() == 30);
  for (std::size_t i = 0; i < a.examples.size(); ++i)
    CHECK(a.examples[i].system_b == b.examples[i].system_b);
}

TEST_CASE("fixture loads with three segments") {
  auto d = load_dataset(PEAR_FIXTURES "/three_segments.jsonl",
                        DatasetFormat::kJsonl);
  CHECK(d.segments().size() == 3);
  CHECK(d.systems() == std::vector<std::string>{"A", "B"});
  CHECK(*d.find_judgment("s1", "A") == 90.0);
  CHECK_FALSE(d.find_judgment("s3", "B"));
  REQUIRE(d.find_reference("s1"));
  CHECK(d.find_reference("s2") == nullptr);
}

TEST_CASE("dangling output names the segment") {
  try {
    load_dataset(PEAR_FIXTURES "/dangling_output.jsonl", DatasetFormat::kJsonl);
    FAIL("expected an integrity error");
  } catch (const DataError& e) {
    CHECK(e.code() == DataError::Code::kIntegrity);
    CHECK(std::string(e.what()).find("s9") != std::string::npos);
  }
}

TEST_CASE("integrity violations") {
  using C = DataError::Code;
  auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const DataError& e) {
      return e.code();
    }
    return C::kIo;
  };
  CHECK(code_of([] { EvalDataset({{"a", "x", ""}, {"a", "y", ""}}, {}, {}); }) ==
        C::kIntegrity);
  CHECK(code_of([] { EvalDataset({{"a", "", ""}}, {}, {}); }) == C::kIntegrity);
  CHECK(code_of([] {
          EvalDataset({{"a", "x", ""}}, {{"A", "a", "m"}, {"A", "a", "n"}}, {});
        }) == C::kIntegrity);
  CHECK(code_of([] {
          EvalDataset({{"a", "x", ""}}, {{"A", "a", "m"}},
                      {{"a", "A", 1.0}, {"a", "A", 2.0}});
        }) == C::kIntegrity);
  CHECK(code_of([] {
          EvalDataset({{"a", "x", ""}}, {{"A", "a", "m"}},
                      {{"a", "A", std::nan("")}});
        }) == C::kIntegrity);
  CHECK(code_of([] { parse_dataset_jsonl("{\"kind\":\"segment\"\n"); }) ==
        C::kParse);
}

TEST_CASE("dataset round trips in both formats") {
  testing::TempDir tmp("corpus_rt");
  for (std::uint64_t seed : {1, 2, 3}) {
    auto d = testing::toy_synth(15, 3, seed, 2.0).dataset;
    save_dataset(d, tmp.path / "d.jsonl", DatasetFormat::kJsonl);
    CHECK(load_dataset(tmp.path / "d.jsonl", DatasetFormat::kJsonl) == d);
    save_dataset(d, tmp.path / "tsv", DatasetFormat::kTsv);
    CHECK(load_dataset(tmp.path / "tsv", DatasetFormat::kTsv) == d);
  }
  auto fx = load_dataset(PEAR_FIXTURES "/three_segments.jsonl",
                         DatasetFormat::kJsonl);
  CHECK(parse_dataset_jsonl(dataset_to_jsonl(fx)) == fx);
}

TEST_CASE("input order does not matter") {
  auto d = testing::toy_synth(8, 3, 5).dataset;
  auto segs = d.segments();
  auto outs = d.outputs();
  auto js = d.judgments();
  std::reverse(segs.begin(), segs.end());
  std::reverse(outs.begin(), outs.end());
  std::reverse(js.begin(), js.end());
  CHECK(EvalDataset(segs, outs, js, d.references()) == d);
}

TEST_CASE("zero-noise synthetic deltas equal latent gaps") {
  auto r = testing::toy_synth(50, 4, 11);
  for (const auto& e : build_pairwise_examples(r.dataset).examples) {
    const double gap = r.latent.at({e.segment_id, e.system_a}) -
                       r.latent.at({e.segment_id, e.system_b});
    CHECK(e.delta_star == gap);
  }
}

TEST_CASE("zero-noise synthetic deltas keep the latent sign") {
  auto r = testing::toy_synth(50, 4, 11);
  for (const auto& e : build_pairwise_examples(r.dataset).examples) {
    const double gap = r.latent.at({e.segment_id, e.system_a}) -
                       r.latent.at({e.segment_id, e.system_b});
    CHECK((e.delta_star > 0) == (gap > 0));
    CHECK((e.delta_star < 0) == (gap < 0));
  }
}

TEST_CASE("synthetic generation is deterministic") {
  SynthConfig c;
  c.noise_sd = 1.0;
  c.seed = 42;
  CHECK(dataset_to_jsonl(generate_synthetic(c).dataset) ==
        dataset_to_jsonl(generate_synthetic(c).dataset));
  c.seed = 43;
  auto other = generate_synthetic(c);
  c.seed = 42;
  CHECK(dataset_to_jsonl(other.dataset) !=
        dataset_to_jsonl(generate_synthetic(c).dataset));
}

TEST_CASE("latent quality is recoverable from the text") {
  auto r = testing::toy_synth(30, 3, 4);
  for (const auto& o : r.dataset.outputs()) {
    const auto len = split_whitespace(o.translation).size();
    const double q =
        10.0 * synthetic_correct_tokens(o.translation) / static_cast<double>(len);
    CHECK(q == doctest::Approx(r.latent.at({o.segment_id, o.system_id})));
  }
}

TEST_CASE("logged correlation matches an independent recomputation") {
  SynthConfig c;
  c.n_segments = 500;
  c.noise_sd = 1.0;
  c.seed = 3;
  auto r = generate_synthetic(c);
  std::vector<double> h, q;
  for (const auto& j : r.dataset.judgments()) {
    const auto* o = r.dataset.find_output(j.system_id, j.segment_id);
    const auto words = split_whitespace(o->translation);
    std::size_t ok = 0;
    for (const auto& w : words) ok += w[0] != 'x';
    h.push_back(j.score);
    q.push_back(10.0 * ok / words.size());
  }
  const double n = h.size();
  double mh = 0, mq = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    mh += h[i] / n;
    mq += q[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    sxy += (h[i] - mh) * (q[i] - mq);
    sxx += (h[i] - mh) * (h[i] - mh);
    syy += (q[i] - mq) * (q[i] - mq);
  }
  const double rho = sxy / std::sqrt(sxx * syy);
  CHECK(r.score_latent_correlation == doctest::Approx(rho).epsilon(1e-12));
  CHECK(rho > 0.8);
  CHECK(rho < 1.0);
}

TEST_CASE("split partitions segments") {
  std::vector<Segment> segs;
  for (int i = 0; i < 10; ++i)
    segs.push_back({"g" + std::to_string(i), "src", ""});
  EvalDataset d(segs, {}, {});
  auto [tr, dv] = split_dataset(d, 0.8, 0.2, 1);
  CHECK(tr.segments().size() == 8);
  CHECK(dv.segments().size() == 2);
  std::set<std::string> all;
  for (const auto& s : tr.segments()) all.insert(s.id);
  for (const auto& s : dv.segments()) CHECK(all.insert(s.id).second);
  CHECK(all.size() == 10);
  auto [tr2, dv2] = split_dataset(d, 0.8, 0.2, 1);
  CHECK(tr2 == tr);
  CHECK(dv2 == dv);

  try {
    split_dataset(d, 1.0, 0.0, 1);
    FAIL("expected an empty split");
  } catch (const DataError& e) {
    CHECK(e.code() == DataError::Code::kEmptySplit);
  }
}
