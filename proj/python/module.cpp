#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "pear/cli.hpp"
#include "pear/consistency.hpp"
#include "pear/corpus.hpp"
#include "pear/error.hpp"
#include "pear/inference.hpp"
#include "pear/mbr.hpp"
#include "pear/metaeval.hpp"
#include "pear/model.hpp"
#include "pear/score_table.hpp"
#include "pear/training.hpp"

namespace py = pybind11;
using namespace pear;

namespace {

py::tuple run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code;
  {
    py::gil_scoped_release release;
    code = cli::dispatch(args, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

DatasetFormat dataset_format(const std::string& name) {
  if (name == "jsonl") return DatasetFormat::kJsonl;
  if (name == "tsv") return DatasetFormat::kTsv;
  throw py::value_error("format must be jsonl or tsv");
}

SpaOptions spa_options(std::size_t resamples, std::uint64_t seed,
                       std::size_t exhaustive_below, const std::string& tail) {
  SpaOptions o;
  o.resamples = resamples;
  o.seed = seed;
  o.exhaustive_below = exhaustive_below;
  if (tail == "one_sided") o.tail = SpaTail::kOneSided;
  else if (tail == "two_sided") o.tail = SpaTail::kTwoSided;
  else throw py::value_error("tail must be one_sided or two_sided");
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Pairwise MT evaluation core";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<EvalDataset>(m, "EvalDataset")
      .def_static(
          "load",
          [](const std::filesystem::path& p, const std::string& format) {
            return load_dataset(p, dataset_format(format));
          },
          py::arg("path"), py::arg("format") = "jsonl")
      .def_static("from_jsonl",
                  [](const std::string& text) { return parse_dataset_jsonl(text); })
      .def(
          "save",
          [](const EvalDataset& d, const std::filesystem::path& p,
             const std::string& format) { save_dataset(d, p, dataset_format(format)); },
          py::arg("path"), py::arg("format") = "jsonl")
      .def("to_jsonl", &dataset_to_jsonl)
      .def("systems", &EvalDataset::systems)
      .def_property_readonly("n_segments",
                             [](const EvalDataset& d) { return d.segments().size(); })
      .def_property_readonly("n_judgments",
                             [](const EvalDataset& d) { return d.judgments().size(); });

  m.def(
      "generate_synthetic",
      [](std::size_t n_segments, std::size_t n_systems, double noise_sd,
         std::uint64_t seed) {
        SynthConfig c;
        c.n_segments = n_segments;
        c.n_systems = n_systems;
        c.noise_sd = noise_sd;
        c.seed = seed;
        auto r = generate_synthetic(c);
        return py::make_tuple(r.dataset, r.score_latent_correlation);
      },
      py::arg("n_segments") = 200, py::arg("n_systems") = 4,
      py::arg("noise_sd") = 0.0, py::arg("seed") = 1,
      "Returns (dataset, correlation of human scores with latent quality).");

  py::class_<ScoreTable>(m, "ScoreTable")
      .def(py::init([](const std::vector<std::tuple<std::string, std::string,
                                                    std::string, double>>& rows) {
        std::vector<ScoreRow> r;
        for (const auto& [s, a, b, v] : rows) r.push_back({s, a, b, v});
        return ScoreTable(std::move(r));
      }))
      .def_static("load", &load_score_table)
      .def_static("human", &human_score_table)
      .def("save", [](const ScoreTable& t, const std::filesystem::path& p) {
        save_score_table(t, p);
      })
      .def("to_tsv", &score_table_to_tsv)
      .def("systems", &ScoreTable::systems)
      .def("find", &ScoreTable::find)
      .def("rows",
           [](const ScoreTable& t) {
             std::vector<std::tuple<std::string, std::string, std::string, double>> r;
             for (const auto& x : t.rows())
               r.emplace_back(x.segment_id, x.system_a, x.system_b, x.score);
             return r;
           })
      .def("__len__", &ScoreTable::size);

  m.def("diff_table_from_absolute",
        [](const std::vector<std::tuple<std::string, std::string, double>>& scores) {
          std::vector<AbsoluteScore> in;
          for (const auto& [seg, sys, v] : scores) in.push_back({seg, sys, v});
          return diff_table_from_absolute(in).table;
        });

  py::class_<Model>(m, "Model")
      .def_static("load", &Model::load)
      .def("score", &Model::score, py::arg("source"), py::arg("mt_a"), py::arg("mt_b"))
      .def(
          "score_pair",
          [](const Model& model, const std::string& s, const std::string& a,
             const std::string& b, const std::string& mode) {
            return score_pair(model, s, a, b, parse_score_mode(mode));
          },
          py::arg("source"), py::arg("mt_a"), py::arg("mt_b"),
          py::arg("mode") = "both")
      .def(
          "score_matrix",
          [](const Model& model, const EvalDataset& data, const std::string& mode) {
            return score_matrix(model, data, {}, parse_score_mode(mode)).table;
          },
          py::arg("dataset"), py::arg("mode") = "both");

  m.def("huber", [](double r, double delta) {
    auto l = huber(r, delta);
    return py::make_tuple(l.value, l.derivative);
  });

  m.def(
      "tie_calibrated_accuracy",
      [](const std::vector<double>& human, const std::vector<double>& metric) {
        auto t = tie_calibrated_accuracy(human, metric);
        return py::make_tuple(t.accuracy, t.epsilon);
      },
      "Returns (accuracy, epsilon).");

  m.def(
      "soft_pairwise_accuracy",
      [](const ScoreTable& human, const ScoreTable& metric, std::size_t resamples,
         std::uint64_t seed, std::size_t exhaustive_below, const std::string& tail) {
        return soft_pairwise_accuracy(
                   human, metric, spa_options(resamples, seed, exhaustive_below, tail))
            .spa;
      },
      py::arg("human"), py::arg("metric"), py::arg("resamples") = 10000,
      py::arg("seed") = 0, py::arg("exhaustive_below") = 14,
      py::arg("tail") = "two_sided");

  m.def(
      "meta_evaluate",
      [](const ScoreTable& human, const ScoreTable& metric, std::size_t resamples,
         std::uint64_t seed) {
        auto r = meta_evaluate(human, metric, spa_options(resamples, seed, 14, "two_sided"));
        py::dict d;
        d["spa"] = r.spa;
        d["acc_eq_star"] = r.acc_eq_star;
        d["epsilon_star"] = r.epsilon_star;
        d["avg_corr"] = r.avg_corr;
        d["rows"] = r.rows;
        return d;
      },
      py::arg("human"), py::arg("metric"), py::arg("resamples") = 10000,
      py::arg("seed") = 0);

  m.def("audit_consistency", [](const ScoreTable& table) {
    auto r = audit_consistency(table);
    return py::make_tuple(r.max_eps_as(), r.max_eps_tr());
  }, "Returns (max |eps_AS|, max |eps_TR|).");

  m.def(
      "mbr_select",
      [](const Matrix& u) {
        auto s = mbr_select(u);
        return py::make_tuple(s.index, s.expected_utility);
      },
      "Returns (selected index, expected utilities).");

  m.def("synthetic_correct_tokens", &synthetic_correct_tokens);
  m.def("artifact_hash", &cli::artifact_hash);
  m.def("run_cli", &run_cli, py::arg("args"),
        "Runs one CLI command; returns (exit code, stdout, stderr).");
}
