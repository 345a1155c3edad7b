#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "metasdt/analysis.hpp"
#include "metasdt/error.hpp"
#include "metasdt/metrics.hpp"
#include "metasdt/report.hpp"
#include "metasdt/robustness.hpp"
#include "metasdt/simulator.hpp"
#include "metasdt/trial_store.hpp"

namespace py = pybind11;
using namespace metasdt;

namespace {

// JSON crosses the boundary as text; the Python side sees plain dicts.
py::object to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_py(const py::handle& o) {
  const auto text = py::module_::import("json").attr("dumps")(o).cast<std::string>();
  return nlohmann::json::parse(text);
}

struct Trials {
  std::vector<TrialRecord> records;
};

TrialRecord record_from_dict(const py::dict& d) {
  TrialRecord t;
  t.model_id = d["model_id"].cast<std::string>();
  t.dataset_id = d.contains("dataset_id") ? d["dataset_id"].cast<std::string>() : "default";
  t.domain = d.contains("domain") ? d["domain"].cast<std::string>() : "all";
  t.temperature = d.contains("temperature") ? d["temperature"].cast<double>() : 1.0;
  t.question_id = d["question_id"].cast<std::string>();
  t.nlp = d["nlp"].cast<double>();
  t.correct = d["correct"].cast<bool>();
  if (d.contains("answer_text") && !d["answer_text"].is_none()) {
    t.answer_text = d["answer_text"].cast<std::string>();
  }
  return t;
}

py::dict record_to_dict(const TrialRecord& t) {
  py::dict d;
  d["model_id"] = t.model_id;
  d["dataset_id"] = t.dataset_id;
  d["domain"] = t.domain;
  d["temperature"] = t.temperature;
  d["question_id"] = t.question_id;
  d["nlp"] = t.nlp;
  d["correct"] = t.correct;
  d["answer_text"] = t.answer_text ? py::cast(*t.answer_text) : py::none();
  return d;
}

RatingCounts counts_from(const std::vector<double>& incorrect,
                         const std::vector<double>& correct) {
  if (incorrect.size() != correct.size() || incorrect.size() % 2 != 0) {
    throw std::invalid_argument("count arrays must have equal, even length");
  }
  RatingCounts c;
  c.k = static_cast<int>(incorrect.size() / 2);
  c.n_r_s1 = incorrect;
  c.n_r_s2 = correct;
  c.validate();
  return c;
}

BinningScheme scheme_for(const Trials& trials, int k, const std::string& strategy) {
  return fit_bins(std::span<const TrialRecord>(trials.records), k,
                  bin_strategy_from_string(strategy));
}

RunConfig config_or_default(const py::object& config) {
  return config.is_none() ? RunConfig{} : config_from_json(from_py(config));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Type-2 signal detection analysis of confidence data";
  m.attr("__version__") = METASDT_VERSION;

  // Later registrations are tried first, so the base class goes first.
  const auto base = py::register_exception<Error>(m, "MetasdtError", PyExc_RuntimeError);
  py::register_exception<UnstableEstimate>(m, "UnstableEstimate", base);
  py::register_exception<DuplicateRecord>(m, "DuplicateRecord", base);

  py::class_<Trials>(m, "Trials")
      .def(py::init([](const py::list& records) {
             Trials t;
             for (const auto& r : records) t.records.push_back(record_from_dict(r.cast<py::dict>()));
             return t;
           }),
           py::arg("records"))
      .def("__len__", [](const Trials& t) { return t.records.size(); })
      .def("__getitem__",
           [](const Trials& t, std::ptrdiff_t i) {
             const auto n = static_cast<std::ptrdiff_t>(t.records.size());
             if (i < 0) i += n;
             if (i < 0 || i >= n) throw py::index_error();
             return record_to_dict(t.records[static_cast<std::size_t>(i)]);
           })
      .def("records",
           [](const Trials& t) {
             py::list out;
             for (const auto& r : t.records) out.append(record_to_dict(r));
             return out;
           })
      .def_property_readonly("nlp",
                             [](const Trials& t) {
                               std::vector<double> v;
                               v.reserve(t.records.size());
                               for (const auto& r : t.records) v.push_back(r.nlp);
                               return v;
                             })
      .def_property_readonly("correct",
                             [](const Trials& t) {
                               std::vector<bool> v;
                               v.reserve(t.records.size());
                               for (const auto& r : t.records) v.push_back(r.correct);
                               return v;
                             })
      .def(
          "filter",
          [](const Trials& t, std::optional<std::string> model_id,
             std::optional<std::string> dataset_id, std::optional<std::string> domain,
             std::optional<double> temperature) {
            TrialFilter f{model_id, dataset_id, domain, temperature};
            return Trials{filter_trials(std::span<const TrialRecord>(t.records), f)};
          },
          py::arg("model_id") = py::none(), py::arg("dataset_id") = py::none(),
          py::arg("domain") = py::none(), py::arg("temperature") = py::none())
      .def("to_jsonl",
           [](const Trials& t) {
             std::ostringstream out;
             write_trials(out, t.records);
             return out.str();
           })
      .def("__add__", [](const Trials& a, const Trials& b) {
        Trials out = a;
        out.records.insert(out.records.end(), b.records.begin(), b.records.end());
        return out;
      });

  m.def(
      "load_trials",
      [](const std::string& path, bool allow_ungraded) {
        LoadOptions opts;
        opts.format = format_from_path(path, &opts.delimiter);
        opts.allow_ungraded = allow_ungraded;
        auto res = load_trials_file(path, opts);
        return Trials{std::move(res.records)};
      },
      py::arg("path"), py::arg("allow_ungraded") = false);

  m.def(
      "simulate",
      [](double d_gen, double sigma_meta, std::size_t n, std::uint64_t seed, double c_gen,
         double sigma_ratio, double base_rate, const std::string& model_id,
         const std::string& dataset_id, const std::string& domain, double temperature) {
        ObserverSpec spec;
        spec.d_gen = d_gen;
        spec.sigma_meta = sigma_meta;
        spec.n = n;
        spec.seed = seed;
        spec.c_gen = c_gen;
        spec.sigma_ratio = sigma_ratio;
        spec.base_rate = base_rate;
        TrialLabels labels;
        labels.model_id = model_id;
        labels.dataset_id = dataset_id;
        labels.domain = domain;
        labels.temperature = temperature;
        return Trials{simulate(spec, labels)};
      },
      py::arg("d_gen") = 1.5, py::arg("sigma_meta") = 0.0, py::arg("n") = 1000,
      py::arg("seed") = 0, py::arg("c_gen") = 0.0, py::arg("sigma_ratio") = 1.0,
      py::arg("base_rate") = 0.5, py::arg("model_id") = "sim", py::arg("dataset_id") = "sim",
      py::arg("domain") = "all", py::arg("temperature") = 1.0);

  m.def(
      "simulate_grid",
      [](const py::object& grid) {
        const auto cells = grid_from_json(from_py(grid));
        return Trials{simulate_grid(cells)};
      },
      py::arg("grid"));

  m.def(
      "fit_counts",
      [](const std::vector<double>& incorrect, const std::vector<double>& correct,
         std::optional<double> s) {
        return to_py(to_json(estimate_from_counts(counts_from(incorrect, correct), s)));
      },
      py::arg("incorrect"), py::arg("correct"), py::arg("s") = py::none(),
      "Fit meta-d' to rating counts (ratings 1..2K, incorrect and correct trials).");

  m.def(
      "fit",
      [](const Trials& trials, int k, const std::string& strategy, std::optional<double> s) {
        const auto scheme = scheme_for(trials, k, strategy);
        auto j = to_json(estimate_cell(trials.records, scheme, s));
        j["binning"] = to_json(scheme);
        return to_py(j);
      },
      py::arg("trials"), py::arg("k") = 4, py::arg("strategy") = "quantile",
      py::arg("s") = py::none());

  m.def(
      "bootstrap",
      [](const Trials& trials, int k, int n_resamples, std::uint64_t seed, double level,
         unsigned threads) {
        const auto scheme = scheme_for(trials, k, "quantile");
        BootstrapParams p;
        p.n_resamples = n_resamples;
        p.seed = seed;
        p.level = level;
        p.threads = threads;
        CellBootstrap b;
        {
          py::gil_scoped_release release;
          b = bootstrap_cell(rate_trials(trials.records, scheme), p);
        }
        return to_py(to_json(b));
      },
      py::arg("trials"), py::arg("k") = 4, py::arg("n_resamples") = 1000, py::arg("seed") = 42,
      py::arg("level") = 0.95, py::arg("threads") = 0);

  m.def("type1", [](double hr, double far) { return to_py(to_json(type1_from_rates(hr, far))); },
        py::arg("hit_rate"), py::arg("false_alarm_rate"));
  m.def("m_ratio", &m_ratio, py::arg("meta_d"), py::arg("d_prime"));
  m.def(
      "auroc2",
      [](const std::vector<double>& confidence, const std::vector<bool>& correct) {
        if (confidence.size() != correct.size()) {
          throw std::invalid_argument("confidence and correct differ in length");
        }
        std::unique_ptr<bool[]> flags(new bool[correct.size()]);
        for (std::size_t i = 0; i < correct.size(); ++i) flags[i] = correct[i];
        return auroc2(confidence, std::span<const bool>(flags.get(), correct.size()));
      },
      py::arg("confidence"), py::arg("correct"));
  m.def(
      "metrics",
      [](const Trials& t, int ece_bins) {
        nlohmann::json j{{"auroc2", auroc2(t.records)},
                         {"ece", ece(t.records, ece_bins)},
                         {"brier", brier(t.records)},
                         {"accuracy", accuracy(t.records)},
                         {"monotonicity", to_json(monotonicity_check(t.records))}};
        return to_py(j);
      },
      py::arg("trials"), py::arg("ece_bins") = 10);

  m.def(
      "tost",
      [](const std::map<std::string, std::vector<double>>& replicates, double delta,
         double level) {
        std::map<std::string, BootstrapResult> by;
        for (const auto& [name, reps] : replicates) {
          BootstrapResult r;
          r.replicates = reps;
          r.n_resamples = static_cast<int>(reps.size());
          by[name] = std::move(r);
        }
        return to_py(to_json(tost_equivalence(by, delta, level)));
      },
      py::arg("replicates"), py::arg("delta") = 0.3, py::arg("level") = 0.95);
  m.def(
      "spearman",
      [](const std::vector<double>& x, const std::vector<double>& y) { return spearman_rho(x, y); },
      py::arg("x"), py::arg("y"));

  m.def(
      "robustness",
      [](const Trials& trials, const std::string& check, std::vector<int> k_values,
         std::optional<double> s, int strata) {
        const std::span<const TrialRecord> all(trials.records);
        RobustnessReport r;
        if (check == "R1") {
          r = run_r1(all, k_values);
        } else if (check == "R2") {
          r = run_r2(all, s);
        } else if (check == "R3") {
          r = run_r3(all);
        } else if (check == "R6") {
          r = run_r6(all, strata);
        } else {
          throw std::invalid_argument("unknown robustness check: " + check);
        }
        return to_py(to_json(r));
      },
      py::arg("trials"), py::arg("check"), py::arg("k_values") = std::vector<int>{3, 6},
      py::arg("s") = py::none(), py::arg("strata") = 10);

  m.def(
      "evaluate",
      [](const Trials& trials, const py::object& config, unsigned threads, bool robustness) {
        const RunConfig c = config_or_default(config);
        PipelineOptions opts;
        opts.threads = threads;
        opts.robustness = robustness;
        nlohmann::json j;
        {
          py::gil_scoped_release release;
          j = to_json(run_pipeline(c, trials.records, opts));
        }
        return to_py(j);
      },
      py::arg("trials"), py::arg("config") = py::none(), py::arg("threads") = 0,
      py::arg("robustness") = true);

  m.def("default_config", [] { return to_py(to_json(RunConfig{})); });
  m.def(
      "emit_report",
      [](const py::object& report, const std::filesystem::path& out_dir, bool svg) {
        return emit_report(from_py(report), out_dir, {.svg = svg});
      },
      py::arg("report"), py::arg("out_dir"), py::arg("svg") = false);
  m.def(
      "validate_report", [](const py::object& report) { return validate_report(from_py(report)); },
      py::arg("report"));
}
