// metasdt: command-line front end for the Type-2 SDT toolkit.
//
// Exit status: 0 success, 1 runtime failure, 2 usage or configuration error.
// Failures print a single JSON object {"error": ..., "kind": ...} on stderr.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "metasdt/analysis.hpp"
#include "metasdt/config.hpp"
#include "metasdt/digest.hpp"
#include "metasdt/error.hpp"
#include "metasdt/grading.hpp"
#include "metasdt/metrics.hpp"
#include "metasdt/report.hpp"
#include "metasdt/robustness.hpp"
#include "metasdt/simulator.hpp"

namespace {

using nlohmann::json;
using namespace metasdt;

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << json{{"error", message}, {"kind", kind}, {"exit_code", code}}.dump() << "\n";
  return code;
}

// ---- shared option groups -------------------------------------------------

struct TrialInput {
  std::string path = "-";
  std::string format = "auto";
  std::vector<std::string> mapping;
  char delimiter = ',';

  void add(CLI::App* app) {
    app->add_option("--trials,-t", path, "Trial log (.jsonl or .csv); '-' reads stdin")
        ->capture_default_str();
    app->add_option("--format", format, "auto, jsonl or csv")
        ->check(CLI::IsMember({"auto", "jsonl", "csv", "tsv"}))
        ->capture_default_str();
    app->add_option("--map", mapping, "Field mapping canonical=source (repeatable)");
  }

  LoadOptions options(bool allow_ungraded = false) {
    LoadOptions opts;
    opts.allow_ungraded = allow_ungraded;
    if (format == "auto") {
      opts.format = path == "-" ? InputFormat::kJsonLines : format_from_path(path, &delimiter);
    } else {
      opts.format = format == "jsonl" ? InputFormat::kJsonLines : InputFormat::kDelimited;
      if (format == "tsv") delimiter = '\t';
    }
    opts.delimiter = delimiter;
    for (const auto& m : mapping) {
      const auto eq = m.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == m.size()) {
        throw UsageError("--map expects canonical=source, got '" + m + "'");
      }
      opts.mapping.source_names[m.substr(0, eq)] = m.substr(eq + 1);
    }
    return opts;
  }

  LoadResult load(bool allow_ungraded = false) {
    const auto opts = options(allow_ungraded);
    if (path == "-") return load_trials(std::cin, opts);
    return load_trials_file(path, opts);
  }

  std::map<std::string, std::string> digests() const {
    if (path == "-") return {};
    return {{std::filesystem::path(path).filename().string(), sha256_file(path)}};
  }
};

void report_skipped(const LoadResult& r) {
  for (const auto& s : r.skipped) {
    std::cerr << json{{"warning", "skipped line"}, {"line", s.line}, {"reason", s.reason}}.dump()
              << "\n";
  }
}

struct ConfigOverrides {
  std::string path;
  std::optional<int> k;
  std::optional<std::string> strategy;
  std::optional<double> reference_temperature;
  std::optional<int> n_resamples;
  std::optional<std::uint64_t> seed;
  std::optional<double> level;
  std::optional<double> exclusion_bound;
  std::optional<double> tost_delta;
  std::optional<double> similarity_threshold;
  std::optional<std::vector<double>> temperatures_h3;
  std::optional<int> min_cell_trials;
  std::optional<int> ece_bins;
  std::optional<std::string> auroc2_variant;
  std::optional<std::vector<std::string>> checks;
  std::optional<std::vector<int>> r1_k;
  std::optional<double> r2_s;
  std::optional<int> r6_strata;

  void add(CLI::App* app, bool robustness_flags) {
    app->add_option("--config,-c", path, "RunConfig JSON document");
    app->add_option("--k", k, "Confidence levels per response side");
    app->add_option("--strategy", strategy, "quantile or equal_width");
    app->add_option("--reference-temperature", reference_temperature);
    app->add_option("--n-resamples", n_resamples, "Bootstrap resamples");
    app->add_option("--seed", seed, "Bootstrap seed");
    app->add_option("--level", level, "Confidence level of intervals");
    app->add_option("--exclusion-bound", exclusion_bound, "Drop resamples with |M| above this");
    app->add_option("--tost-delta", tost_delta);
    app->add_option("--similarity-threshold", similarity_threshold);
    app->add_option("--temperatures-h3", temperatures_h3)->delimiter(',');
    app->add_option("--min-cell-trials", min_cell_trials);
    app->add_option("--ece-bins", ece_bins);
    app->add_option("--auroc2", auroc2_variant, "raw or folded");
    if (robustness_flags) {
      app->add_option("--checks", checks, "Robustness checks, e.g. R1,R3")->delimiter(',');
      app->add_option("--r1-k", r1_k, "K values for R1")->delimiter(',');
      app->add_option("--r2-s", r2_s, "Supplied variance ratio for R2 (default: estimated)");
      app->add_option("--r6-strata", r6_strata, "Difficulty strata for R6");
    }
  }

  RunConfig resolve() const {
    json j = path.empty() ? to_json(RunConfig{}) : to_json(load_config(path));
    auto set = [&](const char* key, const auto& v) {
      if (v) j[key] = *v;
    };
    set("k", k);
    set("bin_strategy", strategy);
    set("reference_temperature", reference_temperature);
    set("tost_delta", tost_delta);
    set("similarity_threshold", similarity_threshold);
    set("temperatures_h3", temperatures_h3);
    set("min_cell_trials", min_cell_trials);
    set("ece_bins", ece_bins);
    set("auroc2_variant", auroc2_variant);
    if (n_resamples) j["bootstrap"]["n_resamples"] = *n_resamples;
    if (seed) j["bootstrap"]["seed"] = *seed;
    if (level) j["bootstrap"]["level"] = *level;
    if (exclusion_bound) j["bootstrap"]["exclusion_bound"] = *exclusion_bound;
    if (checks) j["robustness"]["checks"] = *checks;
    if (r1_k) j["robustness"]["r1_k"] = *r1_k;
    if (r2_s) j["robustness"]["r2_s"] = *r2_s;
    if (r6_strata) j["robustness"]["r6_strata"] = *r6_strata;
    return config_from_json(j);
  }
};

struct ObserverFlags {
  std::string grid;
  ObserverSpec spec;
  TrialLabels labels;

  void add(CLI::App* app) {
    app->add_option("--grid", grid, "ObserverSpec grid JSON (overrides the single-spec flags)");
    app->add_option("--d-gen", spec.d_gen)->capture_default_str();
    app->add_option("--c-gen", spec.c_gen)->capture_default_str();
    app->add_option("--sigma-ratio", spec.sigma_ratio)->capture_default_str();
    app->add_option("--sigma-meta", spec.sigma_meta)->capture_default_str();
    app->add_option("--base-rate", spec.base_rate)->capture_default_str();
    app->add_option("--n", spec.n)->capture_default_str();
    app->add_option("--seed", spec.seed)->capture_default_str();
  }

  std::vector<GridCell> cells() const {
    if (grid.empty()) {
      spec.validate();
      return {GridCell{spec, labels}};
    }
    std::ifstream in(grid);
    if (!in) throw UsageError("cannot read grid file '" + grid + "'");
    try {
      return grid_from_json(json::parse(in));
    } catch (const json::exception& e) {
      throw UsageError(std::string("invalid grid document: ") + e.what());
    }
  }
};

std::ostream* open_output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return &std::cout;
  file.open(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error("cannot write '" + path + "'");
  return &file;
}

// ---- subcommands ----------------------------------------------------------

struct IngestCmd {
  TrialInput input;
  std::string answers;
  std::string out;
  std::optional<double> threshold;
  bool strip_articles = false;

  void add(CLI::App* app) {
    input.add(app);
    app->add_option("--answers", answers, "Answer key JSON: question_id -> alias list");
    app->add_option("--threshold", threshold, "Similarity threshold for the fallback (0, 1]");
    app->add_flag("--strip-articles", strip_articles, "Drop leading a/an/the before matching");
    app->add_option("--out,-o", out, "Canonical JSONL output ('-' or empty: stdout)");
  }

  int run() {
    LoadResult loaded = input.load(!answers.empty());
    report_skipped(loaded);
    std::size_t graded = 0, empty = 0, dropped = 0;
    std::vector<TrialRecord> records;
    if (!answers.empty()) {
      std::ifstream in(answers);
      if (!in) throw UsageError("cannot read answer key '" + answers + "'");
      const auto keys = load_answer_keys(in, threshold.value_or(0.85));
      NormalizeOptions norm;
      norm.strip_articles = strip_articles;
      const std::set<std::size_t> ungraded(loaded.ungraded.begin(), loaded.ungraded.end());
      for (std::size_t i = 0; i < loaded.records.size(); ++i) {
        auto& t = loaded.records[i];
        const auto it = keys.find(t.question_id);
        if (it == keys.end() || !t.answer_text) {
          // Pre-graded records pass through; ungraded ones cannot be kept.
          if (ungraded.count(i)) {
            ++dropped;
          } else {
            records.push_back(std::move(t));
          }
          continue;
        }
        const auto g = grade_answer_detailed(*t.answer_text, it->second, norm);
        t.correct = g.correct;
        empty += g.empty_answer ? 1 : 0;
        ++graded;
        records.push_back(std::move(t));
      }
    } else {
      records = std::move(loaded.records);
    }
    std::ofstream file;
    write_trials(*open_output(out, file), records);
    std::cerr << json{{"records", records.size()},
                      {"skipped", loaded.skipped.size()},
                      {"graded", graded},
                      {"empty_answers", empty},
                      {"dropped_ungraded", dropped}}
                     .dump()
              << "\n";
    return 0;
  }
};

struct FitCmd {
  TrialInput input;
  int k = 4;
  std::string strategy = "quantile";
  std::optional<double> s;
  TrialFilter filter;
  int n_resamples = 0;
  std::uint64_t seed = 42;
  double level = 0.95;
  unsigned threads = 0;

  void add(CLI::App* app) {
    input.add(app);
    app->add_option("--k", k, "Confidence levels per response side (>= 2)")->capture_default_str();
    app->add_option("--strategy", strategy)
        ->check(CLI::IsMember({"quantile", "equal_width"}))
        ->capture_default_str();
    app->add_option("--s", s, "Variance ratio for the unequal-variance fit");
    app->add_option("--model", filter.model_id);
    app->add_option("--dataset", filter.dataset_id);
    app->add_option("--domain", filter.domain);
    app->add_option("--temperature", filter.temperature);
    app->add_option("--bootstrap", n_resamples, "Bootstrap resamples (0: none)")
        ->capture_default_str();
    app->add_option("--seed", seed)->capture_default_str();
    app->add_option("--level", level)->capture_default_str();
    app->add_option("--threads", threads, "Bootstrap worker threads (0: all cores)");
  }

  int run() {
    if (k < 2) throw UsageError("--k must be >= 2");
    if (s && !(*s > 0.0)) throw UsageError("--s must be positive");
    const LoadResult loaded = input.load();
    report_skipped(loaded);
    const auto trials = filter_trials(loaded.records, filter);
    if (trials.empty()) throw Error("no trials match the selection");
    const auto scheme = fit_bins(std::span<const TrialRecord>(trials), k,
                                 bin_strategy_from_string(strategy));
    const auto rated = rate_trials(trials, scheme);
    const auto estimate = estimate_from_counts(rated.counts(), s);
    json out = {{"n_trials", trials.size()},
                {"binning", to_json(scheme)},
                {"estimate", to_json(estimate)}};
    try {
      out["auroc2"] = auroc2(trials);
    } catch (const Error&) {
      out["auroc2"] = nullptr;
    }
    out["accuracy"] = accuracy(trials);
    if (n_resamples > 0) {
      BootstrapParams p;
      p.n_resamples = n_resamples;
      p.seed = seed;
      p.level = level;
      p.threads = threads;
      out["bootstrap"] = to_json(bootstrap_cell(rated, p, 0, s));
    }
    std::cout << out.dump(2) << "\n";
    return 0;
  }
};

std::filesystem::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("METASDT_OUT_DIR"); env && *env) return env;
  throw UsageError("no output directory: pass --out or set METASDT_OUT_DIR");
}

struct EvaluateCmd {
  TrialInput input;
  ConfigOverrides config;
  std::string out;
  unsigned threads = 0;
  bool no_robustness = false;
  bool svg = false;
  bool quiet = false;

  void add(CLI::App* app) {
    input.add(app);
    config.add(app, true);
    app->add_option("--out,-o", out, "Output directory (default: $METASDT_OUT_DIR)");
    app->add_option("--threads", threads, "Bootstrap worker threads (0: all cores)");
    app->add_flag("--no-robustness", no_robustness, "Skip the robustness battery");
    app->add_flag("--svg", svg, "Also render plots as SVG");
    app->add_flag("--quiet,-q", quiet, "No progress on stderr");
  }

  int run() {
    const RunConfig cfg = config.resolve();
    const auto dir = output_dir(out);
    const LoadResult loaded = input.load();
    report_skipped(loaded);
    PipelineOptions opts;
    opts.threads = threads;
    opts.robustness = !no_robustness;
    opts.input_digests = input.digests();
    if (!quiet) opts.progress = [](const std::string& m) { std::cerr << m << "\n"; };
    auto report = run_pipeline(cfg, loaded.records, opts);
    for (const auto& s : loaded.skipped) {
      report.warnings.push_back("input line " + std::to_string(s.line) + " skipped: " + s.reason);
    }
    const json doc = to_json(report);
    const auto files = emit_report(doc, dir, {svg});
    std::cout << json{{"out_dir", dir.string()}, {"files", files}}.dump() << "\n";
    return 0;
  }
};

struct RobustnessCmd {
  TrialInput input;
  ConfigOverrides config;
  std::string out;

  void add(CLI::App* app) {
    input.add(app);
    config.add(app, true);
    app->add_option("--out,-o", out, "Output JSON file (default: stdout)");
  }

  int run() {
    const RunConfig cfg = config.resolve();
    const LoadResult loaded = input.load();
    report_skipped(loaded);
    RobustnessSettings rs;
    rs.k = cfg.k;
    rs.strategy = cfg.bin_strategy;
    rs.reference_temperature = cfg.reference_temperature;
    rs.seed = cfg.bootstrap.seed;
    json reports = json::array();
    for (const auto& check : cfg.robustness.checks) {
      RobustnessReport r;
      if (check == "R1") r = run_r1(loaded.records, cfg.robustness.r1_k, rs);
      if (check == "R2") r = run_r2(loaded.records, cfg.robustness.r2_s, rs);
      if (check == "R3") r = run_r3(loaded.records, rs);
      if (check == "R6") r = run_r6(loaded.records, cfg.robustness.r6_strata, rs);
      reports.push_back(to_json(r));
    }
    std::ofstream file;
    *open_output(out, file) << json{{"robustness", reports}}.dump(2) << "\n";
    return 0;
  }
};

struct SimulateCmd {
  ObserverFlags observer;
  std::string out;

  void add(CLI::App* app) {
    observer.add(app);
    app->add_option("--model", observer.labels.model_id)->capture_default_str();
    app->add_option("--dataset", observer.labels.dataset_id)->capture_default_str();
    app->add_option("--domain", observer.labels.domain)->capture_default_str();
    app->add_option("--temperature", observer.labels.temperature)->capture_default_str();
    app->add_option("--out,-o", out, "JSONL output (default: stdout)");
  }

  int run() {
    const auto grid = observer.cells();
    const auto trials = simulate_grid(grid);
    std::ofstream file;
    write_trials(*open_output(out, file), trials);
    return 0;
  }
};

struct RecoveryCmd {
  ObserverFlags observer;
  RecoverySettings settings;
  std::string out;

  void add(CLI::App* app) {
    observer.add(app);
    app->add_option("--replicates", settings.replicates)->capture_default_str();
    app->add_option("--k", settings.k)->capture_default_str();
    app->add_option("--n-resamples", settings.bootstrap.n_resamples)->capture_default_str();
    app->add_option("--bootstrap-seed", settings.bootstrap.seed)->capture_default_str();
    app->add_option("--reference-n", settings.reference_n)->capture_default_str();
    app->add_option("--threads", settings.bootstrap.threads);
    app->add_option("--out,-o", out, "Output JSON file (default: stdout)");
  }

  int run() {
    if (settings.k < 2) throw UsageError("--k must be >= 2");
    std::vector<ObserverSpec> specs;
    for (const auto& c : observer.cells()) specs.push_back(c.spec);
    json rows = json::array();
    for (const auto& row : recovery_study(specs, settings)) rows.push_back(to_json(row));
    std::ofstream file;
    *open_output(out, file) << json{{"recovery", rows}}.dump(2) << "\n";
    return 0;
  }
};

struct ReportCmd {
  std::string from;
  std::string out;
  bool svg = false;

  void add(CLI::App* app) {
    app->add_option("--from", from, "Saved report.json")->required();
    app->add_option("--out,-o", out, "Output directory (default: $METASDT_OUT_DIR)");
    app->add_flag("--svg", svg, "Also render plots as SVG");
  }

  int run() {
    std::ifstream in(from);
    if (!in) throw UsageError("cannot read '" + from + "'");
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw UsageError(std::string("report is not valid JSON: ") + e.what());
    }
    const auto problems = validate_report(doc);
    if (!problems.empty()) {
      throw UsageError("report fails validation: " + problems.front() + " (+" +
                       std::to_string(problems.size() - 1) + " more)");
    }
    const auto files = emit_report(doc, output_dir(out), {svg});
    std::cout << json{{"files", files}}.dump() << "\n";
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Type-2 signal detection analysis of confidence/accuracy logs"};
  app.set_version_flag("--version", std::string(METASDT_VERSION));
  app.require_subcommand(1);

  IngestCmd ingest;
  FitCmd fit;
  EvaluateCmd evaluate;
  RobustnessCmd robustness;
  SimulateCmd simulate_cmd;
  RecoveryCmd recovery;
  ReportCmd report;
  ingest.add(app.add_subcommand("ingest", "Validate, grade and normalise trial logs"));
  fit.add(app.add_subcommand("fit", "Estimate d', meta-d' and M-ratio for one cell"));
  evaluate.add(app.add_subcommand("evaluate", "Run the full pipeline and emit the report"));
  robustness.add(app.add_subcommand("robustness", "Run the R1/R2/R3/R6 checks"));
  simulate_cmd.add(app.add_subcommand("simulate", "Generate synthetic trials"));
  recovery.add(app.add_subcommand("recovery", "Parameter recovery study"));
  report.add(app.add_subcommand("report", "Re-emit artifacts from a saved report"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), kUsageError);
  }

  try {
    if (app.got_subcommand("ingest")) return ingest.run();
    if (app.got_subcommand("fit")) return fit.run();
    if (app.got_subcommand("evaluate")) return evaluate.run();
    if (app.got_subcommand("robustness")) return robustness.run();
    if (app.got_subcommand("simulate")) return simulate_cmd.run();
    if (app.got_subcommand("recovery")) return recovery.run();
    if (app.got_subcommand("report")) return report.run();
  } catch (const ConfigError& e) {
    return fail("config", e.what(), kUsageError);
  } catch (const UsageError& e) {
    return fail("usage", e.what(), kUsageError);
  } catch (const std::invalid_argument& e) {
    return fail("usage", e.what(), kUsageError);
  } catch (const UnstableEstimate& e) {
    return fail("unstable", e.what(), kRuntimeError);
  } catch (const DuplicateRecord& e) {
    return fail("duplicate", e.what(), kRuntimeError);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), kRuntimeError);
  }
  return kUsageError;
}
