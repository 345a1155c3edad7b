#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "metasdt/analysis.hpp"
#include "metasdt/config.hpp"
#include "metasdt/metrics.hpp"
#include "metasdt/robustness.hpp"

namespace metasdt {

inline constexpr const char* kReportSchemaVersion = "1.0";

struct CellKey {
  std::string model_id;
  std::string dataset_id;
  std::string domain = "all";
  double temperature = 1.0;

  std::string label() const;
};

struct CellResult {
  CellKey key;
  // "aggregate" (all domains, reference temperature), "temperature" or "domain".
  std::string slice;
  std::size_t n_trials = 0;
  std::size_t n_correct = 0;
  bool underpowered = false;
  std::optional<CellEstimate> estimate;
  std::optional<MetricBundle> metrics;
  std::optional<CellBootstrap> bootstrap;
  std::optional<MonotonicityResult> monotonicity;
  std::vector<std::string> warnings;
  std::optional<std::string> error;
};

struct HypothesisResult {
  std::string id;
  // supported | partially supported | not supported | not evaluable
  std::string verdict;
  std::string rule;
  nlohmann::json evidence = nlohmann::json::array();
};

struct RiskCoverageCurve {
  std::string model_id;
  std::string dataset_id;
  std::vector<CoveragePoint> points;
};

struct EvaluationReport {
  RunConfig config;
  nlohmann::json provenance = nlohmann::json::object();
  std::vector<BinningScheme> schemes;
  std::vector<CellResult> cells;
  std::vector<HypothesisResult> hypotheses;
  std::vector<RiskCoverageCurve> risk_coverage;
  std::vector<RobustnessReport> robustness;
  std::vector<std::string> warnings;
};

struct PipelineOptions {
  unsigned threads = 0;
  bool robustness = true;
  // Named input files and their SHA-256, recorded in the provenance block.
  std::map<std::string, std::string> input_digests;
  std::function<void(const std::string&)> progress;
};

// Cell failures are recorded in the report; only an empty store or an
// invalid config throws.
EvaluationReport run_pipeline(const RunConfig& config, std::span<const TrialRecord> trials,
                              const PipelineOptions& options = {});

nlohmann::json to_json(const CellResult& c);
nlohmann::json to_json(const EvaluationReport& r);

// Byte-stable text form of the report document.
std::string dump_report(const nlohmann::json& report);

struct EmitOptions {
  bool svg = false;
};

// Writes report.json, tables/*.csv and plots/*.json (plus plots/*.svg when
// requested) under `out_dir`, returning the written paths relative to it.
std::vector<std::string> emit_report(const nlohmann::json& report,
                                     const std::filesystem::path& out_dir,
                                     const EmitOptions& options = {});

// Structural check of a report document against the versioned schema.
// Returns the list of problems; empty means valid.
std::vector<std::string> validate_report(const nlohmann::json& report);

}  // namespace metasdt
