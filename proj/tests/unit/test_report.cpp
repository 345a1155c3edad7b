#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "metasdt/digest.hpp"
#include "metasdt/report.hpp"
#include "metasdt/rng.hpp"
#include "support.hpp"

using namespace metasdt;
using testsupport::observer;

namespace {

std::vector<TrialRecord> small_study() {
  std::vector<TrialRecord> trials;
  std::uint64_t seed = 1;
  for (const char* model : {"m1", "m2"}) {
    for (double temp : {0.5, 1.0}) {
      std::size_t q = 0;
      for (const char* domain : {"history", "science"}) {
        TrialLabels l;
        l.model_id = model;
        l.dataset_id = "qa";
        l.domain = domain;
        l.temperature = temp;
        l.question_offset = q;
        const double sigma = std::string(model) == "m1" ? 0.0 : 1.2;
        auto part = simulate(observer(1.4, sigma, 600, seed++), l);
        trials.insert(trials.end(), part.begin(), part.end());
        q += 600;
      }
    }
  }
  return trials;
}

RunConfig quick_config() {
  RunConfig c;
  c.bootstrap.n_resamples = 60;
  c.temperatures_h3 = {0.5, 1.0};
  return c;
}

const EvaluationReport& shared_report() {
  static const EvaluationReport r = [] {
    const auto trials = small_study();
    PipelineOptions opts;
    opts.threads = 1;
    return run_pipeline(quick_config(), trials, opts);
  }();
  return r;
}

}  // namespace

TEST(Digest, KnownSha256) {
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Report, CellLabels) {
  CellKey k{"m", "d", "history", 0.7};
  EXPECT_EQ(k.label(), "m|d|history|T=0.7");
}

TEST(Report, PipelineBuildsAllSlices) {
  const auto& r = shared_report();
  std::map<std::string, int> slices;
  for (const auto& c : r.cells) slices[c.slice]++;
  EXPECT_EQ(slices["aggregate"], 2);
  EXPECT_EQ(slices["temperature"], 2);
  EXPECT_EQ(slices["domain"], 4);
  for (const auto& c : r.cells) {
    ASSERT_TRUE(c.estimate.has_value()) << c.key.label();
    ASSERT_TRUE(c.bootstrap.has_value()) << c.key.label();
    EXPECT_LE(c.bootstrap->m_ratio.ci_low, c.bootstrap->m_ratio.ci_high);
    EXPECT_EQ(c.bootstrap->m_ratio.n_resamples, 60);
  }
  ASSERT_EQ(r.schemes.size(), 2u);
  EXPECT_EQ(r.schemes[0].reference.temperature, 1.0);
}

TEST(Report, NoisyModelHasLowerMRatio) {
  const auto& r = shared_report();
  double m1 = 0, m2 = 0;
  for (const auto& c : r.cells) {
    if (c.slice != "aggregate") continue;
    (c.key.model_id == "m1" ? m1 : m2) = c.estimate->m_ratio;
  }
  EXPECT_GT(m1, m2 + 0.2);
}

TEST(Report, HypothesesHaveKnownVerdicts) {
  const auto& r = shared_report();
  ASSERT_EQ(r.hypotheses.size(), 4u);
  const std::set<std::string> allowed{"supported", "partially supported", "not supported",
                                      "not evaluable"};
  std::set<std::string> ids;
  for (const auto& h : r.hypotheses) {
    ids.insert(h.id);
    EXPECT_TRUE(allowed.count(h.verdict)) << h.id << ": " << h.verdict;
    EXPECT_FALSE(h.rule.empty());
  }
  EXPECT_EQ(ids, (std::set<std::string>{"H1", "H2", "H3", "H4"}));
}

TEST(Report, RobustnessChecksRun) {
  const auto& r = shared_report();
  std::set<std::string> ids;
  for (const auto& c : r.robustness) ids.insert(c.check_id);
  EXPECT_EQ(ids, (std::set<std::string>{"R1", "R2", "R3", "R6"}));
}

TEST(Report, DocumentValidatesAndCarriesProvenance) {
  const auto j = to_json(shared_report());
  EXPECT_TRUE(validate_report(j).empty());
  const auto& p = j.at("provenance");
  EXPECT_EQ(p.at("schema_version"), kReportSchemaVersion);
  EXPECT_EQ(p.at("trials_sha256").get<std::string>().size(), 64u);
  EXPECT_EQ(p.at("config_sha256").get<std::string>().size(), 64u);
  EXPECT_EQ(p.at("rng_family"), kRngFamily);
  EXPECT_EQ(p.at("n_trials"), 4800);
}

TEST(Report, ValidatorFlagsBrokenDocuments) {
  auto j = to_json(shared_report());
  j.erase("hypotheses");
  EXPECT_FALSE(validate_report(j).empty());
  auto k = to_json(shared_report());
  k["schema_version"] = "0.1";
  EXPECT_FALSE(validate_report(k).empty());
  EXPECT_FALSE(validate_report(nlohmann::json::array()).empty());
}

TEST(Report, PipelineIsDeterministic) {
  const auto trials = small_study();
  PipelineOptions opts;
  opts.threads = 2;
  opts.robustness = false;
  const auto a = dump_report(to_json(run_pipeline(quick_config(), trials, opts)));
  opts.threads = 1;
  const auto b = dump_report(to_json(run_pipeline(quick_config(), trials, opts)));
  EXPECT_EQ(a, b);
}

TEST(Report, UnderpoweredCellsAreFlagged) {
  auto config = quick_config();
  config.min_cell_trials = 400;
  PipelineOptions opts;
  opts.robustness = false;
  const auto r = run_pipeline(config, small_study(), opts);
  bool any = false;
  for (const auto& c : r.cells) {
    if (c.slice == "domain") {
      EXPECT_TRUE(c.underpowered) << c.key.label();
      any = true;
    }
  }
  EXPECT_TRUE(any);
}

TEST(Report, EmptyStoreThrows) {
  EXPECT_THROW(run_pipeline(quick_config(), std::vector<TrialRecord>{}), std::exception);
}

TEST(Report, EmitWritesTablesAndPlots) {
  const auto dir = std::filesystem::temp_directory_path() / "metasdt_emit_test";
  std::filesystem::remove_all(dir);
  const auto files = emit_report(to_json(shared_report()), dir, {.svg = true});
  for (const char* expected : {"report.json", "tables/cells.csv", "tables/hypotheses.csv",
                               "plots/dprime_vs_metad.json", "plots/dprime_vs_metad.svg"}) {
    EXPECT_NE(std::find(files.begin(), files.end(), expected), files.end()) << expected;
    EXPECT_TRUE(std::filesystem::exists(dir / expected)) << expected;
  }
  std::ifstream in(dir / "report.json");
  const auto back = nlohmann::json::parse(in);
  EXPECT_TRUE(validate_report(back).empty());
  std::filesystem::remove_all(dir);
}
