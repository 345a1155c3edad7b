#include "metasdt/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "metasdt/rng.hpp"

namespace metasdt {

using nlohmann::json;

RunConfig::RunConfig() : rng_family(kRngFamily) {}

void RunConfig::validate() const {
  if (k < 2) throw ConfigError("k must be >= 2");
  if (!std::isfinite(reference_temperature)) throw ConfigError("reference_temperature must be finite");
  if (bootstrap.n_resamples < 1) throw ConfigError("bootstrap.n_resamples must be >= 1");
  if (!(bootstrap.level > 0.0 && bootstrap.level < 1.0)) {
    throw ConfigError("bootstrap.level must lie in (0, 1)");
  }
  if (!(bootstrap.exclusion_bound > 0.0)) throw ConfigError("bootstrap.exclusion_bound must be positive");
  if (!(tost_delta > 0.0)) throw ConfigError("tost_delta must be positive");
  if (!(similarity_threshold > 0.0 && similarity_threshold <= 1.0)) {
    throw ConfigError("similarity_threshold must lie in (0, 1]");
  }
  if (min_cell_trials < 0) throw ConfigError("min_cell_trials must be >= 0");
  if (ece_bins < 1) throw ConfigError("ece_bins must be >= 1");
  if (rng_family != kRngFamily) {
    throw ConfigError("unsupported rng_family '" + rng_family + "' (this build provides '" +
                      kRngFamily + "')");
  }
  if (auroc2_variant != "raw" && auroc2_variant != "folded") {
    throw ConfigError("auroc2_variant must be 'raw' or 'folded'");
  }
  static const std::set<std::string> known{"R1", "R2", "R3", "R6"};
  for (const auto& c : robustness.checks) {
    if (!known.count(c)) throw ConfigError("unknown robustness check '" + c + "'");
  }
  for (int kk : robustness.r1_k) {
    if (kk < 3) throw ConfigError("robustness.r1_k values must be >= 3");
  }
  if (robustness.r2_s && !(*robustness.r2_s > 0.0)) throw ConfigError("robustness.r2_s must be positive");
  if (robustness.r6_strata < 1) throw ConfigError("robustness.r6_strata must be >= 1");
}

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : keys) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown config key '" + where + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"k", "bin_strategy", "reference_temperature", "bootstrap", "tost_delta",
                  "similarity_threshold", "temperatures_h3", "min_cell_trials", "ece_bins",
                  "rng_family", "auroc2_variant", "robustness"},
                 "");
  RunConfig c;
  read(j, "k", c.k);
  if (j.contains("bin_strategy")) {
    try {
      c.bin_strategy = bin_strategy_from_string(j.at("bin_strategy").get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(std::string("bin_strategy: ") + e.what());
    }
  }
  read(j, "reference_temperature", c.reference_temperature);
  if (j.contains("bootstrap")) {
    const json& b = j.at("bootstrap");
    if (!b.is_object()) throw ConfigError("bootstrap must be an object");
    reject_unknown(b, {"n_resamples", "seed", "level", "exclusion_bound"}, "bootstrap.");
    read(b, "n_resamples", c.bootstrap.n_resamples);
    read(b, "seed", c.bootstrap.seed);
    read(b, "level", c.bootstrap.level);
    read(b, "exclusion_bound", c.bootstrap.exclusion_bound);
  }
  read(j, "tost_delta", c.tost_delta);
  read(j, "similarity_threshold", c.similarity_threshold);
  read(j, "temperatures_h3", c.temperatures_h3);
  read(j, "min_cell_trials", c.min_cell_trials);
  read(j, "ece_bins", c.ece_bins);
  read(j, "rng_family", c.rng_family);
  read(j, "auroc2_variant", c.auroc2_variant);
  if (j.contains("robustness")) {
    const json& r = j.at("robustness");
    if (!r.is_object()) throw ConfigError("robustness must be an object");
    reject_unknown(r, {"checks", "r1_k", "r2_s", "r6_strata"}, "robustness.");
    read(r, "checks", c.robustness.checks);
    read(r, "r1_k", c.robustness.r1_k);
    if (r.contains("r2_s") && !r.at("r2_s").is_null()) {
      double s = 0.0;
      read(r, "r2_s", s);
      c.robustness.r2_s = s;
    }
    read(r, "r6_strata", c.robustness.r6_strata);
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return config_from_json(j);
}

json to_json(const RunConfig& c) {
  return {{"k", c.k},
          {"bin_strategy", to_string(c.bin_strategy)},
          {"reference_temperature", c.reference_temperature},
          {"bootstrap",
           {{"n_resamples", c.bootstrap.n_resamples},
            {"seed", c.bootstrap.seed},
            {"level", c.bootstrap.level},
            {"exclusion_bound", c.bootstrap.exclusion_bound}}},
          {"tost_delta", c.tost_delta},
          {"similarity_threshold", c.similarity_threshold},
          {"temperatures_h3", c.temperatures_h3},
          {"min_cell_trials", c.min_cell_trials},
          {"ece_bins", c.ece_bins},
          {"rng_family", c.rng_family},
          {"auroc2_variant", c.auroc2_variant},
          {"robustness",
           {{"checks", c.robustness.checks},
            {"r1_k", c.robustness.r1_k},
            {"r2_s", c.robustness.r2_s ? json(*c.robustness.r2_s) : json(nullptr)},
            {"r6_strata", c.robustness.r6_strata}}}};
}

}  // namespace metasdt
