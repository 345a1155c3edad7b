#include "metasdt/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "metasdt/digest.hpp"
#include "metasdt/error.hpp"
#include "metasdt/rng.hpp"

namespace metasdt {

using nlohmann::json;

namespace {

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::vector<double> distinct_temperatures(std::span<const TrialRecord> trials) {
  std::vector<double> temps;
  for (const auto& t : trials) {
    const bool seen = std::any_of(temps.begin(), temps.end(),
                                  [&](double x) { return same_temperature(x, t.temperature); });
    if (!seen) temps.push_back(t.temperature);
  }
  std::sort(temps.begin(), temps.end());
  return temps;
}

std::string verdict_from(int evaluated, int supported) {
  if (evaluated == 0) return "not evaluable";
  if (supported == evaluated) return "supported";
  if (supported > 0) return "partially supported";
  return "not supported";
}

json contrast_json(const CellResult& a, const CellResult& b, const ContrastResult& c) {
  json j = to_json(c);
  j["a"] = a.key.label();
  j["b"] = b.key.label();
  j["a_underpowered"] = a.underpowered;
  j["b_underpowered"] = b.underpowered;
  return j;
}

class Pipeline {
 public:
  Pipeline(const RunConfig& config, std::span<const TrialRecord> trials,
           const PipelineOptions& options)
      : config_(config), trials_(trials), options_(options) {
    params_ = config.bootstrap;
    params_.threads = options.threads;
  }

  EvaluationReport run() {
    report_.config = config_;
    build_cells();
    report_.hypotheses.push_back(h1());
    report_.hypotheses.push_back(h2());
    report_.hypotheses.push_back(h3());
    report_.hypotheses.push_back(h4());
    if (options_.robustness) robustness();
    provenance();
    return std::move(report_);
  }

 private:
  void progress(const std::string& msg) const {
    if (options_.progress) options_.progress(msg);
  }

  void build_cells() {
    std::map<std::pair<std::string, std::string>, std::vector<TrialRecord>> groups;
    for (const auto& t : trials_) groups[{t.model_id, t.dataset_id}].push_back(t);

    for (const auto& [id, group] : groups) {
      const double ref_t = config_.reference_temperature;
      std::vector<TrialRecord> reference;
      for (const auto& t : group) {
        if (same_temperature(t.temperature, ref_t)) reference.push_back(t);
      }
      CellKey agg_key{id.first, id.second, "all", ref_t};
      if (reference.empty()) {
        CellResult failed;
        failed.key = agg_key;
        failed.slice = "aggregate";
        failed.error = "no trials at the reference temperature " + shortest(ref_t);
        report_.cells.push_back(std::move(failed));
        continue;
      }
      BinningScheme scheme;
      try {
        scheme = fit_bins(std::span<const TrialRecord>(reference), config_.k,
                          config_.bin_strategy, BinReference{id.first, id.second, ref_t});
      } catch (const std::exception& e) {
        CellResult failed;
        failed.key = agg_key;
        failed.slice = "aggregate";
        failed.error = std::string("binning failed: ") + e.what();
        report_.cells.push_back(std::move(failed));
        continue;
      }
      report_.schemes.push_back(scheme);

      for (double temp : distinct_temperatures(group)) {
        std::vector<TrialRecord> slice;
        for (const auto& t : group) {
          if (same_temperature(t.temperature, temp)) slice.push_back(t);
        }
        const bool is_ref = same_temperature(temp, ref_t);
        CellKey key{id.first, id.second, "all", is_ref ? ref_t : temp};
        report_.cells.push_back(evaluate(key, is_ref ? "aggregate" : "temperature", slice, scheme));
      }

      std::set<std::string> domains;
      for (const auto& t : reference) domains.insert(t.domain);
      if (domains.size() >= 2) {
        for (const auto& d : domains) {
          std::vector<TrialRecord> slice;
          for (const auto& t : reference) {
            if (t.domain == d) slice.push_back(t);
          }
          report_.cells.push_back(evaluate({id.first, id.second, d, ref_t}, "domain", slice, scheme));
        }
      }
    }
  }

  CellResult evaluate(const CellKey& key, const std::string& slice,
                      const std::vector<TrialRecord>& trials, const BinningScheme& scheme) {
    progress("cell " + key.label());
    CellResult cell;
    cell.key = key;
    cell.slice = slice;
    cell.n_trials = trials.size();
    cell.n_correct = static_cast<std::size_t>(
        std::count_if(trials.begin(), trials.end(), [](const TrialRecord& t) { return t.correct; }));
    const RatedTrials rated = rate_trials(trials, scheme);
    const RatingCounts raw = rated.counts();
    cell.underpowered = underpowered(raw, config_.min_cell_trials);
    if (cell.underpowered) {
      cell.warnings.push_back("fewer than " + std::to_string(config_.min_cell_trials) +
                              " trials in an accuracy category");
    }
    try {
      cell.estimate = estimate_from_counts(raw);
    } catch (const std::exception& e) {
      cell.error = std::string("estimation failed: ") + e.what();
    }
    try {
      MetricBundle m;
      m.accuracy = accuracy(trials);
      m.ece = ece(trials, config_.ece_bins);
      m.brier = brier(trials);
      m.auroc2 = config_.auroc2_variant == "folded" ? auroc2_folded(raw) : auroc2(trials);
      if (cell.estimate) {
        m.m_ratio = cell.estimate->m_ratio;
        m.unstable = cell.estimate->unstable;
      } else {
        m.unstable = true;
      }
      cell.metrics = m;
    } catch (const std::exception& e) {
      cell.warnings.push_back(std::string("metrics unavailable: ") + e.what());
    }
    if (cell.estimate) {
      try {
        const std::string label = key.label();
        cell.bootstrap = bootstrap_cell(rated, params_, stream_id(label.data(), label.size()));
      } catch (const std::exception& e) {
        cell.warnings.push_back(std::string("bootstrap failed: ") + e.what());
      }
    }
    try {
      cell.monotonicity = monotonicity_check(trials, 4);
      for (const auto& w : cell.monotonicity->warnings) cell.warnings.push_back(w);
    } catch (const std::exception& e) {
      cell.warnings.push_back(std::string("monotonicity check unavailable: ") + e.what());
    }
    if (slice == "aggregate") {
      try {
        report_.risk_coverage.push_back({key.model_id, key.dataset_id, risk_coverage(trials)});
      } catch (const std::exception& e) {
        cell.warnings.push_back(std::string("risk-coverage unavailable: ") + e.what());
      }
    }
    return cell;
  }

  std::vector<const CellResult*> cells_where(const std::function<bool(const CellResult&)>& pred) const {
    std::vector<const CellResult*> out;
    for (const auto& c : report_.cells) {
      if (pred(c)) out.push_back(&c);
    }
    return out;
  }

  std::set<std::string> models() const {
    std::set<std::string> m;
    for (const auto& t : trials_) m.insert(t.model_id);
    return m;
  }

  HypothesisResult h1() const {
    HypothesisResult h;
    h.id = "H1";
    h.rule = "per model: upper bound of the M-ratio bootstrap CI < 1";
    int evaluated = 0, supported = 0;
    for (const auto* c : cells_where([](const CellResult& c) { return c.slice == "aggregate"; })) {
      json e = {{"cell", c->key.label()},
                {"model_id", c->key.model_id},
                {"dataset_id", c->key.dataset_id},
                {"underpowered", c->underpowered}};
      if (c->bootstrap) {
        const auto& b = c->bootstrap->m_ratio;
        const bool ok = h1_test(b);
        e.update({{"m_ratio", b.point},
                  {"ci_low", b.ci_low},
                  {"ci_high", b.ci_high},
                  {"n_excluded", b.n_excluded},
                  {"supported", ok}});
        ++evaluated;
        supported += ok ? 1 : 0;
      } else {
        e["supported"] = nullptr;
      }
      h.evidence.push_back(std::move(e));
    }
    h.verdict = verdict_from(evaluated, supported);
    return h;
  }

  HypothesisResult h2() const {
    HypothesisResult h;
    h.id = "H2";
    h.rule = "at least one pairwise domain M-ratio contrast excludes 0 in at least 2 models";
    int models_with_exclusion = 0, models_evaluated = 0;
    std::map<std::pair<std::string, std::string>, std::vector<const CellResult*>> by_group;
    for (const auto* c : cells_where([](const CellResult& c) { return c.slice == "domain"; })) {
      if (c->bootstrap) by_group[{c->key.model_id, c->key.dataset_id}].push_back(c);
    }
    std::map<std::string, bool> model_hit;
    for (const auto& [id, cells] : by_group) {
      if (cells.size() < 2) continue;
      json group = {{"model_id", id.first}, {"dataset_id", id.second}, {"contrasts", json::array()}};
      bool any = false;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        for (std::size_t j = i + 1; j < cells.size(); ++j) {
          const auto c = contrast(cells[i]->bootstrap->m_ratio, cells[j]->bootstrap->m_ratio,
                                  config_.bootstrap.level);
          any = any || c.excludes_zero;
          group["contrasts"].push_back(contrast_json(*cells[i], *cells[j], c));
        }
      }
      group["any_excludes_zero"] = any;
      model_hit[id.first] = model_hit[id.first] || any;
      h.evidence.push_back(std::move(group));
    }
    for (const auto& [model, hit] : model_hit) {
      ++models_evaluated;
      models_with_exclusion += hit ? 1 : 0;
    }
    if (models().size() < 2 || models_evaluated < 2) {
      h.verdict = "not evaluable";
    } else {
      h.verdict = models_with_exclusion >= 2 ? "supported" : "not supported";
    }
    return h;
  }

  HypothesisResult h3() const {
    HypothesisResult h;
    h.id = "H3";
    h.rule = "per model: TOST equivalence of meta-d' across temperatures (delta = " +
             shortest(config_.tost_delta) + ") and |rho(meta-d', T)| < |rho(d', T)|";
    int evaluated = 0, supported = 0;
    std::map<std::pair<std::string, std::string>, std::vector<const CellResult*>> by_group;
    for (const auto* c : cells_where([](const CellResult& c) {
           return c.slice != "domain" && c.bootstrap.has_value();
         })) {
      const bool wanted = std::any_of(config_.temperatures_h3.begin(), config_.temperatures_h3.end(),
                                      [&](double t) { return same_temperature(t, c->key.temperature); });
      if (wanted) by_group[{c->key.model_id, c->key.dataset_id}].push_back(c);
    }
    for (auto& [id, cells] : by_group) {
      if (cells.size() < 2) continue;
      std::sort(cells.begin(), cells.end(), [](const CellResult* a, const CellResult* b) {
        return a->key.temperature < b->key.temperature;
      });
      std::map<std::string, BootstrapResult> dists;
      std::vector<double> temps, meta, dprime;
      for (const auto* c : cells) {
        dists.emplace("T=" + shortest(c->key.temperature), c->bootstrap->meta_d);
        temps.push_back(c->key.temperature);
        meta.push_back(c->estimate->fit.meta_d);
        dprime.push_back(c->estimate->fit.d_prime);
      }
      const TostResult tost = tost_equivalence(dists, config_.tost_delta, config_.bootstrap.level);
      std::optional<double> rho_meta, rho_d;
      try {
        rho_meta = spearman_rho(meta, temps);
      } catch (const Error&) {
      }
      try {
        rho_d = spearman_rho(dprime, temps);
      } catch (const Error&) {
      }
      const bool dissociation =
          tost.pass && rho_meta && rho_d && std::fabs(*rho_meta) < std::fabs(*rho_d);
      ++evaluated;
      supported += dissociation ? 1 : 0;
      h.evidence.push_back({{"model_id", id.first},
                            {"dataset_id", id.second},
                            {"temperatures", temps},
                            {"meta_d", meta},
                            {"d_prime", dprime},
                            {"tost", to_json(tost)},
                            {"rho_meta_d", opt_json(rho_meta)},
                            {"rho_d_prime", opt_json(rho_d)},
                            {"supported", dissociation}});
    }
    h.verdict = verdict_from(evaluated, supported);
    return h;
  }

  HypothesisResult h4() const {
    HypothesisResult h;
    h.id = "H4";
    h.rule = "at least one pairwise model M-ratio contrast at matched conditions excludes 0";
    std::map<std::string, std::vector<const CellResult*>> by_dataset;
    for (const auto* c : cells_where([](const CellResult& c) {
           return c.slice == "aggregate" && c.bootstrap.has_value();
         })) {
      by_dataset[c->key.dataset_id].push_back(c);
    }
    bool evaluable = false, any = false;
    for (const auto& [dataset, cells] : by_dataset) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        for (std::size_t j = i + 1; j < cells.size(); ++j) {
          evaluable = true;
          const auto c = contrast(cells[i]->bootstrap->m_ratio, cells[j]->bootstrap->m_ratio,
                                  config_.bootstrap.level);
          any = any || c.excludes_zero;
          h.evidence.push_back(contrast_json(*cells[i], *cells[j], c));
        }
      }
    }
    h.verdict = !evaluable ? "not evaluable" : (any ? "supported" : "not supported");
    return h;
  }

  void robustness() {
    RobustnessSettings rs;
    rs.k = config_.k;
    rs.strategy = config_.bin_strategy;
    rs.reference_temperature = config_.reference_temperature;
    rs.seed = config_.bootstrap.seed;
    for (const auto& check : config_.robustness.checks) {
      progress("robustness " + check);
      try {
        if (check == "R1") {
          report_.robustness.push_back(run_r1(trials_, config_.robustness.r1_k, rs));
        } else if (check == "R2") {
          report_.robustness.push_back(run_r2(trials_, config_.robustness.r2_s, rs));
        } else if (check == "R3") {
          report_.robustness.push_back(run_r3(trials_, rs));
        } else if (check == "R6") {
          report_.robustness.push_back(run_r6(trials_, config_.robustness.r6_strata, rs));
        }
      } catch (const std::exception& e) {
        RobustnessReport failed;
        failed.check_id = check;
        failed.warnings.push_back(std::string("check failed: ") + e.what());
        report_.robustness.push_back(std::move(failed));
      }
    }
  }

  void provenance() {
    json inputs = json::object();
    for (const auto& [name, digest] : options_.input_digests) inputs[name] = digest;
    report_.provenance = {{"tool", "metasdt"},
                          {"tool_version", METASDT_VERSION},
                          {"schema_version", kReportSchemaVersion},
                          {"config_sha256", sha256_hex(to_json(config_).dump())},
                          {"trials_sha256", trials_digest(trials_)},
                          {"n_trials", trials_.size()},
                          {"inputs", inputs},
                          {"rng_family", config_.rng_family}};
  }

  const RunConfig& config_;
  std::span<const TrialRecord> trials_;
  const PipelineOptions& options_;
  BootstrapParams params_;
  EvaluationReport report_;
};

}  // namespace

std::string CellKey::label() const {
  return model_id + "|" + dataset_id + "|" + domain + "|T=" + shortest(temperature);
}

EvaluationReport run_pipeline(const RunConfig& config, std::span<const TrialRecord> trials,
                              const PipelineOptions& options) {
  config.validate();
  if (trials.empty()) throw Error("the trial store is empty");
  return Pipeline(config, trials, options).run();
}

json to_json(const CellResult& c) {
  json j = {{"label", c.key.label()},
            {"model_id", c.key.model_id},
            {"dataset_id", c.key.dataset_id},
            {"domain", c.key.domain},
            {"temperature", c.key.temperature},
            {"slice", c.slice},
            {"n_trials", c.n_trials},
            {"n_correct", c.n_correct},
            {"underpowered", c.underpowered},
            {"warnings", c.warnings},
            {"error", c.error ? json(*c.error) : json(nullptr)}};
  j["estimate"] = c.estimate ? to_json(*c.estimate) : json(nullptr);
  j["metrics"] = c.metrics ? to_json(*c.metrics) : json(nullptr);
  j["bootstrap"] = c.bootstrap ? to_json(*c.bootstrap) : json(nullptr);
  j["monotonicity"] = c.monotonicity ? to_json(*c.monotonicity) : json(nullptr);
  return j;
}

json to_json(const EvaluationReport& r) {
  json cells = json::array();
  for (const auto& c : r.cells) cells.push_back(to_json(c));
  json schemes = json::array();
  for (const auto& s : r.schemes) schemes.push_back(to_json(s));
  json hyps = json::object();
  for (const auto& h : r.hypotheses) {
    hyps[h.id] = {{"verdict", h.verdict}, {"rule", h.rule}, {"evidence", h.evidence}};
  }
  json mono = json::array();
  for (const auto& c : r.cells) {
    if (!c.monotonicity) continue;
    json m = to_json(*c.monotonicity);
    m["cell"] = c.key.label();
    mono.push_back(std::move(m));
  }
  json curves = json::array();
  for (const auto& rc : r.risk_coverage) {
    json pts = json::array();
    for (const auto& p : rc.points) {
      pts.push_back({{"coverage", p.coverage}, {"retained", p.retained}, {"accuracy", p.accuracy}});
    }
    curves.push_back({{"model_id", rc.model_id}, {"dataset_id", rc.dataset_id}, {"points", pts}});
  }
  json robust = json::array();
  for (const auto& rb : r.robustness) robust.push_back(to_json(rb));
  return {{"schema_version", kReportSchemaVersion},
          {"provenance", r.provenance},
          {"config", to_json(r.config)},
          {"binning", schemes},
          {"cells", cells},
          {"hypotheses", hyps},
          {"monotonicity", mono},
          {"risk_coverage", curves},
          {"robustness", robust},
          {"warnings", r.warnings}};
}

std::string dump_report(const json& report) { return report.dump(2) + "\n"; }

}  // namespace metasdt
