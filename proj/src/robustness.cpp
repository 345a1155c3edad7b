#include "metasdt/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "metasdt/analysis.hpp"
#include "metasdt/error.hpp"
#include "metasdt/rng.hpp"

namespace metasdt {

namespace {

using CellId = std::pair<std::string, std::string>;
using CellMap = std::map<CellId, std::vector<TrialRecord>>;

CellMap reference_cells(std::span<const TrialRecord> trials, double reference_temperature) {
  CellMap cells;
  for (const auto& t : trials) {
    if (same_temperature(t.temperature, reference_temperature)) {
      cells[{t.model_id, t.dataset_id}].push_back(t);
    }
  }
  if (cells.empty()) {
    std::ostringstream msg;
    msg << "no trials at the reference temperature " << reference_temperature;
    throw Error(msg.str());
  }
  return cells;
}

std::optional<double> try_m(const std::vector<TrialRecord>& trials, const BinningScheme& scheme,
                            std::optional<double> s, const MetaDOptions& fit,
                            std::optional<std::string>& error) {
  try {
    return estimate_cell(trials, scheme, s, fit).m_ratio;
  } catch (const std::exception& e) {
    error = e.what();
    return std::nullopt;
  }
}

std::optional<double> primary_m(const std::vector<TrialRecord>& trials,
                                const RobustnessSettings& settings) {
  const auto scheme =
      fit_bins(std::span<const TrialRecord>(trials), settings.k, settings.strategy);
  std::optional<std::string> ignored;
  return try_m(trials, scheme, std::nullopt, settings.fit, ignored);
}

RobustnessCell make_cell(const CellId& id, std::string variant, std::size_t n) {
  RobustnessCell c;
  c.model_id = id.first;
  c.dataset_id = id.second;
  c.variant = std::move(variant);
  c.n_trials = n;
  return c;
}

void record(RobustnessCell& cell, std::optional<double> primary, std::optional<double> m) {
  cell.primary_m = primary;
  cell.m_ratio = m;
  if (primary && m) cell.delta = *m - *primary;
  if (!primary && !cell.error) cell.error = "primary estimate unavailable";
}

std::vector<std::size_t> ranking(const std::vector<double>& values,
                                 const std::vector<std::string>& labels) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return labels[a] < labels[b];
  });
  return order;
}

void summarise(RobustnessReport& report) {
  std::map<std::string, std::vector<const RobustnessCell*>> by_variant;
  for (const auto& c : report.cells) {
    if (c.delta) {
      report.max_perturbation = std::max(report.max_perturbation, std::fabs(*c.delta));
      by_variant[c.variant].push_back(&c);
    }
  }
  for (const auto& [variant, cells] : by_variant) {
    if (cells.size() < 2) continue;
    std::vector<double> before, after;
    std::vector<std::string> labels;
    for (const auto* c : cells) {
      before.push_back(*c->primary_m);
      after.push_back(*c->m_ratio);
      labels.push_back(c->model_id + "/" + c->dataset_id);
    }
    const bool same = ranking(before, labels) == ranking(after, labels);
    report.ordering_preserved = report.ordering_preserved.value_or(true) && same;
  }
}

std::string k_label(int k) { return "K=" + std::to_string(k); }

}  // namespace

RobustnessReport run_r1(std::span<const TrialRecord> trials, std::span<const int> k_values,
                        const RobustnessSettings& settings) {
  if (k_values.empty()) throw std::invalid_argument("R1 needs at least one K");
  for (int k : k_values) {
    if (k < 3) {
      throw std::invalid_argument("R1 needs K >= 3 (got " + std::to_string(k) + ")");
    }
  }
  RobustnessReport report;
  report.check_id = "R1";
  report.settings = {{"k_values", std::vector<int>(k_values.begin(), k_values.end())},
                     {"primary_k", settings.k},
                     {"strategy", to_string(settings.strategy)}};
  for (const auto& [id, cell_trials] : reference_cells(trials, settings.reference_temperature)) {
    const auto primary = primary_m(cell_trials, settings);
    for (int k : k_values) {
      auto cell = make_cell(id, k_label(k), cell_trials.size());
      const auto scheme = fit_bins(std::span<const TrialRecord>(cell_trials), k, settings.strategy);
      for (const auto& w : scheme.warnings) cell.warnings.push_back(w);
      record(cell, primary, try_m(cell_trials, scheme, std::nullopt, settings.fit, cell.error));
      report.cells.push_back(std::move(cell));
    }
  }
  summarise(report);
  return report;
}

RobustnessReport run_r2(std::span<const TrialRecord> trials, std::optional<double> supplied_s,
                        const RobustnessSettings& settings) {
  if (supplied_s && !(*supplied_s > 0.0 && std::isfinite(*supplied_s))) {
    throw std::invalid_argument("R2 needs a positive variance ratio s");
  }
  RobustnessReport report;
  report.check_id = "R2";
  report.settings = {{"s_source", supplied_s ? "supplied" : "estimated"}};
  if (supplied_s) report.settings["s"] = *supplied_s;
  for (const auto& [id, cell_trials] : reference_cells(trials, settings.reference_temperature)) {
    const auto scheme =
        fit_bins(std::span<const TrialRecord>(cell_trials), settings.k, settings.strategy);
    const auto primary = primary_m(cell_trials, settings);
    auto cell = make_cell(id, "unequal_variance", cell_trials.size());
    std::optional<double> s = supplied_s;
    if (!s) {
      try {
        s = estimate_s(hautus_correct(build_counts(cell_trials, scheme)));
      } catch (const std::exception& e) {
        cell.error = std::string("s estimation failed: ") + e.what();
      }
    }
    if (s) {
      std::ostringstream w;
      w << "s=" << *s;
      cell.warnings.push_back(w.str());
      record(cell, primary, try_m(cell_trials, scheme, s, settings.fit, cell.error));
    } else {
      record(cell, primary, std::nullopt);
    }
    report.cells.push_back(std::move(cell));
  }
  summarise(report);
  return report;
}

RobustnessReport run_r3(std::span<const TrialRecord> trials, const RobustnessSettings& settings) {
  RobustnessReport report;
  report.check_id = "R3";
  report.settings = {{"strategy", "equal_width"},
                     {"k", settings.k},
                     {"sparse_share", settings.sparse_share}};
  for (const auto& [id, cell_trials] : reference_cells(trials, settings.reference_temperature)) {
    const auto primary = primary_m(cell_trials, settings);
    auto cell = make_cell(id, "equal_width", cell_trials.size());
    const auto scheme = fit_bins(std::span<const TrialRecord>(cell_trials), settings.k,
                                 BinStrategy::kEqualWidth);
    for (const auto& w : scheme.warnings) cell.warnings.push_back(w);
    const auto sparse = sparse_bins(build_counts(cell_trials, scheme), settings.sparse_share);
    if (!sparse.empty()) {
      std::ostringstream w;
      w << "near-empty equal-width bins:";
      for (int r : sparse) w << ' ' << r;
      cell.warnings.push_back(w.str());
    }
    record(cell, primary, try_m(cell_trials, scheme, std::nullopt, settings.fit, cell.error));
    report.cells.push_back(std::move(cell));
  }
  summarise(report);
  return report;
}

MatchedSample difficulty_match(std::span<const TrialRecord> trials, int strata,
                               std::uint64_t seed) {
  if (strata < 1) throw std::invalid_argument("difficulty matching needs >= 1 stratum");
  std::set<std::string> models;
  for (const auto& t : trials) models.insert(t.model_id);
  if (models.size() < 2) throw Error("difficulty matching needs at least 2 models");

  // question -> (models answering it, correct answers)
  std::map<std::string, std::pair<std::set<std::string>, int>> questions;
  for (const auto& t : trials) {
    auto& q = questions[t.question_id];
    q.first.insert(t.model_id);
    q.second += t.correct ? 1 : 0;
  }
  std::map<std::string, int> band;
  for (const auto& [qid, q] : questions) {
    if (q.first.size() != models.size()) continue;
    const double pooled = static_cast<double>(q.second) / static_cast<double>(q.first.size());
    band[qid] = std::min(strata - 1, static_cast<int>(std::floor(pooled * strata)));
  }
  if (band.empty()) throw Error("no question ids are shared by all models");

  MatchedSample out;
  out.shared_questions = band.size();
  // stratum (band, correct) -> model -> trial positions
  std::map<std::pair<int, bool>, std::map<std::string, std::vector<std::size_t>>> cells;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto it = band.find(trials[i].question_id);
    if (it == band.end()) continue;
    cells[{it->second, trials[i].correct}][trials[i].model_id].push_back(i);
  }
  std::vector<char> keep(trials.size(), 0);
  std::uint64_t stratum_index = 0;
  for (auto& [key, per_model] : cells) {
    ++stratum_index;
    std::size_t smallest = std::numeric_limits<std::size_t>::max();
    for (const auto& m : models) {
      const auto it = per_model.find(m);
      smallest = std::min(smallest, it == per_model.end() ? 0 : it->second.size());
    }
    if (smallest == 0) {
      std::ostringstream w;
      w << "difficulty stratum " << key.first << (key.second ? " (correct)" : " (incorrect)")
        << " is empty for at least one model; dropped";
      out.warnings.push_back(w.str());
      continue;
    }
    std::uint64_t model_index = 0;
    for (auto& [model, positions] : per_model) {
      // Partial Fisher-Yates: the first `smallest` positions form the sample.
      SubstreamRng rng(seed, stream_id("r6", 2) + stratum_index, model_index++);
      for (std::size_t j = 0; j < smallest; ++j) {
        const std::size_t pick = j + rng.index_below(positions.size() - j);
        std::swap(positions[j], positions[pick]);
      }
      for (std::size_t j = 0; j < smallest; ++j) keep[positions[j]] = 1;
    }
  }
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (keep[i]) out.trials.push_back(trials[i]);
  }
  return out;
}

RobustnessReport run_r6(std::span<const TrialRecord> trials, int strata,
                        const RobustnessSettings& settings) {
  RobustnessReport report;
  report.check_id = "R6";
  report.settings = {{"strata", strata},
                     {"matching_variable", "pooled_question_accuracy"},
                     {"seed", settings.seed}};
  const auto cells = reference_cells(trials, settings.reference_temperature);
  std::map<std::string, std::vector<TrialRecord>> by_dataset;
  for (const auto& [id, cell_trials] : cells) {
    auto& v = by_dataset[id.second];
    v.insert(v.end(), cell_trials.begin(), cell_trials.end());
  }
  for (const auto& [dataset, pooled] : by_dataset) {
    const auto matched = difficulty_match(pooled, strata, settings.seed);
    for (const auto& w : matched.warnings) report.warnings.push_back(dataset + ": " + w);
    std::map<std::string, std::vector<TrialRecord>> by_model;
    for (const auto& t : matched.trials) by_model[t.model_id].push_back(t);
    for (const auto& [model, subset] : by_model) {
      const CellId id{model, dataset};
      auto cell = make_cell(id, "matched", subset.size());
      const auto primary = primary_m(cells.at(id), settings);
      try {
        const auto scheme =
            fit_bins(std::span<const TrialRecord>(subset), settings.k, settings.strategy);
        for (const auto& w : scheme.warnings) cell.warnings.push_back(w);
        record(cell, primary, try_m(subset, scheme, std::nullopt, settings.fit, cell.error));
      } catch (const std::exception& e) {
        cell.error = e.what();
        record(cell, primary, std::nullopt);
      }
      report.cells.push_back(std::move(cell));
    }
  }
  summarise(report);
  return report;
}

nlohmann::json to_json(const RobustnessReport& r) {
  using nlohmann::json;
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json cells = json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"model_id", c.model_id},
                     {"dataset_id", c.dataset_id},
                     {"variant", c.variant},
                     {"n_trials", c.n_trials},
                     {"primary_m_ratio", opt(c.primary_m)},
                     {"m_ratio", opt(c.m_ratio)},
                     {"delta", opt(c.delta)},
                     {"warnings", c.warnings},
                     {"error", c.error ? json(*c.error) : json(nullptr)}});
  }
  return {{"check_id", r.check_id},
          {"settings", r.settings},
          {"cells", cells},
          {"max_perturbation", r.max_perturbation},
          {"ordering_preserved",
           r.ordering_preserved ? json(*r.ordering_preserved) : json(nullptr)},
          {"warnings", r.warnings}};
}

}  // namespace metasdt
