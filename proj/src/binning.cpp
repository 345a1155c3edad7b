#include "metasdt/binning.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "metasdt/error.hpp"

namespace metasdt {

std::string to_string(BinStrategy s) {
  return s == BinStrategy::kQuantile ? "quantile" : "equal_width";
}

BinStrategy bin_strategy_from_string(const std::string& s) {
  if (s == "quantile") return BinStrategy::kQuantile;
  if (s == "equal_width") return BinStrategy::kEqualWidth;
  throw std::invalid_argument("unknown bin strategy '" + s + "'");
}

void BinningScheme::validate() const {
  if (k < 2) throw std::invalid_argument("binning requires K >= 2");
  if (edges.size() != static_cast<std::size_t>(2 * k - 1)) {
    throw std::invalid_argument("binning scheme needs exactly 2K-1 edges");
  }
  for (std::size_t j = 1; j < edges.size(); ++j) {
    const bool merged = std::find(collapsed.begin(), collapsed.end(),
                                  static_cast<int>(j + 1)) != collapsed.end();
    if (merged ? edges[j] != edges[j - 1] : !(edges[j] > edges[j - 1])) {
      throw std::invalid_argument("binning edges must be strictly increasing");
    }
  }
  for (double e : edges) {
    if (!std::isfinite(e)) throw std::invalid_argument("binning edges must be finite");
  }
}

RatingCounts RatingCounts::zeros(int k) {
  if (k < 2) throw std::invalid_argument("rating counts require K >= 2");
  RatingCounts c;
  c.k = k;
  c.n_r_s1.assign(static_cast<std::size_t>(2 * k), 0.0);
  c.n_r_s2.assign(static_cast<std::size_t>(2 * k), 0.0);
  return c;
}

double RatingCounts::total() const {
  double t = 0.0;
  for (double v : n_r_s1) t += v;
  for (double v : n_r_s2) t += v;
  return t;
}

void RatingCounts::validate() const {
  const auto n = static_cast<std::size_t>(2 * k);
  if (k < 2 || n_r_s1.size() != n || n_r_s2.size() != n) {
    throw std::invalid_argument("rating counts must hold two arrays of length 2K");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = corrected ? 0.5 : 0.0;
    if (!(n_r_s1[i] >= lo) || !(n_r_s2[i] >= lo)) {
      throw std::invalid_argument("rating counts contain an invalid cell");
    }
  }
}

double sorted_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

BinningScheme fit_bins(std::span<const double> reference_nlp, int k, BinStrategy strategy,
                       BinReference reference) {
  if (k < 2) throw std::invalid_argument("binning requires K >= 2");
  if (reference_nlp.empty()) throw Error("cannot fit bins on an empty reference sample");
  std::vector<double> sorted(reference_nlp.begin(), reference_nlp.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) {
    throw Error("all reference NLP values are identical; fewer than 2 effective bins");
  }

  BinningScheme scheme;
  scheme.k = k;
  scheme.strategy = strategy;
  scheme.reference = std::move(reference);
  const int n_edges = 2 * k - 1;
  scheme.edges.reserve(static_cast<std::size_t>(n_edges));
  const double lo = sorted.front();
  const double width = (sorted.back() - lo) / (2.0 * k);
  for (int j = 1; j <= n_edges; ++j) {
    if (strategy == BinStrategy::kQuantile) {
      scheme.edges.push_back(sorted_quantile(sorted, static_cast<double>(j) / (2.0 * k)));
    } else {
      scheme.edges.push_back(lo + j * width);
    }
  }
  // Interpolated quantiles are non-decreasing; equal neighbours are mass points.
  for (int j = 2; j <= n_edges; ++j) {
    auto& e = scheme.edges[static_cast<std::size_t>(j - 1)];
    const double left = scheme.edges[static_cast<std::size_t>(j - 2)];
    if (e <= left) {
      e = left;
      scheme.collapsed.push_back(j);
    }
  }
  if (!scheme.collapsed.empty()) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "duplicate bin edges merged at positions";
    for (int j : scheme.collapsed) msg << ' ' << j << " (" << scheme.edges[j - 1] << ')';
    msg << "; effective bin count " << scheme.effective_bins() << " of " << 2 * k;
    scheme.warnings.push_back(msg.str());
  }
  if (scheme.effective_bins() < 2) throw Error("fewer than 2 effective bins");
  return scheme;
}

BinningScheme fit_bins(std::span<const TrialRecord> reference_trials, int k,
                       BinStrategy strategy, BinReference reference) {
  std::vector<double> nlp;
  nlp.reserve(reference_trials.size());
  for (const auto& t : reference_trials) nlp.push_back(t.nlp);
  return fit_bins(nlp, k, strategy, std::move(reference));
}

int assign_rating(double nlp, const BinningScheme& scheme) {
  // Number of edges <= nlp, plus one.
  const auto it = std::upper_bound(scheme.edges.begin(), scheme.edges.end(), nlp);
  return static_cast<int>(it - scheme.edges.begin()) + 1;
}

RatingCounts build_counts(std::span<const TrialRecord> trials, const BinningScheme& scheme) {
  if (trials.empty()) throw Error("cannot build counts from an empty trial set");
  RatingCounts counts = RatingCounts::zeros(scheme.k);
  for (const auto& t : trials) {
    const auto r = static_cast<std::size_t>(assign_rating(t.nlp, scheme) - 1);
    (t.correct ? counts.n_r_s2 : counts.n_r_s1)[r] += 1.0;
  }
  return counts;
}

RatingCounts hautus_correct(const RatingCounts& counts) {
  if (counts.corrected) throw Error("rating counts are already Hautus-corrected");
  RatingCounts out = counts;
  for (auto& v : out.n_r_s1) v += 0.5;
  for (auto& v : out.n_r_s2) v += 0.5;
  out.corrected = true;
  return out;
}

std::vector<int> sparse_bins(const RatingCounts& counts, double min_share) {
  const double offset = counts.corrected ? 1.0 : 0.0;
  const double total = counts.total() - offset * counts.n_r_s1.size();
  std::vector<int> out;
  for (std::size_t r = 0; r < counts.n_r_s1.size(); ++r) {
    const double mass = counts.n_r_s1[r] + counts.n_r_s2[r] - offset;
    if (total <= 0.0 || mass / total < min_share) out.push_back(static_cast<int>(r + 1));
  }
  return out;
}

nlohmann::json to_json(const BinningScheme& scheme) {
  nlohmann::json ref;
  ref["model_id"] = scheme.reference.model_id;
  ref["dataset_id"] = scheme.reference.dataset_id;
  ref["temperature"] = scheme.reference.temperature
                           ? nlohmann::json(*scheme.reference.temperature)
                           : nlohmann::json(nullptr);
  return {{"k", scheme.k},
          {"strategy", to_string(scheme.strategy)},
          {"edges", scheme.edges},
          {"collapsed", scheme.collapsed},
          {"reference", ref}};
}

BinningScheme scheme_from_json(const nlohmann::json& j) {
  BinningScheme s;
  s.k = j.at("k").get<int>();
  s.strategy = bin_strategy_from_string(j.at("strategy").get<std::string>());
  s.edges = j.at("edges").get<std::vector<double>>();
  if (j.contains("collapsed")) s.collapsed = j.at("collapsed").get<std::vector<int>>();
  if (j.contains("reference")) {
    const auto& r = j.at("reference");
    s.reference.model_id = r.value("model_id", "");
    s.reference.dataset_id = r.value("dataset_id", "");
    if (r.contains("temperature") && !r.at("temperature").is_null()) {
      s.reference.temperature = r.at("temperature").get<double>();
    }
  }
  s.validate();
  return s;
}

nlohmann::json to_json(const RatingCounts& counts) {
  return {{"k", counts.k},
          {"n_r_s1", counts.n_r_s1},
          {"n_r_s2", counts.n_r_s2},
          {"corrected", counts.corrected}};
}

}  // namespace metasdt
