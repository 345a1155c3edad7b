#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "metasdt/trial_store.hpp"

namespace metasdt {

enum class BinStrategy { kQuantile, kEqualWidth };

std::string to_string(BinStrategy s);
BinStrategy bin_strategy_from_string(const std::string& s);

/// Which condition's NLP distribution defined the bin edges.
struct BinReference {
  std::string model_id;
  std::string dataset_id;
  std::optional<double> temperature;

  bool operator==(const BinReference&) const = default;
};

/// 2K ordered confidence ratings over NLP. Ratings 1..K form the
/// "predict-incorrect" side, K+1..2K the "predict-correct" side; the middle
/// edge (edges[K-1], zero-based) is the Type-1 decision boundary.
///
/// Edges are strictly increasing except where duplicate quantiles were
/// merged: a merged edge repeats its left neighbour, which leaves the bin
/// between them permanently empty. `collapsed` lists those edge positions
/// (1-based, as in "edge j").
struct BinningScheme {
  int k = 4;
  BinStrategy strategy = BinStrategy::kQuantile;
  std::vector<double> edges;
  BinReference reference;
  std::vector<int> collapsed;
  std::vector<std::string> warnings;

  int n_ratings() const { return 2 * k; }
  int effective_bins() const { return 2 * k - static_cast<int>(collapsed.size()); }
  double decision_edge() const { return edges.at(static_cast<std::size_t>(k - 1)); }

  /// Throws std::invalid_argument when the structural invariants fail.
  void validate() const;

  bool operator==(const BinningScheme& o) const {
    return k == o.k && strategy == o.strategy && edges == o.edges &&
           reference == o.reference && collapsed == o.collapsed;
  }
};

/// nR_S1 / nR_S2 contingency arrays: counts of incorrect and correct trials at
/// each of the 2K ratings.
struct RatingCounts {
  int k = 4;
  std::vector<double> n_r_s1;  // incorrect trials
  std::vector<double> n_r_s2;  // correct trials
  bool corrected = false;

  static RatingCounts zeros(int k);
  double total() const;
  void validate() const;
  bool operator==(const RatingCounts&) const = default;
};

/// Linear-interpolation sample quantile (type 7) of an already sorted sample.
double sorted_quantile(std::span<const double> sorted, double p);

BinningScheme fit_bins(std::span<const double> reference_nlp, int k, BinStrategy strategy,
                       BinReference reference = {});
BinningScheme fit_bins(std::span<const TrialRecord> reference_trials, int k,
                       BinStrategy strategy, BinReference reference = {});

/// Rating in 1..2K under left-closed intervals; the top bin is closed.
int assign_rating(double nlp, const BinningScheme& scheme);

RatingCounts build_counts(std::span<const TrialRecord> trials, const BinningScheme& scheme);

/// Log-linear correction: +0.5 in every cell. Throws on an already corrected table.
RatingCounts hautus_correct(const RatingCounts& counts);

/// Ratings whose share of the trial mass falls below `min_share`.
std::vector<int> sparse_bins(const RatingCounts& counts, double min_share);

nlohmann::json to_json(const BinningScheme& scheme);
BinningScheme scheme_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RatingCounts& counts);

}  // namespace metasdt
