#pragma once

#include <optional>

#include <json.hpp>

#include "metasdt/binning.hpp"

namespace metasdt {

/// Closed-form Type-1 SDT statistics. A "hit" is a correct trial rated on the
/// predict-correct side (rating > K); a false alarm is an incorrect one there.
struct Type1Stats {
  double hr = 0.5;
  double far = 0.5;
  double d_prime = 0.0;
  double c = 0.0;
  std::optional<double> s;
};

Type1Stats type1_from_rates(double hr, double far);

/// Requires Hautus-corrected counts so that both rates are strictly in (0, 1).
Type1Stats compute_type1(const RatingCounts& counts);

/// zROC slope: least-squares slope of z(cumulative hit rate) on
/// z(cumulative false-alarm rate) over the 2K-1 rating thresholds. Under the
/// forward model used here this is the ratio sigma_incorrect / sigma_correct.
/// Thresholds where either rate is 0 or 1 are skipped; fewer than two usable
/// points throws.
double estimate_s(const RatingCounts& counts);

nlohmann::json to_json(const Type1Stats& t);

}  // namespace metasdt
