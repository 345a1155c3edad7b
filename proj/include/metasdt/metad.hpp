#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "metasdt/binning.hpp"
#include "metasdt/type1.hpp"

namespace metasdt {

/// Ideal-observer Type-2 fit. Evidence is modelled as
///   incorrect ~ N(-meta_d/2, 1),  correct ~ N(+meta_d/2, (1/s)^2),
/// the Type-1 criterion sits at meta_c = (c / d') * meta_d, and the K-1
/// Type-2 criteria on each side partition the response sides into
/// confidence levels.
struct MetaDFit {
  double meta_d = 0.0;
  double meta_c = 0.0;
  std::vector<double> t2c_low;   // K-1 criteria below meta_c, increasing
  std::vector<double> t2c_high;  // K-1 criteria above meta_c, increasing
  double log_likelihood = 0.0;
  bool converged = false;
  double s = 1.0;
  /// Type-1 quantities the criterion anchoring was computed from.
  double d_prime = 0.0;
  double c = 0.0;
  std::size_t iterations = 0;
};

/// P(rating | class, response side) under the forward model. Each vector is
/// indexed by rating 1..2K (zero-based); entries for ratings 1..K are
/// conditional on the predict-incorrect side and sum to 1, entries K+1..2K
/// likewise on the predict-correct side.
struct Type2Table {
  std::vector<double> incorrect;
  std::vector<double> correct;
};

Type2Table type2_model_probs(double meta_d, double meta_c, std::span<const double> t2c_low,
                             std::span<const double> t2c_high, double s = 1.0);

/// Multinomial log-likelihood of corrected counts under the given parameters.
/// Probabilities are floored at 1e-12 inside the log.
double type2_log_likelihood(const RatingCounts& counts, double meta_d, double meta_c,
                            std::span<const double> t2c_low,
                            std::span<const double> t2c_high, double s = 1.0);

struct MetaDOptions {
  double rel_tol = 1e-8;
  double x_tol = 1e-6;
  std::size_t max_iterations = 10000;
  int restarts = 2;
  std::uint64_t seed = 0;
};

/// Equal-variance maximum-likelihood meta-d'. Counts must be Hautus-corrected.
/// Throws UnstableEstimate when |d'| < 1e-6 (the criterion anchoring c/d' is
/// undefined). Non-convergence returns the best parameters with
/// converged=false.
MetaDFit fit_meta_d(const RatingCounts& counts, const MetaDOptions& options = {});

/// Unequal-variance variant: the correct-class evidence has standard
/// deviation 1/s. d' and c used for the anchoring are the unequal-variance
/// analogues, d' = z(HR)/s - z(FAR) and c = -(z(HR)/s + z(FAR))/2, which
/// reduce to the equal-variance forms at s = 1.
MetaDFit fit_meta_d_uv(const RatingCounts& counts, double s,
                       const MetaDOptions& options = {});

nlohmann::json to_json(const MetaDFit& fit);

}  // namespace metasdt
