#include "metasdt/metad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "metasdt/error.hpp"
#include "metasdt/gaussian.hpp"
#include "metasdt/nelder_mead.hpp"

namespace metasdt {

namespace {

constexpr double kProbFloor = 1e-12;
constexpr double kMetaDBound = 10.0;
constexpr double kInvSqrt2 = 0.70710678118654752440;

// Conditional rating probabilities for one evidence class. `bounds` holds the
// 2K-1 interior boundaries (t2c_low, meta_c, t2c_high) in increasing order.
// Lower-side masses use the CDF, upper-side masses the survival function.
void class_probs(std::span<const double> bounds, int k, double mean, double inv_sd,
                 double* out) {
  const auto kk = static_cast<std::size_t>(k);
  double cdf_prev = 0.0;
  const double cdf_mid = 0.5 * std::erfc(-(bounds[kk - 1] - mean) * inv_sd * kInvSqrt2);
  const double sf_mid = 0.5 * std::erfc((bounds[kk - 1] - mean) * inv_sd * kInvSqrt2);
  const double low_side = std::max(cdf_mid, kProbFloor);
  const double high_side = std::max(sf_mid, kProbFloor);
  for (std::size_t r = 0; r + 1 < kk; ++r) {
    const double cdf = 0.5 * std::erfc(-(bounds[r] - mean) * inv_sd * kInvSqrt2);
    out[r] = (cdf - cdf_prev) / low_side;
    cdf_prev = cdf;
  }
  out[kk - 1] = (cdf_mid - cdf_prev) / low_side;
  double sf_prev = sf_mid;
  for (std::size_t r = kk; r + 1 < 2 * kk; ++r) {
    const double sf = 0.5 * std::erfc((bounds[r] - mean) * inv_sd * kInvSqrt2);
    out[r] = (sf_prev - sf) / high_side;
    sf_prev = sf;
  }
  out[2 * kk - 1] = sf_prev / high_side;
}

void check_criteria(double meta_c, std::span<const double> low, std::span<const double> high,
                    double s) {
  if (low.size() != high.size() || low.empty()) {
    throw std::invalid_argument("need K-1 >= 1 Type-2 criteria on each side");
  }
  if (!(s > 0.0)) throw std::invalid_argument("variance ratio s must be positive");
  double prev = -std::numeric_limits<double>::infinity();
  for (double c : low) {
    if (!(c > prev)) throw std::invalid_argument("Type-2 criteria must be strictly ordered");
    prev = c;
  }
  if (!(meta_c > prev)) throw std::invalid_argument("Type-2 criteria must be strictly ordered");
  prev = meta_c;
  for (double c : high) {
    if (!(c > prev)) throw std::invalid_argument("Type-2 criteria must be strictly ordered");
    prev = c;
  }
}

// Decodes the unconstrained optimiser vector into ordered boundaries.
// x = [meta_d, log gaps below meta_c (outward), log gaps above meta_c (outward)].
void decode(std::span<const double> x, int k, double anchor, std::vector<double>& bounds,
            double& meta_d, double& meta_c) {
  const auto kk = static_cast<std::size_t>(k);
  meta_d = x[0];
  meta_c = anchor * meta_d;
  bounds[kk - 1] = meta_c;
  double edge = meta_c;
  for (std::size_t i = 0; i + 1 < kk; ++i) {
    edge -= std::exp(x[1 + i]);
    bounds[kk - 2 - i] = edge;
  }
  edge = meta_c;
  for (std::size_t i = 0; i + 1 < kk; ++i) {
    edge += std::exp(x[kk + i]);
    bounds[kk + i] = edge;
  }
}

struct Anchoring {
  double d_prime;
  double c;
};

Anchoring uv_anchoring(const RatingCounts& counts, double s) {
  const Type1Stats t = compute_type1(counts);
  const double zh = normal_quantile(t.hr);
  const double zf = normal_quantile(t.far);
  return {zh / s - zf, -0.5 * (zh / s + zf)};
}

}  // namespace

Type2Table type2_model_probs(double meta_d, double meta_c, std::span<const double> t2c_low,
                             std::span<const double> t2c_high, double s) {
  check_criteria(meta_c, t2c_low, t2c_high, s);
  const int k = static_cast<int>(t2c_low.size()) + 1;
  std::vector<double> bounds(t2c_low.begin(), t2c_low.end());
  bounds.push_back(meta_c);
  bounds.insert(bounds.end(), t2c_high.begin(), t2c_high.end());
  Type2Table table;
  table.incorrect.resize(static_cast<std::size_t>(2 * k));
  table.correct.resize(static_cast<std::size_t>(2 * k));
  class_probs(bounds, k, -0.5 * meta_d, 1.0, table.incorrect.data());
  class_probs(bounds, k, 0.5 * meta_d, s, table.correct.data());
  return table;
}

double type2_log_likelihood(const RatingCounts& counts, double meta_d, double meta_c,
                            std::span<const double> t2c_low,
                            std::span<const double> t2c_high, double s) {
  const Type2Table t = type2_model_probs(meta_d, meta_c, t2c_low, t2c_high, s);
  if (t.incorrect.size() != counts.n_r_s1.size()) {
    throw std::invalid_argument("criteria do not match the rating scale of the counts");
  }
  double ll = 0.0;
  for (std::size_t r = 0; r < t.incorrect.size(); ++r) {
    ll += counts.n_r_s1[r] * std::log(std::max(t.incorrect[r], kProbFloor));
    ll += counts.n_r_s2[r] * std::log(std::max(t.correct[r], kProbFloor));
  }
  return ll;
}

MetaDFit fit_meta_d(const RatingCounts& counts, const MetaDOptions& options) {
  return fit_meta_d_uv(counts, 1.0, options);
}

MetaDFit fit_meta_d_uv(const RatingCounts& counts, double s, const MetaDOptions& options) {
  counts.validate();
  if (!counts.corrected) throw std::invalid_argument("fit_meta_d expects corrected counts");
  if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("s must be positive");
  const int k = counts.k;
  const auto kk = static_cast<std::size_t>(k);
  const auto n_ratings = 2 * kk;

  const Anchoring anchor = uv_anchoring(counts, s);
  if (std::fabs(anchor.d_prime) < 1e-6) {
    throw UnstableEstimate("|d'| < 1e-6: meta-c anchoring c/d' is undefined");
  }
  const double anchor_ratio = anchor.c / anchor.d_prime;

  // Starting criteria from the empirical cumulative rating proportions.
  double s1_total = 0.0, s2_total = 0.0;
  for (std::size_t r = 0; r < n_ratings; ++r) {
    s1_total += counts.n_r_s1[r];
    s2_total += counts.n_r_s2[r];
  }
  std::vector<double> start_bounds(n_ratings - 1);
  double s1_above = s1_total, s2_above = s2_total;
  for (std::size_t j = 1; j < n_ratings; ++j) {
    s1_above -= counts.n_r_s1[j - 1];
    s2_above -= counts.n_r_s2[j - 1];
    const double zh = normal_quantile(s2_above / s2_total);
    const double zf = normal_quantile(s1_above / s1_total);
    start_bounds[j - 1] = -0.5 * (zh / s + zf);
  }
  const double meta_d0 = std::clamp(anchor.d_prime, -kMetaDBound + 0.5, kMetaDBound - 0.5);
  const double meta_c0 = anchor_ratio * meta_d0;
  constexpr double kMinGap = 1e-3;
  std::vector<double> x0(1 + 2 * (kk - 1));
  x0[0] = meta_d0;
  double prev = meta_c0;
  for (std::size_t i = 0; i + 1 < kk; ++i) {
    const double gap = std::max(prev - start_bounds[kk - 2 - i], kMinGap);
    x0[1 + i] = std::log(gap);
    prev -= gap;
  }
  prev = meta_c0;
  for (std::size_t i = 0; i + 1 < kk; ++i) {
    const double gap = std::max(start_bounds[kk + i] - prev, kMinGap);
    x0[kk + i] = std::log(gap);
    prev += gap;
  }

  std::vector<double> bounds(n_ratings - 1);
  std::vector<double> p_inc(n_ratings), p_cor(n_ratings);
  const double* n1 = counts.n_r_s1.data();
  const double* n2 = counts.n_r_s2.data();
  auto negative_ll = [&](std::span<const double> x) {
    if (!(std::fabs(x[0]) <= kMetaDBound)) return std::numeric_limits<double>::infinity();
    double meta_d = 0.0, meta_c = 0.0;
    decode(x, k, anchor_ratio, bounds, meta_d, meta_c);
    class_probs(bounds, k, -0.5 * meta_d, 1.0, p_inc.data());
    class_probs(bounds, k, 0.5 * meta_d, s, p_cor.data());
    double ll = 0.0;
    for (std::size_t r = 0; r < n_ratings; ++r) {
      ll += n1[r] * std::log(std::max(p_inc[r], kProbFloor));
      ll += n2[r] * std::log(std::max(p_cor[r], kProbFloor));
    }
    return -ll;
  };

  NelderMeadOptions nm;
  nm.rel_tol = options.rel_tol;
  nm.x_tol = options.x_tol;
  nm.max_iterations = options.max_iterations;
  NelderMeadResult best = nelder_mead(negative_ll, x0, nm);
  std::size_t iterations = best.iterations;

  // Restarts from seeded perturbations of the incumbent; the best run wins.
  std::mt19937_64 rng(options.seed ^ 0x6d657461645f6d6cULL);
  nm.initial_step = 0.1;
  for (int restart = 0; restart < options.restarts; ++restart) {
    std::vector<double> start = best.x;
    for (auto& v : start) {
      const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
      v += 0.05 * normal_quantile(u);
    }
    start[0] = std::clamp(start[0], -kMetaDBound, kMetaDBound);
    NelderMeadResult run = nelder_mead(negative_ll, start, nm);
    iterations += run.iterations;
    if (run.value < best.value || (run.value == best.value && run.converged)) best = run;
  }

  MetaDFit fit;
  decode(best.x, k, anchor_ratio, bounds, fit.meta_d, fit.meta_c);
  fit.t2c_low.assign(bounds.begin(), bounds.begin() + static_cast<std::ptrdiff_t>(kk - 1));
  fit.t2c_high.assign(bounds.begin() + static_cast<std::ptrdiff_t>(kk), bounds.end());
  fit.log_likelihood = -best.value;
  fit.converged = best.converged && std::isfinite(fit.log_likelihood);
  fit.s = s;
  fit.d_prime = anchor.d_prime;
  fit.c = anchor.c;
  fit.iterations = iterations;
  return fit;
}

nlohmann::json to_json(const MetaDFit& fit) {
  return {{"meta_d", fit.meta_d},
          {"meta_c", fit.meta_c},
          {"t2c_low", fit.t2c_low},
          {"t2c_high", fit.t2c_high},
          {"log_likelihood", fit.log_likelihood},
          {"converged", fit.converged},
          {"s", fit.s},
          {"d_prime", fit.d_prime},
          {"c", fit.c},
          {"iterations", fit.iterations}};
}

}  // namespace metasdt
