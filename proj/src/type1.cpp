#include "metasdt/type1.hpp"

#include <stdexcept>
#include <vector>

#include "metasdt/error.hpp"
#include "metasdt/gaussian.hpp"

namespace metasdt {

Type1Stats type1_from_rates(double hr, double far) {
  Type1Stats t;
  t.hr = hr;
  t.far = far;
  const double zh = normal_quantile(hr);
  const double zf = normal_quantile(far);
  t.d_prime = zh - zf;
  t.c = -0.5 * (zh + zf);
  return t;
}

Type1Stats compute_type1(const RatingCounts& counts) {
  counts.validate();
  if (!counts.corrected) {
    throw std::invalid_argument("compute_type1 expects Hautus-corrected counts");
  }
  const auto k = static_cast<std::size_t>(counts.k);
  double s1_total = 0.0, s1_high = 0.0, s2_total = 0.0, s2_high = 0.0;
  for (std::size_t r = 0; r < 2 * k; ++r) {
    s1_total += counts.n_r_s1[r];
    s2_total += counts.n_r_s2[r];
    if (r >= k) {
      s1_high += counts.n_r_s1[r];
      s2_high += counts.n_r_s2[r];
    }
  }
  return type1_from_rates(s2_high / s2_total, s1_high / s1_total);
}

double estimate_s(const RatingCounts& counts) {
  counts.validate();
  const std::size_t n = counts.n_r_s1.size();
  double s1_total = 0.0, s2_total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    s1_total += counts.n_r_s1[r];
    s2_total += counts.n_r_s2[r];
  }
  if (s1_total <= 0.0 || s2_total <= 0.0) throw Error("estimate_s needs both classes");

  std::vector<double> xs, ys;
  double s1_above = s1_total, s2_above = s2_total;
  for (std::size_t j = 1; j < n; ++j) {
    // Threshold between rating j and j+1: mass at ratings > j.
    s1_above -= counts.n_r_s1[j - 1];
    s2_above -= counts.n_r_s2[j - 1];
    const double far = s1_above / s1_total;
    const double hr = s2_above / s2_total;
    if (far <= 0.0 || far >= 1.0 || hr <= 0.0 || hr >= 1.0) continue;
    xs.push_back(normal_quantile(far));
    ys.push_back(normal_quantile(hr));
  }
  if (xs.size() < 2) throw Error("estimate_s needs at least 2 usable zROC points");

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(xs.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  if (sxx <= 0.0) throw Error("estimate_s: zROC points have no spread");
  const double slope = sxy / sxx;
  if (!(slope > 0.0)) throw Error("estimate_s: non-positive zROC slope");
  return slope;
}

nlohmann::json to_json(const Type1Stats& t) {
  nlohmann::json j{{"hr", t.hr}, {"far", t.far}, {"d_prime", t.d_prime}, {"c", t.c}};
  j["s"] = t.s ? nlohmann::json(*t.s) : nlohmann::json(nullptr);
  return j;
}

}  // namespace metasdt
