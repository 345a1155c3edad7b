#include "metasdt/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace metasdt {

NelderMeadResult nelder_mead(const Objective& f, std::span<const double> x0,
                             const NelderMeadOptions& options) {
  const std::size_t n = x0.size();
  NelderMeadResult result;
  auto eval = [&](const std::vector<double>& x) {
    ++result.evaluations;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };

  std::vector<std::vector<double>> simplex(n + 1, std::vector<double>(x0.begin(), x0.end()));
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += options.initial_step;
  std::vector<double> values(n + 1);
  for (std::size_t i = 0; i <= n; ++i) values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);

  auto point_along = [&](double coef, std::vector<double>& out) {
    const auto& worst = simplex[order[n]];
    for (std::size_t j = 0; j < n; ++j) out[j] = centroid[j] + coef * (worst[j] - centroid[j]);
  };

  while (true) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const double best = values[order[0]];
    const double worst = values[order[n]];
    double spread_x = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        spread_x = std::max(spread_x, std::fabs(simplex[order[i]][j] - simplex[order[0]][j]));
      }
    }
    if (std::isfinite(best) && worst - best <= options.rel_tol * std::fabs(best) &&
        spread_x <= options.x_tol) {
      result.converged = true;
      break;
    }
    if (result.iterations >= options.max_iterations) break;
    ++result.iterations;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[order[i]][j];
    }
    for (auto& c : centroid) c /= static_cast<double>(n);

    point_along(-1.0, trial);
    const double fr = eval(trial);
    if (fr < best) {
      point_along(-2.0, trial2);
      const double fe = eval(trial2);
      if (fe < fr) {
        simplex[order[n]] = trial2;
        values[order[n]] = fe;
      } else {
        simplex[order[n]] = trial;
        values[order[n]] = fr;
      }
      continue;
    }
    if (fr < values[order[n - 1]]) {
      simplex[order[n]] = trial;
      values[order[n]] = fr;
      continue;
    }
    // Outside contraction when the reflection improved on the worst point,
    // inside contraction otherwise.
    const bool outside = fr < worst;
    point_along(outside ? -0.5 : 0.5, trial2);
    const double fc = eval(trial2);
    if (fc < (outside ? fr : worst)) {
      simplex[order[n]] = trial2;
      values[order[n]] = fc;
      continue;
    }
    const auto& xb = simplex[order[0]];
    for (std::size_t i = 1; i <= n; ++i) {
      auto& v = simplex[order[i]];
      for (std::size_t j = 0; j < n; ++j) v[j] = xb[j] + 0.5 * (v[j] - xb[j]);
      values[order[i]] = eval(v);
    }
  }
  result.x = simplex[order[0]];
  result.value = values[order[0]];
  return result;
}

}  // namespace metasdt
