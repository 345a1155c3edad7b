#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace metasdt {

struct NelderMeadOptions {
  /// Stop when (f_worst - f_best) <= rel_tol * |f_best| ...
  double rel_tol = 1e-8;
  /// ... and every vertex lies within x_tol of the best one (max-norm).
  double x_tol = 1e-6;
  std::size_t max_iterations = 10000;
  /// Initial simplex edge length along each coordinate.
  double initial_step = 0.25;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool converged = false;
};

using Objective = std::function<double(std::span<const double>)>;

/// Derivative-free downhill simplex minimisation (reflection 1, expansion 2,
/// contraction 1/2, shrink 1/2).
NelderMeadResult nelder_mead(const Objective& f, std::span<const double> x0,
                             const NelderMeadOptions& options = {});

}  // namespace metasdt
