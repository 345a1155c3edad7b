#include "metasdt/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "metasdt/binning.hpp"
#include "metasdt/error.hpp"
#include "metasdt/rng.hpp"

namespace metasdt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

unsigned resolve_threads(unsigned requested, int n_resamples) {
  unsigned t = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
  return std::min<unsigned>(t, static_cast<unsigned>(std::max(1, n_resamples)));
}

}  // namespace

std::vector<double> BootstrapResult::retained() const {
  std::vector<double> out;
  out.reserve(replicates.size());
  for (double v : replicates) {
    if (!std::isnan(v)) out.push_back(v);
  }
  return out;
}

std::pair<double, double> percentile_interval(std::span<const double> values, double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must lie in (0, 1)");
  std::vector<double> kept;
  kept.reserve(values.size());
  for (double v : values) {
    if (!std::isnan(v)) kept.push_back(v);
  }
  if (kept.empty()) throw Error("no retained resamples for a percentile interval");
  std::sort(kept.begin(), kept.end());
  const double alpha = 0.5 * (1.0 - level);
  return {sorted_quantile(kept, alpha), sorted_quantile(kept, 1.0 - alpha)};
}

std::vector<BootstrapResult> bootstrap_multi(std::size_t n, const MultiStatistic& statistic,
                                             std::size_t n_stats, const BootstrapParams& params,
                                             std::uint64_t stream, std::size_t gate) {
  if (params.n_resamples <= 0) throw std::invalid_argument("bootstrap needs n_resamples >= 1");
  if (n == 0) throw std::invalid_argument("bootstrap needs a non-empty sample");
  if (n > std::numeric_limits<std::uint32_t>::max()) {
    throw std::invalid_argument("bootstrap sample too large");
  }
  if (gate >= n_stats) throw std::invalid_argument("bootstrap gate statistic out of range");

  std::vector<std::uint32_t> identity(n);
  std::iota(identity.begin(), identity.end(), 0u);
  const auto point = statistic(identity);
  if (!point || point->size() != n_stats) {
    throw Error("bootstrap statistic failed on the full sample");
  }

  const auto n_res = static_cast<std::size_t>(params.n_resamples);
  std::vector<std::vector<double>> reps(n_stats, std::vector<double>(n_res, kNaN));
  auto run_range = [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint32_t> idx(n);
    for (std::size_t r = begin; r < end; ++r) {
      SubstreamRng rng(params.seed, stream, r);
      for (auto& i : idx) i = static_cast<std::uint32_t>(rng.index_below(n));
      std::optional<std::vector<double>> values;
      try {
        values = statistic(idx);
      } catch (const std::exception&) {
        continue;
      }
      if (!values || values->size() != n_stats) continue;
      const double g = (*values)[gate];
      if (!std::isfinite(g) || std::fabs(g) > params.exclusion_bound) continue;
      if (!std::all_of(values->begin(), values->end(), [](double v) { return std::isfinite(v); }))
        continue;
      for (std::size_t s = 0; s < n_stats; ++s) reps[s][r] = (*values)[s];
    }
  };

  const unsigned threads = resolve_threads(params.threads, params.n_resamples);
  if (threads <= 1) {
    run_range(0, n_res);
  } else {
    std::vector<std::jthread> workers;
    const std::size_t chunk = (n_res + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = std::min(n_res, t * chunk);
      const std::size_t end = std::min(n_res, begin + chunk);
      if (begin < end) workers.emplace_back(run_range, begin, end);
    }
  }

  int excluded = 0;
  for (double v : reps[gate]) excluded += std::isnan(v) ? 1 : 0;
  if (2 * excluded > params.n_resamples) {
    throw Error("bootstrap excluded " + std::to_string(excluded) + " of " +
                std::to_string(params.n_resamples) + " resamples; estimate is meaningless");
  }

  std::vector<BootstrapResult> out(n_stats);
  for (std::size_t s = 0; s < n_stats; ++s) {
    auto& res = out[s];
    res.point = (*point)[s];
    res.level = params.level;
    res.n_resamples = params.n_resamples;
    res.n_excluded = excluded;
    res.seed = params.seed;
    res.replicates = std::move(reps[s]);
    std::tie(res.ci_low, res.ci_high) = percentile_interval(res.replicates, params.level);
  }
  return out;
}

BootstrapResult bootstrap(std::size_t n, const IndexStatistic& statistic,
                          const BootstrapParams& params, std::uint64_t stream) {
  MultiStatistic wrapped =
      [&](std::span<const std::uint32_t> idx) -> std::optional<std::vector<double>> {
    auto v = statistic(idx);
    if (!v) return std::nullopt;
    return std::vector<double>{*v};
  };
  return std::move(bootstrap_multi(n, wrapped, 1, params, stream).front());
}

BootstrapResult bootstrap(std::span<const TrialRecord> trials, const TrialStatistic& statistic,
                          const BootstrapParams& params, std::uint64_t stream) {
  IndexStatistic by_index = [&](std::span<const std::uint32_t> idx) {
    std::vector<TrialRecord> sample;
    sample.reserve(idx.size());
    for (auto i : idx) sample.push_back(trials[i]);
    return statistic(sample);
  };
  return bootstrap(trials.size(), by_index, params, stream);
}

ContrastResult contrast(const BootstrapResult& a, const BootstrapResult& b, double level) {
  const std::size_t n = std::min(a.replicates.size(), b.replicates.size());
  if (n == 0) throw Error("contrast needs bootstrap replicates on both sides");
  std::vector<double> diff(n, kNaN);
  int excluded = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (std::isnan(a.replicates[r]) || std::isnan(b.replicates[r])) {
      ++excluded;
    } else {
      diff[r] = a.replicates[r] - b.replicates[r];
    }
  }
  ContrastResult out;
  out.delta = a.point - b.point;
  std::tie(out.ci_low, out.ci_high) = percentile_interval(diff, level);
  out.excludes_zero = !(out.ci_low <= 0.0 && 0.0 <= out.ci_high);
  out.n_excluded = excluded;
  return out;
}

ContrastResult pairwise_contrast(std::size_t n_a, const IndexStatistic& stat_a, std::size_t n_b,
                                 const IndexStatistic& stat_b, const BootstrapParams& params) {
  const auto a = bootstrap(n_a, stat_a, params, 1);
  const auto b = bootstrap(n_b, stat_b, params, 2);
  return contrast(a, b, params.level);
}

ContrastResult pairwise_contrast(std::span<const TrialRecord> a, std::span<const TrialRecord> b,
                                 const TrialStatistic& statistic, const BootstrapParams& params) {
  if (a.empty() || b.empty()) throw std::invalid_argument("contrast needs two non-empty samples");
  const auto ra = bootstrap(a, statistic, params, 1);
  const auto rb = bootstrap(b, statistic, params, 2);
  return contrast(ra, rb, params.level);
}

TostResult tost_equivalence(const std::map<std::string, BootstrapResult>& by_condition,
                            double delta, double level) {
  if (by_condition.size() < 2) throw std::invalid_argument("TOST needs at least 2 conditions");
  if (!(delta > 0.0)) throw std::invalid_argument("TOST margin must be positive");
  for (const auto& [name, dist] : by_condition) {
    if (dist.replicates.empty()) {
      throw std::invalid_argument("missing bootstrap distribution for condition '" + name + "'");
    }
  }
  // Two one-sided tests at alpha = 1 - level <=> the (1 - 2 alpha) interval.
  const double interval_level = 1.0 - 2.0 * (1.0 - level);
  TostResult out;
  out.pass = true;
  for (auto i = by_condition.begin(); i != by_condition.end(); ++i) {
    for (auto j = std::next(i); j != by_condition.end(); ++j) {
      const ContrastResult c = contrast(i->second, j->second, interval_level);
      TostPair pair{i->first, j->first, c.delta, c.ci_low, c.ci_high, false};
      pair.equivalent = -delta < c.ci_low && c.ci_high < delta;
      out.pass = out.pass && pair.equivalent;
      out.max_range = std::max(out.max_range, std::fabs(c.delta));
      out.pairs.push_back(std::move(pair));
    }
  }
  return out;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("spearman_rho needs two sequences of equal length >= 2");
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error("spearman_rho: zero rank variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

bool h1_test(const BootstrapResult& m_ratio) { return m_ratio.ci_high < 1.0; }

nlohmann::json to_json(const BootstrapResult& r) {
  return {{"point", r.point},         {"ci_low", r.ci_low},
          {"ci_high", r.ci_high},     {"level", r.level},
          {"n_resamples", r.n_resamples}, {"n_excluded", r.n_excluded},
          {"seed", r.seed}};
}

nlohmann::json to_json(const ContrastResult& r) {
  return {{"delta", r.delta},
          {"ci_low", r.ci_low},
          {"ci_high", r.ci_high},
          {"excludes_zero", r.excludes_zero},
          {"n_excluded", r.n_excluded}};
}

nlohmann::json to_json(const TostResult& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : r.pairs) {
    pairs.push_back({{"a", p.a},
                     {"b", p.b},
                     {"delta", p.delta},
                     {"ci_low", p.ci_low},
                     {"ci_high", p.ci_high},
                     {"equivalent", p.equivalent}});
  }
  return {{"pass", r.pass}, {"max_range", r.max_range}, {"pairs", pairs}};
}

}  // namespace metasdt
