// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <CLI11.hpp>

#include "metasdt/analysis.hpp"
#include "metasdt/binning.hpp"
#include "metasdt/inference.hpp"
#include "metasdt/metrics.hpp"
#include "metasdt/report.hpp"
#include "metasdt/robustness.hpp"
#include "metasdt/simulator.hpp"
#include "metasdt/type1.hpp"

namespace fs = std::filesystem;
using namespace metasdt;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

ObserverSpec spec_of(double d_gen, double sigma_meta, std::size_t n, std::uint64_t seed) {
  ObserverSpec s;
  s.d_gen = d_gen;
  s.sigma_meta = sigma_meta;
  s.n = n;
  s.seed = seed;
  return s;
}

CellEstimate fit_sample(const std::vector<TrialRecord>& trials, int k = 4) {
  const auto scheme = fit_bins(std::span<const TrialRecord>(trials), k, BinStrategy::kQuantile);
  return estimate_cell(trials, scheme);
}

// ---------------------------------------------------------------------------
// Independent meta-d' oracle: profile likelihood over a meta-d' grid. For a
// fixed meta-d' the two response sides decouple, and each side's criteria are
// found by cyclic golden-section search. Only erfc is shared with the library.

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double oracle_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

struct OracleTable {
  std::array<double, 8> inc;
  std::array<double, 8> cor;
};

class GridOracle {
 public:
  explicit GridOracle(const OracleTable& raw) {
    for (int r = 0; r < 8; ++r) {
      inc_[r] = raw.inc[r] + 0.5;
      cor_[r] = raw.cor[r] + 0.5;
    }
    double inc_hi = 0, inc_all = 0, cor_hi = 0, cor_all = 0;
    for (int r = 0; r < 8; ++r) {
      inc_all += inc_[r];
      cor_all += cor_[r];
      if (r >= 4) {
        inc_hi += inc_[r];
        cor_hi += cor_[r];
      }
    }
    const double zh = oracle_quantile(cor_hi / cor_all);
    const double zf = oracle_quantile(inc_hi / inc_all);
    ratio_ = (-0.5 * (zh + zf)) / (zh - zf);
  }

  double argmax_meta_d() {
    double best = -1.0, best_ll = -INFINITY;
    for (double m = -1.0; m <= 5.0 + 1e-9; m += 0.05) scan(m, best, best_ll);
    const double centre = best;
    for (int i = -100; i <= 100; ++i) scan(centre + 1e-3 * i, best, best_ll);
    return best;
  }

 private:
  void scan(double m, double& best, double& best_ll) {
    const double ll = profile(m);
    if (ll > best_ll) {
      best_ll = ll;
      best = m;
    }
  }

  // Log-likelihood of one response side; `c` holds its three criteria in
  // increasing order.
  double side_ll(bool high, double m, double mc, const std::array<double, 3>& c) const {
    double ll = 0.0;
    for (int cls = 0; cls < 2; ++cls) {
      const double mu = cls == 0 ? -0.5 * m : 0.5 * m;
      const double* n = cls == 0 ? inc_.data() : cor_.data();
      if (!high) {
        const double total = phi(mc - mu);
        const std::array<double, 5> b{-INFINITY, c[0], c[1], c[2], mc};
        for (int r = 0; r < 4; ++r) {
          const double p = (phi(b[r + 1] - mu) - phi(b[r] - mu)) / total;
          ll += n[r] * std::log(std::max(p, 1e-300));
        }
      } else {
        const double total = sf(mc - mu);
        const std::array<double, 5> b{mc, c[0], c[1], c[2], INFINITY};
        for (int r = 0; r < 4; ++r) {
          const double p = (sf(b[r] - mu) - sf(b[r + 1] - mu)) / total;
          ll += n[4 + r] * std::log(std::max(p, 1e-300));
        }
      }
    }
    return ll;
  }

  double optimise_side(bool high, double m, double mc, std::array<double, 3>& c) const {
    double current = side_ll(high, m, mc, c);
    for (int sweep = 0; sweep < 2000; ++sweep) {
      const double before = current;
      for (int i = 0; i < 3; ++i) {
        double lo, hi;
        if (!high) {
          lo = i == 0 ? mc - 12.0 : c[i - 1];
          hi = i == 2 ? mc : c[i + 1];
        } else {
          lo = i == 0 ? mc : c[i - 1];
          hi = i == 2 ? mc + 12.0 : c[i + 1];
        }
        const double eps = 1e-10;
        double a = lo + eps, b = hi - eps;
        const double g = (std::sqrt(5.0) - 1.0) / 2.0;
        auto eval = [&](double x) {
          auto trial = c;
          trial[i] = x;
          return side_ll(high, m, mc, trial);
        };
        double x1 = b - g * (b - a), x2 = a + g * (b - a);
        double f1 = eval(x1), f2 = eval(x2);
        while (b - a > 1e-10) {
          if (f1 > f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = eval(x1);
          } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = eval(x2);
          }
        }
        const double x = 0.5 * (a + b);
        const double fx = eval(x);
        if (fx > current) {
          c[i] = x;
          current = fx;
        }
      }
      if (current - before < 1e-11) break;
    }
    return current;
  }

  double profile(double m) {
    const double mc = ratio_ * m;
    // Warm start from the previous grid point, re-centred on the new meta_c.
    std::array<double, 3> low{mc - 1.5, mc - 1.0, mc - 0.5};
    std::array<double, 3> high{mc + 0.5, mc + 1.0, mc + 1.5};
    if (have_prev_) {
      for (int i = 0; i < 3; ++i) {
        low[i] = prev_low_[i] - prev_mc_ + mc;
        high[i] = prev_high_[i] - prev_mc_ + mc;
      }
    }
    const double ll = optimise_side(false, m, mc, low) + optimise_side(true, m, mc, high);
    prev_low_ = low;
    prev_high_ = high;
    prev_mc_ = mc;
    have_prev_ = true;
    return ll;
  }

  std::array<double, 8> inc_{}, cor_{};
  double ratio_ = 0.0;
  bool have_prev_ = false;
  std::array<double, 3> prev_low_{}, prev_high_{};
  double prev_mc_ = 0.0;
};

// ---------------------------------------------------------------------------

Outcome criterion_1() {
  const double a = m_ratio(1.361, 1.597);
  const double b = m_ratio(1.474, 1.407);
  const bool pass = std::fabs(a - 0.852) <= 0.001 && std::fabs(b - 1.048) <= 0.001;
  return {pass, "m_ratio(1.361,1.597)=" + fmt(a) + ", m_ratio(1.474,1.407)=" + fmt(b)};
}

Outcome criterion_2() {
  const std::vector<double> temps{0.3, 0.5, 0.7, 1.0};
  const std::vector<double> mistral_meta{1.427, 1.478, 1.400, 1.361};
  const std::vector<double> mistral_d{1.435, 1.490, 1.563, 1.597};
  const std::vector<double> gemma_meta{0.936, 0.927, 0.961, 0.991};
  auto range = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
  };
  const double r_mistral = range(mistral_meta);
  const double r_gemma = range(gemma_meta);
  const double rho_d = spearman_rho(temps, mistral_d);
  const double rho_meta = spearman_rho(temps, gemma_meta);
  const bool pass = std::fabs(r_mistral - 0.117) <= 0.001 && std::fabs(r_gemma - 0.064) <= 0.001 &&
                    rho_d == 1.0 && std::fabs(rho_meta - 0.8) <= 1e-12;
  return {pass, "ranges " + fmt(r_mistral, 3) + " / " + fmt(r_gemma, 3) + ", rho " +
                    fmt(rho_d, 2) + " / " + fmt(rho_meta, 2)};
}

Outcome criterion_3() {
  int ok = 0;
  double worst_meta = 0, worst_m = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto e = fit_sample(simulate(spec_of(1.5, 0.0, 100000, seed)));
    const bool in = e.fit.meta_d >= 1.45 && e.fit.meta_d <= 1.55 && e.m_ratio >= 0.95 &&
                    e.m_ratio <= 1.05;
    ok += in ? 1 : 0;
    worst_meta = std::max(worst_meta, std::fabs(e.fit.meta_d - 1.5));
    worst_m = std::max(worst_m, std::fabs(e.m_ratio - 1.0));
  }
  return {ok >= 95, std::to_string(ok) + "/100 seeds in range; max |meta_d-1.5|=" +
                        fmt(worst_meta) + ", max |M-1|=" + fmt(worst_m)};
}

Outcome criterion_4() {
  const std::array<OracleTable, 5> fixtures{{
      {{120, 95, 70, 55, 40, 30, 20, 10}, {15, 25, 35, 50, 70, 95, 120, 150}},
      {{60, 55, 50, 45, 40, 38, 35, 30}, {25, 32, 38, 42, 52, 58, 66, 80}},
      {{200, 80, 40, 20, 15, 10, 5, 3}, {20, 25, 30, 40, 60, 90, 130, 200}},
      {{0, 12, 30, 44, 25, 9, 3, 0}, {0, 2, 8, 20, 40, 51, 35, 10}},
      {{300, 150, 60, 20, 8, 4, 2, 1}, {1, 3, 6, 15, 40, 90, 170, 300}},
  }};
  double worst = 0.0;
  std::ostringstream detail;
  for (std::size_t f = 0; f < fixtures.size(); ++f) {
    RatingCounts raw = RatingCounts::zeros(4);
    for (int r = 0; r < 8; ++r) {
      raw.n_r_s1[r] = fixtures[f].inc[r];
      raw.n_r_s2[r] = fixtures[f].cor[r];
    }
    const double fitted = fit_meta_d(hautus_correct(raw)).meta_d;
    GridOracle oracle(fixtures[f]);
    const double reference = oracle.argmax_meta_d();
    worst = std::max(worst, std::fabs(fitted - reference));
    detail << (f ? ", " : "") << fmt(fitted) << " vs " << fmt(reference, 3);
  }
  return {worst <= 1e-3, detail.str() + "; max |delta|=" + fmt(worst, 5)};
}

Outcome criterion_5() {
  std::vector<double> means;
  for (double sigma : {0.0, 0.5, 1.0}) {
    double sum = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      sum += fit_sample(simulate(spec_of(1.5, sigma, 10000, 5000 + seed))).m_ratio;
    }
    means.push_back(sum / 50);
  }
  return {strictly_increasing(std::vector<double>{-means[0], -means[1], -means[2]}),
          "mean M at sigma_meta 0/0.5/1: " + fmt(means[0]) + " / " + fmt(means[1]) + " / " +
              fmt(means[2])};
}

Outcome criterion_6() {
  const auto trials = simulate(spec_of(1.5, 0.5, 5000, 77));
  const auto scheme = fit_bins(std::span<const TrialRecord>(trials), 4, BinStrategy::kQuantile);
  const auto rated = rate_trials(trials, scheme);
  BootstrapParams p;
  p.n_resamples = 10000;
  p.seed = 42;
  const auto a = bootstrap_cell(rated, p, 7);
  const auto b = bootstrap_cell(rated, p, 7);
  const bool identical = a.m_ratio == b.m_ratio && a.meta_d == b.meta_d;

  RecoverySettings settings;
  settings.replicates = 200;
  settings.bootstrap.n_resamples = 1000;
  settings.bootstrap.seed = 42;
  const std::vector<ObserverSpec> grid{spec_of(1.5, 0.0, 5000, 900000)};
  const auto row = recovery_study(grid, settings).front();
  const bool covered = row.failed == 0 && row.ci_coverage >= 0.90 && row.ci_coverage <= 0.99;
  return {identical && covered,
          std::string(identical ? "10k-resample runs bit-identical" : "runs differ") +
              "; coverage " + fmt(row.ci_coverage, 3) + " over " +
              std::to_string(row.replicates) + " replicates (" + std::to_string(row.failed) +
              " failed)"};
}

Outcome criterion_7() {
  std::mt19937_64 gen(2024);
  int exact = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 2 + static_cast<int>(gen() % 49);
    std::vector<TrialRecord> trials(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      trials[i].nlp = -0.5 * static_cast<double>(gen() % 7);  // few levels: many ties
      trials[i].correct = (gen() & 1) != 0;
    }
    trials[0].correct = true;
    trials[1].correct = false;
    double wins = 0, pairs = 0;
    for (const auto& x : trials) {
      for (const auto& y : trials) {
        if (!x.correct || y.correct) continue;
        pairs += 1;
        wins += x.nlp > y.nlp ? 1.0 : (x.nlp == y.nlp ? 0.5 : 0.0);
      }
    }
    exact += auroc2(trials) == wins / pairs ? 1 : 0;
  }
  return {exact == 100, std::to_string(exact) + "/100 instances exactly equal"};
}

Outcome criterion_8() {
  RatingCounts raw = RatingCounts::zeros(2);
  raw.n_r_s1 = {0, 5, 3, 0};
  raw.n_r_s2 = {0, 5, 3, 0};
  const auto h = hautus_correct(raw);
  const bool hautus_ok = h.n_r_s1 == std::vector<double>{0.5, 5.5, 3.5, 0.5};
  const auto t = type1_from_rates(0.6, 0.2);
  // High-precision reference: z(0.6) - z(0.2) and -(z(0.6) + z(0.2)) / 2.
  const bool oracle_ok = std::fabs(t.d_prime - 1.09496833670871) <= 1e-10 &&
                         std::fabs(t.c - 0.294137065218557) <= 1e-10;
  const bool rounded_ok = std::fabs(t.d_prime - 1.0949) <= 1e-4 && std::fabs(t.c - 0.2942) <= 1e-4;
  return {hautus_ok && oracle_ok && rounded_ok,
          "hautus " + std::string(hautus_ok ? "exact" : "wrong") + "; d'=" +
              fmt(t.d_prime, 6) + ", c=" + fmt(t.c, 6)};
}

Outcome criterion_9() {
  BootstrapParams p;
  p.n_resamples = 200;
  // Identical distributions.
  const auto base = simulate(spec_of(1.5, 0.0, 10000, 31));
  const auto base_rated =
      rate_trials(base, fit_bins(std::span<const TrialRecord>(base), 4, BinStrategy::kQuantile));
  const auto same = bootstrap_cell(base_rated, p, 1).meta_d;
  const bool identical_pass = tost_equivalence({{"a", same}, {"b", same}}, 0.3).pass;

  int failed = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    std::map<std::string, BootstrapResult> dist;
    int idx = 0;
    for (double d : {1.2, 1.8}) {
      const auto trials = simulate(spec_of(d, 0.0, 10000, seed * 10 + idx));
      const auto rated = rate_trials(
          trials, fit_bins(std::span<const TrialRecord>(trials), 4, BinStrategy::kQuantile));
      dist[d < 1.5 ? "low" : "high"] = bootstrap_cell(rated, p, static_cast<std::uint64_t>(idx)).meta_d;
      ++idx;
    }
    failed += tost_equivalence(dist, 0.3).pass ? 0 : 1;
  }
  return {identical_pass && failed >= 95,
          std::string("identical: ") + (identical_pass ? "pass" : "fail") + "; gap 0.6 failed in " +
              std::to_string(failed) + "/100 seeds"};
}

Outcome criterion_10() {
  TrialLabels ideal, noisy;
  ideal.model_id = "ideal";
  noisy.model_id = "noisy";
  auto trials = simulate(spec_of(1.5, 0.0, 100000, 101), ideal);
  const auto more = simulate(spec_of(1.5, 0.6, 100000, 202), noisy);
  trials.insert(trials.end(), more.begin(), more.end());
  const std::vector<int> ks{3, 4, 6};
  const auto r = run_r1(trials, ks);
  bool all_estimated = r.cells.size() == 6;
  std::ostringstream detail;
  for (const auto& c : r.cells) {
    all_estimated = all_estimated && c.delta.has_value();
    if (c.delta && c.variant != "K=4") {
      detail << c.model_id << " " << c.variant << " dM=" << fmt(*c.delta) << "; ";
    }
  }
  const bool ordering = r.ordering_preserved.value_or(false);
  detail << "max |dM|=" << fmt(r.max_perturbation) << ", ordering "
         << (ordering ? "preserved" : "changed");
  return {all_estimated && ordering && r.max_perturbation <= 0.05, detail.str()};
}

int run_command(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome criterion_11(const fs::path& cli, const fs::path& fixture, const fs::path& work) {
  fs::remove_all(work);
  fs::create_directories(work);
  const fs::path trials = work / "fixture.jsonl";
  const fs::path out = work / "evaluate";
  if (run_command("\"" + cli.string() + "\" simulate --grid \"" + fixture.string() + "\" -o \"" +
                  trials.string() + "\"") != 0) {
    return {false, "simulate failed"};
  }
  const auto start = std::chrono::steady_clock::now();
  const int rc = run_command("\"" + cli.string() + "\" evaluate -q -t \"" + trials.string() +
                             "\" -o \"" + out.string() + "\" > \"" + (work / "evaluate.log").string() +
                             "\" 2>&1");
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (rc != 0) return {false, "evaluate exited with " + std::to_string(rc)};

  std::ifstream in(out / "report.json");
  if (!in) return {false, "report.json missing"};
  const auto report = nlohmann::json::parse(in);
  const auto problems = validate_report(report);
  std::vector<std::string> missing;
  for (const char* f :
       {"tables/cells.csv", "tables/aggregate.csv", "tables/hypotheses.csv",
        "tables/h2_domain_contrasts.csv", "tables/h3_temperature.csv",
        "tables/h4_model_contrasts.csv", "tables/monotonicity.csv", "tables/risk_coverage.csv",
        "tables/robustness.csv", "plots/dprime_vs_metad.json", "plots/domain_mratio.json",
        "plots/temperature_curves.json"}) {
    if (!fs::exists(out / f)) missing.push_back(f);
  }
  const int resamples = report.at("config").at("bootstrap").at("n_resamples").get<int>();
  const std::size_t n_trials = report.at("provenance").at("n_trials").get<std::size_t>();
  const bool pass = problems.empty() && missing.empty() && resamples == 10000 &&
                    n_trials == 20000 && seconds <= 600.0;
  std::ostringstream detail;
  detail << n_trials << " trials, " << resamples << " resamples, " << fmt(seconds, 1)
         << " s; schema problems " << problems.size() << ", missing files " << missing.size();
  if (!problems.empty()) detail << " (first: " << problems.front() << ")";
  return {pass, detail.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string fixture, cli, work = "acceptance_work";
  std::vector<int> only;
  app.add_option("--fixture", fixture, "Simulation grid of the end-to-end fixture")->required();
  app.add_option("--cli", cli, "Path to the metasdt executable")->required();
  app.add_option("--work", work, "Scratch directory");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"M-ratio arithmetic", criterion_1},
      {"temperature-table ranges and rank correlations", criterion_2},
      {"ideal-observer recovery, 100 seeds at n=1e5", criterion_3},
      {"meta-d' fit vs grid-search oracle", criterion_4},
      {"monotone M-ratio degradation with confidence noise", criterion_5},
      {"bootstrap determinism and CI coverage", criterion_6},
      {"AUROC2 equals pairwise enumeration", criterion_7},
      {"Hautus correction and Type-1 closed forms", criterion_8},
      {"TOST equivalence behaviour", criterion_9},
      {"R1 stability across K", criterion_10},
      {"end-to-end evaluate on the fixture",
       [&] { return criterion_11(fs::absolute(cli), fs::absolute(fixture), fs::absolute(work)); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += o.pass ? 0 : 1;
    std::printf("%s %2d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id,
                criteria[i].first.c_str(), o.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
