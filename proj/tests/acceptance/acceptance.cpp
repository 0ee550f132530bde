// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "oracles.hpp"
#include "poisson_malliavin/expansions.hpp"
#include "poisson_malliavin/integrals.hpp"
#include "poisson_malliavin/montecarlo.hpp"
#include "poisson_malliavin/numeric.hpp"
#include "poisson_malliavin/parallel.hpp"
#include "poisson_malliavin/processes.hpp"
#include "poisson_malliavin/registry.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

pm::ProductIntensity standard_rho() { return pm::make_intensity(1.0, pm::MarkSpace::uniform(5.0)); }

constexpr int kAllCores = 0;

Outcome pco_exactness() {
  const auto rho = standard_rho();
  const auto regions = pm::default_regions(rho);
  const char* specs[] = {"count:A", "count_squared:A", "product_counts:A,B", "exp_count:A,0.5", "hawkes_HT:small"};
  const auto t0 = Clock::now();
  bool ok = true;
  double worst = 0.0;
  for (const char* s : specs) {
    const auto R = pm::make_functional(s, rho, regions);
    const auto scaled = pm::parallel_map<double>(10000, kAllCores, [&](std::size_t i) {
      const auto w = pm::sample_poisson(R.intensity, pm::derive_seed(pm::Seed{101}, i));
      return std::abs(pm::pco_verify(R.functional, w)) / (1.0 + std::abs(R.functional(w)));
    });
    for (double r : scaled) {
      worst = std::max(worst, r);
      ok = ok && r < 1e-9;
    }
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 60.0, fmt("5 functionals x 10000 paths, max scaled residual %.3g, %.2f s", worst, secs)};
}

Outcome pseudo_chaotic_exactness() {
  const auto rho = standard_rho();
  const auto regions = pm::default_regions(rho);
  bool ok = true;
  double worst = 0.0;
  std::size_t paths = 0, largest = 0;
  for (const char* s : {"count:A", "count_squared:A"}) {
    const auto F = pm::make_functional(s, rho, regions).functional;
    const int top = std::string(s) == "count:A" ? 1 : 2;
    for (const auto& route : {F, F.stripped()}) {
      std::size_t i = 0;
      for (std::size_t kept = 0; kept < 1000; ++i) {
        const auto w = pm::sample_poisson(rho, pm::derive_seed(pm::Seed{202}, i));
        if (w.size() > 12) continue;
        ++kept;
        ++paths;
        largest = std::max(largest, w.size());
        const auto r = pm::pseudo_chaotic_sum(route, w, 12);
        const double res = r.residuals[w.size()] / (1.0 + std::abs(r.value));
        worst = std::max(worst, res);
        ok = ok && res < 1e-9;
        for (int k = top + 1; k <= 12; ++k) ok = ok && r.terms[static_cast<std::size_t>(k)] == 0.0;
      }
    }
  }
  return {ok, fmt("%zu paths (annotated and brute force), |w| <= %zu, max relative residual %.3g", paths, largest, worst)};
}

Outcome chaotic_exactness() {
  const auto rho = standard_rho();
  const auto regions = pm::default_regions(rho);
  const auto& A = regions.at("A");
  const double m = rho.mass(A);
  const auto F = pm::make_functional("count_squared:A", rho, regions).functional;
  bool ok = true;
  double worst = 0.0;
  for (std::size_t i = 0; i < 1000; ++i) {
    const auto w = pm::sample_poisson(rho, pm::derive_seed(pm::Seed{303}, i));
    const double n = static_cast<double>(pm::count(w, A));
    const double by_hand = m + m * m + (2.0 * m + 1.0) * (n - m) + (n * (n - 1.0) - 2.0 * m * n + m * m);
    const auto r = pm::chaotic_sum(F, w, rho, 4);
    const double err = std::max({std::abs(r.partial_sums[2] - n * n), std::abs(by_hand - n * n),
                                 std::abs(r.terms[3]), std::abs(r.terms[4])}) /
                       (1.0 + n * n);
    worst = std::max(worst, err);
    ok = ok && err < 1e-9;
  }
  return {ok, fmt("1000 paths, max relative error %.3g", worst)};
}

Outcome span_round_trip() {
  const auto rho = standard_rho();
  const auto regions = pm::default_regions(rho);
  bool ok = true;
  double worst = 0.0;
  for (const char* s : {"ind:A", "ind:B", "tensor_ind:A", "tensor_ind:B"}) {
    const auto f = pm::make_kernel(s, rho, regions);
    const auto to_c = pm::to_compensated(f, rho);
    const auto to_u = pm::to_uncompensated(f, rho);
    for (std::size_t i = 0; i < 1000; ++i) {
      const auto w = pm::sample_poisson(rho, pm::derive_seed(pm::Seed{404}, i));
      const double u = pm::eval_uncompensated(f, w);
      const double c = pm::eval_compensated(f, w, rho).value;
      const double e1 = std::abs(pm::evaluate(to_c, w, rho).value - u) / (1.0 + std::abs(u));
      const double e2 = std::abs(pm::evaluate(to_u, w, rho).value - c) / (1.0 + std::abs(c));
      worst = std::max({worst, e1, e2});
      ok = ok && e1 < 1e-9 && e2 < 1e-9;
    }
  }
  return {ok, fmt("orders 1 and 2, both directions, 1000 paths, max relative error %.3g", worst)};
}

Outcome mecke_ibp_suite() {
  const auto rho = standard_rho();
  const auto regions = pm::default_regions(rho);
  const char* fs[] = {"one", "count:A", "count_squared:A", "product_counts:A,B", "exp_count:A,0.5"};
  const char* hs[] = {"ind:A", "ind:B", "tensor_ind:A"};
  pm::MonteCarloOptions opts;
  opts.samples = 100000;
  opts.seed = pm::Seed{505};
  opts.threads = kAllCores;
  const auto t0 = Clock::now();
  int checks = 0, passed = 0;
  double worst = 0.0;
  for (const char* fspec : fs) {
    const auto F = pm::make_functional(fspec, rho, regions).functional;
    for (const char* hspec : hs) {
      const auto h = pm::make_kernel(hspec, rho, regions);
      for (const auto& r : {pm::mecke_check(F, h, rho, opts), pm::ibp_check(F, h, rho, opts)}) {
        ++checks;
        const double z = r.z ? std::abs(*r.z) : 0.0;
        worst = std::max(worst, z);
        if (r.pass && z < 4.0) ++passed;
      }
    }
  }
  const double secs = seconds_since(t0);
  return {passed == checks && secs < 120.0,
          fmt("%d/%d checks at 100000 samples, max |z| %.2f, %.2f s", passed, checks, worst, secs)};
}

Outcome isometry_constant() {
  const auto rho = standard_rho();
  const auto regions = pm::default_regions(rho);
  const double m = rho.mass(regions.at("A"));
  pm::MonteCarloOptions opts;
  opts.samples = 100000;
  opts.seed = pm::Seed{606};
  opts.threads = kAllCores;
  bool ok = true;
  std::string detail;
  for (int n : {1, 2}) {
    const auto f = pm::make_kernel(n == 1 ? "ind:A" : "tensor_ind:A", rho, regions);
    const auto r = pm::isometry_check(f, rho, opts);
    double ratio = 0.0, se = 0.0;
    for (const auto& [k, v] : r.extras) {
      if (k == "ratio") ratio = v;
      if (k == "ratio_std_error") se = v;
    }
    const double expected = oracle::isometry_constant(n, m);
    const double z = (ratio - expected) / se;
    ok = ok && std::abs(z) < 4.0 && std::abs(expected - pm::factorial(n)) < 1e-9;
    detail += fmt("n=%d ratio %.4f +- %.4f vs oracle %.6f (z %.2f); ", n, ratio, se, expected, z);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

Outcome clark_ocone() {
  const auto rho = standard_rho();
  const auto regions = pm::default_regions(rho);
  const auto F = pm::make_functional("count_squared:A", rho, regions).functional;
  double worst = 0.0;
  for (std::size_t i = 0; i < 1000; ++i) {
    const auto w = pm::sample_poisson(rho, pm::derive_seed(pm::Seed{707}, i));
    worst = std::max(worst, std::abs(pm::co_residual(F, w, rho)));
  }
  auto rng = pm::make_rng(pm::Seed{708});
  std::uniform_real_distribution<double> ut(0.0, 1.0), ux(0.0, 5.0);
  int agree = 0;
  double zmax = 0.0;
  for (int p = 0; p < 100; ++p) {
    const auto w = pm::sample_poisson(rho, rng);
    const pm::Atom a{ut(rng), ux(rng)};
    const auto probe = pm::projection_probe(F, w, a, rho, 2000, pm::derive_seed(pm::Seed{709}, p), kAllCores);
    zmax = std::max(zmax, std::abs(probe.z));
    if (std::abs(probe.z) < 4.0) ++agree;
  }
  return {worst < 1e-8 && agree == 100,
          fmt("max residual %.3g over 1000 paths; %d/100 probes within 4 SE (max |z| %.2f)", worst, agree, zmax)};
}

Outcome hawkes_imbedding() {
  const pm::HawkesModel model;  // mu 1, exp(0.5, 1), T 10, theta 20
  const std::size_t paths = 10000;
  struct Row {
    double count = 0.0;
    bool overflow = false;
    bool identity = true;
  };
  const auto rows = pm::parallel_map<Row>(paths, kAllCores, [&](std::size_t i) {
    const auto p = pm::simulate_hawkes(model, pm::derive_seed(pm::Seed{808}, i));
    Row r;
    r.count = static_cast<double>(p.accepted.size());
    r.overflow = p.overflow;
    double sum = 0.0;
    for (const auto& a : p.ground) sum += pm::hawkes_pco_integrand(model, p.ground, a);
    r.identity = sum == r.count;
    return r;
  });
  std::vector<double> counts;
  std::size_t overflow = 0, violations = 0;
  for (const auto& r : rows) {
    counts.push_back(r.count);
    if (r.overflow) {
      ++overflow;
    } else if (!r.identity) {
      ++violations;
    }
  }
  const auto ms = pm::mean_and_stderr(counts);
  const double target = oracle::hawkes_mean_count(1.0, [](double s) { return 0.5 * std::exp(-s); }, 10.0, 4000);
  const double z = (ms.mean - target) / ms.std_error;
  const double overflow_fraction = static_cast<double>(overflow) / paths;
  return {violations == 0 && std::abs(z) < 4.0 && overflow_fraction < 1e-3,
          fmt("%zu identity violations; mean %.4f +- %.4f vs renewal oracle %.4f (z %.2f); overflow %.2g", violations,
              ms.mean, ms.std_error, target, z, overflow_fraction)};
}

Outcome window_demo() {
  const auto rho = standard_rho();
  std::vector<pm::Region> windows;
  for (int j = 1; j <= 4; ++j) {
    windows.push_back(pm::Region{pm::Interval{0.0, 1.0, true}, pm::MarkSet::interval({0.0, 5.0 * j / 5.0})});
  }
  const auto F = pm::count_functional("X", rho.whole(), rho);
  const auto table = pm::windowed_pco_convergence(F, rho, windows, 20000, pm::Seed{909}, kAllCores);
  bool ok = table.rows.size() == 4;
  std::string detail;
  for (std::size_t j = 0; j < table.rows.size(); ++j) {
    const auto& r = table.rows[j];
    const double target = 1.0 * (5.0 - (j + 1.0));  // excluded mass T (M - jM/5)
    const double z = (r.l1_mean - target) / r.l1_std_error;
    ok = ok && std::abs(z) < 4.0;
    if (j > 0) ok = ok && r.l1_mean < table.rows[j - 1].l1_mean;
    detail += fmt("j=%zu %.4f vs %.1f (z %.2f); ", j + 1, r.l1_mean, target, z);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const char* suites[] = {"verify-pco", "expand",          "verify-mecke", "verify-ibp",
                          "verify-isometry", "verify-co", "simulate-hawkes", "windows-demo"};
  const auto dir = std::filesystem::temp_directory_path() / "pm_acceptance";
  std::filesystem::create_directories(dir);
  int identical = 0, total = 0;
  std::string failed;
  const auto t0 = Clock::now();
  for (const char* s : suites) {
    std::string reports[2];
    for (int k = 0; k < 2; ++k) {
      const auto out = dir / (std::string(s) + (k == 0 ? ".t1" : ".t4"));
      std::ostringstream so, se;
      const int code = pm::cli::run({s, "--seed", "2024", "--threads", k == 0 ? "1" : "4", "--out", out.string()}, so, se);
      reports[k] = code == 1 ? std::string() : slurp(out);
    }
    ++total;
    if (!reports[0].empty() && reports[0] == reports[1]) {
      ++identical;
    } else {
      failed += std::string(" ") + s;
    }
  }
  std::filesystem::remove_all(dir);
  return {identical == total, fmt("%d/%d suites byte-identical at threads 1 and 4 (%.1f s)%s%s", identical, total,
                                  seconds_since(t0), failed.empty() ? "" : "; differing:", failed.c_str())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"pseudo Clark-Ocone exactness", pco_exactness},
      {"pseudo-chaotic finite exactness", pseudo_chaotic_exactness},
      {"chaotic expansion of N(A)^2", chaotic_exactness},
      {"span round trip", span_round_trip},
      {"Mecke and IBP suites", mecke_ibp_suite},
      {"isometry constant", isometry_constant},
      {"Clark-Ocone residual and projection", clark_ocone},
      {"Hawkes imbedding", hawkes_imbedding},
      {"window demo", window_demo},
      {"determinism across threads", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << "criterion " << i + 1 << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
