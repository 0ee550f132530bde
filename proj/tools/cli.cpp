#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "poisson_malliavin/errors.hpp"
#include "poisson_malliavin/expansions.hpp"
#include "poisson_malliavin/integrals.hpp"
#include "poisson_malliavin/malliavin.hpp"
#include "poisson_malliavin/measure.hpp"
#include "poisson_malliavin/montecarlo.hpp"
#include "poisson_malliavin/numeric.hpp"
#include "poisson_malliavin/parallel.hpp"
#include "poisson_malliavin/processes.hpp"
#include "poisson_malliavin/registry.hpp"

namespace pm::cli {

namespace {

using nlohmann::json;

struct Flags {
  std::string config_path;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  int threads = 0;
  double tolerance = 0.0;
  double z_max = 4.0;
  std::string out;
  std::string format;
  std::vector<std::string> functionals;
  std::vector<std::string> kernels;
  int k = 0;
  int order = 12;
  std::string model;
  std::size_t probes = 100;
  std::size_t inner = 2000;
  int windows = 4;
};

// Effective settings after merging defaults, config file and flags.
struct Settings {
  std::string command;
  ProductIntensity rho;
  json marks_json;
  json regions_json = json::object();
  json hawkes_json = json::object();
  RegionTable regions;
  HawkesTable models;
  std::uint64_t seed = 1;
  std::optional<std::size_t> samples;
  int threads = 0;
  std::optional<double> tolerance;
  double z_max = 4.0;
  std::string out;
  std::string format = "jsonl";
  std::vector<std::string> functionals;
  std::vector<std::string> kernels;
  std::optional<int> k;
  int order = 12;
  std::string model = "default";
  std::size_t probes = 100;
  std::size_t inner = 2000;
  int windows = 4;
  std::string hash;
};

struct Outcome {
  std::vector<json> rows;
  bool pass = true;
};

const std::vector<std::string> kConfigKeys = {
    "T",         "marks", "regions", "hawkes", "seed",   "samples", "threads", "tolerance", "z_max",
    "functionals", "kernels", "k",   "order",  "model",  "probes",  "inner",   "windows",   "out", "format"};

json read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(kConfigKeys.begin(), kConfigKeys.end(), key) == kConfigKeys.end()) {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
  return j;
}

template <class T>
T config_get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

std::uint64_t env_seed() {
  const char* s = std::getenv("POISSON_MALLIAVIN_SEED");
  if (s == nullptr || *s == '\0') return 1;
  char* end = nullptr;
  const auto v = std::strtoull(s, &end, 10);
  if (end == nullptr || *end != '\0') throw ConfigError("POISSON_MALLIAVIN_SEED must be an unsigned integer");
  return v;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

Settings resolve(const std::string& command, const Flags& f, const CLI::App& sub) {
  Settings s;
  s.command = command;
  const json cfg = f.config_path.empty() ? json::object() : read_config(f.config_path);
  auto given = [&](const char* flag) {
    const auto* o = sub.get_option_no_throw(flag);
    return o != nullptr && o->count() > 0;
  };

  const double T = cfg.contains("T") ? config_get<double>(cfg, "T") : 1.0;
  s.marks_json = cfg.contains("marks") ? cfg.at("marks")
                                        : json{{"kind", "interval"}, {"M", 5.0}, {"density", "uniform"}};
  s.rho = make_intensity(T, MarkSpace::from_json(s.marks_json));
  s.regions = default_regions(s.rho);
  if (cfg.contains("regions")) {
    s.regions_json = cfg.at("regions");
    merge_regions(s.regions, s.regions_json, s.rho);
  }
  s.models = builtin_hawkes_models();
  if (cfg.contains("hawkes")) {
    s.hawkes_json = cfg.at("hawkes");
    if (!s.hawkes_json.is_object()) throw ConfigError("config key 'hawkes' must map names to models");
    for (const auto& [name, m] : s.hawkes_json.items()) s.models[name] = hawkes_from_json(m);
  }

  s.seed = given("--seed") ? f.seed : cfg.contains("seed") ? config_get<std::uint64_t>(cfg, "seed") : env_seed();
  if (given("--samples")) {
    s.samples = f.samples;
  } else if (cfg.contains("samples")) {
    s.samples = config_get<std::size_t>(cfg, "samples");
  }
  if (s.samples && *s.samples < 2) throw ConfigError("samples must be at least 2");
  s.threads = given("--threads") ? f.threads : cfg.contains("threads") ? config_get<int>(cfg, "threads") : 0;
  if (given("--tolerance")) {
    s.tolerance = f.tolerance;
  } else if (cfg.contains("tolerance")) {
    s.tolerance = config_get<double>(cfg, "tolerance");
  }
  if (s.tolerance && !(*s.tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  s.z_max = given("--z-max") ? f.z_max : cfg.contains("z_max") ? config_get<double>(cfg, "z_max") : 4.0;
  s.out = given("--out") ? f.out : cfg.contains("out") ? config_get<std::string>(cfg, "out") : "";
  s.format = given("--format") ? f.format : cfg.contains("format") ? config_get<std::string>(cfg, "format") : "jsonl";
  if (s.format != "jsonl" && s.format != "csv") throw ConfigError("format must be 'jsonl' or 'csv'");
  s.functionals = !f.functionals.empty()     ? f.functionals
                  : cfg.contains("functionals") ? config_get<std::vector<std::string>>(cfg, "functionals")
                                                : std::vector<std::string>{};
  s.kernels = !f.kernels.empty()     ? f.kernels
              : cfg.contains("kernels") ? config_get<std::vector<std::string>>(cfg, "kernels")
                                        : std::vector<std::string>{};
  if (given("--k")) {
    s.k = f.k;
  } else if (cfg.contains("k")) {
    s.k = config_get<int>(cfg, "k");
  }
  s.order = given("--order") ? f.order : cfg.contains("order") ? config_get<int>(cfg, "order") : 12;
  s.model = given("--model") ? f.model : cfg.contains("model") ? config_get<std::string>(cfg, "model") : "default";
  s.probes = given("--probes") ? f.probes : cfg.contains("probes") ? config_get<std::size_t>(cfg, "probes") : 100;
  s.inner = given("--inner") ? f.inner : cfg.contains("inner") ? config_get<std::size_t>(cfg, "inner") : 2000;
  s.windows = given("--windows") ? f.windows : cfg.contains("windows") ? config_get<int>(cfg, "windows") : 4;

  json hawkes = json::object();
  for (const auto& [name, m] : s.models) hawkes[name] = m;
  json effective = {{"command", s.command},
                    {"rho", s.rho},
                    {"regions", s.regions_json},
                    {"hawkes", hawkes},
                    {"seed", s.seed},
                    {"samples", s.samples ? json(*s.samples) : json(nullptr)},
                    {"tolerance", s.tolerance ? json(*s.tolerance) : json(nullptr)},
                    {"z_max", s.z_max},
                    {"functionals", s.functionals},
                    {"kernels", s.kernels},
                    {"k", s.k ? json(*s.k) : json(nullptr)},
                    {"order", s.order},
                    {"model", s.model},
                    {"probes", s.probes},
                    {"inner", s.inner},
                    {"windows", s.windows}};
  const std::string dumped = effective.dump();
  s.hash = hex64(fnv1a64(std::span<const char>(dumped.data(), dumped.size())));
  return s;
}

Seed sub_seed(const Settings& s, const std::string& label) {
  return derive_seed(Seed{s.seed}, fnv1a64(std::span<const char>(label.data(), label.size())));
}

double tolerance_or(const Settings& s, double fallback) { return s.tolerance.value_or(fallback); }

std::size_t samples_or(const Settings& s, std::size_t fallback) { return s.samples.value_or(fallback); }

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json report_json(const EstimateReport& r) {
  json j = {{"check", r.check},       {"n", r.n},           {"mean", r.mean},
            {"std_error", r.std_error}, {"target", opt(r.target)}, {"z", opt(r.z)},
            {"pass", r.pass}};
  if (r.lhs) j["lhs"] = *r.lhs;
  if (r.rhs) j["rhs"] = *r.rhs;
  for (const auto& [key, value] : r.extras) j[key] = value;
  return j;
}

// ---- suites ----------------------------------------------------------------

Outcome verify_pco(const Settings& s) {
  const std::vector<std::string> defaults = {"count:A", "count_squared:A", "product_counts:A,B", "exp_count:A,0.5",
                                             "hawkes_HT:small"};
  const auto& specs = s.functionals.empty() ? defaults : s.functionals;
  const std::size_t n = samples_or(s, 10000);
  const double tol = tolerance_or(s, 1e-9);
  Outcome o;
  for (const auto& spec : specs) {
    const auto R = make_functional(spec, s.rho, s.regions, s.models);
    const Seed seed = sub_seed(s, "pco|" + spec);
    struct PathResult {
      double residual = 0.0;
      double value = 0.0;
      bool overflow = false;
    };
    const auto results = parallel_map<PathResult>(n, s.threads, [&](std::size_t i) {
      const auto omega = sample_poisson(R.intensity, derive_seed(seed, i));
      PathResult p;
      p.overflow = R.hawkes && thin(*R.hawkes, omega).overflow;
      p.value = R.functional(omega);
      p.residual = pco_verify(R.functional, omega);
      return p;
    });
    std::vector<double> residuals;
    std::vector<double> values;
    std::size_t overflow = 0;
    for (const auto& p : results) {
      if (p.overflow) {
        ++overflow;
        continue;
      }
      residuals.push_back(p.residual);
      values.push_back(p.value);
    }
    const auto rep = summarize_residuals(residuals, values, tol);
    o.rows.push_back({{"check", "pco"},
                      {"functional", spec},
                      {"n", n},
                      {"overflow_paths", overflow},
                      {"mean_residual", rep.mean_residual},
                      {"std_error", rep.std_error},
                      {"max_abs_residual", rep.max_abs_residual},
                      {"max_scaled_residual", rep.max_scaled_residual},
                      {"tolerance", tol},
                      {"pass", rep.pass}});
    o.pass = o.pass && rep.pass;
  }
  return o;
}

Outcome expand(const Settings& s) {
  const std::vector<std::string> defaults = {"count:A", "count_squared:A", "product_counts:A,B"};
  const auto& specs = s.functionals.empty() ? defaults : s.functionals;
  const std::size_t n = samples_or(s, 1000);
  const double tol = tolerance_or(s, 1e-9);
  const int order = s.order;
  ExpansionOptions eo;
  eo.tolerance = tol;
  if (order < 0 || order > eo.order_budget) {
    throw ConfigError("order must be in [0, " + std::to_string(eo.order_budget) + "]");
  }
  Outcome o;
  for (const auto& spec : specs) {
    const auto R = make_functional(spec, s.rho, s.regions, s.models);
    const auto& F = R.functional;
    const Functional brute = F.stripped();
    const bool has_chaos = F.chaos().has_value();
    const Seed seed = sub_seed(s, "expand|" + spec);
    struct PathResult {
      bool skipped = false;
      double pseudo_scaled = 0.0;
      double brute_scaled = 0.0;
      double higher = 0.0;
      double chaos_scaled = 0.0;
      std::vector<double> residuals;
    };
    const auto results = parallel_map<PathResult>(n, s.threads, [&](std::size_t i) {
      const auto omega = sample_poisson(R.intensity, derive_seed(seed, i));
      PathResult p;
      const auto size = static_cast<int>(omega.size());
      if (size > order) {
        p.skipped = true;
        return p;
      }
      const double scale = 1.0 + std::abs(F(omega));
      const auto ps = pseudo_chaotic_sum(F, omega, order, eo);
      p.pseudo_scaled = ps.residuals[static_cast<std::size_t>(size)] / scale;
      for (int k = size + 1; k <= order; ++k) p.higher = std::max(p.higher, std::abs(ps.terms[static_cast<std::size_t>(k)]));
      p.residuals = ps.residuals;
      const auto pb = pseudo_chaotic_sum(brute, omega, order, eo);
      p.brute_scaled = pb.residuals[static_cast<std::size_t>(size)] / scale;
      for (int k = size + 1; k <= order; ++k) p.higher = std::max(p.higher, std::abs(pb.terms[static_cast<std::size_t>(k)]));
      if (has_chaos) {
        const int top = F.chaos()->exact_order ? std::min(order, *F.chaos()->exact_order) : order;
        p.chaos_scaled = chaotic_sum(F, omega, R.intensity, top, eo).residuals.back() / scale;
      }
      return p;
    });
    std::size_t skipped = 0;
    double pseudo_max = 0.0;
    double brute_max = 0.0;
    double higher_max = 0.0;
    double chaos_max = 0.0;
    std::vector<std::vector<double>> by_order(static_cast<std::size_t>(order) + 1);
    for (const auto& p : results) {
      if (p.skipped) {
        ++skipped;
        continue;
      }
      pseudo_max = std::max(pseudo_max, p.pseudo_scaled);
      brute_max = std::max(brute_max, p.brute_scaled);
      higher_max = std::max(higher_max, p.higher);
      chaos_max = std::max(chaos_max, p.chaos_scaled);
      for (std::size_t k = 0; k < p.residuals.size(); ++k) by_order[k].push_back(p.residuals[k]);
    }
    const bool pseudo_pass = pseudo_max < tol && brute_max < tol && higher_max == 0.0;
    o.rows.push_back({{"check", "expand"},
                      {"functional", spec},
                      {"kind", "pseudo_chaotic"},
                      {"n", n},
                      {"skipped", skipped},
                      {"order", order},
                      {"max_scaled_residual", pseudo_max},
                      {"brute_force_max_scaled_residual", brute_max},
                      {"max_higher_order_term", higher_max},
                      {"tolerance", tol},
                      {"pass", pseudo_pass}});
    o.pass = o.pass && pseudo_pass;
    if (has_chaos) {
      const bool chaos_pass = chaos_max < tol;
      o.rows.push_back({{"check", "expand"},
                        {"functional", spec},
                        {"kind", "chaotic"},
                        {"n", n},
                        {"skipped", skipped},
                        {"order", F.chaos()->exact_order ? json(*F.chaos()->exact_order) : json(order)},
                        {"max_scaled_residual", chaos_max},
                        {"tolerance", tol},
                        {"pass", chaos_pass}});
      o.pass = o.pass && chaos_pass;
    }
    for (std::size_t k = 0; k < by_order.size(); ++k) {
      if (by_order[k].empty()) continue;
      const auto ms = mean_and_stderr(by_order[k]);
      o.rows.push_back({{"table", "convergence"},
                        {"functional", spec},
                        {"kind", "pseudo_chaotic"},
                        {"order", k},
                        {"residual", ms.mean},
                        {"stderr", ms.std_error}});
    }
  }
  return o;
}

std::vector<std::pair<std::string, std::string>> pairs_for(const Settings& s) {
  const std::vector<std::string> fs = s.functionals.empty()
                                          ? std::vector<std::string>{"one", "count:A", "count_squared:A",
                                                                     "product_counts:A,B", "exp_count:A,0.5"}
                                          : s.functionals;
  const std::vector<std::string> hs =
      s.kernels.empty() ? std::vector<std::string>{"ind:A", "ind:B", "tensor_ind:A"} : s.kernels;
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fs) {
    for (const auto& h : hs) out.emplace_back(f, h);
  }
  return out;
}

Outcome verify_mecke_ibp(const Settings& s, bool ibp) {
  const std::string name = ibp ? "ibp" : "mecke";
  MonteCarloOptions mo;
  mo.samples = samples_or(s, 100000);
  mo.threads = s.threads;
  mo.z_max = s.z_max;
  Outcome o;
  std::size_t checks = 0;
  for (const auto& [fs, hs] : pairs_for(s)) {
    const auto R = make_functional(fs, s.rho, s.regions, s.models);
    const auto h = make_kernel(hs, R.intensity, s.regions);
    if (s.k && h.order() != *s.k) continue;
    if (h.order() > 3) throw ConfigError("kernel '" + hs + "' has order above 3");
    mo.seed = sub_seed(s, name + "|" + fs + "|" + hs);
    const auto rep = ibp ? ibp_check(R.functional, h, R.intensity, mo) : mecke_check(R.functional, h, R.intensity, mo);
    json row = report_json(rep);
    row["F"] = fs;
    row["h"] = hs;
    o.rows.push_back(row);
    o.pass = o.pass && rep.pass;
    ++checks;
  }
  if (checks == 0) throw ConfigError("no (F, h) pair matches the requested k");
  // Expected false alarms under the null, for reading the suite as a whole.
  o.rows.push_back({{"check", name + "_suite"},
                    {"checks", checks},
                    {"z_max", s.z_max},
                    {"expected_false_alarms", static_cast<double>(checks) * std::erfc(s.z_max / std::sqrt(2.0))},
                    {"pass", o.pass}});
  return o;
}

Outcome verify_isometry(const Settings& s) {
  const std::vector<std::string> defaults = {"ind:A", "tensor_ind:A"};
  const auto& specs = s.kernels.empty() ? defaults : s.kernels;
  MonteCarloOptions mo;
  mo.samples = samples_or(s, 100000);
  mo.threads = s.threads;
  mo.z_max = s.z_max;
  Outcome o;
  for (const auto& spec : specs) {
    const auto f = make_kernel(spec, s.rho, s.regions);
    if (!f.symmetric()) throw ConfigError("isometry needs a symmetric kernel, got '" + spec + "'");
    mo.seed = sub_seed(s, "isometry|" + spec);
    const auto rep = isometry_check(f, s.rho, mo);
    json row = report_json(rep);
    row["kernel"] = spec;
    o.rows.push_back(row);
    o.pass = o.pass && rep.pass;
  }
  return o;
}

Outcome verify_co(const Settings& s) {
  const std::vector<std::string> defaults = {"count:A", "count_squared:A", "product_counts:A,B", "exp_count:A,0.5"};
  const auto& specs = s.functionals.empty() ? defaults : s.functionals;
  const std::size_t n = samples_or(s, 1000);
  const double tol = tolerance_or(s, 1e-8);
  Outcome o;
  for (const auto& spec : specs) {
    const auto R = make_functional(spec, s.rho, s.regions, s.models);
    if (!R.functional.projection()) throw ConfigError("functional '" + spec + "' has no closed-form projection");
    const Seed seed = sub_seed(s, "co|" + spec);
    std::vector<double> values(n);
    const auto residuals = parallel_map<double>(n, s.threads, [&](std::size_t i) {
      const auto omega = sample_poisson(R.intensity, derive_seed(seed, i));
      values[i] = R.functional(omega);
      return co_residual(R.functional, omega, R.intensity);
    });
    const auto rep = summarize_residuals(residuals, values, tol);

    const Seed probe_seed = sub_seed(s, "co-probe|" + spec);
    double max_z = 0.0;
    std::size_t failures = 0;
    for (std::size_t i = 0; i < s.probes; ++i) {
      Rng rng = make_rng(derive_seed(probe_seed, i));
      const auto omega = sample_poisson(R.intensity, rng);
      const Atom a{std::uniform_real_distribution<double>(0.0, R.intensity.horizon)(rng),
                   R.intensity.marks.sample(rng)};
      const auto p = projection_probe(R.functional, omega, a, R.intensity, s.inner,
                                      derive_seed(probe_seed, s.probes + i), s.threads);
      max_z = std::max(max_z, std::abs(p.z));
      if (!(std::abs(p.z) < s.z_max)) ++failures;
    }
    const bool pass = rep.pass && failures == 0;
    o.rows.push_back({{"check", "co"},
                      {"functional", spec},
                      {"n", n},
                      {"mean_residual", rep.mean_residual},
                      {"max_abs_residual", rep.max_abs_residual},
                      {"max_scaled_residual", rep.max_scaled_residual},
                      {"tolerance", tol},
                      {"residual_pass", rep.pass},
                      {"probes", s.probes},
                      {"inner", s.inner},
                      {"max_abs_z", max_z},
                      {"probe_failures", failures},
                      {"pass", pass}});
    o.pass = o.pass && pass;
  }
  return o;
}

Outcome simulate(const Settings& s, std::ostream& err) {
  const auto it = s.models.find(s.model);
  if (it == s.models.end()) throw ConfigError("unknown hawkes model '" + s.model + "'");
  HawkesModel model = it->second;
  for (const auto& w : validate(model, true)) err << "warning: " << w << "\n";
  const std::size_t n = samples_or(s, 10000);
  const Seed seed = sub_seed(s, "hawkes|" + s.model);
  const Functional H = hawkes_count_functional(model, s.model);
  struct PathResult {
    double count = 0.0;
    bool overflow = false;
    bool identity_ok = true;
    bool generic_ok = true;
  };
  const auto ground_rho = ground_intensity(model);
  const auto results = parallel_map<PathResult>(n, s.threads, [&](std::size_t i) {
    const auto ground = sample_poisson(ground_rho, derive_seed(seed, i));
    const auto path = thin(model, ground);
    PathResult p;
    p.count = static_cast<double>(path.accepted.size());
    p.overflow = path.overflow;
    if (p.overflow) return p;
    double sum = 0.0;
    for (const auto& a : ground) {
      const double closed = hawkes_pco_integrand(model, ground, a);
      sum += closed;
      if (pco_integrand(H, ground, a) != closed) p.generic_ok = false;
    }
    p.identity_ok = sum == p.count;
    return p;
  });
  std::vector<double> counts;
  std::size_t overflow = 0;
  std::size_t identity_violations = 0;
  std::size_t generic_violations = 0;
  for (const auto& p : results) {
    if (p.overflow) {
      ++overflow;
      continue;
    }
    counts.push_back(p.count);
    if (!p.identity_ok) ++identity_violations;
    if (!p.generic_ok) ++generic_violations;
  }
  const auto ms = mean_and_stderr(counts);
  const double oracle = expected_count(model);
  const double z = ms.std_error > 0.0 ? (ms.mean - oracle) / ms.std_error : 0.0;
  const double overflow_fraction = static_cast<double>(overflow) / static_cast<double>(n);
  const bool pass = identity_violations == 0 && generic_violations == 0 && std::abs(z) < s.z_max &&
                    overflow_fraction < 1e-3;
  Outcome o;
  o.rows.push_back({{"check", "hawkes"},
                    {"model", s.model},
                    {"params", model},
                    {"n", n},
                    {"mean_HT", ms.mean},
                    {"std_error", ms.std_error},
                    {"expected_HT", oracle},
                    {"z", z},
                    {"overflow_fraction", overflow_fraction},
                    {"identity_violations", identity_violations},
                    {"generic_integrand_violations", generic_violations},
                    {"pass", pass}});
  o.pass = pass;
  return o;
}

Outcome windows_demo(const Settings& s) {
  if (s.windows < 1) throw ConfigError("windows must be at least 1");
  const std::size_t n = samples_or(s, 20000);
  const double tol = tolerance_or(s, 1e-9);
  const double M = s.rho.marks.upper();
  const auto J = static_cast<double>(s.windows);
  std::vector<Region> windows;
  for (int j = 1; j <= s.windows; ++j) {
    windows.push_back(Region{Interval{0.0, s.rho.horizon, true},
                             MarkSet::interval(Interval{0.0, j * M / (J + 1.0), false})});
  }
  const Functional F = count_functional("X", s.rho.whole(), s.rho);
  const auto table = windowed_pco_convergence(F, s.rho, windows, n, sub_seed(s, "windows"), s.threads);
  Outcome o;
  bool monotone = true;
  bool within = true;
  bool identity = true;
  for (std::size_t j = 0; j < table.rows.size(); ++j) {
    const auto& row = table.rows[j];
    const double target = s.rho.total_mass() - row.mass;
    const double z = row.l1_std_error > 0.0 ? (row.l1_mean - target) / row.l1_std_error : 0.0;
    if (j > 0 && row.l1_mean > table.rows[j - 1].l1_mean) monotone = false;
    if (!(std::abs(z) < s.z_max)) within = false;
    if (!(row.max_pco_residual < tol)) identity = false;
    o.rows.push_back({{"table", "windows"},
                      {"window", row.window},
                      {"mass", row.mass},
                      {"residual", row.l1_mean},
                      {"stderr", row.l1_std_error},
                      {"target", target},
                      {"z", z},
                      {"max_pco_residual", row.max_pco_residual}});
  }
  const bool pass = monotone && within && identity;
  o.rows.push_back({{"check", "windows"},
                    {"n", n},
                    {"windows", s.windows},
                    {"monotone", monotone},
                    {"targets_within_z_max", within},
                    {"pco_identity", identity},
                    {"empty_configuration_value", table.empty_configuration_value},
                    {"empty_value_by_convention", table.empty_value_by_convention},
                    {"pass", pass}});
  o.pass = pass;
  return o;
}

// ---- output ----------------------------------------------------------------

std::string csv_cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) {
    const auto str = v.get<std::string>();
    if (str.find_first_of(",\"\n") == std::string::npos) return str;
    std::string q = "\"";
    for (char c : str) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  if (v.is_structured()) return csv_cell(json(v.dump()));
  return v.dump();
}

void write_rows(const std::vector<json>& rows, const std::string& format, std::ostream& out) {
  if (format == "jsonl") {
    for (const auto& r : rows) out << r.dump() << "\n";
    return;
  }
  std::vector<std::string> columns;
  for (const auto& r : rows) {
    for (const auto& [key, _] : r.items()) {
      if (std::find(columns.begin(), columns.end(), key) == columns.end()) columns.push_back(key);
    }
  }
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
  out << "\n";
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out << (c ? "," : "");
      if (r.contains(columns[c])) out << csv_cell(r.at(columns[c]));
    }
    out << "\n";
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Malliavin calculus on the Poisson space: pathwise and Monte Carlo verification suites",
               "poisson-malliavin"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print this help and exit");  // "--h" names a kernel
  Flags f;

  struct Command {
    const char* name;
    const char* help;
  };
  const std::vector<Command> commands = {
      {"verify-pco", "pseudo-Clark-Ocone residuals on sampled paths"},
      {"expand", "pseudo-chaotic and chaotic partial sums"},
      {"verify-mecke", "Mecke formula z-tests"},
      {"verify-ibp", "integration-by-parts z-tests"},
      {"verify-isometry", "isometry of compensated integrals"},
      {"verify-co", "Clark-Ocone residuals and nested projection probes"},
      {"simulate-hawkes", "Hawkes process by thinning, imbedding identity and mean count"},
      {"windows-demo", "nested mark windows for the unbounded-mass representation"}};

  std::map<std::string, CLI::App*> subs;
  for (const auto& c : commands) {
    auto* s = app.add_subcommand(c.name, c.help);
    s->add_option("--config", f.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    s->add_option("--seed", f.seed, "base seed (fallback: POISSON_MALLIAVIN_SEED, then 1)");
    s->add_option("--samples", f.samples, "number of sampled paths or Monte Carlo draws");
    s->add_option("--threads", f.threads, "worker threads, 0 = all cores");
    s->add_option("--tolerance", f.tolerance, "relative tolerance for exact identities");
    s->add_option("--z-max", f.z_max, "z-score bound for statistical checks");
    s->add_option("--out", f.out, "report file (default: standard output)");
    s->add_option("--format", f.format, "jsonl or csv")->check(CLI::IsMember({"jsonl", "csv"}));
    subs[c.name] = s;
  }
  for (const char* name : {"verify-pco", "expand", "verify-co", "verify-mecke", "verify-ibp"}) {
    subs[name]->add_option("--functional,--F", f.functionals, "functional spec, e.g. count_squared:A");
  }
  for (const char* name : {"verify-mecke", "verify-ibp", "verify-isometry"}) {
    subs[name]->add_option("--kernel,--h", f.kernels, "kernel spec, e.g. tensor_ind:A");
  }
  for (const char* name : {"verify-mecke", "verify-ibp"}) subs[name]->add_option("--k", f.k, "kernel order filter");
  subs["expand"]->add_option("--order", f.order, "highest expansion order");
  subs["simulate-hawkes"]->add_option("--model", f.model, "hawkes model name");
  subs["verify-co"]->add_option("--probes", f.probes, "nested Monte Carlo probes");
  subs["verify-co"]->add_option("--inner", f.inner, "resampled futures per probe");
  subs["windows-demo"]->add_option("--windows", f.windows, "number of nested windows");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();
  try {
    const Settings s = resolve(command, f, *chosen);
    Outcome o;
    if (command == "verify-pco") {
      o = verify_pco(s);
    } else if (command == "expand") {
      o = expand(s);
    } else if (command == "verify-mecke") {
      o = verify_mecke_ibp(s, false);
    } else if (command == "verify-ibp") {
      o = verify_mecke_ibp(s, true);
    } else if (command == "verify-isometry") {
      o = verify_isometry(s);
    } else if (command == "verify-co") {
      o = verify_co(s);
    } else if (command == "simulate-hawkes") {
      o = simulate(s, err);
    } else {
      o = windows_demo(s);
    }
    for (auto& row : o.rows) {
      row["config_hash"] = s.hash;
      row["seed"] = s.seed;
    }
    if (s.out.empty()) {
      write_rows(o.rows, s.format, out);
    } else {
      std::ofstream file(s.out, std::ios::binary | std::ios::trunc);
      if (!file) throw ConfigError("cannot write '" + s.out + "'");
      write_rows(o.rows, s.format, file);
    }
    return o.pass ? 0 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("poisson-malliavin");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace pm::cli
