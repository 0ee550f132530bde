#include "poisson_malliavin/registry.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "poisson_malliavin/errors.hpp"
#include "poisson_malliavin/expansions.hpp"
#include "poisson_malliavin/malliavin.hpp"

namespace pm {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::pair<std::string, std::string> head_args(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) return {spec, ""};
  return {spec.substr(0, colon), spec.substr(colon + 1)};
}

double parse_number(const std::string& s, const std::string& context) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError(context + ": '" + s + "' is not a number");
  }
  if (used != s.size() || !std::isfinite(v)) throw ConfigError(context + ": '" + s + "' is not a number");
  return v;
}

int parse_int(const std::string& s, const std::string& context) {
  const double v = parse_number(s, context);
  if (v != std::floor(v) || v < 0 || v > 30) throw ConfigError(context + ": '" + s + "' is not a small integer");
  return static_cast<int>(v);
}

const Region& lookup(const RegionTable& t, const std::string& name) {
  const auto it = t.find(name);
  if (it == t.end()) throw ConfigError("unknown region '" + name + "'");
  return it->second;
}

Interval axis_interval(const nlohmann::json& j, double end, const std::string& what) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(what + " must be [lo, hi]");
  const double lo = j[0].get<double>();
  const double hi = j[1].get<double>();
  if (!(lo <= hi)) throw ConfigError(what + ": need lo <= hi");
  return Interval{lo, hi, hi >= end};
}

std::string format_number(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace

RegionTable default_regions(const ProductIntensity& rho) {
  const double T = rho.horizon;
  const double M = rho.marks.upper();
  RegionTable t;
  t["A"] = Region{Interval{0.0, 0.6 * T, false}, MarkSet::interval(Interval{0.0, 0.6 * M, false})};
  t["B"] = Region{Interval{0.3 * T, T, true}, MarkSet::interval(Interval{0.4 * M, M, true})};
  t["X"] = rho.whole();
  return t;
}

void merge_regions(RegionTable& table, const nlohmann::json& j, const ProductIntensity& rho) {
  if (!j.is_object()) throw ConfigError("regions must be an object");
  for (const auto& [name, spec] : j.items()) {
    if (name.empty() || name.find_first_of(",:") != std::string::npos) {
      throw ConfigError("region name '" + name + "' is empty or contains ',' or ':'");
    }
    if (!spec.is_object()) throw ConfigError("region '" + name + "' must be an object");
    Region r = rho.whole();
    for (const auto& [key, value] : spec.items()) {
      if (key == "t") {
        r.time = axis_interval(value, rho.horizon, "region '" + name + "' t");
      } else if (key == "x") {
        if (value.is_object()) {
          for (const auto& [k2, _] : value.items()) {
            if (k2 != "points") throw ConfigError("region '" + name + "' x: unknown key '" + k2 + "'");
          }
          r.marks = MarkSet::points(value.at("points").get<std::vector<double>>());
        } else {
          r.marks = MarkSet::interval(axis_interval(value, rho.marks.upper(), "region '" + name + "' x"));
        }
      } else {
        throw ConfigError("region '" + name + "': unknown key '" + key + "'");
      }
    }
    table[name] = r;
  }
}

HawkesTable builtin_hawkes_models() {
  HawkesTable t;
  t["default"] = HawkesModel{1.0, ExponentialKernel{0.5, 1.0}, 10.0, 20.0};
  t["small"] = HawkesModel{1.0, ExponentialKernel{0.5, 1.0}, 1.0, 5.0};
  return t;
}

ResolvedFunctional make_functional(const std::string& spec, const ProductIntensity& rho, const RegionTable& regions,
                                   const HawkesTable& models) {
  const auto [head, args] = head_args(spec);
  const auto parts = split(args, ',');
  auto expect = [&](std::size_t n) {
    if (parts.size() != n) {
      throw ConfigError("functional '" + spec + "' expects " + std::to_string(n) + " argument(s)");
    }
  };
  std::optional<Functional> F;
  if (head == "one") {
    if (!args.empty()) throw ConfigError("functional 'one' takes no arguments");
    F = constant_functional(1.0, rho);
  } else if (head == "const") {
    expect(1);
    F = constant_functional(parse_number(parts[0], spec), rho);
  } else if (head == "count") {
    expect(1);
    F = count_functional(parts[0], lookup(regions, parts[0]), rho);
  } else if (head == "count_squared") {
    expect(1);
    F = count_squared_functional(parts[0], lookup(regions, parts[0]), rho);
  } else if (head == "product_counts") {
    expect(2);
    F = product_counts_functional(parts[0], lookup(regions, parts[0]), parts[1], lookup(regions, parts[1]), rho);
  } else if (head == "exp_count") {
    expect(2);
    F = exp_count_functional(parts[0], lookup(regions, parts[0]), parse_number(parts[1], spec), rho);
  } else if (head == "hawkes_HT") {
    expect(1);
    const auto it = models.find(parts[0]);
    if (it == models.end()) throw ConfigError("unknown hawkes model '" + parts[0] + "'");
    return ResolvedFunctional{hawkes_count_functional(it->second, parts[0]), ground_intensity(it->second),
                              it->second};
  } else {
    throw ConfigError("unknown functional '" + spec + "'");
  }
  validate_annotations(*F, rho, Seed{0xa11a7e});
  return ResolvedFunctional{*F, rho, std::nullopt};
}

Kernel make_kernel(const std::string& spec, const ProductIntensity& rho, const RegionTable& regions) {
  const auto [head, args] = head_args(spec);
  const auto parts = split(args, ',');
  std::optional<Kernel> k;
  if (head == "ind") {
    if (parts.size() != 1) throw ConfigError("kernel 'ind' expects one region");
    k = Kernel::tensor(spec, {Factor{1.0, 0, lookup(regions, parts[0])}});
  } else if (head == "tensor_ind") {
    if (parts.empty() || parts[0].empty()) throw ConfigError("kernel 'tensor_ind' expects regions");
    std::vector<Factor> fs;
    for (const auto& p : parts) fs.push_back(Factor{1.0, 0, lookup(regions, p)});
    if (fs.size() == 1) fs.push_back(fs.front());
    k = Kernel::tensor(spec, std::move(fs));
  } else if (head == "poly") {
    if (parts.empty() || parts.size() > 2) throw ConfigError("kernel 'poly' expects d[,n]");
    const int d = parse_int(parts[0], spec);
    const int n = parts.size() == 2 ? parse_int(parts[1], spec) : 1;
    if (n < 1) throw ConfigError("kernel 'poly' needs n >= 1");
    k = Kernel::tensor(spec, std::vector<Factor>(static_cast<std::size_t>(n), Factor{1.0, d, rho.whole()}));
  } else if (head == "gauss") {
    if (parts.size() != 1) throw ConfigError("kernel 'gauss' expects sigma");
    const double sigma = parse_number(parts[0], spec);
    if (!(sigma > 0.0)) throw ConfigError("kernel 'gauss' needs sigma > 0");
    const double c = 1.0 / (2.0 * sigma * sigma);
    Kernel::Traits traits;
    traits.symmetric = true;
    traits.time_breaks = {0.0, rho.horizon};
    traits.mark_breaks = {0.0, rho.marks.upper()};
    k = Kernel(spec, 2,
               [c](std::span<const Atom> xs) {
                 const double dt = xs[0].t - xs[1].t;
                 const double dx = xs[0].x - xs[1].x;
                 return std::exp(-c * (dt * dt + dx * dx));
               },
               traits);
  } else {
    throw ConfigError("unknown kernel '" + spec + "'");
  }
  validate_kernel(*k, rho, Seed{0xbe4d});
  return *k;
}

void validate_annotations(const Functional& F, const ProductIntensity& rho, Seed seed, int trials) {
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> time(0.0, rho.horizon);
  std::uniform_int_distribution<int> size(0, 3);
  auto fail = [&](const std::string& what, const Configuration& w, double got, double want) {
    nlohmann::json cfg = w;
    throw AnnotationMismatch("functional '" + F.name() + "': " + what + " gives " + format_number(got) +
                             ", brute force " + format_number(want) + " on " + cfg.dump());
  };
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<Atom> atoms;
    const int n = trial < 4 ? trial : size(rng);
    for (int i = 0; i < n; ++i) atoms.push_back({time(rng), rho.marks.sample(rng)});
    const auto omega = make_configuration(atoms, rho.horizon);
    const double value = F(omega);
    const double scale = 1.0 + std::abs(value);

    if (const auto& pk = F.pseudo_kernels(); pk && !omega.empty()) {
      const double got = pk->value(omega.atoms());
      const double want = deterministic_diff(F, omega.atoms(), rho.horizon);
      if (std::abs(got - want) > 1e-9 * (1.0 + std::abs(want))) fail("pseudo-kernel", omega, got, want);
    }
    if (const auto& ch = F.chaos()) {
      ExpansionOptions opts;
      if (ch->exact_order) {
        const auto r = chaotic_sum(F, omega, rho, *ch->exact_order, opts);
        if (r.residuals.back() > 1e-9 * scale) fail("chaos expansion", omega, r.partial_sums.back(), value);
      } else {
        const auto r = chaotic_sum(F, omega, rho, opts.order_budget, opts);
        // Only judge truncations whose last term is already negligible.
        if (std::abs(r.terms.back()) < 1e-10 * scale && r.residuals.back() > 1e-8 * scale) {
          fail("chaos expansion", omega, r.partial_sums.back(), value);
        }
      }
    }
    if (F.projection()) {
      const double res = co_residual(F, omega, rho);
      if (std::abs(res) > 1e-9 * scale) fail("predictable projection", omega, value - res, value);
    }
  }
}

}  // namespace pm
