#include "poisson_malliavin/kernel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>

#include "poisson_malliavin/errors.hpp"
#include "poisson_malliavin/numeric.hpp"

namespace pm {

namespace {

double ipow(double base, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

void append_breaks(const Region& r, std::vector<double>& tb, std::vector<double>& mb) {
  tb.push_back(r.time.lo);
  tb.push_back(r.time.hi);
  if (const auto* iv = r.marks.as_interval()) {
    mb.push_back(iv->lo);
    mb.push_back(iv->hi);
  }
}

void normalize(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

Kernel::Traits merged_traits(const std::vector<const Kernel*>& ks, bool symmetric, bool add_degrees) {
  Kernel::Traits t;
  t.symmetric = symmetric;
  int deg = 0;
  for (const Kernel* k : ks) {
    const auto& kt = k->traits();
    t.time_breaks.insert(t.time_breaks.end(), kt.time_breaks.begin(), kt.time_breaks.end());
    t.mark_breaks.insert(t.mark_breaks.end(), kt.mark_breaks.begin(), kt.mark_breaks.end());
    if (deg < 0 || kt.piecewise_degree < 0) {
      deg = -1;
    } else {
      deg = add_degrees ? deg + kt.piecewise_degree : std::max(deg, kt.piecewise_degree);
    }
  }
  t.piecewise_degree = deg;
  normalize(t.time_breaks);
  normalize(t.mark_breaks);
  return t;
}

// Full argument tuple from anchors (at set mask bits) and free values.
void scatter(PositionMask anchored, std::span<const Atom> anchors, std::span<const Atom> free_atoms,
             std::vector<Atom>& out) {
  const int n = static_cast<int>(anchors.size() + free_atoms.size());
  out.resize(static_cast<std::size_t>(n));
  std::size_t ia = 0;
  std::size_t ifree = 0;
  for (int i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] =
        (anchored >> i) & 1u ? anchors[ia++] : free_atoms[ifree++];
  }
}

Integral monte_carlo_partial(const Kernel& f, const ProductIntensity& rho, PositionMask anchored,
                             std::span<const Atom> anchors, int free_dims, const IntegrationOptions& opts) {
  std::uint64_t tag = splitmix64(anchored);
  for (const auto& a : anchors) {
    tag = splitmix64(tag ^ std::bit_cast<std::uint64_t>(a.t));
    tag = splitmix64(tag ^ std::bit_cast<std::uint64_t>(a.x));
  }
  Rng rng = make_rng(derive_seed(opts.seed, tag));
  std::uniform_real_distribution<double> time(0.0, rho.horizon);
  const double scale = std::pow(rho.total_mass(), free_dims);
  std::vector<double> values(opts.mc_samples);
  std::vector<Atom> free_atoms(static_cast<std::size_t>(free_dims));
  std::vector<Atom> tuple;
  for (auto& v : values) {
    for (auto& a : free_atoms) {
      a.t = time(rng);
      a.x = rho.marks.sample(rng);
    }
    scatter(anchored, anchors, free_atoms, tuple);
    v = scale * f(tuple);
  }
  const auto ms = mean_and_stderr(values);
  return {ms.mean, ms.std_error};
}

}  // namespace

double Factor::operator()(const Atom& a) const noexcept {
  return region.contains(a) ? coefficient * ipow(a.t, degree) : 0.0;
}

double Factor::integral(const ProductIntensity& rho) const {
  const Interval t = region.time.intersect(Interval{0.0, rho.horizon, true});
  if (t.length() <= 0.0) return 0.0;
  const int p = degree + 1;
  const double time_part = (ipow(t.hi, p) - ipow(t.lo, p)) / p;
  return coefficient * time_part * rho.marks.mass(region.marks);
}

Factor Factor::times(const Factor& o) const {
  return Factor{coefficient * o.coefficient, degree + o.degree, region.intersect(o.region)};
}

struct Kernel::TotalCache {
  std::mutex mu;
  std::map<std::string, Integral> values;
};

Kernel::Kernel(std::string name, int order, EvalFn eval, Traits traits, PartialFn partial)
    : name_(std::move(name)),
      order_(order),
      eval_(std::move(eval)),
      traits_(std::move(traits)),
      partial_(std::move(partial)),
      totals_(std::make_shared<TotalCache>()) {
  if (order_ < 1 || order_ > 30) throw InvalidArgument("kernel order must be in [1, 30]");
  if (!eval_) throw InvalidArgument("kernel needs an evaluation function");
  normalize(traits_.time_breaks);
  normalize(traits_.mark_breaks);
}

Kernel Kernel::tensor(std::string name, std::vector<Factor> factors, double scale) {
  if (factors.empty()) throw InvalidArgument("tensor kernel needs at least one factor");
  Traits traits;
  traits.symmetric = std::all_of(factors.begin(), factors.end(),
                                 [&](const Factor& f) { return f == factors.front(); });
  traits.piecewise_degree = 0;
  for (const auto& f : factors) {
    append_breaks(f.region, traits.time_breaks, traits.mark_breaks);
    traits.piecewise_degree = std::max(traits.piecewise_degree, f.degree);
  }
  auto eval = [factors, scale](std::span<const Atom> xs) {
    double v = scale;
    for (std::size_t i = 0; i < factors.size(); ++i) {
      v *= factors[i](xs[i]);
      if (v == 0.0) return 0.0;
    }
    return v;
  };
  auto partial = [factors, scale](const ProductIntensity& rho, PositionMask anchored,
                                  std::span<const Atom> anchors) {
    double v = scale;
    std::size_t ia = 0;
    for (std::size_t i = 0; i < factors.size(); ++i) {
      v *= (anchored >> i) & 1u ? factors[i](anchors[ia++]) : factors[i].integral(rho);
    }
    return v;
  };
  const int n = static_cast<int>(factors.size());
  Kernel k(std::move(name), n, std::move(eval), std::move(traits), std::move(partial));
  k.factors_ = std::move(factors);
  k.scale_ = scale;
  return k;
}

IntegrationCapability Kernel::capability() const noexcept {
  if (partial_) return IntegrationCapability::ClosedForm;
  if (order_ <= 3) return IntegrationCapability::Quadrature;
  return IntegrationCapability::MonteCarlo;
}

double Kernel::closed_partial(const ProductIntensity& rho, PositionMask anchored,
                              std::span<const Atom> anchors) const {
  if (!partial_) throw IntegrationUnavailable("kernel '" + name_ + "' has no closed-form integrals");
  return partial_(rho, anchored, anchors);
}

Kernel Kernel::renamed(std::string name) const {
  Kernel k = *this;
  k.name_ = std::move(name);
  return k;
}

Integral partial_integral_numeric(const Kernel& f, const ProductIntensity& rho, PositionMask anchored,
                                  std::span<const Atom> anchors, const IntegrationOptions& opts) {
  const int n = f.order();
  const int k = std::popcount(anchored);
  if (static_cast<std::size_t>(k) != anchors.size() || (anchored >> n) != 0) {
    throw InvalidArgument("anchor mask does not match anchors for kernel '" + f.name() + "'");
  }
  const int d = n - k;
  std::vector<Atom> tuple;
  if (d == 0) {
    scatter(anchored, anchors, {}, tuple);
    return {f(tuple), 0.0};
  }
  auto unsupported = [&](const std::string& why) -> Integral {
    if (opts.allow_monte_carlo) return monte_carlo_partial(f, rho, anchored, anchors, d, opts);
    std::ostringstream os;
    os << "cannot integrate " << d << " free arguments of kernel '" << f.name() << "': " << why;
    throw UnsupportedDimension(os.str());
  };
  if (d > 3) return unsupported("quadrature limited to 3 dimensions");

  const int deg = f.traits().piecewise_degree;
  int g = opts.nodes;
  if (deg >= 0 && !(rho.marks.kind() == MarkSpace::Kind::Interval && !rho.marks.is_uniform())) {
    g = std::min(opts.nodes, std::max(1, (deg + 2) / 2));
  }
  auto rule = space_quadrature(rho, f.traits().time_breaks, f.traits().mark_breaks, g);
  auto points_needed = [&](std::size_t p) { return std::pow(static_cast<double>(p), d); };
  while (points_needed(rule.size()) > static_cast<double>(opts.max_points) && g > 1) {
    --g;
    rule = space_quadrature(rho, f.traits().time_breaks, f.traits().mark_breaks, g);
  }
  if (points_needed(rule.size()) > static_cast<double>(opts.max_points)) {
    return unsupported("tensor rule exceeds the point budget");
  }

  const std::size_t p = rule.size();
  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
  std::vector<Atom> free_atoms(static_cast<std::size_t>(d));
  KahanSum acc;
  for (;;) {
    double w = 1.0;
    for (int i = 0; i < d; ++i) {
      const auto& wa = rule[idx[static_cast<std::size_t>(i)]];
      free_atoms[static_cast<std::size_t>(i)] = wa.atom;
      w *= wa.weight;
    }
    if (w != 0.0) {
      scatter(anchored, anchors, free_atoms, tuple);
      acc += w * f(tuple);
    }
    int pos = 0;
    while (pos < d && ++idx[static_cast<std::size_t>(pos)] == p) idx[static_cast<std::size_t>(pos++)] = 0;
    if (pos == d) break;
  }
  return {acc.value(), 0.0};
}

Integral partial_integral(const Kernel& f, const ProductIntensity& rho, PositionMask anchored,
                          std::span<const Atom> anchors, const IntegrationOptions& opts) {
  if (f.has_closed_form()) return {f.closed_partial(rho, anchored, anchors), 0.0};
  if (anchored != 0u || !f.totals_) return partial_integral_numeric(f, rho, anchored, anchors, opts);
  nlohmann::json key;
  to_json(key, rho);
  key["opts"] = {opts.nodes, opts.max_points, opts.allow_monte_carlo, opts.mc_samples, opts.seed.value};
  const std::string k = key.dump();
  {
    std::lock_guard lock(f.totals_->mu);
    if (auto it = f.totals_->values.find(k); it != f.totals_->values.end()) return it->second;
  }
  const Integral v = partial_integral_numeric(f, rho, anchored, anchors, opts);
  std::lock_guard lock(f.totals_->mu);
  f.totals_->values.emplace(k, v);
  return v;
}

Integral rho_integral(const Kernel& f, const ProductIntensity& rho, const IntegrationOptions& opts) {
  return partial_integral(f, rho, 0u, {}, opts);
}

Kernel section(const Kernel& f, const Atom& a) {
  if (f.order() < 2) throw InvalidArgument("section needs a kernel of order >= 2");
  auto eval = [f, a](std::span<const Atom> xs) {
    std::vector<Atom> full;
    full.reserve(xs.size() + 1);
    full.push_back(a);
    full.insert(full.end(), xs.begin(), xs.end());
    return f(full);
  };
  Kernel::PartialFn partial;
  if (f.has_closed_form()) {
    partial = [f, a](const ProductIntensity& rho, PositionMask anchored, std::span<const Atom> anchors) {
      std::vector<Atom> full;
      full.reserve(anchors.size() + 1);
      full.push_back(a);
      full.insert(full.end(), anchors.begin(), anchors.end());
      return f.closed_partial(rho, (anchored << 1) | 1u, full);
    };
  }
  std::ostringstream name;
  name << f.name() << "((" << a.t << "," << a.x << "),.)";
  if (const auto& fs = f.factors()) {
    std::vector<Factor> rest(fs->begin() + 1, fs->end());
    return Kernel::tensor(name.str(), std::move(rest), f.tensor_scale() * (*fs)[0](a));
  }
  return Kernel(name.str(), f.order() - 1, std::move(eval), f.traits(), std::move(partial));
}

Kernel linear_combination(std::string name, std::vector<std::pair<double, Kernel>> terms) {
  if (terms.empty()) throw InvalidArgument("linear combination of no kernels");
  const int n = terms.front().second.order();
  std::vector<const Kernel*> ks;
  bool symmetric = true;
  bool closed = true;
  for (const auto& [c, k] : terms) {
    if (k.order() != n) throw InvalidArgument("linear combination mixes kernel orders");
    ks.push_back(&k);
    symmetric = symmetric && k.symmetric();
    closed = closed && k.has_closed_form();
  }
  auto traits = merged_traits(ks, symmetric, false);
  auto eval = [terms](std::span<const Atom> xs) {
    KahanSum s;
    for (const auto& [c, k] : terms) s += c * k(xs);
    return s.value();
  };
  Kernel::PartialFn partial;
  if (closed) {
    partial = [terms](const ProductIntensity& rho, PositionMask anchored, std::span<const Atom> anchors) {
      KahanSum s;
      for (const auto& [c, k] : terms) s += c * k.closed_partial(rho, anchored, anchors);
      return s.value();
    };
  }
  return Kernel(std::move(name), n, std::move(eval), std::move(traits), std::move(partial));
}

Kernel scaled(const Kernel& f, double c) {
  std::ostringstream name;
  name << c << "*" << f.name();
  if (const auto& fs = f.factors()) return Kernel::tensor(name.str(), *fs, c * f.tensor_scale());
  return linear_combination(name.str(), {{c, f}});
}

Kernel pointwise_product(const Kernel& f, const Kernel& g) {
  if (f.order() != g.order()) throw InvalidArgument("pointwise product of kernels of different order");
  const std::string name = "(" + f.name() + ")*(" + g.name() + ")";
  if (f.factors() && g.factors()) {
    std::vector<Factor> prod;
    for (std::size_t i = 0; i < f.factors()->size(); ++i) {
      prod.push_back((*f.factors())[i].times((*g.factors())[i]));
    }
    return Kernel::tensor(name, std::move(prod), f.tensor_scale() * g.tensor_scale());
  }
  auto traits = merged_traits({&f, &g}, f.symmetric() && g.symmetric(), true);
  return Kernel(name, f.order(), [f, g](std::span<const Atom> xs) { return f(xs) * g(xs); },
                std::move(traits));
}

Integral l2_norm_squared(const Kernel& f, const ProductIntensity& rho, const IntegrationOptions& opts) {
  return rho_integral(pointwise_product(f, f), rho, opts);
}

void validate_kernel(const Kernel& f, const ProductIntensity& rho, Seed seed, int trials) {
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> time(0.0, rho.horizon);
  const int n = f.order();
  std::vector<Atom> tuple(static_cast<std::size_t>(n));
  auto close = [](double a, double b, double rel) {
    return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1e-4});
  };
  for (int trial = 0; trial < trials; ++trial) {
    for (auto& a : tuple) {
      a.t = time(rng);
      a.x = rho.marks.sample(rng);
    }
    if (f.symmetric() && n <= 6) {
      auto perm = tuple;
      std::sort(perm.begin(), perm.end());
      const double ref = f(tuple);
      do {
        if (!close(f(perm), ref, 1e-12)) {
          throw AnnotationMismatch("kernel '" + f.name() + "' is flagged symmetric but is not");
        }
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
    if (f.has_closed_form() && n <= 3) {
      for (PositionMask mask = 0; mask < (1u << n); ++mask) {
        std::vector<Atom> anchors;
        for (int i = 0; i < n; ++i) {
          if ((mask >> i) & 1u) anchors.push_back(tuple[static_cast<std::size_t>(i)]);
        }
        const double closed = f.closed_partial(rho, mask, anchors);
        double numeric = 0.0;
        try {
          numeric = partial_integral_numeric(f, rho, mask, anchors).value;
        } catch (const UnsupportedDimension&) {
          continue;
        }
        if (!close(closed, numeric, 1e-8)) {
          std::ostringstream os;
          os.precision(17);
          os << "kernel '" << f.name() << "': closed-form partial integral " << closed
             << " disagrees with quadrature " << numeric << " (mask " << mask << ")";
          throw AnnotationMismatch(os.str());
        }
      }
    }
  }
}

}  // namespace pm
