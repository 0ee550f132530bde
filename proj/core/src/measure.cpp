#include "poisson_malliavin/measure.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "poisson_malliavin/density_expr.hpp"
#include "poisson_malliavin/errors.hpp"
#include "poisson_malliavin/numeric.hpp"

namespace pm {

namespace {

constexpr int kCdfCells = 1024;
constexpr int kCdfNodes = 16;

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

// Sorted piece boundaries of [lo, hi] split at the interior breakpoints.
std::vector<double> pieces(double lo, double hi, std::span<const double> breaks) {
  std::set<double> pts{lo, hi};
  for (double b : breaks) {
    if (b > lo && b < hi) pts.insert(b);
  }
  return {pts.begin(), pts.end()};
}

}  // namespace

Seed derive_seed(Seed base, std::uint64_t index) noexcept {
  return Seed{base.value ^ splitmix64(index)};
}

Rng make_rng(Seed seed) { return Rng(splitmix64(seed.value)); }

MarkSpace MarkSpace::uniform(double upper, std::optional<double> mass) {
  const double m = mass.value_or(upper);
  if (!finite_positive(upper)) throw ConfigError("interval mark space needs M > 0");
  if (!finite_positive(m)) throw ConfigError("mark space total mass must be finite and > 0");
  MarkSpace s;
  s.kind_ = Kind::Interval;
  s.upper_ = upper;
  s.total_mass_ = m;
  return s;
}

MarkSpace MarkSpace::from_expression(double upper, const std::string& expr,
                                     std::optional<double> declared_mass) {
  if (!finite_positive(upper)) throw ConfigError("interval mark space needs M > 0");
  MarkSpace s;
  s.kind_ = Kind::Interval;
  s.upper_ = upper;
  s.expr_ = std::make_shared<const DensityExpression>(DensityExpression::parse(expr));
  const auto& f = *s.expr_;
  s.cdf_grid_.assign(kCdfCells + 1, 0.0);
  const double h = upper / kCdfCells;
  const auto& rule = gauss_legendre(kCdfNodes);
  KahanSum running;
  for (int c = 0; c < kCdfCells; ++c) {
    const double a = c * h;
    for (double node : rule.nodes) {
      const double v = f(a + 0.5 * h * (node + 1.0));
      if (!(v >= 0.0) || !std::isfinite(v)) {
        std::ostringstream os;
        os << "density '" << expr << "' is negative or non-finite near x=" << a;
        throw ConfigError(os.str());
      }
    }
    running += integrate_gl(f, a, a + h, kCdfNodes);
    s.cdf_grid_[c + 1] = running.value();
  }
  s.total_mass_ = s.cdf_grid_.back();
  if (!finite_positive(s.total_mass_)) throw ConfigError("density integrates to a non-positive mass");
  if (declared_mass) {
    if (std::abs(*declared_mass - s.total_mass_) > 1e-8 * std::abs(*declared_mass)) {
      std::ostringstream os;
      os.precision(17);
      os << "density integrates to " << s.total_mass_ << " but mass " << *declared_mass
         << " was declared";
      throw ConfigError(os.str());
    }
  }
  return s;
}

MarkSpace MarkSpace::discrete(std::vector<double> points, std::vector<double> weights) {
  if (points.empty()) throw ConfigError("discrete mark space needs at least one point");
  if (points.size() != weights.size()) throw ConfigError("points and weights differ in length");
  std::vector<std::pair<double, double>> pw;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i])) throw ConfigError("mark points must be finite");
    if (!finite_positive(weights[i])) throw ConfigError("mark weights must be finite and > 0");
    pw.emplace_back(points[i], weights[i]);
  }
  std::sort(pw.begin(), pw.end());
  for (std::size_t i = 1; i < pw.size(); ++i) {
    if (pw[i].first == pw[i - 1].first) throw ConfigError("duplicate mark point");
  }
  MarkSpace s;
  s.kind_ = Kind::Discrete;
  KahanSum total;
  for (const auto& [p, w] : pw) {
    s.points_.push_back(p);
    s.weights_.push_back(w);
    total += w;
    s.cum_weights_.push_back(total.value());
  }
  s.total_mass_ = total.value();
  s.upper_ = s.points_.back();
  return s;
}

double MarkSpace::upper() const noexcept { return upper_; }

bool MarkSpace::contains(double x) const noexcept {
  if (kind_ == Kind::Interval) return x >= 0.0 && x <= upper_;
  return std::binary_search(points_.begin(), points_.end(), x);
}

double MarkSpace::density(double x) const {
  if (kind_ != Kind::Interval) throw InvalidArgument("density() on a discrete mark space");
  if (x < 0.0 || x > upper_) return 0.0;
  if (!expr_) return total_mass_ / upper_;
  return (*expr_)(x);
}

double MarkSpace::cdf(double x) const {
  x = std::clamp(x, 0.0, upper_);
  if (!expr_) return total_mass_ * (x / upper_);
  const double h = upper_ / kCdfCells;
  int cell = std::min(kCdfCells - 1, static_cast<int>(x / h));
  const double a = cell * h;
  return cdf_grid_[cell] + (x > a ? integrate_gl(*expr_, a, x, kCdfNodes) : 0.0);
}

double MarkSpace::mass(const MarkSet& set) const {
  if (set.is_all()) return total_mass_;
  if (kind_ == Kind::Interval) {
    if (const auto* iv = set.as_interval()) {
      const double a = std::clamp(iv->lo, 0.0, upper_);
      const double b = std::clamp(iv->hi, 0.0, upper_);
      if (b <= a) return 0.0;
      return cdf(b) - cdf(a);
    }
    return 0.0;  // finite point sets are null for a density
  }
  KahanSum m;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (set.contains(points_[i])) m += weights_[i];
  }
  return m.value();
}

double MarkSpace::sample(Rng& rng) const {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  if (kind_ == Kind::Discrete) {
    const double target = u01(rng) * total_mass_;
    auto it = std::upper_bound(cum_weights_.begin(), cum_weights_.end(), target);
    if (it == cum_weights_.end()) --it;
    return points_[static_cast<std::size_t>(it - cum_weights_.begin())];
  }
  if (!expr_) return u01(rng) * upper_;
  // inverse CDF: locate the cell, then safeguarded Newton inside it
  const double target = u01(rng) * total_mass_;
  auto it = std::upper_bound(cdf_grid_.begin(), cdf_grid_.end(), target);
  const int cell = std::clamp(static_cast<int>(it - cdf_grid_.begin()) - 1, 0, kCdfCells - 1);
  const double h = upper_ / kCdfCells;
  double lo = cell * h;
  double hi = lo + h;
  double x = 0.5 * (lo + hi);
  for (int iter = 0; iter < 60; ++iter) {
    const double g = cdf(x) - target;
    if (g > 0) hi = x; else lo = x;
    const double d = density(x);
    double next = d > 0 ? x - g / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) < 1e-15 * std::max(1.0, upper_)) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

std::vector<std::pair<double, double>> MarkSpace::quadrature(std::span<const double> breaks,
                                                             int nodes_per_piece) const {
  std::vector<std::pair<double, double>> out;
  if (kind_ == Kind::Discrete) {
    for (std::size_t i = 0; i < points_.size(); ++i) out.emplace_back(points_[i], weights_[i]);
    return out;
  }
  const auto& rule = gauss_legendre(nodes_per_piece);
  const auto p = pieces(0.0, upper_, breaks);
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    const double half = 0.5 * (p[i + 1] - p[i]);
    const double mid = 0.5 * (p[i + 1] + p[i]);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double x = mid + half * rule.nodes[q];
      out.emplace_back(x, half * rule.weights[q] * density(x));
    }
  }
  return out;
}

void MarkSpace::to_json(nlohmann::json& j) const {
  if (kind_ == Kind::Discrete) {
    j = nlohmann::json{{"kind", "discrete"}, {"points", points_}, {"weights", weights_}};
    return;
  }
  j = nlohmann::json{{"kind", "interval"}, {"M", upper_}};
  if (expr_) {
    j["density"] = "expr";
    j["expr"] = expr_->source();
  } else {
    j["density"] = "uniform";
  }
  j["mass"] = total_mass_;
}

MarkSpace MarkSpace::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("mark space must be a JSON object");
  const std::string kind = j.value("kind", "");
  auto reject_unknown = [&](std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : j.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) throw ConfigError("unknown key '" + key + "' in mark space");
    }
  };
  if (kind == "interval") {
    reject_unknown({"kind", "M", "density", "expr", "mass"});
    if (!j.contains("M")) throw ConfigError("interval mark space needs \"M\"");
    const double upper = j.at("M").get<double>();
    std::optional<double> mass;
    if (j.contains("mass")) mass = j.at("mass").get<double>();
    const std::string density = j.value("density", "uniform");
    if (density == "uniform") {
      if (j.contains("expr")) throw ConfigError("\"expr\" given with uniform density");
      return uniform(upper, mass);
    }
    if (density == "expr") {
      if (!j.contains("expr")) throw ConfigError("density \"expr\" needs an \"expr\" string");
      return from_expression(upper, j.at("expr").get<std::string>(), mass);
    }
    throw ConfigError("density must be \"uniform\" or \"expr\"");
  }
  if (kind == "discrete") {
    reject_unknown({"kind", "points", "weights"});
    if (!j.contains("points") || !j.contains("weights")) {
      throw ConfigError("discrete mark space needs \"points\" and \"weights\"");
    }
    return discrete(j.at("points").get<std::vector<double>>(), j.at("weights").get<std::vector<double>>());
  }
  throw ConfigError("mark space kind must be \"interval\" or \"discrete\"");
}

double ProductIntensity::mass(const Region& r) const {
  const Interval t = r.time.intersect(Interval{0.0, horizon, true});
  return t.length() * marks.mass(r.marks);
}

ProductIntensity make_intensity(double horizon, MarkSpace marks) {
  if (!finite_positive(horizon)) throw ConfigError("horizon T must be finite and > 0");
  return ProductIntensity{horizon, std::move(marks)};
}

std::vector<Atom> sample_poisson_atoms(const ProductIntensity& rho, double t_lo, double t_hi, Rng& rng) {
  std::vector<Atom> atoms;
  const double len = t_hi - t_lo;
  if (!(len > 0.0)) return atoms;
  std::poisson_distribution<long> count(len * rho.marks.total_mass());
  const long k = count(rng);
  std::uniform_real_distribution<double> time(t_lo, t_hi);
  atoms.reserve(static_cast<std::size_t>(k));
  for (long i = 0; i < k; ++i) {
    const double t = time(rng);
    const double x = rho.marks.sample(rng);
    atoms.push_back({t, x});
  }
  return atoms;
}

Configuration sample_poisson(const ProductIntensity& rho, Rng& rng) {
  return make_configuration(sample_poisson_atoms(rho, 0.0, rho.horizon, rng), rho.horizon);
}

Configuration sample_poisson(const ProductIntensity& rho, Seed seed) {
  Rng rng = make_rng(seed);
  return sample_poisson(rho, rng);
}

std::vector<WeightedAtom> space_quadrature(const ProductIntensity& rho,
                                           std::span<const double> time_breaks,
                                           std::span<const double> mark_breaks, int nodes_per_piece) {
  const auto marks = rho.marks.quadrature(mark_breaks, nodes_per_piece);
  const auto& rule = gauss_legendre(nodes_per_piece);
  const auto tp = pieces(0.0, rho.horizon, time_breaks);
  std::vector<WeightedAtom> out;
  out.reserve((tp.size() - 1) * rule.nodes.size() * marks.size());
  for (std::size_t i = 0; i + 1 < tp.size(); ++i) {
    const double half = 0.5 * (tp[i + 1] - tp[i]);
    const double mid = 0.5 * (tp[i + 1] + tp[i]);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double t = mid + half * rule.nodes[q];
      const double wt = half * rule.weights[q];
      for (const auto& [x, wx] : marks) out.push_back({{t, x}, wt * wx});
    }
  }
  return out;
}

void to_json(nlohmann::json& j, const ProductIntensity& rho) {
  nlohmann::json marks;
  rho.marks.to_json(marks);
  j = nlohmann::json{{"T", rho.horizon}, {"marks", std::move(marks)}};
}

}  // namespace pm
