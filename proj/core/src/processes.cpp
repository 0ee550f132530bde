#include "poisson_malliavin/processes.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "poisson_malliavin/errors.hpp"

namespace pm {

namespace {

// Incremental intensity along a time-ordered sweep. Events are added in
// nondecreasing time order, and intensity_at(t) needs t >= the last event.
class Sweep {
 public:
  explicit Sweep(const HawkesModel& m) : m_(m) {}

  double intensity_at(double t) const {
    if (const auto* e = std::get_if<ExponentialKernel>(&m_.kernel)) {
      if (events_.empty()) return m_.mu;
      // state_ holds the excitation just after the last event time.
      return m_.mu + state_ * std::exp(-e->beta * (t - last_));
    }
    const auto& b = std::get<BoxKernel>(m_.kernel);
    const auto lo = std::lower_bound(events_.begin(), events_.end(), t - b.width);
    const auto hi = std::lower_bound(events_.begin(), events_.end(), t);
    return m_.mu + b.height * static_cast<double>(hi - lo);
  }

  void add_events(double t, std::size_t n) {
    if (n == 0) return;
    if (const auto* e = std::get_if<ExponentialKernel>(&m_.kernel)) {
      const double decayed = events_.empty() ? 0.0 : state_ * std::exp(-e->beta * (t - last_));
      state_ = decayed + e->alpha * static_cast<double>(n);
      last_ = t;
    }
    events_.insert(events_.end(), n, t);
  }

  // Right limit of the intensity just after the latest events.
  double intensity_after_last() const {
    if (events_.empty()) return m_.mu;
    if (std::holds_alternative<ExponentialKernel>(m_.kernel)) return m_.mu + state_;
    const auto& b = std::get<BoxKernel>(m_.kernel);
    const double t = events_.back();
    const auto lo = std::lower_bound(events_.begin(), events_.end(), t - b.width);
    return m_.mu + b.height * static_cast<double>(events_.end() - lo);
  }

  const std::vector<double>& events() const noexcept { return events_; }

 private:
  const HawkesModel& m_;
  std::vector<double> events_;
  double state_ = 0.0;
  double last_ = 0.0;
};

ThinnedPath sweep(const HawkesModel& m, const Configuration& ground, Sweep& s) {
  ThinnedPath p;
  p.ground = ground;
  p.max_intensity = m.mu;
  const auto atoms = ground.atoms();
  std::size_t i = 0;
  while (i < atoms.size()) {
    const double t = atoms[i].t;
    const double lambda = s.intensity_at(t);
    p.max_intensity = std::max(p.max_intensity, lambda);
    std::size_t accepted = 0;
    for (; i < atoms.size() && atoms[i].t == t; ++i) {
      if (atoms[i].x <= lambda) ++accepted;
    }
    s.add_events(t, accepted);
    if (accepted > 0) p.max_intensity = std::max(p.max_intensity, s.intensity_after_last());
  }
  p.overflow = p.max_intensity > m.theta_cap;
  p.accepted = s.events();
  return p;
}

double exp_mean_count(double mu, double alpha, double beta, double T) {
  const double r = beta - alpha;
  if (r == 0.0) return mu * (T + 0.5 * beta * T * T);
  // m(t) = mu beta / r - mu alpha / r exp(-r t)
  return mu * beta / r * T - mu * alpha / r * (-std::expm1(-r * T)) / r;
}

// m' = h (m(t) - m(t - w) 1{t >= w}), m(0) = mu, by the trapezoidal rule on
// a grid aligned with the delay; returns int_0^T m.
double box_mean_count(double mu, double h, double w, double T) {
  const std::size_t per_width = 2000;
  const double dt = w / static_cast<double>(per_width);
  const auto steps = static_cast<std::size_t>(std::ceil(T / dt));
  const double step = T / static_cast<double>(steps);
  const double lag = w / step;  // grid offset of the delay, generally fractional
  std::vector<double> m(steps + 1);
  m[0] = mu;
  auto delayed = [&](std::size_t i) {
    const double pos = static_cast<double>(i) - lag;
    if (pos < 0.0) return 0.0;
    const auto k = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(k);
    return k + 1 <= i ? m[k] * (1.0 - frac) + (frac > 0.0 ? m[k + 1] * frac : 0.0) : m[k];
  };
  for (std::size_t i = 0; i < steps; ++i) {
    const double fi = h * (m[i] - delayed(i));
    const double d1 = delayed(i + 1);  // only uses m up to index i when lag >= 1 step
    // m1 = m_i + step/2 (fi + h (m1 - d1))
    m[i + 1] = (m[i] + 0.5 * step * (fi - h * d1)) / (1.0 - 0.5 * step * h);
  }
  double s = 0.0;
  for (std::size_t i = 0; i < steps; ++i) s += 0.5 * step * (m[i] + m[i + 1]);
  return s;
}

}  // namespace

double branching_ratio(const HawkesModel& m) {
  if (const auto* e = std::get_if<ExponentialKernel>(&m.kernel)) return e->alpha / e->beta;
  const auto& b = std::get<BoxKernel>(m.kernel);
  return b.height * b.width;
}

std::vector<std::string> validate(HawkesModel& m, bool cap_given) {
  std::vector<std::string> warnings;
  if (!(m.mu > 0.0) || !std::isfinite(m.mu)) throw InvalidArgument("hawkes: mu must be positive");
  if (!(m.horizon > 0.0) || !std::isfinite(m.horizon)) throw InvalidArgument("hawkes: T must be positive");
  if (const auto* e = std::get_if<ExponentialKernel>(&m.kernel)) {
    if (e->alpha < 0.0 || !(e->beta > 0.0)) throw InvalidArgument("hawkes: need alpha >= 0 and beta > 0");
  } else {
    const auto& b = std::get<BoxKernel>(m.kernel);
    if (b.height < 0.0 || !(b.width > 0.0)) throw InvalidArgument("hawkes: need height >= 0 and width > 0");
  }
  const double kappa = branching_ratio(m);
  if (kappa >= 1.0) warnings.push_back("branching ratio " + std::to_string(kappa) + " >= 1: unstable process");
  if (!cap_given) {
    if (kappa >= 1.0) throw InvalidArgument("hawkes: theta_cap is required when the branching ratio is >= 1");
    m.theta_cap = 10.0 * m.mu / (1.0 - kappa);
  }
  if (!(m.theta_cap > m.mu)) throw InvalidArgument("hawkes: theta_cap must exceed mu");
  return warnings;
}

HawkesModel hawkes_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("hawkes model must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "mu" && key != "kernel" && key != "T" && key != "theta_cap") {
      throw ConfigError("hawkes model: unknown key '" + key + "'");
    }
  }
  HawkesModel m;
  m.mu = j.value("mu", m.mu);
  m.horizon = j.value("T", m.horizon);
  if (j.contains("kernel")) {
    const auto& k = j.at("kernel");
    const std::string type = k.value("type", std::string("exp"));
    if (type == "exp") {
      for (const auto& [key, _] : k.items()) {
        if (key != "type" && key != "alpha" && key != "beta") throw ConfigError("exp kernel: unknown key '" + key + "'");
      }
      m.kernel = ExponentialKernel{k.value("alpha", 0.5), k.value("beta", 1.0)};
    } else if (type == "box") {
      for (const auto& [key, _] : k.items()) {
        if (key != "type" && key != "height" && key != "width") {
          throw ConfigError("box kernel: unknown key '" + key + "'");
        }
      }
      m.kernel = BoxKernel{k.value("height", 0.5), k.value("width", 1.0)};
    } else {
      throw ConfigError("hawkes kernel type must be 'exp' or 'box'");
    }
  }
  const bool cap_given = j.contains("theta_cap");
  if (cap_given) m.theta_cap = j.at("theta_cap").get<double>();
  try {
    validate(m, cap_given);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return m;
}

void to_json(nlohmann::json& j, const HawkesModel& m) {
  nlohmann::json k;
  if (const auto* e = std::get_if<ExponentialKernel>(&m.kernel)) {
    k = {{"type", "exp"}, {"alpha", e->alpha}, {"beta", e->beta}};
  } else {
    const auto& b = std::get<BoxKernel>(m.kernel);
    k = {{"type", "box"}, {"height", b.height}, {"width", b.width}};
  }
  j = {{"mu", m.mu}, {"kernel", k}, {"T", m.horizon}, {"theta_cap", m.theta_cap}};
}

double hawkes_intensity(const HawkesModel& m, std::span<const double> events, double t) {
  double lambda = m.mu;
  for (double ti : events) {
    if (!(ti < t)) continue;
    const double s = t - ti;
    if (const auto* e = std::get_if<ExponentialKernel>(&m.kernel)) {
      lambda += e->alpha * std::exp(-e->beta * s);
    } else {
      const auto& b = std::get<BoxKernel>(m.kernel);
      if (s <= b.width) lambda += b.height;
    }
  }
  return lambda;
}

ProductIntensity ground_intensity(const HawkesModel& m) {
  return make_intensity(m.horizon, MarkSpace::uniform(m.theta_cap));
}

ThinnedPath thin(const HawkesModel& m, const Configuration& ground) {
  Sweep s(m);
  return sweep(m, ground, s);
}

ThinnedPath simulate_hawkes(const HawkesModel& m, Seed seed) {
  return thin(m, sample_poisson(ground_intensity(m), seed));
}

double hawkes_pco_integrand(const HawkesModel& m, const Configuration& ground, const Atom& a) {
  if (a.x > m.theta_cap) return 0.0;
  Sweep s(m);
  sweep(m, truncate_before(ground, a.t), s);
  return a.x <= s.intensity_at(a.t) ? 1.0 : 0.0;
}

Functional hawkes_count_functional(const HawkesModel& m, const std::string& name) {
  FunctionalShape shape;
  shape.time_breaks = {0.0, m.horizon};
  shape.mark_breaks = {0.0, m.theta_cap};
  shape.piecewise_degree = -1;
  return Functional(
      "hawkes_HT:" + name,
      [m](const Configuration& ground) { return static_cast<double>(thin(m, ground).accepted.size()); }, shape);
}

double expected_count(const HawkesModel& m) {
  if (const auto* e = std::get_if<ExponentialKernel>(&m.kernel)) {
    return exp_mean_count(m.mu, e->alpha, e->beta, m.horizon);
  }
  const auto& b = std::get<BoxKernel>(m.kernel);
  return box_mean_count(m.mu, b.height, b.width, m.horizon);
}

}  // namespace pm
