#include "poisson_malliavin/functional.hpp"

#include <cmath>
#include <sstream>

#include "poisson_malliavin/errors.hpp"
#include "poisson_malliavin/numeric.hpp"

namespace pm {

namespace {

FunctionalShape region_shape(std::initializer_list<const Region*> regions) {
  FunctionalShape s;
  s.piecewise_degree = 0;
  for (const Region* r : regions) {
    s.time_breaks.push_back(r->time.lo);
    s.time_breaks.push_back(r->time.hi);
    if (const auto* iv = r->marks.as_interval()) {
      s.mark_breaks.push_back(iv->lo);
      s.mark_breaks.push_back(iv->hi);
    }
  }
  return s;
}

double indicator(const Region& r, const Atom& a) { return r.contains(a) ? 1.0 : 0.0; }

// int 1_A(t, x) pi(dx)
double mark_mass_at(const ProductIntensity& rho, const Region& a, double t) {
  return a.time.contains(t) ? rho.marks.mass(a.marks) : 0.0;
}

Kernel indicator_tensor(const std::string& name, const Region& a, int n, double scale) {
  return Kernel::tensor(name, std::vector<Factor>(static_cast<std::size_t>(n), Factor{1.0, 0, a}), scale);
}

}  // namespace

Functional::Functional(std::string name, EvalFn eval, FunctionalShape shape)
    : name_(std::move(name)), eval_(std::move(eval)), shape_(std::move(shape)) {
  if (!eval_) throw InvalidArgument("functional needs an evaluation map");
}

Functional Functional::with(PseudoKernelAnnotation a) const {
  Functional f = *this;
  f.pseudo_ = std::move(a);
  return f;
}

Functional Functional::with(ChaosAnnotation a) const {
  Functional f = *this;
  f.chaos_ = std::move(a);
  return f;
}

Functional Functional::with(ProjectionAnnotation a) const {
  Functional f = *this;
  f.projection_ = std::move(a);
  return f;
}

Functional Functional::stripped() const { return Functional(name_, eval_, shape_); }

double future_mass(const ProductIntensity& rho, const Region& a, double t) {
  return rho.mass(Region{a.time.intersect(Interval{t, rho.horizon, true}), a.marks});
}

Functional constant_functional(double c, const ProductIntensity&) {
  std::ostringstream name;
  name << "const:" << c;
  FunctionalShape shape;
  shape.piecewise_degree = 0;
  return Functional(name.str(), [c](const Configuration&) { return c; }, shape)
      .with(PseudoKernelAnnotation{[](std::span<const Atom>) { return 0.0; }, 0})
      .with(ChaosAnnotation{c, [](int) { return std::optional<Kernel>{}; }, 0})
      .with(ProjectionAnnotation{c, [](const Configuration&, const Atom&) { return 0.0; },
                                 [](const Configuration&, double) { return 0.0; }, {}});
}

Functional count_functional(const std::string& region_name, const Region& a, const ProductIntensity& rho) {
  const double mass = rho.mass(a);
  return Functional("count:" + region_name,
                    [a](const Configuration& w) { return static_cast<double>(count(w, a)); },
                    region_shape({&a}))
      .with(PseudoKernelAnnotation{
          [a](std::span<const Atom> xs) { return xs.size() == 1 ? indicator(a, xs[0]) : 0.0; }, 1})
      .with(ChaosAnnotation{mass,
                            [a, region_name](int n) -> std::optional<Kernel> {
                              if (n != 1) return std::nullopt;
                              return indicator_tensor("ind:" + region_name, a, 1, 1.0);
                            },
                            1})
      .with(ProjectionAnnotation{
          mass, [a](const Configuration&, const Atom& x) { return indicator(a, x); },
          [a, rho](const Configuration&, double t) { return mark_mass_at(rho, a, t); },
          {a.time.lo, a.time.hi}});
}

Functional count_squared_functional(const std::string& region_name, const Region& a,
                                    const ProductIntensity& rho) {
  const double mass = rho.mass(a);
  auto eval = [a](const Configuration& w) {
    const double k = static_cast<double>(count(w, a));
    return k * k;
  };
  // T_1 = 1_A, T_2 = 2 1_A (x) 1_A
  auto pseudo = [a](std::span<const Atom> xs) {
    if (xs.size() == 1) return indicator(a, xs[0]);
    if (xs.size() == 2) return 2.0 * indicator(a, xs[0]) * indicator(a, xs[1]);
    return 0.0;
  };
  // E[N^2] = m + m^2, E[D F] = (2m + 1) 1_A, E[D^2 F] = 2 1_A (x) 1_A
  auto chaos = [a, mass, region_name](int n) -> std::optional<Kernel> {
    if (n == 1) return indicator_tensor("T1[count_squared:" + region_name + "]", a, 1, 2.0 * mass + 1.0);
    if (n == 2) return indicator_tensor("T2[count_squared:" + region_name + "]", a, 2, 2.0);
    return std::nullopt;
  };
  // E_{t-}[N(A)] = N_{t-}(A) + rho(A on [t, T])
  auto proj = [a, rho](const Configuration& w, const Atom& x) {
    if (!a.contains(x)) return 0.0;
    const double past = static_cast<double>(count_before(w, a, x.t));
    return 2.0 * (past + future_mass(rho, a, x.t)) + 1.0;
  };
  auto proj_marks = [a, rho](const Configuration& w, double t) {
    const double m = mark_mass_at(rho, a, t);
    if (m == 0.0) return 0.0;
    const double past = static_cast<double>(count_before(w, a, t));
    return m * (2.0 * (past + future_mass(rho, a, t)) + 1.0);
  };
  return Functional("count_squared:" + region_name, eval, region_shape({&a}))
      .with(PseudoKernelAnnotation{pseudo, 2})
      .with(ChaosAnnotation{mass + mass * mass, chaos, 2})
      .with(ProjectionAnnotation{mass + mass * mass, proj, proj_marks, {a.time.lo, a.time.hi}});
}

Functional product_counts_functional(const std::string& a_name, const Region& a, const std::string& b_name,
                                     const Region& b, const ProductIntensity& rho) {
  const Region ab = a.intersect(b);
  const double ma = rho.mass(a);
  const double mb = rho.mass(b);
  const double mab = rho.mass(ab);
  const std::string name = "product_counts:" + a_name + "," + b_name;
  auto eval = [a, b](const Configuration& w) {
    return static_cast<double>(count(w, a)) * static_cast<double>(count(w, b));
  };
  auto pseudo = [a, b](std::span<const Atom> xs) {
    if (xs.size() == 1) return indicator(a, xs[0]) * indicator(b, xs[0]);
    if (xs.size() == 2) {
      return indicator(a, xs[0]) * indicator(b, xs[1]) + indicator(a, xs[1]) * indicator(b, xs[0]);
    }
    return 0.0;
  };
  auto chaos = [a, b, ab, ma, mb, name](int n) -> std::optional<Kernel> {
    if (n == 1) {
      return linear_combination("T1[" + name + "]", {{mb, indicator_tensor("ind", a, 1, 1.0)},
                                                      {ma, indicator_tensor("ind", b, 1, 1.0)},
                                                      {1.0, indicator_tensor("ind", ab, 1, 1.0)}});
    }
    if (n == 2) {
      return linear_combination(
          "T2[" + name + "]",
          {{1.0, Kernel::tensor("AxB", {Factor{1.0, 0, a}, Factor{1.0, 0, b}})},
           {1.0, Kernel::tensor("BxA", {Factor{1.0, 0, b}, Factor{1.0, 0, a}})}});
    }
    return std::nullopt;
  };
  auto proj = [a, b, rho](const Configuration& w, const Atom& x) {
    double v = 0.0;
    if (b.contains(x)) v += static_cast<double>(count_before(w, a, x.t)) + future_mass(rho, a, x.t);
    if (a.contains(x)) v += static_cast<double>(count_before(w, b, x.t)) + future_mass(rho, b, x.t);
    if (a.contains(x) && b.contains(x)) v += 1.0;
    return v;
  };
  auto proj_marks = [a, b, ab, rho](const Configuration& w, double t) {
    double v = 0.0;
    if (const double m = mark_mass_at(rho, b, t); m != 0.0) {
      v += m * (static_cast<double>(count_before(w, a, t)) + future_mass(rho, a, t));
    }
    if (const double m = mark_mass_at(rho, a, t); m != 0.0) {
      v += m * (static_cast<double>(count_before(w, b, t)) + future_mass(rho, b, t));
    }
    v += mark_mass_at(rho, ab, t);
    return v;
  };
  const double mean = ma * mb + mab;
  return Functional(name, eval, region_shape({&a, &b}))
      .with(PseudoKernelAnnotation{pseudo, 2})
      .with(ChaosAnnotation{mean, chaos, 2})
      .with(ProjectionAnnotation{mean, proj, proj_marks, {a.time.lo, a.time.hi, b.time.lo, b.time.hi}});
}

Functional exp_count_functional(const std::string& region_name, const Region& a, double beta,
                                const ProductIntensity& rho) {
  const double mass = rho.mass(a);
  const double jump = std::expm1(beta);  // e^beta - 1
  const double mean = std::exp(mass * jump);
  std::ostringstream name;
  name << "exp_count:" << region_name << "," << beta;
  auto eval = [a, beta](const Configuration& w) { return std::exp(beta * static_cast<double>(count(w, a))); };
  // T_n F = (e^beta - 1)^n prod 1_A
  auto pseudo = [a, jump](std::span<const Atom> xs) {
    double v = 1.0;
    for (const auto& x : xs) {
      if (!a.contains(x)) return 0.0;
      v *= jump;
    }
    return v;
  };
  auto chaos = [a, jump, mean, n = name.str()](int order) -> std::optional<Kernel> {
    return indicator_tensor("T" + std::to_string(order) + "[" + n + "]", a, order,
                            mean * std::pow(jump, order));
  };
  // E_{t-}[e^{beta N(A)}] = e^{beta N_{t-}(A)} exp((e^beta - 1) rho(A on [t, T]))
  auto proj = [a, beta, jump, rho](const Configuration& w, const Atom& x) {
    if (!a.contains(x)) return 0.0;
    const double past = static_cast<double>(count_before(w, a, x.t));
    return jump * std::exp(beta * past + jump * future_mass(rho, a, x.t));
  };
  auto proj_marks = [a, beta, jump, rho](const Configuration& w, double t) {
    const double m = mark_mass_at(rho, a, t);
    if (m == 0.0) return 0.0;
    const double past = static_cast<double>(count_before(w, a, t));
    return m * jump * std::exp(beta * past + jump * future_mass(rho, a, t));
  };
  return Functional(name.str(), eval, region_shape({&a}))
      .with(PseudoKernelAnnotation{pseudo, std::nullopt})
      .with(ChaosAnnotation{mean, chaos, std::nullopt})
      .with(ProjectionAnnotation{mean, proj, proj_marks, {a.time.lo, a.time.hi}});
}

}  // namespace pm
