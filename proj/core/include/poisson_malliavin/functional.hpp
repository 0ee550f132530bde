#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "poisson_malliavin/configuration.hpp"
#include "poisson_malliavin/kernel.hpp"
#include "poisson_malliavin/measure.hpp"

namespace pm {

/// Closed form of the deterministic inclusion-exclusion kernels T_n F for
/// n >= 1 (T_0 F is F on the empty configuration).
struct PseudoKernelAnnotation {
  std::function<double(std::span<const Atom>)> value;
  std::optional<int> vanishes_above;  // T_n F == 0 for larger n
};

/// E[F] and the chaos kernels E[D^n F], tied to one intensity.
struct ChaosAnnotation {
  double mean = 0.0;
  std::function<std::optional<Kernel>(int)> kernel;  // nullopt: identically zero
  std::optional<int> exact_order;                    // finite chaos length
};

/// Predictable projection Z^p of DF, with its mark integral
/// int Z^p(omega, t, x) pi(dx) for the compensator.
struct ProjectionAnnotation {
  double mean = 0.0;
  std::function<double(const Configuration&, const Atom&)> value;
  std::function<double(const Configuration&, double)> mark_integrated;
  std::vector<double> time_breaks;
};

/// Where an added atom changes F, for choosing quadrature anchors: F as a
/// function of one added atom is a piecewise polynomial of this degree
/// between the breakpoints (-1: not piecewise polynomial).
struct FunctionalShape {
  std::vector<double> time_breaks;
  std::vector<double> mark_breaks;
  int piecewise_degree = -1;
};

/// A Poisson functional F: Configuration -> R, evaluated pathwise.
class Functional {
 public:
  using EvalFn = std::function<double(const Configuration&)>;

  Functional(std::string name, EvalFn eval, FunctionalShape shape = {});

  const std::string& name() const noexcept { return name_; }
  double operator()(const Configuration& omega) const { return eval_(omega); }
  const FunctionalShape& shape() const noexcept { return shape_; }

  const std::optional<PseudoKernelAnnotation>& pseudo_kernels() const noexcept { return pseudo_; }
  const std::optional<ChaosAnnotation>& chaos() const noexcept { return chaos_; }
  const std::optional<ProjectionAnnotation>& projection() const noexcept { return projection_; }

  Functional with(PseudoKernelAnnotation a) const;
  Functional with(ChaosAnnotation a) const;
  Functional with(ProjectionAnnotation a) const;
  /// Same evaluation map, no annotations: forces brute-force routes.
  Functional stripped() const;

 private:
  std::string name_;
  EvalFn eval_;
  FunctionalShape shape_;
  std::optional<PseudoKernelAnnotation> pseudo_;
  std::optional<ChaosAnnotation> chaos_;
  std::optional<ProjectionAnnotation> projection_;
};

// Built-in functionals with all closed-form annotations for the given rho.
Functional constant_functional(double c, const ProductIntensity& rho);
Functional count_functional(const std::string& region_name, const Region& a, const ProductIntensity& rho);
Functional count_squared_functional(const std::string& region_name, const Region& a,
                                    const ProductIntensity& rho);
Functional product_counts_functional(const std::string& a_name, const Region& a, const std::string& b_name,
                                     const Region& b, const ProductIntensity& rho);
Functional exp_count_functional(const std::string& region_name, const Region& a, double beta,
                                const ProductIntensity& rho);

/// rho(A intersected with [t, T] x X).
double future_mass(const ProductIntensity& rho, const Region& a, double t);

}  // namespace pm
