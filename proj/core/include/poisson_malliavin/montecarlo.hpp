#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "poisson_malliavin/configuration.hpp"
#include "poisson_malliavin/functional.hpp"
#include "poisson_malliavin/integrals.hpp"
#include "poisson_malliavin/kernel.hpp"
#include "poisson_malliavin/measure.hpp"

namespace pm {

struct MonteCarloOptions {
  std::size_t samples = 100000;
  Seed seed{0};
  int threads = 1;
  double z_max = 4.0;
  EvaluationOptions evaluation;
};

struct EstimateReport {
  std::string check;
  std::size_t n = 0;
  double mean = 0.0;
  double std_error = 0.0;
  std::optional<double> target;
  std::optional<double> z;  // empty when undefined (no target, or zero error with a nonzero gap)
  bool pass = false;
  std::optional<double> lhs;
  std::optional<double> rhs;
  std::vector<std::pair<std::string, double>> extras;
};

/// Mean and standard error of G over independent Poisson samples; sample i
/// uses derive_seed(seed, i).
EstimateReport estimate(const std::function<double(const Configuration&)>& G, const ProductIntensity& rho,
                        const MonteCarloOptions& opts, std::optional<double> target = std::nullopt,
                        std::string check = "estimate");

/// E[F * U_k(h)] against int h(x) E[F(omega + delta_x1 + .. + delta_xk)] d rho^k,
/// both sides on the same samples; reports the paired difference.
EstimateReport mecke_check(const Functional& F, const Kernel& h, const ProductIntensity& rho,
                           const MonteCarloOptions& opts);

/// E[F * I_k(h)] against int h E[D^k F] d rho^k, paired as above.
EstimateReport ibp_check(const Functional& F, const Kernel& h, const ProductIntensity& rho,
                         const MonteCarloOptions& opts);

/// E[I_n(f)^2] against n! ||f||^2. Extras carry the estimated ratio
/// E[I_n(f)^2] / ||f||^2 and its standard error.
EstimateReport isometry_check(const Kernel& f, const ProductIntensity& rho, const MonteCarloOptions& opts);

/// Weighted anchor tuples over X^k covering the breakpoints of h and F, with
/// zero-weight and h == 0 tuples dropped.
struct AnchorRule {
  std::vector<std::vector<Atom>> tuples;
  std::vector<double> weights;  // includes h(tuple)
};

AnchorRule anchor_rule(const Kernel& h, const FunctionalShape& shape, const ProductIntensity& rho);

}  // namespace pm
