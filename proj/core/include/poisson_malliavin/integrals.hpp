#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "poisson_malliavin/configuration.hpp"
#include "poisson_malliavin/functional.hpp"
#include "poisson_malliavin/kernel.hpp"
#include "poisson_malliavin/measure.hpp"

namespace pm {

/// (1/n!) sum over permutations of f; n <= 8, else OrderTooLarge.
Kernel symmetrize(const Kernel& f);

/// Calls visit(tuple) for every ordered n-tuple of pairwise distinct atoms
/// of omega, in lexicographic order of atom indices. Nothing when |omega| < n.
void for_each_factorial_tuple(const Configuration& omega, int n,
                              const std::function<void(std::span<const Atom>)>& visit);
std::vector<std::vector<Atom>> factorial_tuples(const Configuration& omega, int n);

struct EvaluationOptions {
  std::size_t term_budget = 10'000'000;
  IntegrationOptions integration;
};

/// Uncompensated integral: sum of f over the factorial tuples of omega.
/// Throws BudgetExceeded when more than term_budget kernel evaluations
/// would be needed.
double eval_uncompensated(const Kernel& f, const Configuration& omega, const EvaluationOptions& opts = {});

/// Compensated integral by the subset sum
///   sum_J (-1)^{n-|J|} sum_{|J|-tuples} int f(x_J = tuple) d rho^{n-|J|}.
/// std_error is nonzero only when some marginal used Monte Carlo.
Integral eval_compensated(const Kernel& f, const Configuration& omega, const ProductIntensity& rho,
                          const EvaluationOptions& opts = {});

enum class IntegralFamily { Compensated, Uncompensated };

/// scalar + sum_{j=1..n} J_j(kernels[j-1]) where J is I or the
/// uncompensated integral depending on family.
struct IntegralDecomposition {
  IntegralFamily family = IntegralFamily::Compensated;
  double scalar = 0.0;
  std::vector<Kernel> kernels;  // kernels[j-1] has order j
};

/// Uncompensated integral of symmetric f as compensated integrals:
/// g_j = C(n,j) int f d rho^{n-j}.
IntegralDecomposition to_compensated(const Kernel& f, const ProductIntensity& rho,
                                     const IntegrationOptions& opts = {});
/// Compensated integral of symmetric f as uncompensated integrals:
/// g_k = C(n,k) (-1)^{n-k} int f d rho^{n-k}.
IntegralDecomposition to_uncompensated(const Kernel& f, const ProductIntensity& rho,
                                       const IntegrationOptions& opts = {});

Integral evaluate(const IntegralDecomposition& d, const Configuration& omega, const ProductIntensity& rho,
                  const EvaluationOptions& opts = {});

/// omega -> I_n(f)(omega) and omega -> uncompensated integral, as functionals.
Functional compensated_integral_functional(const Kernel& f, const ProductIntensity& rho,
                                           const EvaluationOptions& opts = {});
Functional uncompensated_integral_functional(const Kernel& f, const EvaluationOptions& opts = {});

}  // namespace pm
