#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "poisson_malliavin/configuration.hpp"
#include "poisson_malliavin/functional.hpp"
#include "poisson_malliavin/measure.hpp"

namespace pm {

struct DifferenceOptions {
  int max_order = 12;  // 2^n evaluations of F
};

/// D_a F(omega) = F(omega + delta_a) - F(omega).
double difference(const Functional& F, const Configuration& omega, const Atom& a);

/// D^n_{a1..an} F(omega) by inclusion-exclusion over the 2^n subsets.
/// Throws OrderTooLarge beyond opts.max_order.
double iterated_difference(const Functional& F, const Configuration& omega, std::span<const Atom> tuple,
                           const DifferenceOptions& opts = {});

/// T_n F(a1..an) = D^n F evaluated on the empty configuration.
double deterministic_diff(const Functional& F, std::span<const Atom> tuple, double horizon,
                          const DifferenceOptions& opts = {});

/// H_{(t,x)} F(omega) = D_{(t,x)} F(omega_t), omega_t keeping atoms before t.
double pco_integrand(const Functional& F, const Configuration& omega, const Atom& a);

/// L^{T,t}(omega) = exp((T - t) pi(X)) when omega has no atom in [t, T], else 0.
double girsanov_weight(const Configuration& omega, double t, const ProductIntensity& rho);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// E[G(omega) | F_t] by keeping the atoms before t and resampling the
/// future on [t, T] m times. Replication i uses derive_seed(seed, i), so the
/// result does not depend on the thread count.
Estimate conditional_expectation(const std::function<double(const Configuration&)>& G,
                                 const Configuration& omega, double t, const ProductIntensity& rho,
                                 std::size_t m, Seed seed, int threads = 1);
Estimate conditional_expectation(const Functional& F, const Configuration& omega, double t,
                                 const ProductIntensity& rho, std::size_t m, Seed seed, int threads = 1);

}  // namespace pm
