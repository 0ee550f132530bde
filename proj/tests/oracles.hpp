#pragma once

// Reference computations used only by tests. Each one reaches its answer by
// a route that shares no code with the library path it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "poisson_malliavin/configuration.hpp"
#include "poisson_malliavin/functional.hpp"

namespace oracle {

/// sum_k P(N = k) g(k) for N ~ Poisson(m), truncated at kmax.
inline double poisson_expectation(double m, const std::function<double(int)>& g, int kmax = 200) {
  double log_p = -m;  // log P(N = 0)
  long double sum = 0.0L;
  for (int k = 0; k <= kmax; ++k) {
    if (k > 0) log_p += std::log(m) - std::log(static_cast<double>(k));
    sum += static_cast<long double>(std::exp(log_p)) * g(k);
  }
  return static_cast<double>(sum);
}

/// E[I_n(1_A^{(x)n})^2] / ||1_A^{(x)n}||^2 for n = 1, 2, where the pathwise
/// integral is written out by hand as a polynomial in N(A).
inline double isometry_constant(int n, double m) {
  if (n == 1) {
    return poisson_expectation(m, [m](int k) { return (k - m) * (k - m); }) / m;
  }
  return poisson_expectation(m,
                             [m](int k) {
                               const double v = k * (k - 1.0) - 2.0 * m * k + m * m;
                               return v * v;
                             }) /
         (m * m);
}

/// E[N^p] for N ~ Poisson(m).
inline double poisson_moment(double m, int p) {
  return poisson_expectation(m, [p](int k) { return std::pow(static_cast<double>(k), p); });
}

/// E[H_T] from the renewal equation m(t) = mu + int_0^t phi(t - s) m(s) ds,
/// trapezoidal rule on a uniform grid for both the convolution and the
/// final time integral.
inline double hawkes_mean_count(double mu, const std::function<double(double)>& phi, double T, int steps = 2000) {
  const double h = T / steps;
  std::vector<double> m(static_cast<std::size_t>(steps) + 1);
  m[0] = mu;
  for (int i = 1; i <= steps; ++i) {
    const double t = i * h;
    double conv = 0.5 * phi(t) * m[0];
    for (int j = 1; j < i; ++j) conv += phi(t - j * h) * m[static_cast<std::size_t>(j)];
    // the s = t endpoint carries phi(0+) m(t) / 2; solve for m(t)
    const double phi0 = phi(0.0);
    m[static_cast<std::size_t>(i)] = (mu + h * conv) / (1.0 - 0.5 * h * phi0);
  }
  double total = 0.0;
  for (int i = 0; i < steps; ++i) total += 0.5 * h * (m[static_cast<std::size_t>(i)] + m[static_cast<std::size_t>(i) + 1]);
  return total;
}

/// D^n by the recursion D^n_{a1..an} F(w) = D^{n-1}F(w + a_n) - D^{n-1}F(w).
inline double recursive_difference(const pm::Functional& F, const pm::Configuration& w,
                                   std::span<const pm::Atom> tuple) {
  if (tuple.empty()) return F(w);
  const auto head = tuple.first(tuple.size() - 1);
  return recursive_difference(F, pm::add_point(w, tuple.back()), head) - recursive_difference(F, w, head);
}

/// Sum over time-sorted atoms of F(prefix up to and including atom i)
/// minus F(prefix before it). For configurations with distinct times this
/// equals the sum of the pseudo-Clark-Ocone integrands.
inline double telescoping_sum(const pm::Functional& F, const pm::Configuration& w) {
  std::vector<pm::Atom> prefix;
  double total = 0.0;
  double prev = F(pm::Configuration(w.horizon()));
  for (const auto& a : w) {
    prefix.push_back(a);
    const double next = F(pm::make_configuration(prefix, w.horizon()));
    total += next - prev;
    prev = next;
  }
  return total;
}

}  // namespace oracle
