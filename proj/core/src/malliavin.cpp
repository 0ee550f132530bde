#include "poisson_malliavin/malliavin.hpp"

#include <bit>
#include <cmath>
#include <vector>

#include "poisson_malliavin/errors.hpp"
#include "poisson_malliavin/numeric.hpp"
#include "poisson_malliavin/parallel.hpp"

namespace pm {

double difference(const Functional& F, const Configuration& omega, const Atom& a) {
  return F(add_point(omega, a)) - F(omega);
}

double iterated_difference(const Functional& F, const Configuration& omega, std::span<const Atom> tuple,
                           const DifferenceOptions& opts) {
  const auto n = static_cast<int>(tuple.size());
  if (n > opts.max_order) {
    throw OrderTooLarge("iterated difference of order " + std::to_string(n) + " exceeds max_order " +
                        std::to_string(opts.max_order));
  }
  if (n > 30) throw OrderTooLarge("iterated difference order above 30");
  KahanSum sum;
  std::vector<Atom> subset;
  subset.reserve(tuple.size());
  const std::uint32_t full = n == 0 ? 1u : (std::uint32_t{1} << n);
  for (std::uint32_t mask = 0; mask < full; ++mask) {
    subset.clear();
    for (int i = 0; i < n; ++i) {
      if (mask & (std::uint32_t{1} << i)) subset.push_back(tuple[static_cast<std::size_t>(i)]);
    }
    const int sign = ((n - std::popcount(mask)) % 2 == 0) ? 1 : -1;
    sum += sign * F(add_points(omega, subset));
  }
  return sum.value();
}

double deterministic_diff(const Functional& F, std::span<const Atom> tuple, double horizon,
                          const DifferenceOptions& opts) {
  return iterated_difference(F, Configuration(horizon), tuple, opts);
}

double pco_integrand(const Functional& F, const Configuration& omega, const Atom& a) {
  return difference(F, truncate_before(omega, a.t), a);
}

double girsanov_weight(const Configuration& omega, double t, const ProductIntensity& rho) {
  if (t < 0.0 || t > rho.horizon) throw InvalidArgument("girsanov_weight: t outside [0, T]");
  for (const auto& a : omega) {
    if (a.t >= t) return 0.0;
  }
  return std::exp((rho.horizon - t) * rho.marks.total_mass());
}

Estimate conditional_expectation(const std::function<double(const Configuration&)>& G,
                                 const Configuration& omega, double t, const ProductIntensity& rho,
                                 std::size_t m, Seed seed, int threads) {
  if (m < 2) throw InvalidArgument("conditional_expectation needs at least 2 replications");
  if (t < 0.0 || t > rho.horizon) throw InvalidArgument("conditional_expectation: t outside [0, T]");
  const Configuration past = truncate_before(omega, t);
  auto values = parallel_map<double>(m, threads, [&](std::size_t i) {
    Rng rng = make_rng(derive_seed(seed, i));
    auto future = sample_poisson_atoms(rho, t, rho.horizon, rng);
    return G(add_points(past, future));
  });
  const auto ms = mean_and_stderr(values);
  return {ms.mean, ms.std_error, m};
}

Estimate conditional_expectation(const Functional& F, const Configuration& omega, double t,
                                 const ProductIntensity& rho, std::size_t m, Seed seed, int threads) {
  return conditional_expectation([&F](const Configuration& w) { return F(w); }, omega, t, rho, m, seed,
                                 threads);
}

}  // namespace pm
