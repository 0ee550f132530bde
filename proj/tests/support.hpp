#pragma once

#include <random>
#include <vector>

#include "poisson_malliavin/configuration.hpp"
#include "poisson_malliavin/measure.hpp"
#include "poisson_malliavin/registry.hpp"

namespace testing {

// rho = dt (x) Lebesgue on [0, 1] x [0, 5], total mass 5.
inline pm::ProductIntensity standard_rho() { return pm::make_intensity(1.0, pm::MarkSpace::uniform(5.0)); }

inline pm::RegionTable standard_regions() { return pm::default_regions(standard_rho()); }

// A = [0, 0.6) x [0, 3): mass 1.8
inline pm::Region region_a() { return standard_regions().at("A"); }
inline pm::Region region_b() { return standard_regions().at("B"); }

inline std::vector<pm::Atom> random_atoms(std::mt19937_64& rng, int n, double T = 1.0, double M = 5.0) {
  std::uniform_real_distribution<double> t(0.0, T);
  std::uniform_real_distribution<double> x(0.0, M);
  std::vector<pm::Atom> out;
  for (int i = 0; i < n; ++i) out.push_back({t(rng), x(rng)});
  return out;
}

inline pm::Configuration random_configuration(std::mt19937_64& rng, int n, double T = 1.0, double M = 5.0) {
  return pm::make_configuration(random_atoms(rng, n, T, M), T);
}

inline bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * (1.0 + std::abs(b)); }

}  // namespace testing
