#pragma once

#include <map>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "poisson_malliavin/functional.hpp"
#include "poisson_malliavin/kernel.hpp"
#include "poisson_malliavin/measure.hpp"
#include "poisson_malliavin/processes.hpp"

namespace pm {

using RegionTable = std::map<std::string, Region>;
using HawkesTable = std::map<std::string, HawkesModel>;

/// A = [0, 0.6T) x [0, 0.6 M), B = [0.3T, T] x [0.4 M, M], X = everything,
/// with M the upper end of the mark space.
RegionTable default_regions(const ProductIntensity& rho);

/// Adds or replaces regions from {"name": {"t": [lo, hi], "x": [lo, hi] | {"points": [...]}}}.
/// Intervals are half-open unless hi reaches the end of its axis.
void merge_regions(RegionTable& table, const nlohmann::json& j, const ProductIntensity& rho);

/// "default" (mu 1, alpha 0.5, beta 1, T 10, theta_cap 20) and "small" (T 1, theta_cap 5).
HawkesTable builtin_hawkes_models();

struct ResolvedFunctional {
  Functional functional;
  ProductIntensity intensity;  // the measure F is defined over
  std::optional<HawkesModel> hawkes;
};

/// "one", "const:c", "count:A", "count_squared:A", "product_counts:A,B",
/// "exp_count:A,beta", "hawkes_HT:model". Annotated functionals are
/// validated against brute force before being returned.
ResolvedFunctional make_functional(const std::string& spec, const ProductIntensity& rho, const RegionTable& regions,
                                   const HawkesTable& models = builtin_hawkes_models());

/// "ind:A", "tensor_ind:A" (1_A (x) 1_A), "tensor_ind:A,B,..", "poly:d[,n]"
/// (t^d in each of n arguments), "gauss:sigma" (order 2, no closed form).
Kernel make_kernel(const std::string& spec, const ProductIntensity& rho, const RegionTable& regions);

/// Cross-checks every annotation of F on random configurations of at most
/// three atoms: pseudo-kernels against inclusion-exclusion, chaos kernels
/// by pathwise resummation, projections by the Clark-Ocone residual.
/// Throws AnnotationMismatch.
void validate_annotations(const Functional& F, const ProductIntensity& rho, Seed seed, int trials = 16);

}  // namespace pm
