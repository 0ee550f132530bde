#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "poisson_malliavin/configuration.hpp"
#include "poisson_malliavin/functional.hpp"
#include "poisson_malliavin/integrals.hpp"
#include "poisson_malliavin/malliavin.hpp"
#include "poisson_malliavin/measure.hpp"

namespace pm {

struct ExpansionOptions {
  double tolerance = 1e-9;  // relative, scaled by 1 + |F(omega)|
  int order_budget = 20;
  // Brute-force pseudo-kernels use a subset transform over all of omega
  // up to this many atoms, then per-tuple inclusion-exclusion.
  int subset_transform_limit = 16;
  EvaluationOptions evaluation;
};

struct ExpansionReport {
  std::string functional;
  std::string kind;  // "pseudo_chaotic" or "chaotic"
  double value = 0.0;  // F(omega)
  std::vector<double> terms;         // terms[k] is the order-k contribution
  std::vector<double> partial_sums;  // partial_sums[k] = sum of terms[0..k]
  std::vector<double> residuals;     // |F(omega) - partial_sums[k]|
  std::optional<int> exactness_order;
  double tolerance = 0.0;
};

/// F(omega_empty) + sum_{k<=n_max} (1/k!) U_k(T_k F)(omega), U the
/// uncompensated integral. Orders above |omega| contribute exactly 0.
/// Throws OrderTooLarge when n_max exceeds the order budget.
ExpansionReport pseudo_chaotic_sum(const Functional& F, const Configuration& omega, int n_max,
                                   const ExpansionOptions& opts = {});

/// E[F] + sum_{n<=n_max} (1/n!) I_n(T_n F)(omega) from the chaos annotation.
/// Throws KernelsUnavailable when F carries none.
ExpansionReport chaotic_sum(const Functional& F, const Configuration& omega, const ProductIntensity& rho,
                            int n_max, const ExpansionOptions& opts = {});

/// Monte Carlo estimate of E[D^n F] at one tuple. Diagnostic only.
Estimate estimate_chaos_kernel(const Functional& F, std::span<const Atom> tuple, const ProductIntensity& rho,
                               std::size_t samples, Seed seed, int threads = 1);

/// F(omega) - F(omega_empty) - sum over atoms of H F(omega).
double pco_verify(const Functional& F, const Configuration& omega);

using IntegrandProcess = std::function<double(const Configuration&, const Atom&)>;

struct UniquenessReport {
  double max_deviation = 0.0;                // max |Z - H F| over atoms
  double max_representation_residual = 0.0;  // max |F - F(empty) - sum Z|
  std::size_t atoms_checked = 0;
};

UniquenessReport pco_uniqueness_probe(const Functional& F, const IntegrandProcess& Z,
                                      std::span<const Configuration> paths);

/// F(omega) - E[F] - (sum_atoms Z^p - int_0^T int_X Z^p dt pi(dx)) with the
/// compensator integrated piecewise between atom times and the
/// projection's breakpoints. Throws ProjectionUnavailable.
double co_residual(const Functional& F, const Configuration& omega, const ProductIntensity& rho,
                   int nodes_per_piece = 16);

struct ProjectionProbe {
  Estimate nested;  // E_{t-}[D_a F] by resampling the future
  double closed_form = 0.0;
  double z = 0.0;
};

ProjectionProbe projection_probe(const Functional& F, const Configuration& omega, const Atom& a,
                                 const ProductIntensity& rho, std::size_t m, Seed seed, int threads = 1);

struct ResidualReport {
  std::size_t samples = 0;
  double mean_residual = 0.0;
  double max_abs_residual = 0.0;
  double max_scaled_residual = 0.0;  // max |r| / (1 + |F|)
  double std_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;  // max_scaled_residual < tolerance
};

ResidualReport summarize_residuals(std::span<const double> residuals, std::span<const double> values,
                                   double tolerance);

struct WindowRow {
  std::size_t window = 0;
  double mass = 0.0;  // rho(R_j)
  double l1_mean = 0.0;
  double l1_std_error = 0.0;
  std::optional<double> target;
  double max_pco_residual = 0.0;
};

struct WindowTable {
  std::vector<WindowRow> rows;
  std::size_t samples = 0;
  // Value assigned to F on the empty configuration of the unbounded space.
  double empty_configuration_value = 0.0;
  bool empty_value_by_convention = true;
};

/// For nested windows R_1 c R_2 c ..., with F_j(omega) = F(omega restricted
/// to R_j), estimates E|F - F_j| on samples from rho_full and checks the
/// pseudo-Clark-Ocone identity for every F_j pathwise.
WindowTable windowed_pco_convergence(const Functional& F, const ProductIntensity& rho_full,
                                     std::span<const Region> windows, std::size_t samples, Seed seed,
                                     int threads = 1);

/// Batch means of sum over atoms of |H F|, for a finiteness sanity check.
std::vector<Estimate> integrand_l1_batches(const Functional& F, const ProductIntensity& rho, std::size_t batches,
                                           std::size_t per_batch, Seed seed, int threads = 1);

}  // namespace pm
