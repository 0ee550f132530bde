#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "poisson_malliavin/configuration.hpp"

namespace pm {

class Kernel;
class DensityExpression;

struct Seed {
  std::uint64_t value = 0;
  friend bool operator==(Seed, Seed) = default;
};

using Rng = std::mt19937_64;

/// Per-replication seed: base xor hash(index).
Seed derive_seed(Seed base, std::uint64_t index) noexcept;
Rng make_rng(Seed seed);

/// The mark measure pi. Either an interval [0, M] carrying a density, or a
/// finite set of weighted points. Discrete marks are an extension of the
/// non-atomic setting: times stay continuous, so sampled configurations are
/// still simple almost surely.
class MarkSpace {
 public:
  enum class Kind { Interval, Discrete };

  /// Interval [0, M] with constant density mass / M (Lebesgue when mass == M).
  static MarkSpace uniform(double upper, std::optional<double> mass = std::nullopt);
  /// Interval [0, M] with density given as an expression in x. If a total
  /// mass is declared it must match the quadrature of the density to 1e-8
  /// relative.
  static MarkSpace from_expression(double upper, const std::string& expr,
                                   std::optional<double> declared_mass = std::nullopt);
  static MarkSpace discrete(std::vector<double> points, std::vector<double> weights);

  Kind kind() const noexcept { return kind_; }
  double total_mass() const noexcept { return total_mass_; }
  /// M for intervals, largest point for discrete spaces.
  double upper() const noexcept;
  bool is_uniform() const noexcept { return kind_ == Kind::Interval && !expr_; }

  double mass(const MarkSet& set) const;
  /// Density w.r.t. Lebesgue on [0, M]; interval kind only.
  double density(double x) const;
  bool contains(double x) const noexcept;

  std::span<const double> points() const noexcept { return points_; }
  std::span<const double> weights() const noexcept { return weights_; }

  double sample(Rng& rng) const;

  /// Weighted mark nodes (x, w) with sum w g(x) ~ int g dpi: Gauss-Legendre
  /// per piece between breakpoints for intervals, exact point sums otherwise.
  std::vector<std::pair<double, double>> quadrature(std::span<const double> breaks,
                                                    int nodes_per_piece) const;

  void to_json(nlohmann::json& j) const;
  static MarkSpace from_json(const nlohmann::json& j);

 private:
  MarkSpace() = default;
  double cdf(double x) const;  // pi([0, x]) for interval kind

  Kind kind_ = Kind::Interval;
  double upper_ = 1.0;
  double total_mass_ = 1.0;
  std::shared_ptr<const DensityExpression> expr_;
  std::vector<double> cdf_grid_;   // cumulative mass at cell boundaries
  std::vector<double> points_;
  std::vector<double> weights_;
  std::vector<double> cum_weights_;
};

/// rho = dt (x) pi on [0, T] x X.
struct ProductIntensity {
  double horizon = 1.0;
  MarkSpace marks = MarkSpace::uniform(1.0);

  double total_mass() const noexcept { return horizon * marks.total_mass(); }
  double mass(const Region& r) const;
  Region whole() const { return Region::whole(horizon); }
};

ProductIntensity make_intensity(double horizon, MarkSpace marks);

/// Count ~ Poisson(rho(X)), then i.i.d. uniform times and pi-distributed
/// marks. Deterministic given the seed.
Configuration sample_poisson(const ProductIntensity& rho, Seed seed);
Configuration sample_poisson(const ProductIntensity& rho, Rng& rng);
/// Atoms of a Poisson sample restricted to times in [t_lo, t_hi].
std::vector<Atom> sample_poisson_atoms(const ProductIntensity& rho, double t_lo, double t_hi, Rng& rng);

struct WeightedAtom {
  Atom atom;
  double weight = 0.0;
};

/// Tensor rule over [0, T] x X from time and mark breakpoints.
std::vector<WeightedAtom> space_quadrature(const ProductIntensity& rho,
                                           std::span<const double> time_breaks,
                                           std::span<const double> mark_breaks, int nodes_per_piece);

struct Integral {
  double value = 0.0;
  double std_error = 0.0;  // 0 for closed form and quadrature
};

struct IntegrationOptions {
  int nodes = 64;                           // Gauss-Legendre nodes per axis piece
  std::size_t max_points = std::size_t{1} << 24;  // tensor-rule budget
  bool allow_monte_carlo = false;
  std::size_t mc_samples = 100000;
  Seed seed{0x5eed};
};

/// int f d rho^{(x) n}: closed form when the kernel has one, tensor
/// Gauss-Legendre for n <= 3, Monte Carlo otherwise (if allowed).
Integral rho_integral(const Kernel& f, const ProductIntensity& rho, const IntegrationOptions& opts = {});

void to_json(nlohmann::json& j, const ProductIntensity& rho);

}  // namespace pm
