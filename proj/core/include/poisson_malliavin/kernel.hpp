#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "poisson_malliavin/configuration.hpp"
#include "poisson_malliavin/measure.hpp"

namespace pm {

/// One tensor factor: c * t^degree * 1_region(t, x).
struct Factor {
  double coefficient = 1.0;
  int degree = 0;
  Region region;

  double operator()(const Atom& a) const noexcept;
  /// int factor d rho, in closed form.
  double integral(const ProductIntensity& rho) const;
  Factor times(const Factor& o) const;

  friend bool operator==(const Factor&, const Factor&) = default;
};

enum class IntegrationCapability { ClosedForm, Quadrature, MonteCarlo };

/// Bit i of a position mask is set when argument i is held fixed (an
/// "anchor"); cleared bits are integrated against rho. Anchors are passed
/// in increasing position order.
using PositionMask = std::uint32_t;

/// A map X^n -> R with optional closed-form partial rho-integrals.
class Kernel {
 public:
  using EvalFn = std::function<double(std::span<const Atom>)>;
  using PartialFn =
      std::function<double(const ProductIntensity&, PositionMask, std::span<const Atom>)>;

  struct Traits {
    bool symmetric = false;
    std::vector<double> time_breaks;
    std::vector<double> mark_breaks;
    // Degree of the kernel as a piecewise polynomial between breakpoints,
    // or -1 when it is not one. Quadrature picks node counts from this.
    int piecewise_degree = -1;
  };

  Kernel(std::string name, int order, EvalFn eval, Traits traits, PartialFn partial = {});

  /// Product kernel f(x1..xn) = scale * prod_i factors[i](xi), closed form
  /// throughout. Symmetric when all factors are equal.
  static Kernel tensor(std::string name, std::vector<Factor> factors, double scale = 1.0);

  const std::string& name() const noexcept { return name_; }
  int order() const noexcept { return order_; }
  bool symmetric() const noexcept { return traits_.symmetric; }
  const Traits& traits() const noexcept { return traits_; }
  const std::optional<std::vector<Factor>>& factors() const noexcept { return factors_; }
  double tensor_scale() const noexcept { return scale_; }

  double operator()(std::span<const Atom> xs) const { return eval_(xs); }
  double operator()(std::initializer_list<Atom> xs) const {
    return eval_(std::span<const Atom>(xs.begin(), xs.size()));
  }

  bool has_closed_form() const noexcept { return static_cast<bool>(partial_); }
  IntegrationCapability capability() const noexcept;
  /// Throws IntegrationUnavailable when the kernel has no closed form.
  double closed_partial(const ProductIntensity& rho, PositionMask anchored,
                        std::span<const Atom> anchors) const;

  Kernel renamed(std::string name) const;

 private:
  struct TotalCache;
  friend Integral partial_integral(const Kernel&, const ProductIntensity&, PositionMask, std::span<const Atom>,
                                   const IntegrationOptions&);

  std::string name_;
  int order_;
  EvalFn eval_;
  Traits traits_;
  PartialFn partial_;
  std::optional<std::vector<Factor>> factors_;
  double scale_ = 1.0;
  // full integrals without closed form, keyed by measure and options
  std::shared_ptr<TotalCache> totals_;
};

/// int f(.., anchors at anchored positions, ..) d rho^{(x) free}: closed form
/// when available, else breakpoint-aware tensor Gauss-Legendre (at most 3
/// free positions), else Monte Carlo when allowed. Throws
/// UnsupportedDimension otherwise.
Integral partial_integral(const Kernel& f, const ProductIntensity& rho, PositionMask anchored,
                          std::span<const Atom> anchors, const IntegrationOptions& opts = {});

/// Same as partial_integral but never uses the closed form.
Integral partial_integral_numeric(const Kernel& f, const ProductIntensity& rho, PositionMask anchored,
                                  std::span<const Atom> anchors, const IntegrationOptions& opts = {});

/// f(a, .) as an order n-1 kernel.
Kernel section(const Kernel& f, const Atom& a);
/// sum_i c_i f_i over kernels of one order.
Kernel linear_combination(std::string name, std::vector<std::pair<double, Kernel>> terms);
Kernel scaled(const Kernel& f, double c);
Kernel pointwise_product(const Kernel& f, const Kernel& g);
/// ||f||^2 in L^2(rho^{(x) n}).
Integral l2_norm_squared(const Kernel& f, const ProductIntensity& rho, const IntegrationOptions& opts = {});

/// Construction-time checks: symmetry spot-check on random tuples, and
/// closed-form partials against quadrature within 1e-8 relative (n <= 3).
/// Throws AnnotationMismatch.
void validate_kernel(const Kernel& f, const ProductIntensity& rho, Seed seed, int trials = 8);

}  // namespace pm
