#include "poisson_malliavin/integrals.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "poisson_malliavin/errors.hpp"
#include "poisson_malliavin/numeric.hpp"

namespace pm {

namespace {

constexpr int kMaxSymmetrizeOrder = 8;

void check_budget(double terms, const EvaluationOptions& opts, const char* what) {
  if (terms > static_cast<double>(opts.term_budget)) {
    throw BudgetExceeded(std::string(what) + ": " + std::to_string(static_cast<long double>(terms)) +
                         " terms exceed the budget of " + std::to_string(opts.term_budget));
  }
}

// Kernel g(y_1..y_j) = coef * int f(free, anchors y at the last j positions) d rho^{n-j}.
Kernel marginal_kernel(const Kernel& f, int j, double coef, const ProductIntensity& rho,
                       const IntegrationOptions& opts, const std::string& name) {
  const int n = f.order();
  if (const auto& fs = f.factors()) {
    // Symmetric tensors have equal factors, so the free ones integrate alike.
    const double free = std::pow(fs->front().integral(rho), n - j);
    std::vector<Factor> kept(fs->end() - j, fs->end());
    return Kernel::tensor(name, std::move(kept), coef * f.tensor_scale() * free);
  }
  const PositionMask shift = static_cast<PositionMask>(n - j);
  const PositionMask tail = ((PositionMask{1} << j) - 1u) << shift;
  auto eval = [f, rho, opts, tail, coef](std::span<const Atom> ys) {
    return coef * partial_integral(f, rho, tail, ys, opts).value;
  };
  Kernel::Traits traits = f.traits();
  Kernel::PartialFn partial;
  if (f.has_closed_form()) {
    partial = [f, coef, shift](const ProductIntensity& r, PositionMask anchored, std::span<const Atom> anchors) {
      return coef * f.closed_partial(r, anchored << shift, anchors);
    };
  }
  return Kernel(name, j, std::move(eval), std::move(traits), std::move(partial));
}

IntegralDecomposition convert(const Kernel& f, const ProductIntensity& rho, const IntegrationOptions& opts,
                              IntegralFamily family) {
  if (!f.symmetric()) throw InvalidArgument("kernel conversion needs a symmetric kernel; symmetrize first");
  const int n = f.order();
  const bool alternate = family == IntegralFamily::Uncompensated;
  auto coef = [&](int j) {
    const double c = binomial(n, j);
    return alternate && (n - j) % 2 != 0 ? -c : c;
  };
  IntegralDecomposition d;
  d.family = family;
  d.scalar = coef(0) * rho_integral(f, rho, opts).value;
  const char* tag = alternate ? "u" : "c";
  for (int j = 1; j <= n; ++j) {
    d.kernels.push_back(
        marginal_kernel(f, j, coef(j), rho, opts, std::string("g") + tag + std::to_string(j) + "[" + f.name() + "]"));
  }
  return d;
}

}  // namespace

Kernel symmetrize(const Kernel& f) {
  const int n = f.order();
  if (n > kMaxSymmetrizeOrder) {
    throw OrderTooLarge("symmetrize: order " + std::to_string(n) + " exceeds " +
                        std::to_string(kMaxSymmetrizeOrder));
  }
  if (f.symmetric()) return f.renamed("sym[" + f.name() + "]");
  std::vector<std::vector<int>> perms;
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  do {
    perms.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  const double inv = 1.0 / factorial(n);

  auto eval = [f, perms, inv](std::span<const Atom> xs) {
    std::vector<Atom> permuted(xs.size());
    KahanSum s;
    for (const auto& sigma : perms) {
      for (std::size_t i = 0; i < sigma.size(); ++i) permuted[i] = xs[static_cast<std::size_t>(sigma[i])];
      s += f(permuted);
    }
    return inv * s.value();
  };
  Kernel::PartialFn partial;
  if (f.has_closed_form()) {
    partial = [f, perms, inv](const ProductIntensity& rho, PositionMask anchored, std::span<const Atom> anchors) {
      // rank[p] = index of position p among the anchored positions
      std::vector<int> rank(perms.front().size(), -1);
      int r = 0;
      for (std::size_t pos = 0; pos < rank.size(); ++pos) {
        if ((anchored >> pos) & 1u) rank[pos] = r++;
      }
      std::vector<Atom> fa;
      KahanSum s;
      for (const auto& sigma : perms) {
        PositionMask m = 0;
        fa.clear();
        for (std::size_t i = 0; i < sigma.size(); ++i) {
          const int src = sigma[i];
          if (rank[static_cast<std::size_t>(src)] >= 0) {
            m |= PositionMask{1} << i;
            fa.push_back(anchors[static_cast<std::size_t>(rank[static_cast<std::size_t>(src)])]);
          }
        }
        s += f.closed_partial(rho, m, fa);
      }
      return inv * s.value();
    };
  }
  Kernel::Traits traits = f.traits();
  traits.symmetric = true;
  return Kernel("sym[" + f.name() + "]", n, std::move(eval), std::move(traits), std::move(partial));
}

void for_each_factorial_tuple(const Configuration& omega, int n,
                              const std::function<void(std::span<const Atom>)>& visit) {
  if (n < 1) throw InvalidArgument("factorial tuples need n >= 1");
  const std::size_t k = omega.size();
  if (k < static_cast<std::size_t>(n)) return;
  std::vector<Atom> tuple(static_cast<std::size_t>(n));
  std::vector<char> used(k, 0);
  std::function<void(std::size_t)> rec = [&](std::size_t depth) {
    if (depth == tuple.size()) {
      visit(tuple);
      return;
    }
    for (std::size_t i = 0; i < k; ++i) {
      if (used[i]) continue;
      used[i] = 1;
      tuple[depth] = omega[i];
      rec(depth + 1);
      used[i] = 0;
    }
  };
  rec(0);
}

std::vector<std::vector<Atom>> factorial_tuples(const Configuration& omega, int n) {
  std::vector<std::vector<Atom>> out;
  for_each_factorial_tuple(omega, n, [&](std::span<const Atom> t) { out.emplace_back(t.begin(), t.end()); });
  return out;
}

double eval_uncompensated(const Kernel& f, const Configuration& omega, const EvaluationOptions& opts) {
  const int n = f.order();
  const std::size_t k = omega.size();
  if (k < static_cast<std::size_t>(n)) return 0.0;
  KahanSum s;
  if (f.symmetric()) {
    check_budget(binomial(static_cast<int>(k), n), opts, "uncompensated integral");
    std::vector<Atom> tuple(static_cast<std::size_t>(n));
    for_each_combination(k, n, [&](std::span<const std::size_t> idx) {
      for (std::size_t i = 0; i < idx.size(); ++i) tuple[i] = omega[idx[i]];
      s += f(tuple);
    });
    return factorial(n) * s.value();
  }
  check_budget(falling_factorial(k, static_cast<std::size_t>(n)), opts, "uncompensated integral");
  for_each_factorial_tuple(omega, n, [&](std::span<const Atom> t) { s += f(t); });
  return s.value();
}

Integral eval_compensated(const Kernel& f, const Configuration& omega, const ProductIntensity& rho,
                          const EvaluationOptions& opts) {
  const int n = f.order();
  const std::size_t k = omega.size();
  KahanSum value;
  double var = 0.0;
  auto add = [&](double coef, const Integral& in) {
    value += coef * in.value;
    var += coef * coef * in.std_error * in.std_error;
  };
  const int jmax = std::min(n, static_cast<int>(k));

  if (f.symmetric()) {
    double terms = 0.0;
    for (int j = 0; j <= jmax; ++j) terms += binomial(static_cast<int>(k), j);
    check_budget(terms, opts, "compensated integral");
    std::vector<Atom> anchors;
    for (int j = 0; j <= jmax; ++j) {
      const double sign = (n - j) % 2 == 0 ? 1.0 : -1.0;
      const double coef = sign * binomial(n, j) * factorial(j);
      const PositionMask mask = (PositionMask{1} << j) - 1u;
      if (j == 0) {
        add(coef, partial_integral(f, rho, 0u, {}, opts.integration));
        continue;
      }
      anchors.resize(static_cast<std::size_t>(j));
      for_each_combination(k, j, [&](std::span<const std::size_t> idx) {
        for (std::size_t i = 0; i < idx.size(); ++i) anchors[i] = omega[idx[i]];
        add(coef, partial_integral(f, rho, mask, anchors, opts.integration));
      });
    }
    return {value.value(), std::sqrt(var)};
  }

  double terms = 0.0;
  for (PositionMask mask = 0; mask < (PositionMask{1} << n); ++mask) {
    const int j = std::popcount(mask);
    if (j <= jmax) terms += falling_factorial(k, static_cast<std::size_t>(j));
  }
  check_budget(terms, opts, "compensated integral");
  for (PositionMask mask = 0; mask < (PositionMask{1} << n); ++mask) {
    const int j = std::popcount(mask);
    if (j > jmax) continue;
    const double sign = (n - j) % 2 == 0 ? 1.0 : -1.0;
    if (j == 0) {
      add(sign, partial_integral(f, rho, 0u, {}, opts.integration));
      continue;
    }
    for_each_factorial_tuple(omega, j, [&](std::span<const Atom> t) {
      add(sign, partial_integral(f, rho, mask, t, opts.integration));
    });
  }
  return {value.value(), std::sqrt(var)};
}

IntegralDecomposition to_compensated(const Kernel& f, const ProductIntensity& rho, const IntegrationOptions& opts) {
  return convert(f, rho, opts, IntegralFamily::Compensated);
}

IntegralDecomposition to_uncompensated(const Kernel& f, const ProductIntensity& rho,
                                       const IntegrationOptions& opts) {
  return convert(f, rho, opts, IntegralFamily::Uncompensated);
}

Integral evaluate(const IntegralDecomposition& d, const Configuration& omega, const ProductIntensity& rho,
                  const EvaluationOptions& opts) {
  KahanSum value;
  value += d.scalar;
  double var = 0.0;
  for (const auto& g : d.kernels) {
    if (d.family == IntegralFamily::Compensated) {
      const auto in = eval_compensated(g, omega, rho, opts);
      value += in.value;
      var += in.std_error * in.std_error;
    } else {
      value += eval_uncompensated(g, omega, opts);
    }
  }
  return {value.value(), std::sqrt(var)};
}

Functional compensated_integral_functional(const Kernel& f, const ProductIntensity& rho,
                                           const EvaluationOptions& opts) {
  return Functional("I" + std::to_string(f.order()) + "[" + f.name() + "]",
                    [f, rho, opts](const Configuration& w) { return eval_compensated(f, w, rho, opts).value; });
}

Functional uncompensated_integral_functional(const Kernel& f, const EvaluationOptions& opts) {
  return Functional("U" + std::to_string(f.order()) + "[" + f.name() + "]",
                    [f, opts](const Configuration& w) { return eval_uncompensated(f, w, opts); });
}

}  // namespace pm
