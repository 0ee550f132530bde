#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

namespace pm {

/// Neumaier-compensated running sum. Alternating-sign subset sums lose
/// digits with naive accumulation.
class KahanSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  KahanSum& operator+=(double v) noexcept {
    add(v);
    return *this;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Sample mean and standard error of the mean, accumulated in index order.
struct MeanStderr {
  double mean = 0.0;
  double std_error = 0.0;
  double variance = 0.0;
};

MeanStderr mean_and_stderr(std::span<const double> values);

struct GaussLegendreRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1]; exact for polynomials of degree
/// 2n-1. Rules are cached per n.
const GaussLegendreRule& gauss_legendre(int n);

/// Integrate a smooth function over [a, b] with an n-point rule.
template <class F>
double integrate_gl(F&& f, double a, double b, int n) {
  const auto& rule = gauss_legendre(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  KahanSum acc;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
  }
  return half * acc.value();
}

double factorial(int n);
double binomial(int n, int k);
/// k (k-1) ... (k-n+1); 0 when n > k.
double falling_factorial(std::size_t k, std::size_t n);

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::span<const char> bytes) noexcept;

/// Visits the strictly increasing index combinations of size n from [0, k)
/// in lexicographic order.
template <class Visit>
void for_each_combination(std::size_t k, int n, Visit&& visit) {
  if (n < 0 || static_cast<std::size_t>(n) > k) return;
  const auto m = static_cast<std::size_t>(n);
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  while (true) {
    visit(std::span<const std::size_t>(idx));
    std::size_t i = m;
    while (i > 0 && idx[i - 1] == k - (m - i + 1)) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < m; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace pm
