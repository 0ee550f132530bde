#include "poisson_malliavin/expansions.hpp"

#include <algorithm>
#include <cmath>

#include "poisson_malliavin/errors.hpp"
#include "poisson_malliavin/numeric.hpp"
#include "poisson_malliavin/parallel.hpp"

namespace pm {

namespace {

Configuration sub_configuration(const Configuration& omega, std::span<const std::size_t> idx) {
  std::vector<Atom> atoms;
  atoms.reserve(idx.size());
  for (auto i : idx) atoms.push_back(omega[i]);
  return add_points(Configuration(omega.horizon()), atoms);
}

void finish(ExpansionReport& r, double tolerance) {
  r.tolerance = tolerance;
  const double scale = 1.0 + std::abs(r.value);
  KahanSum s;
  for (std::size_t k = 0; k < r.terms.size(); ++k) {
    s += r.terms[k];
    r.partial_sums.push_back(s.value());
    r.residuals.push_back(std::abs(r.value - s.value()));
    if (!r.exactness_order && r.residuals.back() < tolerance * scale) r.exactness_order = static_cast<int>(k);
  }
}

// terms[k] = sum over k-subsets S of omega of T_k F(S), by the subset
// (Moebius) transform of S -> F(S).
std::vector<double> moebius_terms(const Functional& F, const Configuration& omega, int n_max) {
  const std::size_t k = omega.size();
  const std::size_t full = std::size_t{1} << k;
  std::vector<double> v(full);
  std::vector<std::size_t> idx;
  for (std::size_t s = 0; s < full; ++s) {
    idx.clear();
    for (std::size_t i = 0; i < k; ++i) {
      if ((s >> i) & 1u) idx.push_back(i);
    }
    v[s] = F(sub_configuration(omega, idx));
  }
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    for (std::size_t s = 0; s < full; ++s) {
      if (s & bit) v[s] -= v[s ^ bit];
    }
  }
  std::vector<KahanSum> sums(static_cast<std::size_t>(n_max) + 1);
  for (std::size_t s = 1; s < full; ++s) {
    const auto c = static_cast<std::size_t>(std::popcount(s));
    if (c <= static_cast<std::size_t>(n_max)) sums[c] += v[s];
  }
  std::vector<double> out(static_cast<std::size_t>(n_max) + 1, 0.0);
  for (std::size_t c = 1; c < out.size(); ++c) out[c] = sums[c].value();
  return out;
}

}  // namespace

ExpansionReport pseudo_chaotic_sum(const Functional& F, const Configuration& omega, int n_max,
                                   const ExpansionOptions& opts) {
  if (n_max < 0) throw InvalidArgument("pseudo_chaotic_sum: negative order");
  if (n_max > opts.order_budget) {
    throw OrderTooLarge("pseudo_chaotic_sum: order " + std::to_string(n_max) + " exceeds budget " +
                        std::to_string(opts.order_budget));
  }
  ExpansionReport r;
  r.functional = F.name();
  r.kind = "pseudo_chaotic";
  r.value = F(omega);
  r.terms.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  r.terms[0] = F(Configuration(omega.horizon()));
  const int top = std::min(n_max, static_cast<int>(omega.size()));

  if (const auto& pk = F.pseudo_kernels()) {
    const int last = pk->vanishes_above ? std::min(top, *pk->vanishes_above) : top;
    std::vector<Atom> tuple;
    for (int n = 1; n <= last; ++n) {
      KahanSum s;
      tuple.resize(static_cast<std::size_t>(n));
      for_each_combination(omega.size(), n, [&](std::span<const std::size_t> idx) {
        for (std::size_t i = 0; i < idx.size(); ++i) tuple[i] = omega[idx[i]];
        s += pk->value(tuple);
      });
      r.terms[static_cast<std::size_t>(n)] = s.value();
    }
  } else if (static_cast<int>(omega.size()) <= opts.subset_transform_limit) {
    auto t = moebius_terms(F, omega, top);
    std::copy(t.begin() + 1, t.end(), r.terms.begin() + 1);
  } else {
    const DifferenceOptions dopts{opts.order_budget};
    std::vector<Atom> tuple;
    for (int n = 1; n <= top; ++n) {
      KahanSum s;
      tuple.resize(static_cast<std::size_t>(n));
      for_each_combination(omega.size(), n, [&](std::span<const std::size_t> idx) {
        for (std::size_t i = 0; i < idx.size(); ++i) tuple[i] = omega[idx[i]];
        s += deterministic_diff(F, tuple, omega.horizon(), dopts);
      });
      r.terms[static_cast<std::size_t>(n)] = s.value();
    }
  }
  finish(r, opts.tolerance);
  return r;
}

ExpansionReport chaotic_sum(const Functional& F, const Configuration& omega, const ProductIntensity& rho,
                            int n_max, const ExpansionOptions& opts) {
  const auto& chaos = F.chaos();
  if (!chaos) throw KernelsUnavailable("functional '" + F.name() + "' has no closed-form chaos kernels");
  if (n_max < 0) throw InvalidArgument("chaotic_sum: negative order");
  if (n_max > opts.order_budget) {
    throw OrderTooLarge("chaotic_sum: order " + std::to_string(n_max) + " exceeds budget " +
                        std::to_string(opts.order_budget));
  }
  ExpansionReport r;
  r.functional = F.name();
  r.kind = "chaotic";
  r.value = F(omega);
  r.terms.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  r.terms[0] = chaos->mean;
  const int last = chaos->exact_order ? std::min(n_max, *chaos->exact_order) : n_max;
  for (int n = 1; n <= last; ++n) {
    const auto kernel = chaos->kernel(n);
    if (!kernel) continue;
    r.terms[static_cast<std::size_t>(n)] = eval_compensated(*kernel, omega, rho, opts.evaluation).value / factorial(n);
  }
  finish(r, opts.tolerance);
  return r;
}

Estimate estimate_chaos_kernel(const Functional& F, std::span<const Atom> tuple, const ProductIntensity& rho,
                               std::size_t samples, Seed seed, int threads) {
  if (samples < 2) throw InvalidArgument("estimate_chaos_kernel needs at least 2 samples");
  const std::vector<Atom> owned(tuple.begin(), tuple.end());
  auto values = parallel_map<double>(samples, threads, [&](std::size_t i) {
    const auto omega = sample_poisson(rho, derive_seed(seed, i));
    return iterated_difference(F, omega, owned);
  });
  const auto ms = mean_and_stderr(values);
  return {ms.mean, ms.std_error, samples};
}

double pco_verify(const Functional& F, const Configuration& omega) {
  KahanSum s;
  s += F(omega);
  s += -F(Configuration(omega.horizon()));
  for (const auto& a : omega) s += -pco_integrand(F, omega, a);
  return s.value();
}

UniquenessReport pco_uniqueness_probe(const Functional& F, const IntegrandProcess& Z,
                                      std::span<const Configuration> paths) {
  UniquenessReport r;
  for (const auto& omega : paths) {
    KahanSum rep;
    rep += F(omega);
    rep += -F(Configuration(omega.horizon()));
    for (const auto& a : omega) {
      const double z = Z(omega, a);
      rep += -z;
      r.max_deviation = std::max(r.max_deviation, std::abs(z - pco_integrand(F, omega, a)));
      ++r.atoms_checked;
    }
    r.max_representation_residual = std::max(r.max_representation_residual, std::abs(rep.value()));
  }
  return r;
}

double co_residual(const Functional& F, const Configuration& omega, const ProductIntensity& rho,
                   int nodes_per_piece) {
  const auto& proj = F.projection();
  if (!proj) throw ProjectionUnavailable("functional '" + F.name() + "' has no closed-form projection");
  const double T = rho.horizon;
  std::vector<double> cuts{0.0, T};
  for (double b : proj->time_breaks) {
    if (b > 0.0 && b < T) cuts.push_back(b);
  }
  for (const auto& a : omega) cuts.push_back(a.t);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  KahanSum compensator;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    compensator += integrate_gl([&](double t) { return proj->mark_integrated(omega, t); }, cuts[i], cuts[i + 1],
                                nodes_per_piece);
  }
  KahanSum s;
  s += F(omega);
  s += -proj->mean;
  for (const auto& a : omega) s += -proj->value(omega, a);
  s += compensator.value();
  return s.value();
}

ProjectionProbe projection_probe(const Functional& F, const Configuration& omega, const Atom& a,
                                 const ProductIntensity& rho, std::size_t m, Seed seed, int threads) {
  const auto& proj = F.projection();
  if (!proj) throw ProjectionUnavailable("functional '" + F.name() + "' has no closed-form projection");
  ProjectionProbe p;
  p.nested = conditional_expectation([&](const Configuration& w) { return difference(F, w, a); }, omega, a.t, rho,
                                     m, seed, threads);
  p.closed_form = proj->value(omega, a);
  const double diff = p.nested.value - p.closed_form;
  p.z = p.nested.std_error > 0.0 ? diff / p.nested.std_error : (diff == 0.0 ? 0.0 : INFINITY);
  return p;
}

ResidualReport summarize_residuals(std::span<const double> residuals, std::span<const double> values,
                                   double tolerance) {
  if (residuals.size() != values.size()) throw InvalidArgument("summarize_residuals: size mismatch");
  ResidualReport r;
  r.samples = residuals.size();
  r.tolerance = tolerance;
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    const double a = std::abs(residuals[i]);
    r.max_abs_residual = std::max(r.max_abs_residual, a);
    r.max_scaled_residual = std::max(r.max_scaled_residual, a / (1.0 + std::abs(values[i])));
  }
  if (!residuals.empty()) {
    const auto ms = mean_and_stderr(residuals);
    r.mean_residual = ms.mean;
    r.std_error = ms.std_error;
  }
  r.pass = r.max_scaled_residual < tolerance;
  return r;
}

WindowTable windowed_pco_convergence(const Functional& F, const ProductIntensity& rho_full,
                                     std::span<const Region> windows, std::size_t samples, Seed seed,
                                     int threads) {
  if (samples < 2) throw InvalidArgument("windowed_pco_convergence needs at least 2 samples");
  const std::vector<Region> ws(windows.begin(), windows.end());
  for (std::size_t j = 1; j < ws.size(); ++j) {
    const double inner = rho_full.mass(ws[j - 1]);
    if (std::abs(rho_full.mass(ws[j - 1].intersect(ws[j])) - inner) > 1e-12 * (1.0 + inner)) {
      throw InvalidArgument("windows must be nested");
    }
  }
  struct PerSample {
    std::vector<double> l1;
    std::vector<double> residual;
  };
  auto per = parallel_map<PerSample>(samples, threads, [&](std::size_t i) {
    const auto omega = sample_poisson(rho_full, derive_seed(seed, i));
    const double f = F(omega);
    PerSample out;
    for (const auto& w : ws) {
      const Functional Fj(F.name() + "|window",
                          [&F, w](const Configuration& c) { return F(restrict_to(c, w)); });
      out.l1.push_back(std::abs(f - Fj(omega)));
      out.residual.push_back(std::abs(pco_verify(Fj, omega)) / (1.0 + std::abs(Fj(omega))));
    }
    return out;
  });
  WindowTable table;
  table.samples = samples;
  table.empty_configuration_value = 0.0;
  std::vector<double> col(samples);
  for (std::size_t j = 0; j < ws.size(); ++j) {
    WindowRow row;
    row.window = j + 1;
    row.mass = rho_full.mass(ws[j]);
    for (std::size_t i = 0; i < samples; ++i) {
      col[i] = per[i].l1[j];
      row.max_pco_residual = std::max(row.max_pco_residual, per[i].residual[j]);
    }
    const auto ms = mean_and_stderr(col);
    row.l1_mean = ms.mean;
    row.l1_std_error = ms.std_error;
    table.rows.push_back(row);
  }
  return table;
}

std::vector<Estimate> integrand_l1_batches(const Functional& F, const ProductIntensity& rho, std::size_t batches,
                                           std::size_t per_batch, Seed seed, int threads) {
  if (per_batch < 2) throw InvalidArgument("integrand_l1_batches needs at least 2 samples per batch");
  auto values = parallel_map<double>(batches * per_batch, threads, [&](std::size_t i) {
    const auto omega = sample_poisson(rho, derive_seed(seed, i));
    KahanSum s;
    for (const auto& a : omega) s += std::abs(pco_integrand(F, omega, a));
    return s.value();
  });
  std::vector<Estimate> out;
  for (std::size_t b = 0; b < batches; ++b) {
    const auto ms = mean_and_stderr(std::span<const double>(values).subspan(b * per_batch, per_batch));
    out.push_back({ms.mean, ms.std_error, per_batch});
  }
  return out;
}

}  // namespace pm
