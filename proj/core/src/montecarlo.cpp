#include "poisson_malliavin/montecarlo.hpp"

#include <algorithm>
#include <cmath>

#include "poisson_malliavin/errors.hpp"
#include "poisson_malliavin/malliavin.hpp"
#include "poisson_malliavin/numeric.hpp"
#include "poisson_malliavin/parallel.hpp"

namespace pm {

namespace {

void judge(EstimateReport& r, double z_max) {
  if (!r.target) {
    r.pass = true;
    return;
  }
  const double gap = r.mean - *r.target;
  if (r.std_error > 0.0) {
    r.z = gap / r.std_error;
  } else if (gap == 0.0) {
    r.z = 0.0;
  }
  r.pass = r.z && std::abs(*r.z) < z_max;
}

struct Paired {
  double lhs = 0.0;
  double rhs = 0.0;
};

EstimateReport paired_report(std::string check, const std::vector<Paired>& pairs, const MonteCarloOptions& opts) {
  std::vector<double> l(pairs.size());
  std::vector<double> r(pairs.size());
  std::vector<double> d(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    l[i] = pairs[i].lhs;
    r[i] = pairs[i].rhs;
    d[i] = pairs[i].lhs - pairs[i].rhs;
  }
  EstimateReport rep;
  rep.check = std::move(check);
  rep.n = pairs.size();
  const auto md = mean_and_stderr(d);
  rep.mean = md.mean;
  rep.std_error = md.std_error;
  rep.target = 0.0;
  rep.lhs = mean_and_stderr(l).mean;
  rep.rhs = mean_and_stderr(r).mean;
  judge(rep, opts.z_max);
  return rep;
}

int nodes_for(int deg_h, int deg_f) {
  if (deg_h < 0 || deg_f < 0) return 8;
  return (deg_h + deg_f + 2) / 2;
}

void check_samples(const MonteCarloOptions& opts) {
  if (opts.samples < 2) throw InvalidArgument("Monte Carlo checks need at least 2 samples");
}

}  // namespace

EstimateReport estimate(const std::function<double(const Configuration&)>& G, const ProductIntensity& rho,
                        const MonteCarloOptions& opts, std::optional<double> target, std::string check) {
  check_samples(opts);
  auto values = parallel_map<double>(opts.samples, opts.threads,
                                     [&](std::size_t i) { return G(sample_poisson(rho, derive_seed(opts.seed, i))); });
  const auto ms = mean_and_stderr(values);
  EstimateReport r;
  r.check = std::move(check);
  r.n = opts.samples;
  r.mean = ms.mean;
  r.std_error = ms.std_error;
  r.target = target;
  judge(r, opts.z_max);
  return r;
}

AnchorRule anchor_rule(const Kernel& h, const FunctionalShape& shape, const ProductIntensity& rho) {
  const int k = h.order();
  if (k > 3) throw UnsupportedDimension("anchor rules are limited to k <= 3");
  std::vector<double> tb = h.traits().time_breaks;
  tb.insert(tb.end(), shape.time_breaks.begin(), shape.time_breaks.end());
  std::vector<double> mb = h.traits().mark_breaks;
  mb.insert(mb.end(), shape.mark_breaks.begin(), shape.mark_breaks.end());
  // A different rule order per coordinate keeps anchor atoms distinct: only
  // the first order may be odd, and Gauss-Legendre rules of distinct even
  // orders share no node.
  std::vector<std::vector<WeightedAtom>> axes;
  int nodes = nodes_for(h.traits().piecewise_degree, shape.piecewise_degree);
  for (int j = 0; j < k; ++j) {
    axes.push_back(space_quadrature(rho, tb, mb, nodes));
    nodes += nodes % 2 == 0 ? 2 : 1;
  }
  AnchorRule rule;
  std::vector<std::size_t> idx(static_cast<std::size_t>(k), 0);
  std::vector<Atom> tuple(static_cast<std::size_t>(k));
  while (true) {
    double w = 1.0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      tuple[i] = axes[i][idx[i]].atom;
      w *= axes[i][idx[i]].weight;
    }
    if (w != 0.0) {
      const double hv = h(tuple);
      if (hv != 0.0) {
        rule.tuples.push_back(tuple);
        rule.weights.push_back(w * hv);
      }
    }
    std::size_t pos = 0;
    while (pos < idx.size() && ++idx[pos] == axes[pos].size()) idx[pos++] = 0;
    if (pos == idx.size()) break;
  }
  return rule;
}

EstimateReport mecke_check(const Functional& F, const Kernel& h, const ProductIntensity& rho,
                           const MonteCarloOptions& opts) {
  check_samples(opts);
  const auto rule = anchor_rule(h, F.shape(), rho);
  auto pairs = parallel_map<Paired>(opts.samples, opts.threads, [&](std::size_t i) {
    const auto omega = sample_poisson(rho, derive_seed(opts.seed, i));
    Paired p;
    const double f = F(omega);
    p.lhs = f == 0.0 ? 0.0 : f * eval_uncompensated(h, omega, opts.evaluation);
    KahanSum s;
    for (std::size_t q = 0; q < rule.tuples.size(); ++q) s += rule.weights[q] * F(add_points(omega, rule.tuples[q]));
    p.rhs = s.value();
    return p;
  });
  auto rep = paired_report("mecke", pairs, opts);
  rep.extras.emplace_back("k", h.order());
  rep.extras.emplace_back("anchors", static_cast<double>(rule.tuples.size()));
  return rep;
}

EstimateReport ibp_check(const Functional& F, const Kernel& h, const ProductIntensity& rho,
                         const MonteCarloOptions& opts) {
  check_samples(opts);
  const auto rule = anchor_rule(h, F.shape(), rho);
  auto pairs = parallel_map<Paired>(opts.samples, opts.threads, [&](std::size_t i) {
    const auto omega = sample_poisson(rho, derive_seed(opts.seed, i));
    Paired p;
    const double f = F(omega);
    p.lhs = f == 0.0 ? 0.0 : f * eval_compensated(h, omega, rho, opts.evaluation).value;
    KahanSum s;
    for (std::size_t q = 0; q < rule.tuples.size(); ++q) {
      s += rule.weights[q] * iterated_difference(F, omega, rule.tuples[q]);
    }
    p.rhs = s.value();
    return p;
  });
  auto rep = paired_report("ibp", pairs, opts);
  rep.extras.emplace_back("k", h.order());
  rep.extras.emplace_back("anchors", static_cast<double>(rule.tuples.size()));
  return rep;
}

EstimateReport isometry_check(const Kernel& f, const ProductIntensity& rho, const MonteCarloOptions& opts) {
  check_samples(opts);
  const int n = f.order();
  const double norm2 = l2_norm_squared(f, rho, opts.evaluation.integration).value;
  auto values = parallel_map<double>(opts.samples, opts.threads, [&](std::size_t i) {
    const double v = eval_compensated(f, sample_poisson(rho, derive_seed(opts.seed, i)), rho, opts.evaluation).value;
    return v * v;
  });
  const auto ms = mean_and_stderr(values);
  EstimateReport r;
  r.check = "isometry";
  r.n = opts.samples;
  r.mean = ms.mean;
  r.std_error = ms.std_error;
  r.target = factorial(n) * norm2;
  judge(r, opts.z_max);
  r.extras.emplace_back("order", n);
  r.extras.emplace_back("norm_squared", norm2);
  r.extras.emplace_back("constant", factorial(n));
  if (norm2 > 0.0) {
    r.extras.emplace_back("ratio", ms.mean / norm2);
    r.extras.emplace_back("ratio_std_error", ms.std_error / norm2);
  }
  return r;
}

}  // namespace pm
