#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "poisson_malliavin/errors.hpp"
#include "poisson_malliavin/integrals.hpp"
#include "poisson_malliavin/malliavin.hpp"
#include "poisson_malliavin/numeric.hpp"
#include "poisson_malliavin/registry.hpp"
#include "support.hpp"

using pm::Atom;

namespace {

struct Fixture {
  pm::ProductIntensity rho = testing::standard_rho();
  pm::RegionTable regions = testing::standard_regions();
  pm::Kernel K(const std::string& spec) const { return pm::make_kernel(spec, rho, regions); }
  double m(const std::string& r) const { return rho.mass(regions.at(r)); }
};

}  // namespace

TEST_SUITE("integrals") {
  TEST_CASE("factorial tuple counts") {
    const auto w3 = pm::make_configuration({{0.1, 0.0}, {0.2, 0.0}, {0.3, 0.0}}, 1.0);
    CHECK(pm::factorial_tuples(w3, 2).size() == 6);
    CHECK(pm::factorial_tuples(w3, 3).size() == 6);
    CHECK(pm::factorial_tuples(w3, 1).size() == 3);
    const auto w2 = pm::make_configuration({{0.1, 0.0}, {0.2, 0.0}}, 1.0);
    CHECK(pm::factorial_tuples(w2, 3).empty());
    for (const auto& t : pm::factorial_tuples(w3, 2)) CHECK(t[0] != t[1]);
  }

  TEST_CASE_FIXTURE(Fixture, "uncompensated integrals of indicators") {
    const auto w = pm::make_configuration({{0.1, 1.0}, {0.2, 2.0}, {0.4, 0.5}, {0.9, 4.0}}, 1.0);  // N(A) = 3
    CHECK(pm::eval_uncompensated(K("ind:A"), w) == 3.0);
    CHECK(pm::eval_uncompensated(K("tensor_ind:A"), w) == 6.0);
    CHECK(pm::eval_uncompensated(K("poly:0,3"), pm::make_configuration({{0.1, 1.0}, {0.2, 1.0}}, 1.0)) == 0.0);
  }

  TEST_CASE_FIXTURE(Fixture, "term budget") {
    std::mt19937_64 rng(1);
    const auto w = testing::random_configuration(rng, 6);
    pm::EvaluationOptions tight;
    tight.term_budget = 10;
    CHECK_THROWS_AS(pm::eval_uncompensated(K("tensor_ind:A,B"), w, tight), pm::BudgetExceeded);
    CHECK_THROWS_AS(pm::eval_uncompensated(K("poly:0,3"), w, tight), pm::BudgetExceeded);
    CHECK_NOTHROW(pm::eval_uncompensated(K("ind:A"), w, tight));
  }

  TEST_CASE_FIXTURE(Fixture, "compensated integrals in closed form") {
    const double a = m("A");
    const pm::Configuration empty(1.0);
    CHECK(pm::eval_compensated(K("ind:A"), empty, rho).value == doctest::Approx(-a));
    CHECK(pm::eval_compensated(K("tensor_ind:A"), empty, rho).value == doctest::Approx(a * a));
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 50; ++rep) {
      const auto w = testing::random_configuration(rng, rep % 7);
      const double n = double(pm::count(w, regions.at("A")));
      CHECK(pm::eval_compensated(K("ind:A"), w, rho).value == doctest::Approx(n - a));
      CHECK(pm::eval_compensated(K("tensor_ind:A"), w, rho).value ==
            doctest::Approx(n * (n - 1.0) - 2.0 * a * n + a * a));
    }
  }

  TEST_CASE_FIXTURE(Fixture, "non symmetric second order integral") {
    const double a = m("A"), b = m("B");
    const auto f = K("tensor_ind:A,B");
    const auto fs = pm::symmetrize(f);
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 50; ++rep) {
      const auto w = testing::random_configuration(rng, rep % 7);
      double pairs = 0.0;
      for (const auto& x : w)
        for (const auto& y : w)
          if (x != y) pairs += f({x, y});
      const double na = double(pm::count(w, regions.at("A")));
      const double nb = double(pm::count(w, regions.at("B")));
      const double ref = pairs - na * b - a * nb + a * b;
      CHECK(pm::eval_compensated(f, w, rho).value == doctest::Approx(ref).epsilon(1e-12));
      CHECK(pm::eval_compensated(fs, w, rho).value == doctest::Approx(ref).epsilon(1e-12));
      CHECK(pm::eval_uncompensated(fs, w) == doctest::Approx(pairs).epsilon(1e-12));
    }
  }

  TEST_CASE_FIXTURE(Fixture, "symmetrization") {
    const auto g = K("gauss:0.5");
    const auto gs = pm::symmetrize(g);
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 20; ++rep) {
      const auto xs = testing::random_atoms(rng, 2);
      CHECK(gs(xs) == doctest::Approx(g(xs)));
    }
    const auto f = K("tensor_ind:A,B");
    const auto fs = pm::symmetrize(f);
    const Atom x{0.1, 1.0}, y{0.9, 4.0};  // x in A only, y in B only
    CHECK(fs({x, y}) == doctest::Approx(0.5));
    CHECK(fs({y, x}) == doctest::Approx(0.5));

    std::vector<pm::Factor> nine(9, pm::Factor{1.0, 0, regions.at("A")});
    nine[0].region = regions.at("B");
    CHECK_THROWS_AS(pm::symmetrize(pm::Kernel::tensor("nine", nine)), pm::OrderTooLarge);
  }

  TEST_CASE_FIXTURE(Fixture, "symmetrization leaves third order integrals unchanged") {
    const auto f = pm::Kernel::tensor("abx", {pm::Factor{1.0, 1, regions.at("A")}, pm::Factor{2.0, 0, regions.at("B")},
                                              pm::Factor{1.0, 0, regions.at("X")}});
    const auto fs = pm::symmetrize(f);
    std::mt19937_64 rng(6);
    for (int rep = 0; rep < 30; ++rep) {
      const auto w = testing::random_configuration(rng, rep % 6);
      CHECK(pm::eval_compensated(fs, w, rho).value == doctest::Approx(pm::eval_compensated(f, w, rho).value).epsilon(1e-10));
      CHECK(pm::eval_uncompensated(fs, w) == doctest::Approx(pm::eval_uncompensated(f, w)).epsilon(1e-10));
    }
  }

  TEST_CASE_FIXTURE(Fixture, "conversion between integral families") {
    const double a = m("A");
    SUBCASE("first order") {
      const auto d = pm::to_compensated(K("ind:A"), rho);
      CHECK(d.scalar == doctest::Approx(a));
      REQUIRE(d.kernels.size() == 1);
      CHECK(d.kernels[0]({{0.1, 1.0}}) == 1.0);
      const auto u = pm::to_uncompensated(K("ind:A"), rho);
      CHECK(u.scalar == doctest::Approx(-a));
    }
    SUBCASE("second order") {
      const auto d = pm::to_compensated(K("tensor_ind:A"), rho);
      CHECK(d.scalar == doctest::Approx(a * a));
      REQUIRE(d.kernels.size() == 2);
      CHECK(d.kernels[0]({{0.1, 1.0}}) == doctest::Approx(2.0 * a));
      CHECK(d.kernels[0]({{0.9, 1.0}}) == 0.0);
      const auto u = pm::to_uncompensated(K("tensor_ind:A"), rho);
      CHECK(u.scalar == doctest::Approx(a * a));
      CHECK(u.kernels[0]({{0.1, 1.0}}) == doctest::Approx(-2.0 * a));
    }
    CHECK_THROWS_AS(pm::to_compensated(K("tensor_ind:A,B"), rho), pm::InvalidArgument);
  }

  TEST_CASE_FIXTURE(Fixture, "conversions reproduce the integral pathwise") {
    const char* specs[] = {"ind:A", "tensor_ind:A", "poly:1,2", "poly:1,3", "gauss:0.8"};
    std::mt19937_64 rng(8);
    for (const char* s : specs) {
      const auto f = K(s);
      const auto to_c = pm::to_compensated(f, rho);
      const auto to_u = pm::to_uncompensated(f, rho);
      for (int rep = 0; rep < 20; ++rep) {
        const auto w = testing::random_configuration(rng, rep % 5);
        const double u = pm::eval_uncompensated(f, w);
        const double c = pm::eval_compensated(f, w, rho).value;
        CHECK(pm::evaluate(to_c, w, rho).value == doctest::Approx(u).epsilon(1e-9));
        CHECK(pm::evaluate(to_u, w, rho).value == doctest::Approx(c).epsilon(1e-9));
      }
    }
  }

  TEST_CASE_FIXTURE(Fixture, "difference of a compensated integral") {
    const char* specs[] = {"tensor_ind:A", "poly:1,2", "poly:1,3", "gauss:0.8"};
    std::mt19937_64 rng(10);
    for (const char* s : specs) {
      const auto f = K(s);
      const auto I = pm::compensated_integral_functional(f, rho);
      for (int rep = 0; rep < 10; ++rep) {
        const auto w = testing::random_configuration(rng, rep % 4);
        const Atom a = testing::random_atoms(rng, 1)[0];
        const double lhs = pm::difference(I, w, a);
        const double rhs = f.order() * pm::eval_compensated(pm::section(f, a), w, rho).value;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
      }
    }
    const auto I1 = pm::compensated_integral_functional(K("ind:A"), rho);
    CHECK(pm::difference(I1, pm::Configuration(1.0), {0.1, 1.0}) == doctest::Approx(1.0));
  }

  TEST_CASE_FIXTURE(Fixture, "compensated integrals are centred") {
    const char* specs[] = {"ind:B", "tensor_ind:A", "poly:1,3"};
    for (const char* s : specs) {
      const auto f = K(s);
      std::vector<double> v;
      for (int i = 0; i < 20000; ++i) {
        v.push_back(pm::eval_compensated(f, pm::sample_poisson(rho, pm::derive_seed(pm::Seed{31}, i)), rho).value);
      }
      const auto ms = pm::mean_and_stderr(v);
      CHECK(std::abs(ms.mean) < 4.0 * ms.std_error);
    }
  }

  TEST_CASE("isometry constant from Poisson moments") {
    for (double m : {0.5, 1.8, 5.0}) {
      CHECK(oracle::isometry_constant(1, m) == doctest::Approx(1.0).epsilon(1e-10));
      CHECK(oracle::isometry_constant(2, m) == doctest::Approx(2.0).epsilon(1e-10));
    }
  }
}
