#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "poisson_malliavin/errors.hpp"
#include "poisson_malliavin/malliavin.hpp"
#include "poisson_malliavin/numeric.hpp"
#include "poisson_malliavin/processes.hpp"

using pm::Atom;

namespace {

pm::HawkesModel default_model() { return pm::HawkesModel{}; }

pm::HawkesModel box_model() {
  pm::HawkesModel m;
  m.kernel = pm::BoxKernel{0.4, 1.5};
  m.horizon = 5.0;
  m.theta_cap = 15.0;
  return m;
}

}  // namespace

TEST_SUITE("processes") {
  TEST_CASE("intensity uses the strict past") {
    const auto m = default_model();
    CHECK(pm::hawkes_intensity(m, {}, 3.0) == 1.0);
    const std::vector<double> ev{0.0};
    CHECK(pm::hawkes_intensity(m, ev, 0.0) == 1.0);
    CHECK(pm::hawkes_intensity(m, ev, 1.0) == doctest::Approx(1.0 + 0.5 * std::exp(-1.0)));
    const std::vector<double> two{0.5, 1.0};
    CHECK(pm::hawkes_intensity(m, two, 2.0) == doctest::Approx(1.0 + 0.5 * (std::exp(-1.5) + std::exp(-1.0))));
    const auto b = box_model();
    CHECK(pm::hawkes_intensity(b, ev, 1.5) == doctest::Approx(1.4));
    CHECK(pm::hawkes_intensity(b, ev, 1.6) == doctest::Approx(1.0));
  }

  TEST_CASE("model validation") {
    auto m = default_model();
    CHECK(pm::branching_ratio(m) == doctest::Approx(0.5));
    CHECK(pm::validate(m, true).empty());
    auto bad = default_model();
    bad.mu = -1.0;
    CHECK_THROWS_AS(pm::validate(bad, true), pm::InvalidArgument);
    auto super = default_model();
    super.kernel = pm::ExponentialKernel{2.0, 1.0};
    CHECK_THROWS_AS(pm::validate(super, false), pm::InvalidArgument);
    CHECK(!pm::validate(super, true).empty());
  }

  TEST_CASE("json parsing rejects unknown keys") {
    const auto m = pm::hawkes_from_json(nlohmann::json::parse(R"({"mu": 2, "kernel": {"type": "box", "height": 0.2, "width": 2}, "T": 3, "theta_cap": 9})"));
    CHECK(m.mu == 2.0);
    CHECK(std::holds_alternative<pm::BoxKernel>(m.kernel));
    CHECK_THROWS_AS(pm::hawkes_from_json(nlohmann::json::parse(R"({"mu": 2, "lambda": 1})")), pm::ConfigError);
    nlohmann::json j = m;
    const auto back = pm::hawkes_from_json(j);
    CHECK(back.horizon == m.horizon);
    CHECK(back.theta_cap == m.theta_cap);
  }

  TEST_CASE("expected counts against the renewal equation") {
    const auto m = default_model();
    const double exact = pm::expected_count(m);
    CHECK(exact == doctest::Approx(18.01347589399817).epsilon(1e-12));
    const double ref = oracle::hawkes_mean_count(1.0, [](double s) { return 0.5 * std::exp(-s); }, 10.0, 4000);
    CHECK(exact == doctest::Approx(ref).epsilon(1e-5));

    const auto b = box_model();
    const double ref_box = oracle::hawkes_mean_count(1.0, [](double s) { return s > 0.0 && s <= 1.5 ? 0.4 : 0.0; }, 5.0, 4000);
    CHECK(pm::expected_count(b) == doctest::Approx(ref_box).epsilon(1e-3));
  }

  TEST_CASE("simulation is reproducible") {
    const auto m = default_model();
    const auto a = pm::simulate_hawkes(m, pm::Seed{3});
    const auto b = pm::simulate_hawkes(m, pm::Seed{3});
    CHECK(a.accepted == b.accepted);
    CHECK(std::is_sorted(a.accepted.begin(), a.accepted.end()));
  }

  TEST_CASE("without excitation thinning keeps marks below mu") {
    auto m = default_model();
    m.kernel = pm::ExponentialKernel{0.0, 1.0};
    for (int i = 0; i < 20; ++i) {
      const auto p = pm::simulate_hawkes(m, pm::derive_seed(pm::Seed{1}, i));
      std::size_t below = 0;
      for (const auto& a : p.ground) below += a.x <= 1.0 ? 1 : 0;
      CHECK(p.accepted.size() == below);
    }
  }

  TEST_CASE("acceptance indicator") {
    const auto m = default_model();
    const pm::Configuration empty(10.0);
    CHECK(pm::hawkes_pco_integrand(m, empty, {2.0, 0.5}) == 1.0);
    CHECK(pm::hawkes_pco_integrand(m, empty, {2.0, 1.5}) == 0.0);
    const auto w = pm::make_configuration({{1.0, 0.3}}, 10.0);
    CHECK(pm::hawkes_pco_integrand(m, w, {2.0, 1.1}) == 1.0);
    CHECK(pm::hawkes_pco_integrand(m, w, {0.5, 1.1}) == 0.0);
  }

  TEST_CASE("count equals the sum of acceptance indicators") {
    for (const auto& m : {default_model(), box_model()}) {
      const auto F = pm::hawkes_count_functional(m, "t");
      for (int i = 0; i < 100; ++i) {
        const auto p = pm::simulate_hawkes(m, pm::derive_seed(pm::Seed{5}, i));
        double sum = 0.0;
        for (const auto& a : p.ground) {
          const double h = pm::hawkes_pco_integrand(m, p.ground, a);
          CHECK(h == pm::pco_integrand(F, p.ground, a));
          sum += h;
        }
        CHECK(sum == double(p.accepted.size()));
        CHECK(F(p.ground) == double(p.accepted.size()));
      }
    }
  }

  TEST_CASE("adding late ground atoms keeps earlier decisions") {
    const auto m = default_model();
    const auto p = pm::simulate_hawkes(m, pm::Seed{8});
    const auto extended = pm::thin(m, pm::add_points(p.ground, std::vector<Atom>{{9.99, 0.1}}));
    REQUIRE(extended.accepted.size() >= p.accepted.size());
    CHECK(std::equal(p.accepted.begin(), p.accepted.end(), extended.accepted.begin()));
  }

  TEST_CASE("simulated means match the expected count") {
    for (const auto& m : {default_model(), box_model()}) {
      std::vector<double> v;
      for (int i = 0; i < 4000; ++i) v.push_back(double(pm::simulate_hawkes(m, pm::derive_seed(pm::Seed{10}, i)).accepted.size()));
      const auto ms = pm::mean_and_stderr(v);
      CHECK(std::abs(ms.mean - pm::expected_count(m)) < 4.0 * ms.std_error);
    }
  }
}
