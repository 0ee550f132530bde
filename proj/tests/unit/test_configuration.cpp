#include <doctest.h>

#include <nlohmann/json.hpp>
#include <random>

#include "poisson_malliavin/configuration.hpp"
#include "poisson_malliavin/errors.hpp"
#include "support.hpp"

using pm::Atom;
using pm::Configuration;

TEST_SUITE("configuration") {
  TEST_CASE("atoms are kept in lexicographic order") {
    const auto w = pm::make_configuration({{0.7, 1.0}, {0.2, 4.0}, {0.2, 1.0}}, 1.0);
    REQUIRE(w.size() == 3);
    CHECK(w.atoms()[0] == Atom{0.2, 1.0});
    CHECK(w.atoms()[1] == Atom{0.2, 4.0});
    CHECK(w.atoms()[2] == Atom{0.7, 1.0});
  }

  TEST_CASE("atoms outside the window or repeated are rejected") {
    CHECK_THROWS_AS(pm::make_configuration({{1.5, 0.0}}, 1.0), pm::AtomOutOfWindow);
    CHECK_THROWS_AS(pm::make_configuration({{-0.1, 0.0}}, 1.0), pm::AtomOutOfWindow);
    CHECK_THROWS_AS(pm::make_configuration({{0.5, 2.0}, {0.5, 2.0}}, 1.0), pm::DuplicateAtom);
    CHECK_NOTHROW(pm::make_configuration({{1.0, 0.0}}, 1.0));
  }

  TEST_CASE("adding points is idempotent and order free") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 100; ++rep) {
      const auto w = testing::random_configuration(rng, 4);
      const auto extra = testing::random_atoms(rng, 3);
      const auto once = pm::add_points(w, extra);
      CHECK(once.size() == 7);
      CHECK(pm::add_points(once, extra).size() == once.size());
      std::vector<Atom> rev(extra.rbegin(), extra.rend());
      const auto other = pm::add_points(w, rev);
      CHECK(std::equal(once.begin(), once.end(), other.begin(), other.end()));
      CHECK(pm::add_point(w, w.atoms()[0]).size() == w.size());
    }
  }

  TEST_CASE("truncation is strict and composes by minimum") {
    const auto w = pm::make_configuration({{0.1, 0.0}, {0.3, 1.0}, {0.5, 2.0}}, 1.0);
    CHECK(pm::truncate_before(w, 0.3).size() == 1);
    CHECK(pm::truncate_before(w, 0.30000001).size() == 2);
    CHECK(pm::truncate_before(w, 0.0).empty());
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
      const auto v = testing::random_configuration(rng, 6);
      const double s = u(rng), t = u(rng);
      const auto lhs = pm::truncate_before(pm::truncate_before(v, s), t);
      const auto rhs = pm::truncate_before(v, std::min(s, t));
      CHECK(std::equal(lhs.begin(), lhs.end(), rhs.begin(), rhs.end()));
    }
  }

  TEST_CASE("counts on windows") {
    const Configuration empty(1.0);
    const pm::Region all = pm::Region::whole(1.0);
    CHECK(pm::count(empty, all) == 0);
    const auto w = pm::make_configuration({{0.2, 1.0}, {0.6, 2.0}}, 1.0);
    CHECK(pm::count(w, all) == 2);
    const pm::Region late_point{{0.5, 1.0, true}, pm::MarkSet::points({2.0})};
    CHECK(pm::count(w, late_point) == 1);
    CHECK(pm::count_before(w, all, 0.6) == 1);
    CHECK(pm::count_before(w, all, 0.61) == 2);
  }

  TEST_CASE("counts are additive over disjoint windows") {
    std::mt19937_64 rng(3);
    const pm::Region left{{0.0, 0.4}, pm::MarkSet::all()};
    const pm::Region right{{0.4, 1.0, true}, pm::MarkSet::all()};
    for (int rep = 0; rep < 100; ++rep) {
      const auto w = testing::random_configuration(rng, 8);
      CHECK(pm::count(w, left) + pm::count(w, right) == w.size());
    }
  }

  TEST_CASE("restriction keeps atoms inside the region") {
    const auto w = pm::make_configuration({{0.2, 1.0}, {0.6, 4.0}}, 1.0);
    const auto r = pm::restrict_to(w, pm::Region{{0.0, 1.0, true}, pm::MarkSet::interval({0.0, 2.0})});
    REQUIRE(r.size() == 1);
    CHECK(r.atoms()[0] == Atom{0.2, 1.0});
  }

  TEST_CASE("json round trip") {
    const auto w = pm::make_configuration({{0.25, 1.5}, {0.75, 0.5}}, 2.0);
    const nlohmann::json j = w;
    const auto back = pm::configuration_from_json(j);
    CHECK(back.horizon() == 2.0);
    CHECK(std::equal(w.begin(), w.end(), back.begin(), back.end()));
  }
}
