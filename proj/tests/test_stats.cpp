#include <random>

#include "doctest.h"
#include "qmaps/error.hpp"
#include "qmaps/stats.hpp"

using namespace qm::stats;

// Reference numbers below were produced once with scipy.stats and frozen.

TEST_CASE("chi-square survival") {
  CHECK(chi2_sf(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(chi2_sf(10, 4) == doctest::Approx(0.04042768199451279).epsilon(1e-9));
  CHECK(chi2_sf(0, 3) == 1.0);
}

TEST_CASE("goodness of fit") {
  auto r = chi_square_gof({18, 22, 30, 30}, {25, 25, 25, 25});
  CHECK(r.statistic == doctest::Approx(4.32));
  CHECK(r.dof == 3);
  CHECK(r.p_value == doctest::Approx(0.22891886433610517).epsilon(1e-9));

  // Two thin cells pool together; the pool (6) is large enough.
  auto p = chi_square_gof({20, 20, 3, 3}, {20, 20, 3, 3});
  CHECK(p.cells == 3);
  CHECK(p.statistic == doctest::Approx(0));
  // A lone thin cell takes the smallest regular cell with it.
  auto q = chi_square_gof({10, 20, 2}, {10, 20, 2});
  CHECK(q.cells == 2);
  // Mass where the reference has none.
  CHECK(chi_square_gof({10, 1}, {11, 0}).p_value == 0.0);
}

TEST_CASE("independence") {
  auto r = chi_square_independence({{20, 30, 25}, {30, 20, 25}});
  CHECK(r.statistic == doctest::Approx(4.0));
  CHECK(r.dof == 2);
  CHECK(r.p_value == doctest::Approx(0.1353352832366127).epsilon(1e-9));
  auto m = chi_square_independence({{50, 50, 1}, {50, 50, 1}, {1, 1, 0}});
  CHECK(m.dof == 1);
  CHECK_THROWS_AS(chi_square_independence({{1, 1}, {1, 1}}), qm::Error);
}

TEST_CASE("Kolmogorov distribution") {
  CHECK(kolmogorov_sf(1.3581) == doctest::Approx(0.0499996304316674).epsilon(1e-7));
  CHECK(kolmogorov_sf(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-7));
  CHECK(kolmogorov_sf(1.0) == doctest::Approx(0.26999967167735456).epsilon(1e-7));
  // Both branches agree at the switch point.
  CHECK(kolmogorov_sf(1.1799999) == doctest::Approx(kolmogorov_sf(1.18)).epsilon(1e-6));
  auto k = ks_uniform({0.1, 0.35, 0.4, 0.8, 0.95});
  CHECK(k.statistic == doctest::Approx(0.2));
  auto t = ks_two_sample({0.1, 0.2, 0.3}, {0.4, 0.5, 0.6});
  CHECK(t.statistic == doctest::Approx(1.0));
}

TEST_CASE("linear fit") {
  auto f = linear_fit({0, 1, 2, 3, 4}, {1.0, 2.9, 5.2, 7.1, 8.8});
  CHECK(f.slope == doctest::Approx(1.98));
  CHECK(f.intercept == doctest::Approx(1.04));
  CHECK(f.r2 == doctest::Approx(0.9987778791645302 * 0.9987778791645302));
  CHECK(f.se_slope == doctest::Approx(0.0565685424949238));
  CHECK(f.se_intercept == doctest::Approx(0.13856406460551018));
}
