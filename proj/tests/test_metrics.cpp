// Statistics layer: correlation, quantiles, the normal inverse CDF, the
// dependent-correlation confidence interval, bootstrap resampling, and the
// monotone cubic summaries.  Reference values were computed independently
// with numpy/scipy and are frozen here.

#include <algorithm>
#include <cmath>
#include <vector>

#include "alignnet/metrics.hpp"
#include "alignnet/model.hpp"
#include "doctest.h"

using namespace alignnet;

TEST_CASE("lcc matches an independent computation") {
  std::vector<double> x = {1.0, 2.0, 3.0, 4.0, 5.0, 6.5};
  std::vector<double> y = {2.1, 2.9, 4.2, 4.8, 6.3, 7.0};
  CHECK(lcc(x, y) == doctest::Approx(0.99034670809754866).epsilon(1e-14));

  std::vector<double> x2 = {0.5, -1.25, 3.75, 2.0, -0.25, 1.5, 4.25, -2.0};
  std::vector<double> y2 = {1.0, 3.5, -2.25, 0.75, 2.0, -1.5, -3.0, 4.5};
  CHECK(lcc(x2, y2) == doctest::Approx(-0.95622362685673568).epsilon(1e-14));

  SUBCASE("perfect linear relation clamps to exactly 1") {
    std::vector<double> a = {1.0, 2.0, 3.0, 4.0};
    std::vector<double> b = {2.0, 4.0, 6.0, 8.0};
    CHECK(lcc(a, b) == 1.0);
    for (double& v : b) v = -v;
    CHECK(lcc(a, b) == -1.0);
  }

  SUBCASE("degenerate inputs throw StatError") {
    std::vector<double> flat = {2.0, 2.0, 2.0, 2.0};
    std::vector<double> ramp = {1.0, 2.0, 3.0, 4.0};
    CHECK_THROWS_AS(lcc(flat, ramp), StatError);
    CHECK_THROWS_AS(lcc(ramp, flat), StatError);
    std::vector<double> two = {1.0, 2.0};
    CHECK_THROWS_AS(lcc(two, two), StatError);
  }

  SUBCASE("mismatched lengths are a shape error") {
    std::vector<double> a = {1.0, 2.0, 3.0};
    std::vector<double> b = {1.0, 2.0};
    CHECK_THROWS_AS(lcc(a, b), ShapeError);
  }
}

TEST_CASE("rmse is the square root of the mean squared error") {
  std::vector<double> a = {1.0, 2.0, 3.0, 4.0};
  std::vector<double> b = {1.5, 1.5, 3.5, 3.0};
  CHECK(rmse(a, b) == doctest::Approx(0.66143782776614768).epsilon(1e-15));
  CHECK(rmse(a, a) == 0.0);
}

TEST_CASE("inverse normal CDF reproduces scipy quantiles") {
  // Acklam's rational approximation is good to ~1.2e-9 relative error.
  struct Row {
    double p, z;
  };
  const Row rows[] = {
      {0.001, -3.0902323061678132}, {0.01, -2.3263478740408408},
      {0.025, -1.9599639845400545}, {0.1, -1.2815515655446004},
      {0.3, -0.52440051270804089},  {0.5, 0.0},
      {0.7, 0.52440051270804067},   {0.9, 1.2815515655446004},
      {0.975, 1.959963984540054},   {0.99, 2.3263478740408408},
      {0.999, 3.0902323061678132},
  };
  for (const Row& r : rows) {
    CHECK(inverse_normal_cdf(r.p) == doctest::Approx(r.z).epsilon(5e-9));
  }
  SUBCASE("symmetry") {
    CHECK(inverse_normal_cdf(0.25) ==
          doctest::Approx(-inverse_normal_cdf(0.75)).epsilon(1e-12));
  }
  SUBCASE("domain ends throw") {
    CHECK_THROWS_AS(inverse_normal_cdf(0.0), StatError);
    CHECK_THROWS_AS(inverse_normal_cdf(1.0), StatError);
    CHECK_THROWS_AS(inverse_normal_cdf(-0.5), StatError);
  }
}

TEST_CASE("sorted_quantile uses linear interpolation between order stats") {
  std::vector<double> v = {3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0};
  std::sort(v.begin(), v.end());
  CHECK(sorted_quantile(v, 0.0) == 1.0);
  CHECK(sorted_quantile(v, 0.25) == doctest::Approx(1.75).epsilon(1e-15));
  CHECK(sorted_quantile(v, 0.5) == doctest::Approx(3.5).epsilon(1e-15));
  CHECK(sorted_quantile(v, 0.75) == doctest::Approx(5.25).epsilon(1e-15));
  CHECK(sorted_quantile(v, 0.9) ==
        doctest::Approx(6.8999999999999995).epsilon(1e-15));
  CHECK(sorted_quantile(v, 1.0) == 9.0);
}

TEST_CASE("zou_ci_lcc_diff reproduces independent reference intervals") {
  Interval ci = zou_ci_lcc_diff(0.9, 0.8, 0.75, 120, 0.95);
  CHECK(ci.lo == doctest::Approx(0.045003852240270439).epsilon(1e-7));
  CHECK(ci.hi == doctest::Approx(0.16921256807121032).epsilon(1e-7));
  CHECK(ci.excludes_zero());

  ci = zou_ci_lcc_diff(0.6, 0.75, 0.5, 60, 0.95);
  CHECK(ci.lo == doctest::Approx(-0.3385565319470758).epsilon(1e-7));
  CHECK(ci.hi == doctest::Approx(0.017324975948848825).epsilon(1e-7));
  CHECK_FALSE(ci.excludes_zero());

  SUBCASE("equal correlations give a symmetric interval around zero") {
    ci = zou_ci_lcc_diff(0.55, 0.55, 0.7, 40, 0.9);
    CHECK(ci.lo == doctest::Approx(-0.175624089978488).epsilon(1e-7));
    CHECK(ci.hi == doctest::Approx(0.175624089978488).epsilon(1e-7));
    CHECK(ci.lo == doctest::Approx(-ci.hi).epsilon(1e-12));
  }

  SUBCASE("guards") {
    CHECK_THROWS_AS(zou_ci_lcc_diff(0.9, 0.8, 0.5, 9, 0.95), StatError);
    CHECK_THROWS_AS(zou_ci_lcc_diff(1.0, 0.8, 0.5, 50, 0.95), StatError);
    CHECK_THROWS_AS(zou_ci_lcc_diff(0.9, 0.8, 1.5, 50, 0.95), StatError);
    CHECK_THROWS_AS(zou_ci_lcc_diff(0.9, 0.8, 0.5, 50, 1.0), StatError);
  }
}

TEST_CASE("bootstrap_rmse_diff behaves like a paired percentile bootstrap") {
  SUBCASE("identical error vectors give a zero-width interval at zero") {
    std::vector<double> e(40, 0.25);
    for (std::size_t i = 0; i < e.size(); ++i) e[i] += 0.01 * i;
    Interval ci = bootstrap_rmse_diff(e, e, 1000, 0.95, 3);
    CHECK(ci.lo == 0.0);
    CHECK(ci.hi == 0.0);
  }

  SUBCASE("clearly separated errors give a one-sided interval") {
    std::vector<double> small(60, 0.1), big(60, 0.9);
    Interval ci = bootstrap_rmse_diff(small, big, 1000, 0.95, 3);
    CHECK(ci.hi < 0.0);  // rmse(small) - rmse(big) < 0 in every replicate
    CHECK(ci.excludes_zero());
  }

  SUBCASE("same seed reproduces the interval, different seed moves it") {
    std::vector<double> a, b;
    for (int i = 0; i < 50; ++i) {
      a.push_back(0.1 * ((i * 7) % 11) - 0.4);
      b.push_back(0.1 * ((i * 5) % 13) - 0.5);
    }
    Interval c1 = bootstrap_rmse_diff(a, b, 1200, 0.95, 17);
    Interval c2 = bootstrap_rmse_diff(a, b, 1200, 0.95, 17);
    Interval c3 = bootstrap_rmse_diff(a, b, 1200, 0.95, 18);
    CHECK(c1.lo == c2.lo);
    CHECK(c1.hi == c2.hi);
    CHECK((c1.lo != c3.lo || c1.hi != c3.hi));
  }

  SUBCASE("fewer than 1000 replicates is a configuration error") {
    std::vector<double> e(20, 0.5);
    CHECK_THROWS_AS(bootstrap_rmse_diff(e, e, 999, 0.95, 1), ConfigError);
  }

  SUBCASE("mismatched lengths are a shape error") {
    std::vector<double> a(20, 0.5), b(21, 0.5);
    CHECK_THROWS_AS(bootstrap_rmse_diff(a, b, 1000, 0.95, 1), ShapeError);
  }
}

TEST_CASE("fit_monotone_cubic recovers an increasing cubic exactly") {
  MonotoneCubic truth{{0.5, 0.8, 0.05, 0.01}};
  AlignmentCurve curve;
  curve.dataset_name = "t";
  for (int i = 0; i <= 40; ++i) {
    double s = 1.0 + 4.0 * i / 40.0;
    curve.input.push_back(s);
    curve.output.push_back(truth(s));
  }
  MonotoneCubic fit = fit_monotone_cubic(curve);
  for (int k = 0; k < 4; ++k) {
    CHECK(fit.c[static_cast<std::size_t>(k)] ==
          doctest::Approx(truth.c[static_cast<std::size_t>(k)]).epsilon(1e-9));
  }
  CHECK(strictly_increasing_on(fit, 1.0, 5.0));
}

TEST_CASE("fit_monotone_cubic stays increasing on wiggly data") {
  // Noisy but increasing samples whose unconstrained LS cubic dips; the
  // fit must still come back strictly increasing over the sampled range.
  AlignmentCurve curve;
  curve.dataset_name = "w";
  const double bumps[] = {0.0, 0.30, 0.31, 0.32, 0.8, 0.81, 0.82, 1.5,
                          1.51, 1.52, 2.4, 2.41};
  for (int i = 0; i < 12; ++i) {
    curve.input.push_back(1.0 + i * (4.0 / 11.0));
    curve.output.push_back(1.0 + bumps[i]);
  }
  MonotoneCubic fit = fit_monotone_cubic(curve);
  CHECK(strictly_increasing_on(fit, curve.input.front(), curve.input.back()));

  SUBCASE("too few points") {
    AlignmentCurve tiny;
    tiny.input = {1.0, 2.0, 3.0};
    tiny.output = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(fit_monotone_cubic(tiny), StatError);
  }
  SUBCASE("flat input range") {
    AlignmentCurve flat;
    for (int i = 0; i < 10; ++i) {
      flat.input.push_back(2.0);
      flat.output.push_back(1.0 + i);
    }
    CHECK_THROWS_AS(fit_monotone_cubic(flat), StatError);
  }
}
