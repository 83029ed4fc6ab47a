#include <doctest.h>

#include <cmath>
#include <vector>

#include "pseudopoisson/errors.hpp"
#include "pseudopoisson/special_functions.hpp"

using namespace pseudopoisson;

namespace {

// Extended-precision oracles, written independently of the library code.
long double naive_ratio_series(long double g, long double eta, long double a, int terms,
                               int shift) {
  long double sum = 0, p = 1;
  for (int i = 0; i < terms; ++i) {
    if (i > 0) p *= a / i;
    sum += std::pow(g / (g + shift + i), eta) * p;
  }
  return sum;
}

long double naive_ei(long double x, int terms) {
  long double sum = 0, t = 1;
  for (int k = 1; k <= terms; ++k) {
    t *= x / k;
    sum += t / k;
  }
  return 0.57721566490153286060651209L + std::log(x) + sum;
}

double bisect_w(double x, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if ((mid * std::exp(mid) - x) * (lo * std::exp(lo) - x) <= 0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("lambert w0 values") {
  CHECK(lambert_w0(0.0) == 0.0);
  CHECK(lambert_w0(std::exp(1.0)) == doctest::Approx(1.0).epsilon(1e-14));
  double w = lambert_w0(-0.2);
  CHECK(w > -1.0);
  CHECK(w < 0.0);
  CHECK(w == doctest::Approx(bisect_w(-0.2, -1.0, 0.0)).epsilon(1e-12));
  CHECK(lambert_w0(-std::exp(-1.0)) == doctest::Approx(-1.0).epsilon(1e-7));
  CHECK_THROWS_AS(lambert_w0(-0.5), DomainError);
}

TEST_CASE("lambert w0 round trip") {
  for (int i = 0; i <= 2000; ++i) {
    double w = -0.999 + (20.0 + 0.999) * i / 2000.0;
    double back = lambert_w0(w * std::exp(w));
    REQUIRE(std::fabs(back - w) <= 1e-10 * std::max(1.0, std::fabs(w)));
  }
  for (double x : {-0.3678, -0.1, 1e-12, 0.5, 3.0, 1e3, 1e100}) {
    double w = lambert_w0(x);
    CHECK(w * std::exp(w) == doctest::Approx(x).epsilon(1e-12));
  }
}

TEST_CASE("ratio power series values") {
  // Ratios tend to 1 as g grows.
  for (double eta : {0.5, 1.0, 3.7}) {
    CHECK(ratio_power_series(1e12, eta, 1.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-9));
    CHECK(ratio_power_series_shifted(1e12, eta, 1.0) ==
          doctest::Approx(std::exp(1.0)).epsilon(1e-9));
  }
  for (double a : {0.1, 1.0, 5.0, 30.0}) {
    CHECK(ratio_power_series(1.0, 1.0, a) == doctest::Approx(std::expm1(a) / a).epsilon(1e-12));
  }
  CHECK(ratio_power_series(0.5, 2.0, 1.3) ==
        doctest::Approx(static_cast<double>(naive_ratio_series(0.5L, 2.0L, 1.3L, 200, 0)))
            .epsilon(1e-13));
  CHECK(ratio_power_series_shifted(1.0, 1.0, 2.0) ==
        doctest::Approx(static_cast<double>(naive_ratio_series(1.0L, 1.0L, 2.0L, 200, 1)))
            .epsilon(1e-13));
  // Non-integer shape and larger argument.
  CHECK(ratio_power_series(2.3, 0.37, 12.0) ==
        doctest::Approx(static_cast<double>(naive_ratio_series(2.3L, 0.37L, 12.0L, 300, 0)))
            .epsilon(1e-12));
  CHECK_THROWS_AS(ratio_power_series(0.0, 1.0, 1.0), DomainError);
  SeriesOptions tight{1e-12, 3};
  CHECK_THROWS_AS(ratio_power_series(1.0, 1.0, 50.0, tight), SeriesError);
}

TEST_CASE("shifted series identity") {
  for (double g : {0.2, 1.0, 7.5}) {
    for (double eta : {0.6, 1.0, 2.0}) {
      for (double a : {0.3, 2.0, 9.0}) {
        double lhs = ratio_power_series_shifted(g, eta, a);
        double rhs = std::pow(g / (g + 1.0), eta) * ratio_power_series(g + 1.0, eta, a);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        CHECK(lhs < ratio_power_series(g, eta, a));
      }
    }
  }
}

TEST_CASE("ratio power series monotonicity") {
  const double a = 2.5;
  for (int i = 0; i < 50; ++i) {
    double g = 0.05 + 0.2 * i;
    for (int j = 0; j < 50; ++j) {
      double eta = 0.1 + 0.1 * j;
      double base = ratio_power_series(g, eta, a);
      REQUIRE(ratio_power_series(g, eta + 0.1, a) < base);
      REQUIRE(ratio_power_series(g + 0.2, eta, a) > base);
    }
  }
}

TEST_CASE("limits of the series as the scale vanishes") {
  const double g = 1e-8;
  for (double a : {0.5, 1.0, 4.0}) {
    for (double eta : {1.0, 2.0, 3.0}) {
      CHECK(std::fabs(ratio_power_series(g, eta, a) - 1.0) < 1e-6);
      CHECK(ratio_power_series_shifted(g, eta, a) < 1e-6);
    }
    CHECK(std::fabs(ratio_power_series(1.0 + g, 1.0, a) - std::expm1(a) / a) < 1e-6);
  }
}

TEST_CASE("poisson expectation") {
  for (double rate : {0.0, 0.3, 5.0, 40.0, 900.0}) {
    CHECK(poisson_expectation(rate, [](long) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(poisson_expectation(rate, [](long k) { return static_cast<double>(k); }) ==
          doctest::Approx(rate).epsilon(1e-12));
  }
}

TEST_CASE("exponential integral") {
  CHECK(exp_integral_ei(1.0) == doctest::Approx(static_cast<double>(naive_ei(1.0L, 50))).epsilon(1e-13));
  CHECK(exp_integral_ei(1.0) == doctest::Approx(1.89511781635593676).epsilon(1e-13));
  CHECK(exp_integral_ei(10.0) == doctest::Approx(static_cast<double>(naive_ei(10.0L, 120))).epsilon(1e-13));
  CHECK(std::fabs(exp_integral_ei(1e-10) - std::log(1e-10) - kEulerMascheroni) < 1e-9);
  CHECK_THROWS_AS(exp_integral_ei(0.0), DomainError);
  CHECK_THROWS_AS(exp_integral_ei(-1.0), DomainError);

  // Shape-2 series at unit scale reduces to the exponential integral.
  for (double a : {0.4, 1.0, 3.0, 8.0}) {
    double closed = (exp_integral_ei(a) - kEulerMascheroni - std::log(a)) / a;
    CHECK(ratio_power_series(1.0, 2.0, a) == doctest::Approx(closed).epsilon(1e-12));
  }
}

TEST_CASE("incomplete gamma") {
  CHECK(gamma_p(1.0, 2.0) == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-14));
  CHECK(gamma_q(1.0, 2.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK(gamma_q(0.5, 2.0) == doctest::Approx(std::erfc(std::sqrt(2.0))).epsilon(1e-13));
  for (double a : {0.5, 1.0, 2.5, 10.0}) {
    for (double x : {0.1, 1.0, 3.0, 12.0, 40.0}) {
      CHECK(gamma_p(a, x) + gamma_q(a, x) == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("chi square critical values") {
  CHECK(std::fabs(chi_square_critical(1, 0.05) - 3.84) < 0.01);
  CHECK(std::fabs(chi_square_critical(2, 0.05) - 5.99) < 0.01);
  CHECK(std::fabs(chi_square_critical(3, 0.05) - 7.815) < 0.01);
  CHECK(chi_square_critical(1, 0.05) == doctest::Approx(3.841458820694124).epsilon(1e-10));
  CHECK(chi_square_critical(2, 0.05) == doctest::Approx(5.991464547107979).epsilon(1e-10));
  CHECK(chi_square_critical(3, 0.05) == doctest::Approx(7.814727903251178).epsilon(1e-10));
  for (int df = 1; df <= 6; ++df) {
    for (double level : {0.01, 0.05, 0.1, 0.5}) {
      double c = chi_square_critical(df, level);
      CHECK(std::fabs(chi_square_sf(c, df) - level) < 1e-8);
    }
  }
  CHECK_THROWS_AS(chi_square_critical(1, 0.0), DomainError);
  CHECK_THROWS_AS(chi_square_critical(1, 1.0), DomainError);
  CHECK_THROWS_AS(chi_square_critical(0, 0.05), DomainError);
}

TEST_CASE("normal quantile") {
  CHECK(normal_upper_quantile(0.025) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(normal_upper_quantile(0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("bernoulli ratio") {
  CHECK(bernoulli_ratio(0.0) == 1.0);
  CHECK(bernoulli_ratio(1.0) == doctest::Approx(1.0 / (std::exp(1.0) - 1.0)).epsilon(1e-15));
  CHECK(bernoulli_ratio(1.0) == doctest::Approx(0.58198).epsilon(1e-5));
  CHECK(std::fabs(bernoulli_ratio_series(0.3) - 0.3 / std::expm1(0.3)) < 1e-12);
  CHECK(std::fabs(bernoulli_ratio(0.3) - bernoulli_ratio(0.3, 0.0)) < 1e-12);
  for (double z : {-0.49, -0.2, 0.01, 0.2, 0.49}) {
    CHECK(std::fabs(bernoulli_ratio_series(z) - z / std::expm1(z)) < 1e-14);
    double h = 1e-6;
    double fd = (bernoulli_ratio_series(z + h) - bernoulli_ratio_series(z - h)) / (2 * h);
    CHECK(bernoulli_ratio_series_derivative(z) == doctest::Approx(fd).epsilon(1e-8));
  }
  CHECK(bernoulli_ratio(800.0) >= 0.0);
  CHECK(bernoulli_ratio(-50.0) == doctest::Approx(50.0).epsilon(1e-12));
}
