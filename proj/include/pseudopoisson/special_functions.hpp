#pragma once

#include <functional>

namespace pseudopoisson {

struct SeriesOptions {
  double rel_tol = 1e-12;
  long max_terms = 100000;
};

inline constexpr double kEulerMascheroni = 0.57721566490153286061;

/// Principal branch of the Lambert W function, x >= -1/e.
double lambert_w0(double x);

/// sum_{i>=0} (g / (g + i))^eta * a^i / i!
///
/// At integer eta this is the generalized hypergeometric value
/// etaF_eta(g, ..., g; g+1, ..., g+1; a); the sum converges absolutely for
/// every real eta > 0.
double ratio_power_series(double g, double eta, double a, const SeriesOptions& opts = {});

/// sum_{i>=0} (g / (g + 1 + i))^eta * a^i / i!, the building block of
/// E[X1 * F(X1)]. Equals (g/(g+1))^eta * ratio_power_series(g + 1, eta, a).
double ratio_power_series_shifted(double g, double eta, double a, const SeriesOptions& opts = {});

/// E[h(X)] for X ~ Poisson(rate). Terms are weighted by the Poisson pmf in log
/// space, so no e^rate factor ever overflows. `h` must be bounded by a
/// polynomial for the truncation rule to be meaningful.
double poisson_expectation(double rate, const std::function<double(long)>& h,
                           const SeriesOptions& opts = {});

/// Exponential integral Ei(x) for x > 0.
double exp_integral_ei(double x);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);

/// Upper tail P(chi2_df > x).
double chi_square_sf(double x, int df);

/// (1 - level) quantile of chi2_df, i.e. the critical value at significance `level`.
double chi_square_critical(int df, double level);

/// Standard normal upper quantile z with P(Z > z) = p.
double normal_upper_quantile(double p);

/// z / (e^z - 1), equal to 1 at z = 0. Uses the Bernoulli-number expansion
/// when |z| < series_switch.
double bernoulli_ratio(double z, double series_switch = 0.5);

/// Truncated Bernoulli series 1 - z/2 + z^2/12 - z^4/720 + ... (through B_14).
double bernoulli_ratio_series(double z);
/// Derivative of the truncated Bernoulli series.
double bernoulli_ratio_series_derivative(double z);

}  // namespace pseudopoisson
