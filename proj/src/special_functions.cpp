#include "pseudopoisson/special_functions.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "pseudopoisson/errors.hpp"

namespace pseudopoisson {

namespace {

constexpr double kInvE = 0.36787944117144232160;

void check_options(const SeriesOptions& opts) {
  if (!(opts.rel_tol > 0.0) || opts.max_terms < 1) {
    throw DomainError("series options: rel_tol must be > 0 and max_terms >= 1");
  }
}

// Sums exp(log_weight(i)) * f(i) with the shared truncation rule: stop after
// three consecutive terms below rel_tol * |sum|, but only once i is past the
// location of the largest Poisson weight.
template <typename LogWeight, typename Factor>
double weighted_series(double peak, LogWeight log_weight, Factor f, const SeriesOptions& opts,
                       const char* what) {
  check_options(opts);
  double sum = 0.0;
  double comp = 0.0;
  int small_run = 0;
  for (long i = 0; i < opts.max_terms; ++i) {
    double lw = log_weight(i);
    double term = lw == -std::numeric_limits<double>::infinity() ? 0.0 : std::exp(lw) * f(i);
    // Kahan summation keeps long tails from eroding the last digits.
    double y = term - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
    if (static_cast<double>(i) + 1.0 > peak) {
      if (std::fabs(term) <= opts.rel_tol * std::fabs(sum)) {
        if (++small_run >= 3) return sum;
      } else {
        small_run = 0;
      }
    }
  }
  throw SeriesError(std::string(what) + ": no convergence within " +
                    std::to_string(opts.max_terms) + " terms");
}

void check_series_args(double g, double eta, double a, const char* what) {
  if (!(g > 0.0) || !(eta > 0.0) || !(a > 0.0) || !std::isfinite(g) || !std::isfinite(eta) ||
      !std::isfinite(a)) {
    throw DomainError(std::string(what) + ": arguments must be finite and positive");
  }
}

}  // namespace

double lambert_w0(double x) {
  if (std::isnan(x)) throw DomainError("lambert_w0: NaN argument");
  if (x < -kInvE) {
    // Allow rounding noise right at the branch point.
    if (x < -kInvE - 4.0 * std::numeric_limits<double>::epsilon()) {
      throw DomainError("lambert_w0: argument below -1/e");
    }
    return -1.0;
  }
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return x;

  double w;
  double q = 2.0 * (std::exp(1.0) * x + 1.0);
  if (q < 0.5) {
    double p = std::sqrt(std::max(q, 0.0));
    w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
  } else if (x < std::exp(1.0)) {
    w = std::log1p(x);
    if (x < 0.0) w = x * (1.0 - x);
  } else {
    double l1 = std::log(x);
    double l2 = std::log(l1);
    w = l1 - l2 + l2 / l1;
  }

  for (int it = 0; it < 100; ++it) {
    double ew = std::exp(w);
    double f = w * ew - x;
    double wp1 = w + 1.0;
    if (wp1 == 0.0) break;
    double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    double step = f / denom;
    w -= step;
    if (std::fabs(step) <= 1e-15 * (1.0 + std::fabs(w))) break;
  }
  return std::max(w, -1.0);
}

double ratio_power_series(double g, double eta, double a, const SeriesOptions& opts) {
  check_series_args(g, eta, a, "ratio_power_series");
  double la = std::log(a);
  double scaled = weighted_series(
      a,
      [&](long i) {
        double di = static_cast<double>(i);
        return di * la - std::lgamma(di + 1.0) - eta * std::log1p(di / g);
      },
      [](long) { return 1.0; }, opts, "ratio_power_series");
  return scaled;
}

double ratio_power_series_shifted(double g, double eta, double a, const SeriesOptions& opts) {
  check_series_args(g, eta, a, "ratio_power_series_shifted");
  double la = std::log(a);
  return weighted_series(
      a,
      [&](long i) {
        double di = static_cast<double>(i);
        return di * la - std::lgamma(di + 1.0) - eta * std::log1p((di + 1.0) / g);
      },
      [](long) { return 1.0; }, opts, "ratio_power_series_shifted");
}

double poisson_expectation(double rate, const std::function<double(long)>& h,
                           const SeriesOptions& opts) {
  check_options(opts);
  if (!(rate >= 0.0) || !std::isfinite(rate)) {
    throw DomainError("poisson_expectation: rate must be finite and >= 0");
  }
  if (rate == 0.0) return h(0);
  // Weights relative to the mode, built by recurrence in both directions and
  // normalized by their own sum, so no lgamma rounding enters the result.
  const long mode = static_cast<long>(std::floor(rate));
  double mass = 0.0, acc = 0.0, mass_c = 0.0, acc_c = 0.0;
  auto add = [](double& s, double& c, double v) {
    double y = v - c;
    double t = s + y;
    c = (t - s) - y;
    s = t;
  };
  long used = 0;
  auto pass = [&](long start, int dir) {
    double w = dir > 0 ? rate / static_cast<double>(start) : 1.0;
    int small_run = 0;
    for (long i = start; i >= 0; i += dir) {
      if (i != start) w *= dir > 0 ? rate / static_cast<double>(i) : static_cast<double>(i + 1) / rate;
      double term = w * h(i);
      add(mass, mass_c, w);
      add(acc, acc_c, term);
      if (++used > opts.max_terms) {
        throw SeriesError("poisson_expectation: no convergence within " +
                          std::to_string(opts.max_terms) + " terms");
      }
      if (w <= opts.rel_tol * mass && std::fabs(term) <= opts.rel_tol * std::fabs(acc)) {
        if (++small_run >= 3) return;
      } else {
        small_run = 0;
      }
    }
  };
  pass(mode, -1);
  pass(mode + 1, +1);
  return acc / mass;
}

double exp_integral_ei(double x) {
  if (!(x > 0.0)) throw DomainError("exp_integral_ei: argument must be > 0");
  if (!std::isfinite(x)) return x;
  // Every series term is positive, so there is no cancellation for large x.
  double sum = 0.0;
  double t = 1.0;
  for (int k = 1; k < 100000; ++k) {
    t *= x / k;
    double term = t / k;
    sum += term;
    if (k > x && term <= 1e-17 * sum) break;
  }
  return kEulerMascheroni + std::log(x) + sum;
}

namespace {

// Series for P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int n = 0; n < 100000; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-17) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x), valid for x >= a + 1 (modified Lentz).
double gamma_q_cf(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 100000; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

void check_gamma_args(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0) || std::isnan(x)) {
    throw DomainError("incomplete gamma: requires a > 0 and x >= 0");
  }
}

}  // namespace

double gamma_p(double a, double x) {
  check_gamma_args(a, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
  check_gamma_args(a, x);
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double chi_square_sf(double x, int df) {
  if (df < 1) throw DomainError("chi_square_sf: df must be >= 1");
  if (std::isnan(x)) throw DomainError("chi_square_sf: NaN statistic");
  if (x <= 0.0) return 1.0;
  return gamma_q(0.5 * df, 0.5 * x);
}

double chi_square_critical(int df, double level) {
  if (df < 1) throw DomainError("chi_square_critical: df must be >= 1");
  if (!(level > 0.0 && level < 1.0)) {
    throw DomainError("chi_square_critical: level must lie in (0, 1)");
  }
  double lo = 0.0;
  double hi = std::max(1.0, static_cast<double>(df));
  while (chi_square_sf(hi, df) > level) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e8) throw SolverError("chi_square_critical: could not bracket quantile");
  }
  for (int it = 0; it < 400; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (chi_square_sf(mid, df) > level) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double normal_upper_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_upper_quantile: p must lie in (0, 1)");
  double lo = -40.0;
  double hi = 40.0;
  for (int it = 0; it < 400; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (0.5 * std::erfc(mid / std::sqrt(2.0)) > p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

namespace {

// B_n / n! for n = 2, 4, ..., 14.
constexpr double kBernoulliCoef[] = {
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
};

}  // namespace

double bernoulli_ratio_series(double z) {
  double z2 = z * z;
  double acc = 0.0;
  for (int k = 6; k >= 0; --k) acc = acc * z2 + kBernoulliCoef[k];
  return 1.0 - 0.5 * z + z2 * acc;
}

double bernoulli_ratio_series_derivative(double z) {
  double z2 = z * z;
  double acc = 0.0;
  // d/dz sum c_k z^{2k+2} = sum (2k+2) c_k z^{2k+1}
  for (int k = 6; k >= 0; --k) acc = acc * z2 + (2.0 * k + 2.0) * kBernoulliCoef[k];
  return -0.5 + z * acc;
}

double bernoulli_ratio(double z, double series_switch) {
  if (std::isnan(z)) return z;
  if (z == 0.0) return 1.0;
  if (std::fabs(z) < series_switch) return bernoulli_ratio_series(z);
  if (z > 745.0) return z * std::exp(-z);
  return z / std::expm1(z);
}

}  // namespace pseudopoisson
