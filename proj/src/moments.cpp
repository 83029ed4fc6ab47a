#include "pseudopoisson/moments.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "pseudopoisson/errors.hpp"

namespace pseudopoisson {

namespace {

double finish_rho(double cov, double v1, double v2) {
  if (cov == 0.0) return 0.0;
  return cov / std::sqrt(v1 * v2);
}

double poisson_log_pmf(Count k, double rate) {
  if (rate == 0.0) return k == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
  double dk = static_cast<double>(k);
  return dk * std::log(rate) - rate - std::lgamma(dk + 1.0);
}

}  // namespace

MomentSet exp_moments(const ExpParams& p) {
  const double a = p.alpha;
  const double b = p.beta;
  const double one_minus_nu = -std::expm1(-p.gamma);
  // alpha (nu - 1) and mu^{nu - 1} = e^{alpha (nu - 1)}
  const double t = -a * one_minus_nu;
  const double mu_pow = std::exp(t);

  MomentSet m;
  m.e1 = a;
  m.v1 = a;
  m.e2 = p.delta - b * std::expm1(t);
  // mu^{nu^2 - 1} - mu^{2nu - 2} = e^{2t} (e^{alpha (1 - nu)^2} - 1)
  const double spread = std::exp(2.0 * t) * std::expm1(a * one_minus_nu * one_minus_nu);
  m.v2 = m.e2 + b * b * spread;
  m.cov = a * b * one_minus_nu * mu_pow;
  m.rho = finish_rho(m.cov, m.v1, m.v2);
  return m;
}

LomaxSeriesTerms lomax_series_terms(double alpha, double gamma, double eta,
                                    const SeriesOptions& opts) {
  auto cdf = [&](long x) {
    if (x == 0) return 0.0;
    return -std::expm1(-eta * std::log1p(static_cast<double>(x) / gamma));
  };
  LomaxSeriesTerms out;
  out.f_mean = poisson_expectation(alpha, cdf, opts);
  const double mean = out.f_mean;
  // Centring against the mean keeps Var[F] accurate when F barely moves.
  out.f_var = poisson_expectation(
      alpha,
      [&](long x) {
        double d = cdf(x) - mean;
        return d * d;
      },
      opts);
  out.f_step = poisson_expectation(
      alpha,
      [&](long x) {
        double dx = static_cast<double>(x);
        double log_s = -eta * std::log1p(dx / gamma);
        return -std::exp(log_s) * std::expm1(-eta * std::log1p(1.0 / (gamma + dx)));
      },
      opts);
  return out;
}

MomentSet lomax_moments(const LomaxParams& p, const SeriesOptions& opts) {
  const LomaxSeriesTerms s = lomax_series_terms(p.alpha, p.gamma, p.eta, opts);
  MomentSet m;
  m.e1 = p.alpha;
  m.v1 = p.alpha;
  m.e2 = p.delta + p.beta * s.f_mean;
  m.v2 = m.e2 + p.beta * p.beta * s.f_var;
  m.cov = p.alpha * p.beta * s.f_step;
  m.rho = finish_rho(m.cov, m.v1, m.v2);
  return m;
}

MomentSet population_moments(const ParamVector& p, const SeriesOptions& opts) {
  if (const auto* e = std::get_if<ExpParams>(&p)) return exp_moments(*e);
  return lomax_moments(std::get<LomaxParams>(p), opts);
}

double joint_log_pmf(const ParamVector& p, Count x1, Count x2) {
  if (x1 < 0 || x2 < 0) return -std::numeric_limits<double>::infinity();
  double rate = std::max(conditional_rate(x1, p), 0.0);
  return poisson_log_pmf(x1, alpha_of(p)) + poisson_log_pmf(x2, rate);
}

double joint_pmf(const ParamVector& p, Count x1, Count x2) {
  return std::exp(joint_log_pmf(p, x1, x2));
}

Count poisson_upper_cutoff(double rate, double tail) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw DomainError("poisson_upper_cutoff: bad rate");
  if (rate == 0.0) return 0;
  Count m = static_cast<Count>(std::floor(rate));
  // P(X > m) = P(a = m + 1, rate), the regularized lower incomplete gamma.
  while (gamma_p(static_cast<double>(m + 1), rate) >= tail) {
    ++m;
    if (m > 100'000'000) throw OracleInfeasibleError("poisson tail cutoff runaway");
  }
  return m;
}

MomentSet brute_force_moments(const ModelSpec& spec, const ParamVector& p, double tail_mass_tol,
                              long max_cells) {
  if (!(tail_mass_tol > 0.0 && tail_mass_tol <= 1e-6)) {
    throw DomainError("brute_force_moments: tail_mass_tol must lie in (0, 1e-6]");
  }
  if (!conforms(spec, p)) throw UsageError("brute_force_moments: parameters do not match spec");

  double alpha = alpha_of(p);
  double beta = std::visit([](const auto& q) { return q.beta; }, p);
  double delta = std::visit([](const auto& q) { return q.delta; }, p);

  const Count x1_max = poisson_upper_cutoff(alpha, tail_mass_tol / 2.0);
  const Count x2_max = poisson_upper_cutoff(delta + std::fabs(beta), tail_mass_tol / 2.0);
  const double cells = static_cast<double>(x1_max + 1) * static_cast<double>(x2_max + 1);
  if (cells > static_cast<double>(max_cells)) {
    throw OracleInfeasibleError("brute_force_moments: grid of " + std::to_string(x1_max + 1) +
                                " x " + std::to_string(x2_max + 1) + " cells exceeds cap");
  }

  std::vector<double> grid(static_cast<std::size_t>(cells));
  auto at = [&](Count i, Count j) -> double& {
    return grid[static_cast<std::size_t>(i * (x2_max + 1) + j)];
  };
  for (Count i = 0; i <= x1_max; ++i) {
    for (Count j = 0; j <= x2_max; ++j) at(i, j) = joint_pmf(p, i, j);
  }

  long double s1 = 0, s2 = 0;
  for (Count i = 0; i <= x1_max; ++i) {
    for (Count j = 0; j <= x2_max; ++j) {
      long double w = at(i, j);
      s1 += w * i;
      s2 += w * j;
    }
  }
  long double c11 = 0, c22 = 0, c12 = 0;
  for (Count i = 0; i <= x1_max; ++i) {
    for (Count j = 0; j <= x2_max; ++j) {
      long double w = at(i, j);
      long double d1 = i - s1;
      long double d2 = j - s2;
      c11 += w * d1 * d1;
      c22 += w * d2 * d2;
      c12 += w * d1 * d2;
    }
  }

  MomentSet m;
  m.e1 = static_cast<double>(s1);
  m.e2 = static_cast<double>(s2);
  m.v1 = static_cast<double>(c11);
  m.v2 = static_cast<double>(c22);
  m.cov = static_cast<double>(c12);
  m.rho = finish_rho(m.cov, m.v1, m.v2);
  return m;
}

}  // namespace pseudopoisson
