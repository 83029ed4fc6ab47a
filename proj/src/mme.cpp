#include "pseudopoisson/mme.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "pseudopoisson/errors.hpp"
#include "pseudopoisson/moments.hpp"
#include "pseudopoisson/special_functions.hpp"

namespace pseudopoisson {

namespace {

constexpr double kWindowSlack = 1e-12;
constexpr double kInvE = 0.36787944117144232160;
constexpr double kGammaLo = 1e-8;
constexpr double kGammaHi = 1e8;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

void check_sign(int sign) {
  if (sign != 1 && sign != -1) throw UsageError("sign must be +1 or -1");
}

double require_alpha(const SampleMoments& m) {
  if (!(m.m1 > 0.0) || !std::isfinite(m.m1)) {
    throw ExistenceError("method of moments needs M1 > 0 (got " + fmt(m.m1) + ")");
  }
  return m.m1;
}

void require_m2(const SampleMoments& m) {
  if (!(m.m2 > 0.0)) throw ExistenceError("method of moments needs M2 > 0 (got " + fmt(m.m2) + ")");
}

// S12^2 / (S22 - M2) after the window check of the full-model equations.
double checked_dispersion_ratio(const SampleMoments& m) {
  const double denom = m.s22 - m.m2;
  if (denom == 0.0) {
    throw DegenerateDispersionError("S22 equals M2, so S12^2/(S22 - M2) is undefined");
  }
  const auto [lo, hi] = dispersion_window(m.m1);
  const double slack = kWindowSlack * std::max(1.0, hi);
  if (denom < 0.0) {
    throw ExistenceError("lower bound violated: S22 < M2 (underdispersed x2), so S12^2/(S22 - M2) < 0 <= M1^2/(e^M1 - 1) = " +
                         fmt(lo));
  }
  const double ratio = m.s12 * m.s12 / denom;
  if (!(ratio > lo + slack)) {
    throw ExistenceError("lower bound violated: S12^2/(S22 - M2) = " + fmt(ratio) +
                         " is not above M1^2/(e^M1 - 1) = " + fmt(lo));
  }
  if (!(ratio < hi - slack)) {
    throw ExistenceError("upper bound violated: S12^2/(S22 - M2) = " + fmt(ratio) +
                         " is not below M1 = " + fmt(hi));
  }
  return ratio;
}

// Snaps delta onto the boundary when it misses by rounding only, then checks
// admissibility of the whole vector.
template <class P>
std::optional<std::string> finalize(P& p, double scale) {
  const double floor = std::max(-p.beta, 0.0);
  if (p.delta < floor && floor - p.delta <= 1e-10 * (1.0 + scale)) p.delta = floor;
  if (!(p.delta >= floor)) {
    return "implied delta~ = " + fmt(p.delta) + " is below max(-beta~, 0) = " + fmt(floor);
  }
  return admissibility_issue(ParamVector{p});
}

MmeReport build(const ModelSpec& spec, const SampleMoments& m, std::vector<ParamVector> candidates,
                SolverTrace trace) {
  MmeReport r;
  r.spec = spec;
  r.alpha = m.m1;
  r.trace = std::move(trace);
  const double scale = std::fabs(m.m2) + std::fabs(m.s12) + std::fabs(m.s22);
  std::string first_issue;
  for (auto& c : candidates) {
    auto issue = std::visit([&](auto& p) { return finalize(p, scale); }, c);
    if (issue) {
      if (first_issue.empty()) first_issue = *issue;
      continue;
    }
    if (!r.estimates) {
      r.estimates = c;
    } else {
      r.alternatives.push_back(c);
    }
  }
  if (!r.estimates) {
    throw ExistenceError(first_issue.empty() ? "no admissible root" : first_issue);
  }
  r.bound_check = {BoundStatus::Passed, ""};
  return r;
}

ModelSpec spec_of(Family f, Case c, int sign = 0) { return ModelSpec{f, c, sign}; }

// Bisection on t = log(gamma) for an increasing function, to full precision.
template <class F>
double bisect_log_gamma(F f, double lo, double hi, int* iterations) {
  int it = 0;
  while (it < 300) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(std::exp(mid)) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    ++it;
  }
  if (iterations) *iterations = it;
  return std::exp(0.5 * (lo + hi));
}

// Root of the Lomax (eta' = 1) dispersion equation, bracket expanded by x10.
double solve_lomax_gamma(double alpha, double ratio, SolverTrace& trace) {
  auto f = [&](double g) { return lomax_dispersion_lhs(alpha, g) - ratio; };
  double lo = std::log(kGammaLo);
  if (f(kGammaLo) >= 0.0) {
    throw SolverError("gamma~' lies below the search bracket floor 1e-8");
  }
  double hi = lo;
  while (true) {
    hi += std::log(10.0);
    if (hi > std::log(kGammaHi) + 1e-9) {
      throw SolverError("gamma~' bracket expansion exceeded 1e8 without a sign change");
    }
    if (f(std::exp(hi)) >= 0.0) break;
    lo = hi;
  }
  trace.method = "bisection";
  trace.bracket_lo = std::exp(lo);
  trace.bracket_hi = std::exp(hi);
  const double g = bisect_log_gamma(f, lo, hi, &trace.iterations);
  trace.residual = f(g);
  return g;
}

// Unit-scale, unit-shape Lomax terms in closed form.
double lomax_unit_f_mean(double a) { return 1.0 + std::expm1(-a) / a; }
double lomax_unit_f_step(double a) { return (-std::expm1(-a) - a * std::exp(-a)) / (a * a); }

}  // namespace

std::pair<double, double> dispersion_window(double m1) {
  return {m1 * bernoulli_ratio(m1, 0.0), m1};
}

double exp_dispersion_lhs(double alpha, double nu) {
  const double d = 1.0 - nu;
  return alpha * bernoulli_ratio(alpha * d * d, 0.0);
}

double lomax_dispersion_lhs(double alpha, double gamma) {
  const LomaxSeriesTerms t = lomax_series_terms(alpha, gamma, 1.0);
  return alpha * alpha * t.f_step * t.f_step / t.f_var;
}

double lomax_case1_lhs(double alpha, double gamma) {
  return alpha * lomax_series_terms(alpha, gamma, 1.0).f_step;
}

double solve_exp_nu_bisection(double alpha, double ratio, int* iterations) {
  double lo = 0.0, hi = 1.0;
  int it = 0;
  while (it < 200) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (exp_dispersion_lhs(alpha, mid) < ratio) {
      lo = mid;
    } else {
      hi = mid;
    }
    ++it;
  }
  if (iterations) *iterations = it;
  return 0.5 * (lo + hi);
}

std::optional<double> solve_exp_nu_bernoulli(double alpha, double ratio, double series_switch) {
  // alpha * B(zeta) = ratio with zeta = alpha (1 - nu)^2 and B(z) = z/(e^z - 1).
  const double tau = ratio / alpha;
  if (!(tau < 1.0) || tau <= bernoulli_ratio_series(series_switch)) return std::nullopt;
  double z = std::min(2.0 * (1.0 - tau), series_switch);
  for (int it = 0; it < 60; ++it) {
    double step = (bernoulli_ratio_series(z) - tau) / bernoulli_ratio_series_derivative(z);
    z -= step;
    if (std::fabs(step) <= 1e-17 * std::max(1.0, z)) break;
  }
  if (!(z >= 0.0) || z >= series_switch) return std::nullopt;
  return 1.0 - std::sqrt(z / alpha);
}

// ---------------------------------------------------------------------------
// Exponential family

namespace {

ExpParams exp_from_nu(const SampleMoments& m, double nu) {
  const double a = m.m1;
  const double one_minus_nu = 1.0 - nu;
  const double t = -a * one_minus_nu;  // alpha (nu - 1)
  ExpParams p;
  p.alpha = a;
  p.gamma = -std::log(nu);
  p.beta = m.s12 / (a * one_minus_nu * std::exp(t));
  p.delta = m.m2 + p.beta * std::expm1(t);
  return p;
}

double solve_full_nu(const SampleMoments& m, const MmeOptions& opts, SolverTrace& trace) {
  const double ratio = checked_dispersion_ratio(m);
  if (opts.bernoulli_fast_path) {
    if (auto nu = solve_exp_nu_bernoulli(m.m1, ratio, opts.bernoulli_switch)) {
      trace.method = "newton-bernoulli";
      trace.residual = exp_dispersion_lhs(m.m1, *nu) - ratio;
      trace.bracket_lo = 0.0;
      trace.bracket_hi = 1.0;
      return *nu;
    }
  }
  trace.method = "bisection";
  trace.bracket_lo = 0.0;
  trace.bracket_hi = 1.0;
  const double nu = solve_exp_nu_bisection(m.m1, ratio, &trace.iterations);
  trace.residual = exp_dispersion_lhs(m.m1, nu) - ratio;
  return nu;
}

}  // namespace

MmeReport mme_exp_full(const SampleMoments& m, const MmeOptions& opts) {
  require_alpha(m);
  require_m2(m);
  SolverTrace trace;
  const double nu = solve_full_nu(m, opts, trace);
  return build(spec_of(Family::Exponential, Case::Full), m, {exp_from_nu(m, nu)}, trace);
}

MmeReport mme_exp_case3(const SampleMoments& m, const MmeOptions& opts) {
  require_alpha(m);
  SolverTrace trace;
  const double nu = solve_full_nu(m, opts, trace);
  ExpParams p = exp_from_nu(m, nu);
  p.delta = 0.0;
  return build(spec_of(Family::Exponential, Case::III), m, {p}, trace);
}

MmeReport mme_exp_case1(const SampleMoments& m, int sign) {
  check_sign(sign);
  const double a = require_alpha(m);
  const double s = sign * m.s12;
  if (!(s > 0.0)) {
    throw ExistenceError("Case I needs sign(beta) * S12 > 0 (got " + fmt(s) + ")");
  }
  if (s > kInvE) {
    throw ExistenceError("Case I needs 0 < sign(beta) * S12 <= 1/e, since u e^{-u} = sign(beta) * S12 with u = M1 (1 - nu~) has no root otherwise (got " +
                         fmt(s) + ")");
  }
  SolverTrace trace;
  trace.method = "lambert-w";
  // Roots u of u e^{-u} = s; the principal branch gives u <= 1.
  std::vector<double> roots;
  const double u0 = -lambert_w0(-s);
  if (u0 < a) roots.push_back(u0);
  if (a > 1.0) {
    auto f = [&](double u) { return u * std::exp(-u) - s; };
    if (f(a) < 0.0 && f(1.0) > 0.0) {
      double lo = 1.0, hi = a;
      for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (f(mid) > 0.0 ? lo : hi) = mid;
      }
      roots.push_back(0.5 * (lo + hi));
    }
  }
  if (roots.empty()) {
    throw ExistenceError("Case I: the root u = " + fmt(u0) + " of u e^{-u} = sign(beta) * S12 is not below M1 = " +
                         fmt(a) + ", so nu~ would not lie in (0, 1)");
  }
  std::vector<ParamVector> candidates;
  for (double u : roots) {
    ExpParams p;
    p.alpha = a;
    p.beta = sign;
    p.gamma = -std::log1p(-u / a);
    p.delta = m.m2 + sign * std::expm1(-u);
    candidates.push_back(p);
  }
  trace.bracket_lo = 0.0;
  trace.bracket_hi = a;
  trace.residual = roots.front() * std::exp(-roots.front()) - s;
  return build(spec_of(Family::Exponential, Case::I, sign), m, std::move(candidates), trace);
}

MmeReport mme_exp_case2(const SampleMoments& m) {
  require_alpha(m);
  SolverTrace trace{"closed-form", 0, 0, 0, 0};
  return build(spec_of(Family::Exponential, Case::II), m, {exp_from_nu(m, kInvE)}, trace);
}

MmeReport mme_exp_case4(const SampleMoments& m, int sign) {
  check_sign(sign);
  const double a = require_alpha(m);
  ExpParams p;
  p.alpha = a;
  p.beta = sign;
  p.gamma = 1.0;
  p.delta = m.m2 + sign * std::expm1(-a * (1.0 - kInvE));
  return build(spec_of(Family::Exponential, Case::IV, sign), m, {p}, {"closed-form", 0, 0, 0, 0});
}

MmeReport mme_exp_case5(const SampleMoments& m) {
  const double a = require_alpha(m);
  require_m2(m);
  ExpParams p;
  p.alpha = a;
  p.gamma = 1.0;
  p.delta = 0.0;
  p.beta = -m.m2 / std::expm1(-a * (1.0 - kInvE));
  return build(spec_of(Family::Exponential, Case::V), m, {p}, {"closed-form", 0, 0, 0, 0});
}

// ---------------------------------------------------------------------------
// Lomax family (every sub-model has eta' = 1)

namespace {

LomaxParams lomax_from_gamma(const SampleMoments& m, double gamma) {
  const LomaxSeriesTerms t = lomax_series_terms(m.m1, gamma, 1.0);
  LomaxParams p;
  p.alpha = m.m1;
  p.gamma = gamma;
  p.eta = 1.0;
  p.beta = m.s12 / (m.m1 * t.f_step);
  p.delta = m.m2 - p.beta * t.f_mean;
  return p;
}

}  // namespace

MmeReport mme_lomax_eta1_full(const SampleMoments& m) {
  require_alpha(m);
  require_m2(m);
  const double ratio = checked_dispersion_ratio(m);
  SolverTrace trace;
  const double g = solve_lomax_gamma(m.m1, ratio, trace);
  return build(spec_of(Family::Lomax, Case::LomaxEta1), m, {lomax_from_gamma(m, g)}, trace);
}

MmeReport mme_lomax_case3(const SampleMoments& m) {
  require_alpha(m);
  const double ratio = checked_dispersion_ratio(m);
  SolverTrace trace;
  const double g = solve_lomax_gamma(m.m1, ratio, trace);
  LomaxParams p = lomax_from_gamma(m, g);
  p.delta = 0.0;
  return build(spec_of(Family::Lomax, Case::III), m, {p}, trace);
}

MmeReport mme_lomax_case1(const SampleMoments& m, int sign) {
  check_sign(sign);
  const double a = require_alpha(m);
  const double s = sign * m.s12;
  if (!(s > 0.0)) {
    throw ExistenceError("Lomax Case I needs sign(beta') * S12 > 0 (got " + fmt(s) + ")");
  }
  // The covariance curve is not monotone in gamma', so scan for every sign
  // change on a log grid before bisecting.
  auto f = [&](double g) { return lomax_case1_lhs(a, g) - s; };
  constexpr int kPerDecade = 20;
  const double t_lo = std::log(1e-6);
  const double t_hi = std::log(1e6);
  const int steps = 12 * kPerDecade;
  std::vector<double> roots;
  int total_iterations = 0;
  double prev_t = t_lo;
  double prev_f = f(std::exp(t_lo));
  SolverTrace trace;
  trace.method = "scan+bisection";
  for (int k = 1; k <= steps; ++k) {
    const double t = t_lo + (t_hi - t_lo) * k / steps;
    const double ft = f(std::exp(t));
    if (ft == 0.0) {
      roots.push_back(std::exp(t));
    } else if ((prev_f < 0.0) != (ft < 0.0) && prev_f != 0.0) {
      double lo = prev_t, hi = t;
      const bool rising = prev_f < 0.0;
      int it = 0;
      while (it < 300) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const bool below = f(std::exp(mid)) < 0.0;
        (below == rising ? lo : hi) = mid;
        ++it;
      }
      total_iterations += it;
      if (roots.empty()) {
        trace.bracket_lo = std::exp(prev_t);
        trace.bracket_hi = std::exp(t);
      }
      roots.push_back(std::exp(0.5 * (lo + hi)));
    }
    prev_t = t;
    prev_f = ft;
  }
  if (roots.empty()) {
    throw ExistenceUnknownError(
        "Lomax Case I: no root of the covariance equation for gamma' in [1e-6, 1e6]; existence "
        "cannot be decided analytically for this case");
  }
  trace.iterations = total_iterations;
  trace.residual = f(roots.front());
  std::vector<ParamVector> candidates;
  for (double g : roots) {
    LomaxParams p;
    p.alpha = a;
    p.beta = sign;
    p.gamma = g;
    p.eta = 1.0;
    p.delta = m.m2 - sign * lomax_series_terms(a, g, 1.0).f_mean;
    candidates.push_back(p);
  }
  return build(spec_of(Family::Lomax, Case::I, sign), m, std::move(candidates), trace);
}

MmeReport mme_lomax_case2(const SampleMoments& m) {
  const double a = require_alpha(m);
  LomaxParams p;
  p.alpha = a;
  p.gamma = 1.0;
  p.eta = 1.0;
  p.beta = m.s12 / (a * lomax_unit_f_step(a));
  p.delta = m.m2 - p.beta * lomax_unit_f_mean(a);
  return build(spec_of(Family::Lomax, Case::II), m, {p}, {"closed-form", 0, 0, 0, 0});
}

MmeReport mme_lomax_case4(const SampleMoments& m, int sign) {
  check_sign(sign);
  const double a = require_alpha(m);
  LomaxParams p;
  p.alpha = a;
  p.beta = sign;
  p.gamma = 1.0;
  p.eta = 1.0;
  p.delta = m.m2 - sign * lomax_unit_f_mean(a);
  return build(spec_of(Family::Lomax, Case::IV, sign), m, {p}, {"closed-form", 0, 0, 0, 0});
}

MmeReport mme_lomax_case5(const SampleMoments& m) {
  const double a = require_alpha(m);
  require_m2(m);
  LomaxParams p;
  p.alpha = a;
  p.gamma = 1.0;
  p.eta = 1.0;
  p.delta = 0.0;
  p.beta = m.m2 / lomax_unit_f_mean(a);
  return build(spec_of(Family::Lomax, Case::V), m, {p}, {"closed-form", 0, 0, 0, 0});
}

// ---------------------------------------------------------------------------

MmeReport estimate_mme(const ModelSpec& spec, const SampleMoments& m, const MmeOptions& opts) {
  validate(spec);
  auto failed = [&](BoundStatus status, const std::string& why) {
    MmeReport r;
    r.spec = spec;
    r.alpha = m.m1;
    r.bound_check = {status, why};
    return r;
  };
  try {
    if (spec.family == Family::Exponential) {
      switch (spec.model_case) {
        case Case::Full: return mme_exp_full(m, opts);
        case Case::I: return mme_exp_case1(m, spec.sign);
        case Case::II: return mme_exp_case2(m);
        case Case::III: return mme_exp_case3(m, opts);
        case Case::IV: return mme_exp_case4(m, spec.sign);
        case Case::V: return mme_exp_case5(m);
        case Case::LomaxEta1: break;
      }
    } else {
      switch (spec.model_case) {
        case Case::Full:
          return failed(BoundStatus::NotApplicable,
                        "no method-of-moments estimator for the free-shape Lomax model");
        case Case::LomaxEta1: return mme_lomax_eta1_full(m);
        case Case::I: return mme_lomax_case1(m, spec.sign);
        case Case::II: return mme_lomax_case2(m);
        case Case::III: return mme_lomax_case3(m);
        case Case::IV: return mme_lomax_case4(m, spec.sign);
        case Case::V: return mme_lomax_case5(m);
      }
    }
  } catch (const ExistenceUnknownError& e) {
    return failed(BoundStatus::Unknown, e.what());
  } catch (const ExistenceError& e) {
    return failed(BoundStatus::Violated, e.what());
  } catch (const DegenerateDispersionError& e) {
    return failed(BoundStatus::Violated, e.what());
  } catch (const SolverError& e) {
    return failed(BoundStatus::Unknown, e.what());
  } catch (const SeriesError& e) {
    return failed(BoundStatus::Unknown, e.what());
  }
  throw UsageError("unsupported model for method of moments: " + spec.id());
}

}  // namespace pseudopoisson
