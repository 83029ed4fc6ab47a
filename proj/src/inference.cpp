#include "pseudopoisson/inference.hpp"

#include <cmath>
#include <limits>

#include "pseudopoisson/moments.hpp"
#include "pseudopoisson/special_functions.hpp"

namespace pseudopoisson {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Shape {
  double beta, gamma, delta, eta;
  bool lomax;
};

Shape shape_of(const ParamVector& p) {
  if (const auto* e = std::get_if<ExpParams>(&p)) return {e->beta, e->gamma, e->delta, 1.0, false};
  const auto& l = std::get<LomaxParams>(p);
  return {l.beta, l.gamma, l.delta, l.eta, true};
}

// log S(x); log1p keeps the Lomax branch accurate when gamma and eta both
// run off towards the exponential limit.
long double log_survival(const Shape& s, double x) {
  if (s.lomax) return -static_cast<long double>(s.eta) * std::log1p(static_cast<long double>(x) / s.gamma);
  return -static_cast<long double>(s.gamma) * x;
}

}  // namespace

double closed_form_log_lambda(const ParamVector& full, const ParamVector& sub,
                              const BivariateSample& sample) {
  const Shape f = shape_of(full);
  const Shape s = shape_of(sub);
  const auto n = static_cast<long double>(sample.size());
  // n beta - beta sum S is accumulated as beta sum F with F = 1 - S, which
  // avoids cancellation when a boundary fit has a very large beta.
  long double sum_ff = 0, sum_fs = 0, log_ratio = 0;
  for (auto c : sample.pairs()) {
    const auto x = static_cast<double>(c.x1);
    const long double ff = -std::expm1(log_survival(f, x));
    const long double fs = -std::expm1(log_survival(s, x));
    sum_ff += ff;
    sum_fs += fs;
    if (c.x2 > 0) {
      const long double rf = f.delta + f.beta * ff;
      const long double rs = s.delta + s.beta * fs;
      if (!(rs > 0)) return -kInf;
      log_ratio += static_cast<long double>(c.x2) * std::log(rs / rf);
    }
  }
  const long double v = -n * (static_cast<long double>(s.delta) - f.delta) - s.beta * sum_fs +
                        f.beta * sum_ff + log_ratio;
  return static_cast<double>(v);
}

LrtResult lrt(const FitResult& full, const FitResult& sub, double level, const BivariateSample* sample) {
  if (!(level > 0.0 && level < 1.0)) throw UsageError("level must lie in (0, 1)");
  if (!is_nested(sub.spec, full.spec)) {
    throw UsageError(sub.spec.id() + " is not nested in " + full.spec.id());
  }
  if (full.digest != sub.digest || full.n != sub.n) {
    throw UsageError("fits come from different samples");
  }
  if (!full.loglik || !sub.loglik) {
    throw UsageError("likelihood-ratio test needs maximum-likelihood fits");
  }
  if (sample && sample->digest() != full.digest) throw UsageError("sample does not match the fits");

  LrtResult r;
  r.full = full.spec;
  r.sub = sub.spec;
  r.level = level;
  r.df = full.spec.free_parameter_count() - sub.spec.free_parameter_count();
  r.critical = chi_square_critical(r.df, level);
  r.boundary_test = sub.spec.fixes_delta() && !full.spec.fixes_delta();
  if (r.boundary_test) r.note = "boundary test: delta = 0 lies on the edge of the parameter space";

  const double raw = 2.0 * (*full.loglik - *sub.loglik);
  if (std::isnan(raw)) throw DomainError("log-likelihoods are not comparable");
  if (raw < -1e-6) {
    if (!r.note.empty()) r.note += "; ";
    r.note += "sub-model likelihood exceeds the full fit by " + std::to_string(-raw / 2.0);
  }
  r.stat = std::max(raw, 0.0);
  r.p_value = std::isinf(r.stat) ? 0.0 : chi_square_sf(r.stat, r.df);
  r.reject = r.stat > r.critical;
  if (sample && full.has_estimates() && sub.has_estimates()) {
    r.closed_form_stat = -2.0 * closed_form_log_lambda(full.estimates, sub.estimates, *sample);
  }
  return r;
}

double bound_curve(BoundCurve c, double alpha) {
  switch (c) {
    case BoundCurve::ExpCaseINegative:
      return -std::sqrt(alpha / (2.0 * std::exp(alpha) - 1.0));
    case BoundCurve::ExpCaseIVNegative:
      return exp_moments({alpha, -1.0, 1.0, 1.0}).rho;
    case BoundCurve::LomaxCaseIVNegative:
      return lomax_moments({alpha, -1.0, 1.0, 1.0, 1.0}).rho;
  }
  return 0.0;
}

std::pair<double, double> rho_bound_argmin(BoundCurve c) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 1e-6, b = 50.0;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = bound_curve(c, x1), f2 = bound_curve(c, x2);
  while (b - a > 1e-8) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = bound_curve(c, x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = bound_curve(c, x2);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, bound_curve(c, x)};
}

CorrelationBounds rho_bounds(const ModelSpec& spec) {
  validate(spec);
  const bool lomax = spec.family == Family::Lomax;
  CorrelationBounds b;
  switch (spec.model_case) {
    case Case::Full:
    case Case::LomaxEta1:
    case Case::III:
      b.attained_at = "alpha -> 0 with beta -> +/-infinity";
      break;
    case Case::II:
      b.attained_at = "beta -> +/-infinity, then alpha -> 0";
      break;
    case Case::V:
      b.attained_at = "alpha -> 0, then beta -> +/-infinity";
      break;
    case Case::I:
      if (spec.sign > 0) {
        b = {0.0, std::sqrt(2.0) / 2.0, true, "delta -> 0, gamma -> infinity, alpha -> 0"};
      } else {
        const auto [a, v] = rho_bound_argmin(BoundCurve::ExpCaseINegative);
        b = {v, 0.0, true, "delta -> 1, gamma -> infinity, alpha = " + std::to_string(a)};
      }
      break;
    case Case::IV:
      if (spec.sign > 0) {
        const double up = lomax ? std::sqrt(3.0) / 3.0 : std::sqrt((M_E - 1.0) / (2.0 * M_E - 1.0));
        b = {0.0, up, true, "delta -> 0, alpha -> 0"};
      } else {
        const auto [a, v] = rho_bound_argmin(lomax ? BoundCurve::LomaxCaseIVNegative
                                                   : BoundCurve::ExpCaseIVNegative);
        // delta = 1 is admissible, so the lower end is reached.
        b = {v, 0.0, false, "lower attained at delta = 1, alpha = " + std::to_string(a)};
      }
      break;
  }
  return b;
}

}  // namespace pseudopoisson
