#pragma once

#include <optional>
#include <string>
#include <utility>

#include "pseudopoisson/data_model.hpp"
#include "pseudopoisson/mle.hpp"

namespace pseudopoisson {

struct LrtResult {
  ModelSpec full;
  ModelSpec sub;
  /// -2 log Lambda, clamped at 0; +infinity for a zero-likelihood sub-model.
  double stat = 0.0;
  int df = 0;
  double level = 0.05;
  double critical = 0.0;
  double p_value = 1.0;
  bool reject = false;
  /// Same statistic through the expanded log Lambda expression, when the
  /// sample was supplied.
  std::optional<double> closed_form_stat;
  /// The null fixes delta = 0, which sits on the edge of the parameter space.
  bool boundary_test = false;
  std::string note;
};

/// Likelihood-ratio test of `sub` against `full` (both maximum-likelihood
/// fits of the same sample). Throws UsageError for non-nested specs,
/// mismatched samples or fits without a log-likelihood.
LrtResult lrt(const FitResult& full, const FitResult& sub, double level = 0.05,
              const BivariateSample* sample = nullptr);

/// log Lambda written out term by term:
///   -n(b* + d* - b - d) + b* sum S*(x1) - b sum S(x1) + sum x2 log(rate*/rate)
/// where S is the survival part of each family and starred values belong to
/// the sub-model. The alpha terms cancel since both fits share
/// alpha = mean(x1). Evaluated in long double with F = 1 - S.
double closed_form_log_lambda(const ParamVector& full, const ParamVector& sub,
                              const BivariateSample& sample);

struct CorrelationBounds {
  double lower = -1.0;
  double upper = 1.0;
  /// Bounds are limits that no admissible parameter set attains.
  bool open_endpoints = true;
  std::string attained_at;
};

CorrelationBounds rho_bounds(const ModelSpec& spec);

/// The three limit curves that are not monotone in alpha.
enum class BoundCurve { ExpCaseINegative, ExpCaseIVNegative, LomaxCaseIVNegative };

double bound_curve(BoundCurve c, double alpha);

/// Golden-section minimum of the curve over alpha in (1e-6, 50).
std::pair<double, double> rho_bound_argmin(BoundCurve c);

}  // namespace pseudopoisson
