#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pseudopoisson/data_model.hpp"

namespace pseudopoisson {

struct SolverTrace {
  std::string method;  ///< "closed-form", "bisection", "lambert-w", "newton-bernoulli", "scan+bisection"
  int iterations = 0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double residual = 0.0;
};

enum class BoundStatus {
  Passed,
  Violated,
  /// The root search failed where no analytic window decides existence.
  Unknown,
  /// No method-of-moments estimator is defined for this model.
  NotApplicable,
};

struct BoundCheck {
  BoundStatus status = BoundStatus::Passed;
  std::string details;
};

struct MmeReport {
  ModelSpec spec;
  /// Always available: alpha~ = M1.
  double alpha = 0.0;
  /// Complete parameter vector when the estimator exists and is admissible.
  std::optional<ParamVector> estimates;
  BoundCheck bound_check;
  SolverTrace trace;
  /// Further admissible roots (Lomax Case I, exponential Case I with alpha > 1).
  std::vector<ParamVector> alternatives;

  [[nodiscard]] bool available() const { return estimates.has_value(); }
};

struct MmeOptions {
  /// Solve the exponential dispersion equation through the Bernoulli series
  /// when the solution satisfies alpha (1 - nu)^2 < bernoulli_switch.
  bool bernoulli_fast_path = false;
  double bernoulli_switch = 0.5;
};

// Individual estimators. Each returns a report with bound_check = Passed or
// throws: ExistenceError (bound or admissibility failure, naming the side),
// ExistenceUnknownError (Lomax Case I search found nothing),
// DegenerateDispersionError (S22 == M2), SolverError (bracket cap).
MmeReport mme_exp_full(const SampleMoments& m, const MmeOptions& opts = {});
MmeReport mme_exp_case1(const SampleMoments& m, int sign);
MmeReport mme_exp_case2(const SampleMoments& m);
MmeReport mme_exp_case3(const SampleMoments& m, const MmeOptions& opts = {});
MmeReport mme_exp_case4(const SampleMoments& m, int sign);
MmeReport mme_exp_case5(const SampleMoments& m);

MmeReport mme_lomax_eta1_full(const SampleMoments& m);
MmeReport mme_lomax_case1(const SampleMoments& m, int sign);
MmeReport mme_lomax_case2(const SampleMoments& m);
MmeReport mme_lomax_case3(const SampleMoments& m);
MmeReport mme_lomax_case4(const SampleMoments& m, int sign);
MmeReport mme_lomax_case5(const SampleMoments& m);

/// Dispatches on spec and never throws for estimator non-existence: failures
/// are folded into bound_check with alpha~ still present. Usage errors
/// (invalid spec) still throw.
MmeReport estimate_mme(const ModelSpec& spec, const SampleMoments& m, const MmeOptions& opts = {});

// Building blocks, exposed for diagnostics and tests.

/// Lower and upper ends of the window M1^2/(e^M1 - 1) < S12^2/(S22 - M2) < M1.
std::pair<double, double> dispersion_window(double m1);

/// Left side of the exponential nu~ equation,
/// alpha^2 (nu - 1)^2 / (mu^{(nu - 1)^2} - 1), strictly increasing on (0, 1).
double exp_dispersion_lhs(double alpha, double nu);

/// Left side of the Lomax (eta' = 1) gamma~' equation,
/// Cov^2 / (Var(X2) - E(X2)), strictly increasing in gamma' > 0.
double lomax_dispersion_lhs(double alpha, double gamma);

/// Covariance per unit beta' for Lomax eta' = 1: alpha E[F(X + 1) - F(X)].
double lomax_case1_lhs(double alpha, double gamma);

/// nu~ by bisection on (0, 1) for target ratio S12^2/(S22 - M2).
double solve_exp_nu_bisection(double alpha, double ratio, int* iterations = nullptr);

/// nu~ through Newton iteration on the truncated Bernoulli series. Returns
/// nullopt when the solution lies outside the series window.
std::optional<double> solve_exp_nu_bernoulli(double alpha, double ratio, double series_switch = 0.5);

}  // namespace pseudopoisson
