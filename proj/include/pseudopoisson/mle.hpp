#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pseudopoisson/data_model.hpp"
#include "pseudopoisson/errors.hpp"
#include "pseudopoisson/mme.hpp"

namespace pseudopoisson {

enum class Method { MME, MLE };

std::string to_string(Method m);

struct FitDiagnostics {
  bool converged = false;
  int iterations = 0;
  int evaluations = 0;
  int starts_tried = 0;
  int starts_converged = 0;
  /// Existence-bound violations reported by the moment estimator.
  std::vector<std::string> bound_violations;
  /// Coordinates sitting at the edge of the parameter space, e.g.
  /// "delta at max(-beta, 0)" or "gamma -> infinity".
  std::vector<std::string> boundary_flags;
  /// Case III/V on data with (0, x2 > 0): zero likelihood, nothing fitted.
  bool inapplicable = false;
  std::vector<std::string> notes;
};

struct FitResult {
  ModelSpec spec;
  /// For failed or inapplicable fits, non-estimated entries are NaN.
  ParamVector estimates;
  Method method = Method::MLE;
  std::optional<double> loglik;
  std::optional<double> aic;
  std::optional<double> rho;
  /// rho came from series evaluation at a non-integer Lomax shape.
  bool rho_series_evaluated = false;
  FitDiagnostics diagnostics;
  std::size_t n = 0;
  std::uint64_t digest = 0;
  /// Other admissible moment-estimator roots.
  std::vector<ParamVector> alternatives;

  /// False when nothing beyond alpha was estimated.
  [[nodiscard]] bool has_estimates() const;
};

/// All starts failed to converge; the best point found is attached.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, FitResult best)
      : Error(what), best_(std::move(best)) {}
  [[nodiscard]] const FitResult& best() const { return best_; }

 private:
  FitResult best_;
};

struct MleOptions {
  int max_iters = 2000;
  double f_tol = 1e-10;
  /// Number of starting points (MME seed when available, a heuristic seed,
  /// then deterministic perturbations).
  int restarts = 5;
  /// Replaces the automatic seeds when set.
  std::optional<ParamVector> start;
};

/// Log-likelihood including the combinatorial term -sum log(x1! x2!).
/// Returns -infinity when some observation has rate 0 and x2 > 0.
double exp_loglik(const ExpParams& p, const BivariateSample& sample);
double lomax_loglik(const LomaxParams& p, const BivariateSample& sample);
double loglik(const ParamVector& p, const BivariateSample& sample);

/// 2k - 2 loglik; +infinity for a -infinity log-likelihood.
double aic(double loglik, int k);

FitResult mle_fit(const ModelSpec& spec, const BivariateSample& sample, const MleOptions& opts = {});

/// Moment estimates packaged as a FitResult. When several roots exist, the
/// one with the largest likelihood is chosen and the choice is noted.
FitResult mme_fit(const ModelSpec& spec, const BivariateSample& sample, const MmeOptions& opts = {});

/// Correlation at the estimates, or nullopt if the series fails.
std::optional<double> fitted_rho(const ParamVector& p, bool* series_evaluated = nullptr);

}  // namespace pseudopoisson
