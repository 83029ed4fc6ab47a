#pragma once

#include "pseudopoisson/data_model.hpp"
#include "pseudopoisson/special_functions.hpp"

namespace pseudopoisson {

struct MomentSet {
  double e1 = 0.0;
  double e2 = 0.0;
  double v1 = 0.0;
  double v2 = 0.0;
  double cov = 0.0;
  double rho = 0.0;
};

/// Closed-form moments. Every exponential is written as e^{alpha (nu - 1)}
/// and friends, so mu = e^alpha is never formed and large alpha cannot overflow.
MomentSet exp_moments(const ExpParams& p);

/// Series-evaluated moments, valid for any real eta > 0.
MomentSet lomax_moments(const LomaxParams& p, const SeriesOptions& opts = {});

MomentSet population_moments(const ParamVector& p, const SeriesOptions& opts = {});

/// Poisson(alpha) expectations of the Lomax distribution function F:
/// mean E[F(X)], centred second moment Var[F(X)], and the forward
/// difference E[F(X + 1) - F(X)].
struct LomaxSeriesTerms {
  double f_mean = 0.0;
  double f_var = 0.0;
  double f_step = 0.0;
};
LomaxSeriesTerms lomax_series_terms(double alpha, double gamma, double eta,
                                    const SeriesOptions& opts = {});

/// Joint pmf P(X1 = x1, X2 = x2).
double joint_log_pmf(const ParamVector& p, Count x1, Count x2);
double joint_pmf(const ParamVector& p, Count x1, Count x2);

/// Test oracle: all moments by direct double summation of the joint pmf over
/// a truncated grid. X1max is the smallest m with P(Poisson(alpha) > m) below
/// tail_mass_tol / 2; X2max is chosen the same way at rate delta + |beta|.
/// Throws OracleInfeasibleError if the grid would exceed `max_cells`.
MomentSet brute_force_moments(const ModelSpec& spec, const ParamVector& p,
                              double tail_mass_tol = 1e-14, long max_cells = 50'000'000);

/// Smallest m with P(Poisson(rate) > m) < tail.
Count poisson_upper_cutoff(double rate, double tail);

}  // namespace pseudopoisson
