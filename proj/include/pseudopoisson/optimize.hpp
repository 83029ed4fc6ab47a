#pragma once

#include <functional>
#include <vector>

namespace pseudopoisson {

struct NelderMeadOptions {
  int max_iters = 2000;
  /// Stop when the simplex values agree to f_tol * (1 + |f_best|) ...
  double f_tol = 1e-10;
  /// ... and every vertex lies within x_tol of the best one (max norm).
  double x_tol = 1e-8;
  double initial_step = 0.5;
};

struct NelderMeadResult {
  std::vector<double> x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  /// True when the value criterion holds at exit, even if the vertex
  /// spread did not shrink below x_tol (flat ridges).
  bool converged = false;
};

/// Derivative-free minimization. Non-finite objective values are treated as
/// +infinity, so infeasible regions can be signalled that way.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, const NelderMeadOptions& opts = {});

}  // namespace pseudopoisson
