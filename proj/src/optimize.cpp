#include "pseudopoisson/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pseudopoisson {

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, const NelderMeadOptions& opts) {
  const std::size_t dim = x0.size();
  NelderMeadResult res;
  auto eval = [&](const std::vector<double>& x) {
    ++res.evaluations;
    double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  if (dim == 0) {
    res.x = x0;
    res.f = eval(x0);
    res.converged = true;
    return res;
  }

  std::vector<std::vector<double>> simplex(dim + 1, x0);
  std::vector<double> values(dim + 1);
  for (std::size_t i = 0; i < dim; ++i) simplex[i + 1][i] += opts.initial_step;
  for (std::size_t i = 0; i <= dim; ++i) values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(dim + 1);
  std::vector<double> centroid(dim), trial(dim), trial2(dim);

  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<std::vector<double>> s2(dim + 1);
    std::vector<double> v2(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) {
      s2[i] = simplex[order[i]];
      v2[i] = values[order[i]];
    }
    simplex.swap(s2);
    values.swap(v2);
  };

  auto value_converged = [&] {
    const double best = values.front();
    const double worst = values.back();
    if (!std::isfinite(best)) return false;
    if (!std::isfinite(worst)) return false;
    return worst - best <= opts.f_tol * (1.0 + std::fabs(best));
  };
  auto spread_converged = [&] {
    double spread = 0.0;
    for (std::size_t i = 1; i <= dim; ++i) {
      for (std::size_t j = 0; j < dim; ++j) {
        spread = std::max(spread, std::fabs(simplex[i][j] - simplex[0][j]));
      }
    }
    return spread <= opts.x_tol;
  };

  sort_simplex();
  while (res.iterations < opts.max_iters) {
    if (value_converged() && spread_converged()) break;
    ++res.iterations;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = 0; j < dim; ++j) centroid[j] += simplex[i][j];
    }
    for (double& c : centroid) c /= static_cast<double>(dim);

    const auto& worst = simplex[dim];
    for (std::size_t j = 0; j < dim; ++j) trial[j] = centroid[j] + (centroid[j] - worst[j]);
    const double fr = eval(trial);

    if (fr < values[0]) {
      for (std::size_t j = 0; j < dim; ++j) trial2[j] = centroid[j] + 2.0 * (centroid[j] - worst[j]);
      const double fe = eval(trial2);
      if (fe < fr) {
        simplex[dim] = trial2;
        values[dim] = fe;
      } else {
        simplex[dim] = trial;
        values[dim] = fr;
      }
    } else if (fr < values[dim - 1]) {
      simplex[dim] = trial;
      values[dim] = fr;
    } else {
      const bool outside = fr < values[dim];
      for (std::size_t j = 0; j < dim; ++j) {
        trial2[j] = outside ? centroid[j] + 0.5 * (trial[j] - centroid[j])
                            : centroid[j] + 0.5 * (worst[j] - centroid[j]);
      }
      const double fc = eval(trial2);
      if (fc < std::min(fr, values[dim])) {
        simplex[dim] = trial2;
        values[dim] = fc;
      } else {
        for (std::size_t i = 1; i <= dim; ++i) {
          for (std::size_t j = 0; j < dim; ++j) {
            simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
          }
          values[i] = eval(simplex[i]);
        }
      }
    }
    sort_simplex();
  }

  res.x = simplex.front();
  res.f = values.front();
  res.converged = value_converged();
  return res;
}

}  // namespace pseudopoisson
