#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "pseudopoisson/data_model.hpp"

namespace fixtures {

using pseudopoisson::ExpParams;
using pseudopoisson::LomaxParams;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double nonzero_beta(std::mt19937_64& rng, double bound) {
  double b = 0.0;
  while (std::fabs(b) < 1e-3) b = uniform(rng, -bound, bound);
  return b;
}

/// alpha in [0.1, 8], beta in [-30, 30] \ {0}, gamma in [0.05, 5],
/// delta = max(-beta, 0) + U[0, 10].
inline ExpParams random_exp(std::mt19937_64& rng) {
  ExpParams p;
  p.alpha = uniform(rng, 0.1, 8.0);
  p.beta = nonzero_beta(rng, 30.0);
  p.gamma = uniform(rng, 0.05, 5.0);
  p.delta = std::max(-p.beta, 0.0) + uniform(rng, 0.0, 10.0);
  return p;
}

/// Same ranges plus eta in [0.3, 5].
inline LomaxParams random_lomax(std::mt19937_64& rng) {
  LomaxParams p;
  p.alpha = uniform(rng, 0.1, 8.0);
  p.beta = nonzero_beta(rng, 30.0);
  p.gamma = uniform(rng, 0.05, 5.0);
  p.delta = std::max(-p.beta, 0.0) + uniform(rng, 0.0, 10.0);
  p.eta = uniform(rng, 0.3, 5.0);
  return p;
}

inline bool rel_close(double a, double b, double rel, double abs_floor = 1e-14) {
  return std::fabs(a - b) <= rel * std::max(std::fabs(a), std::fabs(b)) + abs_floor;
}

/// Two-step draw with the standard library sampler, independent of the
/// library's own generator.
inline pseudopoisson::BivariateSample draw(const pseudopoisson::ParamVector& p, std::size_t n,
                                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::poisson_distribution<long> d1(pseudopoisson::alpha_of(p));
  std::vector<pseudopoisson::CountPair> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const long x1 = d1(rng);
    const double rate = pseudopoisson::conditional_rate(x1, p);
    long x2 = 0;
    if (rate > 0) x2 = std::poisson_distribution<long>(rate)(rng);
    out.push_back({x1, x2});
  }
  return pseudopoisson::BivariateSample(std::move(out));
}

}  // namespace fixtures
