#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pseudopoisson/data_model.hpp"
#include "pseudopoisson/mle.hpp"

namespace pseudopoisson {

/// splitmix64 finaliser.
std::uint64_t mix64(std::uint64_t x);

/// Seed of replicate `index`: a counter-based mix, so replicates can be
/// generated in any order.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

/// Uniform on [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Sequential-search inversion below rate 30, PTRS transformed rejection above.
Count sample_poisson(double rate, std::mt19937_64& rng);

/// n pairs: x1 ~ Poisson(alpha), then x2 ~ Poisson(rate(x1)).
BivariateSample sample_from(const ModelSpec& spec, const ParamVector& truth, std::size_t n,
                            std::uint64_t seed);

struct StudyConfig {
  ModelSpec spec;
  ParamVector truth;
  std::size_t n = 1000;
  std::size_t reps = 100;
  std::uint64_t seed = 1;
  bool use_mme = true;
  bool use_mle = true;
  double ci_level = 0.95;
  MleOptions mle;
};

/// Throws UsageError when n < 2, reps < 1, no estimator is selected, the
/// level is outside (0, 1) or the truth does not fit the spec.
void validate(const StudyConfig& cfg);

struct ParameterSummary {
  std::string name;
  double truth = 0.0;
  double mean = 0.0;
  /// Empirical standard deviation across replicates (divisor reps - 1).
  double se = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  std::size_t count = 0;
};

struct EstimatorSummary {
  Method method = Method::MLE;
  /// False when every replicate failed.
  bool available = false;
  /// MME nonexistence or MLE non-convergence.
  std::size_t failures = 0;
  /// Free parameters (alpha first) followed by rho.
  std::vector<ParameterSummary> parameters;
};

struct SimulationSummary {
  StudyConfig config;
  double z = 0.0;
  std::vector<EstimatorSummary> estimators;
  double mean_pearson = 0.0;
  double pearson_se = 0.0;
  std::size_t pearson_failures = 0;
  /// reps == 1: every SE is 0 by convention and the intervals are degenerate.
  bool single_replicate = false;
};

SimulationSummary run_study(const StudyConfig& cfg);

}  // namespace pseudopoisson
