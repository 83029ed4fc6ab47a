#include "pseudopoisson/simulation.hpp"

#include <cmath>
#include <optional>

#include "pseudopoisson/moments.hpp"
#include "pseudopoisson/parallel.hpp"
#include "pseudopoisson/special_functions.hpp"

namespace pseudopoisson {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(mix64(seed) ^ (index * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL));
}

namespace {

Count poisson_inversion(double rate, std::mt19937_64& rng) {
  const double u = uniform01(rng);
  double p = std::exp(-rate);
  double cdf = p;
  Count k = 0;
  // The cdf can stall a hair below 1 from rounding; 200 is far past the
  // support that matters for rates under 30.
  while (u > cdf && k < 200) {
    ++k;
    p *= rate / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

// Hormann (1993), transformed rejection with squeeze.
Count poisson_ptrs(double rate, std::mt19937_64& rng) {
  const double smu = std::sqrt(rate);
  const double b = 0.931 + 2.53 * smu;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  const double log_rate = std::log(rate);
  for (;;) {
    const double u = uniform01(rng) - 0.5;
    const double v = uniform01(rng);
    const double us = 0.5 - std::fabs(u);
    if (us <= 0.0) continue;
    const double k = std::floor((2.0 * a / us + b) * u + rate + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<Count>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (v <= 0.0) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -rate + k * log_rate - std::lgamma(k + 1.0)) {
      return static_cast<Count>(k);
    }
  }
}

double sd(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::vector<double> free_values(const ModelSpec& spec, const ParamVector& p) {
  std::vector<double> out;
  std::visit(
      [&](const auto& v) {
        out.push_back(v.alpha);
        if (!spec.fixes_beta()) out.push_back(v.beta);
        if (!spec.fixes_gamma()) out.push_back(v.gamma);
        if (!spec.fixes_delta()) out.push_back(v.delta);
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, LomaxParams>) {
          if (!spec.fixes_eta()) out.push_back(v.eta);
        }
      },
      p);
  return out;
}

struct Replicate {
  std::optional<std::vector<double>> mme;
  std::optional<double> mme_rho;
  std::optional<std::vector<double>> mle;
  std::optional<double> mle_rho;
  std::optional<double> pearson;
};

}  // namespace

Count sample_poisson(double rate, std::mt19937_64& rng) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw DomainError("Poisson rate must be finite and >= 0");
  if (rate == 0.0) return 0;
  return rate < 30.0 ? poisson_inversion(rate, rng) : poisson_ptrs(rate, rng);
}

BivariateSample sample_from(const ModelSpec& spec, const ParamVector& truth, std::size_t n,
                            std::uint64_t seed) {
  if (!conforms(spec, truth)) throw UsageError("parameters do not match model " + spec.id());
  if (auto issue = admissibility_issue(truth)) throw DomainError(*issue);
  if (n < 2) throw InsufficientDataError("sample size must be at least 2");
  std::mt19937_64 rng(mix64(seed));
  const double alpha = alpha_of(truth);
  std::vector<CountPair> pairs;
  pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Count x1 = sample_poisson(alpha, rng);
    const double rate = std::max(conditional_rate(x1, truth), 0.0);
    pairs.push_back({x1, sample_poisson(rate, rng)});
  }
  return BivariateSample(std::move(pairs));
}

void validate(const StudyConfig& cfg) {
  validate(cfg.spec);
  if (cfg.n < 2) throw UsageError("study sample size must be at least 2");
  if (cfg.reps < 1) throw UsageError("study needs at least one replicate");
  if (!cfg.use_mme && !cfg.use_mle) throw UsageError("study needs at least one estimator");
  if (!(cfg.ci_level > 0.0 && cfg.ci_level < 1.0)) throw UsageError("ci_level must lie in (0, 1)");
  if (!conforms(cfg.spec, cfg.truth)) throw UsageError("truth does not match model " + cfg.spec.id());
  if (auto issue = admissibility_issue(cfg.truth)) throw UsageError("inadmissible truth: " + *issue);
}

SimulationSummary run_study(const StudyConfig& cfg) {
  validate(cfg);
  auto reps = parallel_map<Replicate>(cfg.reps, [&](std::size_t r) {
    Replicate out;
    const BivariateSample s = sample_from(cfg.spec, cfg.truth, cfg.n, stream_seed(cfg.seed, r));
    try {
      out.pearson = pearson_correlation(s);
    } catch (const Error&) {
    }
    if (cfg.use_mme) {
      try {
        const FitResult f = mme_fit(cfg.spec, s);
        if (f.has_estimates()) {
          out.mme = free_values(cfg.spec, f.estimates);
          out.mme_rho = f.rho;
        }
      } catch (const Error&) {
      }
    }
    if (cfg.use_mle) {
      try {
        const FitResult f = mle_fit(cfg.spec, s, cfg.mle);
        if (f.has_estimates()) {
          out.mle = free_values(cfg.spec, f.estimates);
          out.mle_rho = f.rho;
        }
      } catch (const Error&) {
      }
    }
    return out;
  });

  SimulationSummary sum;
  sum.config = cfg;
  sum.single_replicate = cfg.reps == 1;
  sum.z = normal_upper_quantile((1.0 - cfg.ci_level) / 2.0);

  auto names = cfg.spec.free_parameter_names();
  auto truths = free_values(cfg.spec, cfg.truth);
  names.emplace_back("rho");
  truths.push_back(population_moments(cfg.truth).rho);

  auto summarise = [&](Method m) {
    EstimatorSummary e;
    e.method = m;
    std::vector<std::vector<double>> cols(names.size());
    for (const auto& r : reps) {
      const auto& est = m == Method::MME ? r.mme : r.mle;
      const auto& rho = m == Method::MME ? r.mme_rho : r.mle_rho;
      if (!est) {
        ++e.failures;
        continue;
      }
      for (std::size_t j = 0; j < est->size(); ++j) cols[j].push_back((*est)[j]);
      if (rho) cols.back().push_back(*rho);
    }
    e.available = e.failures < cfg.reps;
    for (std::size_t j = 0; j < names.size(); ++j) {
      ParameterSummary p;
      p.name = names[j];
      p.truth = truths[j];
      p.count = cols[j].size();
      p.mean = mean_of(cols[j]);
      p.se = sd(cols[j], p.mean);
      p.ci_lower = p.mean - sum.z * p.se;
      p.ci_upper = p.mean + sum.z * p.se;
      e.parameters.push_back(p);
    }
    sum.estimators.push_back(std::move(e));
  };
  if (cfg.use_mme) summarise(Method::MME);
  if (cfg.use_mle) summarise(Method::MLE);

  std::vector<double> pc;
  for (const auto& r : reps) {
    if (r.pearson) {
      pc.push_back(*r.pearson);
    } else {
      ++sum.pearson_failures;
    }
  }
  sum.mean_pearson = mean_of(pc);
  sum.pearson_se = sd(pc, sum.mean_pearson);
  return sum;
}

}  // namespace pseudopoisson
