#include "pseudopoisson/mle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "pseudopoisson/moments.hpp"
#include "pseudopoisson/optimize.hpp"
#include "pseudopoisson/parallel.hpp"

namespace pseudopoisson {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kLogClamp = 40.0;
constexpr double kBetaClamp = 1e8;

// Observations grouped by distinct x1: the likelihood only needs the count
// and the x2 total of each group.
struct Stats {
  double n = 0;
  double sum_x1 = 0;
  double h = 0;
  std::vector<double> x;
  std::vector<double> count;
  std::vector<double> x2sum;
};

Stats collect(const BivariateSample& sample) {
  std::map<Count, std::pair<long long, long long>> groups;
  Stats st;
  st.n = static_cast<double>(sample.size());
  for (const auto& p : sample.pairs()) {
    auto& g = groups[p.x1];
    g.first += 1;
    g.second += p.x2;
    st.sum_x1 += static_cast<double>(p.x1);
    st.h -= std::lgamma(static_cast<double>(p.x1) + 1.0) + std::lgamma(static_cast<double>(p.x2) + 1.0);
  }
  for (const auto& [x, g] : groups) {
    st.x.push_back(static_cast<double>(x));
    st.count.push_back(static_cast<double>(g.first));
    st.x2sum.push_back(static_cast<double>(g.second));
  }
  return st;
}

// Survival part S(x) = 1 - F(x) in log form.
double log_survival(Family f, double x, double gamma, double eta) {
  if (x == 0.0) return 0.0;
  if (f == Family::Exponential) return -gamma * x;
  return -eta * std::log1p(x / gamma);
}

// Natural coordinates with delta split as max(-beta, 0) + slack, so the rate
// is evaluated without cancellation: |beta| S(x) + slack for beta < 0 and
// beta F(x) + slack for beta > 0.
struct Natural {
  double beta = 1.0;
  double gamma = 1.0;
  double slack = 0.0;
  double eta = 1.0;
};

double loglik_natural(Family fam, double alpha, const Natural& q, const Stats& st) {
  double ll = -st.n * alpha + std::log(alpha) * st.sum_x1 + st.h;
  for (std::size_t k = 0; k < st.x.size(); ++k) {
    const double ls = log_survival(fam, st.x[k], q.gamma, q.eta);
    const double base = q.beta < 0.0 ? -q.beta * std::exp(ls) : -q.beta * std::expm1(ls);
    const double rate = base + q.slack;
    ll -= st.count[k] * rate;
    if (st.x2sum[k] > 0.0) {
      if (!(rate > 0.0)) return -kInf;
      ll += st.x2sum[k] * std::log(rate);
    }
  }
  return ll;
}

struct Layout {
  ModelSpec spec;
  bool beta_free = false;
  bool beta_positive = false;
  bool gamma_free = false;
  bool delta_free = false;
  bool eta_free = false;
  int dim = 0;

  explicit Layout(const ModelSpec& s) : spec(s) {
    beta_free = !s.fixes_beta();
    beta_positive = s.fixes_delta();
    gamma_free = !s.fixes_gamma();
    delta_free = !s.fixes_delta();
    eta_free = s.family == Family::Lomax && !s.fixes_eta();
    dim = beta_free + gamma_free + delta_free + eta_free;
  }

  Natural decode(const std::vector<double>& u) const {
    auto clamp_log = [](double v) { return std::exp(std::clamp(v, -kLogClamp, kLogClamp)); };
    Natural q;
    std::size_t i = 0;
    if (beta_free) {
      q.beta = beta_positive ? clamp_log(u[i++]) : std::clamp(u[i++], -kBetaClamp, kBetaClamp);
    } else {
      q.beta = spec.sign;
    }
    q.gamma = gamma_free ? clamp_log(u[i++]) : 1.0;
    q.slack = delta_free ? clamp_log(u[i++]) : 0.0;
    q.eta = eta_free ? clamp_log(u[i++]) : 1.0;
    return q;
  }

  std::vector<double> encode(const Natural& q) const {
    std::vector<double> u;
    if (beta_free) u.push_back(beta_positive ? std::log(std::max(q.beta, 1e-12)) : q.beta);
    if (gamma_free) u.push_back(std::log(q.gamma));
    if (delta_free) u.push_back(std::log(std::max(q.slack, 1e-6 * (1.0 + std::fabs(q.beta)))));
    if (eta_free) u.push_back(std::log(q.eta));
    return u;
  }

  ParamVector to_params(double alpha, const Natural& q) const {
    const double delta = delta_free ? std::max(-q.beta, 0.0) + q.slack : 0.0;
    if (spec.family == Family::Exponential) return ExpParams{alpha, q.beta, q.gamma, delta};
    return LomaxParams{alpha, q.beta, q.gamma, delta, q.eta};
  }

  Natural from_params(const ParamVector& p) const {
    Natural q;
    std::visit(
        [&](const auto& v) {
          q.beta = v.beta;
          q.gamma = v.gamma;
          q.slack = v.delta - std::max(-v.beta, 0.0);
          if constexpr (std::is_same_v<std::decay_t<decltype(v)>, LomaxParams>) q.eta = v.eta;
        },
        p);
    if (!beta_free) q.beta = spec.sign;
    if (!gamma_free) q.gamma = 1.0;
    if (!eta_free) q.eta = 1.0;
    if (beta_positive) q.beta = std::fabs(q.beta);
    return q;
  }
};

ParamVector nan_params(const ModelSpec& spec, double alpha) {
  const double beta = spec.fixes_beta() ? spec.sign : kNaN;
  const double gamma = spec.fixes_gamma() ? 1.0 : kNaN;
  const double delta = spec.fixes_delta() ? 0.0 : kNaN;
  if (spec.family == Family::Exponential) return ExpParams{alpha, beta, gamma, delta};
  return LomaxParams{alpha, beta, gamma, delta, spec.fixes_eta() ? 1.0 : kNaN};
}

void flag_boundaries(const Layout& layout, const Natural& q, FitDiagnostics& d) {
  if (layout.delta_free && q.slack < 1e-6 * std::max(1.0, std::fabs(q.beta))) {
    d.boundary_flags.emplace_back("delta at max(-beta, 0)");
  }
  if (layout.gamma_free) {
    if (q.gamma > 1e6) d.boundary_flags.emplace_back("gamma -> infinity");
    if (q.gamma < 1e-6) d.boundary_flags.emplace_back("gamma -> 0");
  }
  if (layout.eta_free) {
    if (q.eta > 1e6) d.boundary_flags.emplace_back("eta -> infinity");
    if (q.eta < 1e-6) d.boundary_flags.emplace_back("eta -> 0");
  }
}

std::uint64_t scramble(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::string to_string(Method m) { return m == Method::MME ? "mme" : "mle"; }

bool FitResult::has_estimates() const {
  return std::visit(
      [](const auto& p) {
        return std::isfinite(p.beta) && std::isfinite(p.gamma) && std::isfinite(p.delta);
      },
      estimates);
}

double loglik(const ParamVector& p, const BivariateSample& sample) {
  const Stats st = collect(sample);
  const double alpha = alpha_of(p);
  double ll = -st.n * alpha + std::log(alpha) * st.sum_x1 + st.h;
  for (std::size_t k = 0; k < st.x.size(); ++k) {
    const double rate = conditional_rate(static_cast<Count>(st.x[k]), p);
    ll -= st.count[k] * rate;
    if (st.x2sum[k] > 0.0) {
      if (!(rate > 0.0)) return -kInf;
      ll += st.x2sum[k] * std::log(rate);
    }
  }
  return ll;
}

double exp_loglik(const ExpParams& p, const BivariateSample& sample) {
  return loglik(ParamVector{p}, sample);
}

double lomax_loglik(const LomaxParams& p, const BivariateSample& sample) {
  return loglik(ParamVector{p}, sample);
}

double aic(double ll, int k) {
  if (std::isnan(ll)) throw DomainError("aic: NaN log-likelihood");
  if (ll == -kInf) return kInf;
  return 2.0 * k - 2.0 * ll;
}

std::optional<double> fitted_rho(const ParamVector& p, bool* series_evaluated) {
  if (series_evaluated) {
    *series_evaluated = false;
    if (const auto* l = std::get_if<LomaxParams>(&p)) {
      *series_evaluated = l->eta != std::round(l->eta);
    }
  }
  if (!is_admissible(p)) return std::nullopt;
  try {
    const double r = population_moments(p).rho;
    if (!std::isfinite(r)) return std::nullopt;
    return r;
  } catch (const Error&) {
    return std::nullopt;
  }
}

FitResult mle_fit(const ModelSpec& spec, const BivariateSample& sample, const MleOptions& opts) {
  validate(spec);
  if (opts.restarts < 1) throw UsageError("restarts must be >= 1");
  if (!(opts.f_tol > 0.0) || opts.max_iters < 1) throw UsageError("invalid optimizer tolerances");

  const SampleMoments m = sample_moments(sample);
  if (!(m.m1 > 0.0)) throw DomainError("maximum likelihood needs a positive mean of x1 (alpha > 0)");
  const double alpha = m.m1;
  const int k = spec.free_parameter_count();

  FitResult out;
  out.spec = spec;
  out.method = Method::MLE;
  out.n = sample.size();
  out.digest = sample.digest();

  if (has_zero_rate_conflict(spec, sample)) {
    out.estimates = nan_params(spec, alpha);
    out.loglik = -kInf;
    out.aic = kInf;
    out.diagnostics.inapplicable = true;
    out.diagnostics.notes.emplace_back(
        "inapplicable (zero-likelihood observation): delta = 0 forces x2 = 0 when x1 = 0");
    return out;
  }

  const Layout layout(spec);
  const Stats st = collect(sample);
  auto objective = [&](const std::vector<double>& u) {
    return -loglik_natural(spec.family, alpha, layout.decode(u), st);
  };

  // Seeds.
  std::vector<std::vector<double>> starts;
  if (opts.start) {
    starts.push_back(layout.encode(layout.from_params(apply_constraints(spec, *opts.start))));
  } else {
    ModelSpec seed_spec = spec;
    if (spec.family == Family::Lomax && spec.model_case == Case::Full) seed_spec.model_case = Case::LomaxEta1;
    const MmeReport mme = estimate_mme(seed_spec, m);
    if (mme.estimates) starts.push_back(layout.encode(layout.from_params(*mme.estimates)));
  }
  {
    Natural h;
    const double scale = std::max(m.m2 / 2.0, 0.1);
    h.beta = layout.beta_positive ? 2.0 * scale : (m.s12 < 0.0 ? -scale : scale);
    if (!layout.beta_free) h.beta = spec.sign;
    h.gamma = 1.0;
    h.slack = scale;
    h.eta = 1.0;
    starts.push_back(layout.encode(h));
  }
  std::uint64_t tag = 1469598103934665603ULL;
  for (unsigned char c : spec.id()) tag = (tag ^ c) * 1099511628211ULL;
  std::mt19937_64 rng(scramble(out.digest ^ tag));
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t base_count = starts.size();
  for (int r = 0; static_cast<int>(starts.size()) < std::max(opts.restarts, 1); ++r) {
    std::vector<double> u = starts[static_cast<std::size_t>(r) % base_count];
    std::size_t i = 0;
    if (layout.beta_free) {
      if (layout.beta_positive) {
        u[i] += normal(rng);
      } else {
        u[i] *= std::exp(0.5 * normal(rng));
        if (r % 3 == 2) u[i] = -u[i];
      }
      ++i;
    }
    for (; i < u.size(); ++i) u[i] += normal(rng);
    starts.push_back(u);
  }
  if (static_cast<int>(starts.size()) > opts.restarts && !opts.start) {
    starts.resize(static_cast<std::size_t>(std::max(opts.restarts, 1)));
  }

  NelderMeadOptions nm;
  nm.max_iters = opts.max_iters;
  nm.f_tol = opts.f_tol;
  nm.initial_step = 0.5;

  auto runs = parallel_map<NelderMeadResult>(starts.size(), [&](std::size_t i) {
    return nelder_mead(objective, starts[i], nm);
  });

  // Deterministic merge: best value, ties broken by coordinates.
  std::size_t best = 0;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    if (runs[i].f < runs[best].f || (runs[i].f == runs[best].f && runs[i].x < runs[best].x)) best = i;
  }
  FitDiagnostics& d = out.diagnostics;
  d.starts_tried = static_cast<int>(runs.size());
  for (const auto& r : runs) {
    d.iterations += r.iterations;
    d.evaluations += r.evaluations;
    d.starts_converged += r.converged ? 1 : 0;
  }
  NelderMeadResult final_run = runs[best];

  // Restart from the best vertex with a fresh, smaller simplex until the
  // value stops moving; this escapes premature simplex collapse.
  nm.initial_step = 0.1;
  for (int polish = 0; polish < 4 && std::isfinite(final_run.f); ++polish) {
    NelderMeadResult again = nelder_mead(objective, final_run.x, nm);
    d.iterations += again.iterations;
    d.evaluations += again.evaluations;
    const double gain = final_run.f - again.f;
    if (again.f <= final_run.f) {
      again.converged = again.converged || final_run.converged;
      final_run = again;
    }
    if (gain <= opts.f_tol * (1.0 + std::fabs(final_run.f))) break;
  }

  const Natural q = layout.decode(final_run.x);
  out.estimates = layout.to_params(alpha, q);
  const double ll = loglik(out.estimates, sample);
  out.loglik = ll;
  out.aic = aic(ll, k);
  d.converged = final_run.converged && std::isfinite(ll);
  flag_boundaries(layout, q, d);
  out.rho = fitted_rho(out.estimates, &out.rho_series_evaluated);

  if (!d.converged) {
    throw NonConvergenceError("maximum likelihood did not converge for " + spec.id() + " from " +
                                  std::to_string(d.starts_tried) + " starts",
                              out);
  }
  return out;
}

FitResult mme_fit(const ModelSpec& spec, const BivariateSample& sample, const MmeOptions& opts) {
  const SampleMoments m = sample_moments(sample);
  const MmeReport rep = estimate_mme(spec, m, opts);
  FitResult out;
  out.spec = spec;
  out.method = Method::MME;
  out.n = sample.size();
  out.digest = sample.digest();
  if (rep.bound_check.status != BoundStatus::Passed) {
    out.diagnostics.bound_violations.push_back(rep.bound_check.details);
  }
  if (!rep.estimates) {
    out.estimates = nan_params(spec, rep.alpha);
    return out;
  }
  out.diagnostics.converged = true;
  out.diagnostics.iterations = rep.trace.iterations;
  ParamVector chosen = *rep.estimates;
  if (!rep.alternatives.empty()) {
    double best_ll = loglik(chosen, sample);
    for (const auto& alt : rep.alternatives) {
      const double ll = loglik(alt, sample);
      if (ll > best_ll) {
        out.alternatives.push_back(chosen);
        chosen = alt;
        best_ll = ll;
      } else {
        out.alternatives.push_back(alt);
      }
    }
    out.diagnostics.notes.push_back("tie-break: " + std::to_string(rep.alternatives.size() + 1) +
                                    " moment roots; kept the one with the largest likelihood");
  }
  out.estimates = chosen;
  out.rho = fitted_rho(chosen, &out.rho_series_evaluated);
  return out;
}

}  // namespace pseudopoisson
