#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "fixtures.hpp"
#include "pseudopoisson/errors.hpp"
#include "pseudopoisson/mle.hpp"

using namespace pseudopoisson;

namespace {

BivariateSample make(std::vector<CountPair> v) { return BivariateSample(std::move(v)); }

// Termwise log of the product of joint pmf values.
double pmf_product_loglik(const ParamVector& p, const BivariateSample& s) {
  const double a = alpha_of(p);
  long double ll = 0;
  for (auto c : s.pairs()) {
    const double x1 = static_cast<double>(c.x1);
    const double x2 = static_cast<double>(c.x2);
    double rate = 0;
    if (const auto* e = std::get_if<ExpParams>(&p)) {
      rate = e->delta + e->beta * (1.0 - std::pow(std::exp(-e->gamma), x1));
    } else {
      const auto& l = std::get<LomaxParams>(p);
      rate = l.delta + l.beta * (1.0 - std::pow(l.gamma / (l.gamma + x1), l.eta));
    }
    ll += -a + x1 * std::log(a) - std::lgamma(x1 + 1.0);
    ll += -rate - std::lgamma(x2 + 1.0);
    if (c.x2 > 0) ll += x2 * std::log(rate);
  }
  return static_cast<double>(ll);
}

// Transformed coordinates: beta raw (log when delta is fixed), logs of gamma,
// the delta slack and eta. Used to probe optimality of a fit.
std::vector<double> to_coords(const ModelSpec& spec, const ParamVector& p) {
  std::vector<double> u;
  std::visit(
      [&](const auto& v) {
        if (!spec.fixes_beta()) u.push_back(spec.fixes_delta() ? std::log(v.beta) : v.beta);
        if (!spec.fixes_gamma()) u.push_back(std::log(v.gamma));
        if (!spec.fixes_delta()) u.push_back(std::log(v.delta - std::max(-v.beta, 0.0)));
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, LomaxParams>) {
          if (!spec.fixes_eta()) u.push_back(std::log(v.eta));
        }
      },
      p);
  return u;
}

ParamVector from_coords(const ModelSpec& spec, ParamVector p, const std::vector<double>& u) {
  std::visit(
      [&](auto& v) {
        std::size_t i = 0;
        if (!spec.fixes_beta()) v.beta = spec.fixes_delta() ? std::exp(u[i++]) : u[i++];
        if (!spec.fixes_gamma()) v.gamma = std::exp(u[i++]);
        if (!spec.fixes_delta()) v.delta = std::max(-v.beta, 0.0) + std::exp(u[i++]);
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, LomaxParams>) {
          if (!spec.fixes_eta()) v.eta = std::exp(u[i++]);
        }
      },
      p);
  return p;
}

const BivariateSample& exp_sample() {
  static const BivariateSample s = fixtures::draw(ExpParams{5, -20, 0.5, 25}, 800, 101);
  return s;
}

const BivariateSample& lomax_sample() {
  static const BivariateSample s = fixtures::draw(LomaxParams{3, 6, 0.8, 0.5, 1.5}, 800, 202);
  return s;
}

}  // namespace

TEST_CASE("loglik of the all-zero sample") {
  auto s = make({{0, 0}, {0, 0}});
  CHECK(exp_loglik({1, 3, 0.7, 0}, s) == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(lomax_loglik({1, 3, 0.7, 0, 2}, s) == doctest::Approx(-2.0).epsilon(1e-15));
}

TEST_CASE("zero rate with a positive count gives minus infinity") {
  auto s = make({{0, 3}, {2, 1}});
  CHECK(exp_loglik({1, 3, 0.7, 0}, s) == -std::numeric_limits<double>::infinity());
  CHECK(lomax_loglik({1, 3, 0.7, 0, 1}, s) == -std::numeric_limits<double>::infinity());
  CHECK(aic(-std::numeric_limits<double>::infinity(), 3) == std::numeric_limits<double>::infinity());
}

TEST_CASE("loglik matches the pmf product") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 30; ++t) {
    ExpParams e = fixtures::random_exp(rng);
    LomaxParams l = fixtures::random_lomax(rng);
    auto se = fixtures::draw(e, 40, 1000 + t);
    auto sl = fixtures::draw(l, 40, 2000 + t);
    CHECK(fixtures::rel_close(exp_loglik(e, se), pmf_product_loglik(e, se), 1e-10));
    CHECK(fixtures::rel_close(lomax_loglik(l, sl), pmf_product_loglik(l, sl), 1e-10));
  }
}

TEST_CASE("tiny lomax scale reduces to the independence model") {
  LomaxParams p{2, 4, 1e-9, 3, 1};
  auto s = fixtures::draw(LomaxParams{2, 4, 0.5, 3, 1}, 50, 9);
  double indep = 0;
  for (auto c : s.pairs()) {
    const double x1 = static_cast<double>(c.x1);
    const double x2 = static_cast<double>(c.x2);
    const double rate = c.x1 == 0 ? p.delta : p.delta + p.beta;
    indep += -p.alpha + x1 * std::log(p.alpha) - std::lgamma(x1 + 1.0);
    indep += -rate + x2 * std::log(rate) - std::lgamma(x2 + 1.0);
  }
  CHECK(std::fabs(lomax_loglik(p, s) - indep) < 1e-6);
}

TEST_CASE("aic") {
  CHECK(aic(0.0, 2) == 4.0);
  CHECK(aic(-10.0, 3) > aic(-9.0, 3));
  CHECK(aic(-933.634, 3) == doctest::Approx(1873.268));
}

TEST_CASE("alpha estimate is the x1 mean for every model") {
  const double m1 = sample_moments(exp_sample()).m1;
  for (const auto& spec : all_model_specs()) {
    auto r = mle_fit(spec, exp_sample());
    CHECK(alpha_of(r.estimates) == m1);
    auto mm = mme_fit(spec, exp_sample());
    CHECK(alpha_of(mm.estimates) == m1);
  }
}

TEST_CASE("nested fits never beat the full model") {
  for (const auto* s : {&exp_sample(), &lomax_sample()}) {
    std::map<std::string, double> full_ll;
    for (const auto& spec : all_model_specs()) {
      auto full = full_model_of(spec);
      if (!full_ll.count(full.id())) full_ll[full.id()] = *mle_fit(full, *s).loglik;
    }
    for (const auto& spec : all_model_specs()) {
      auto sub = mle_fit(spec, *s);
      CHECK(full_ll[full_model_of(spec).id()] >= *sub.loglik - 1e-6);
    }
    // Lomax with eta fixed is nested in the full Lomax model and exp full sits
    // at its eta -> infinity limit, so the full Lomax fit is never worse.
    const double lf = full_ll["lomax:full"];
    CHECK(lf >= *mle_fit(parse_model_spec("lomax:eta1"), *s).loglik - 1e-6);
  }
}

TEST_CASE("optimum is locally maximal in transformed coordinates") {
  for (const char* id : {"exp:full", "exp:c2", "exp:c1-", "lomax:full", "lomax:eta1", "lomax:c3"}) {
    auto spec = parse_model_spec(id);
    const auto& s = spec.family == Family::Exponential ? exp_sample() : lomax_sample();
    auto r = mle_fit(spec, s);
    if (r.diagnostics.inapplicable) continue;
    const double ll = *r.loglik;
    auto u = to_coords(spec, r.estimates);
    for (std::size_t i = 0; i < u.size(); ++i) {
      for (double h : {-1e-4, 1e-4}) {
        auto v = u;
        v[i] += h;
        CHECK_MESSAGE(loglik(from_coords(spec, r.estimates, v), s) <= ll + 1e-6, id << " coord " << i);
      }
    }
  }
}

TEST_CASE("fits of the simulated full exponential configuration") {
  auto s = fixtures::draw(ExpParams{5, -20, 0.5, 25}, 10000, 77);
  auto r = mle_fit(parse_model_spec("exp:full"), s);
  const auto& e = std::get<ExpParams>(r.estimates);
  // Three times the n = 10^4 simulation SEs.
  CHECK(std::fabs(e.beta + 20) < 3 * 0.348);
  CHECK(std::fabs(e.gamma - 0.5) < 3 * 0.010);
  CHECK(std::fabs(e.delta - 25) < 3 * 0.375);
  REQUIRE(r.rho);
  CHECK(std::fabs(*r.rho + 0.598) < 0.02);
  CHECK(*r.aic == doctest::Approx(2 * 4 - 2 * *r.loglik));
  CHECK(r.diagnostics.converged);
  CHECK(r.diagnostics.boundary_flags.empty());
}

TEST_CASE("recovery of a sub-model truth") {
  auto s = fixtures::draw(ExpParams{2, 3, 1, 0}, 10000, 31);
  auto r = mle_fit(parse_model_spec("exp:c5"), s);
  CHECK(std::get<ExpParams>(r.estimates).beta == doctest::Approx(3).epsilon(0.05));
  auto l = mle_fit(parse_model_spec("lomax:c2"), fixtures::draw(LomaxParams{2, 3, 1, 1, 1}, 10000, 32));
  CHECK(std::get<LomaxParams>(l.estimates).beta == doctest::Approx(3).epsilon(0.1));
  CHECK(std::get<LomaxParams>(l.estimates).delta == doctest::Approx(1).epsilon(0.1));
}

TEST_CASE("no-intercept models on data with (0, x2 > 0) are inapplicable") {
  auto s = make({{0, 2}, {1, 3}, {2, 1}, {0, 0}});
  for (const char* id : {"exp:c3", "exp:c5", "lomax:c3", "lomax:c5"}) {
    auto r = mle_fit(parse_model_spec(id), s);
    CHECK(r.diagnostics.inapplicable);
    CHECK(*r.loglik == -std::numeric_limits<double>::infinity());
    CHECK(*r.aic == std::numeric_limits<double>::infinity());
    CHECK_FALSE(r.has_estimates());
  }
}

TEST_CASE("boundary fit is flagged") {
  // Independent margins with x2 = 0 whenever x1 = 0 push delta to its bound.
  std::vector<CountPair> v;
  std::mt19937_64 rng(3);
  std::poisson_distribution<long> p1(1.0), p2(2.0);
  for (int i = 0; i < 400; ++i) {
    long x1 = p1(rng);
    v.push_back({x1, x1 == 0 ? 0 : p2(rng)});
  }
  auto r = mle_fit(parse_model_spec("exp:full"), make(v));
  const auto& e = std::get<ExpParams>(r.estimates);
  CHECK(e.delta - std::max(-e.beta, 0.0) < 1e-3);
  CHECK_FALSE(r.diagnostics.boundary_flags.empty());
}

TEST_CASE("given start and option validation") {
  MleOptions o;
  o.start = ExpParams{5, -20, 0.5, 25};
  o.restarts = 1;
  auto r = mle_fit(parse_model_spec("exp:full"), exp_sample(), o);
  auto d = mle_fit(parse_model_spec("exp:full"), exp_sample());
  CHECK(*r.loglik == doctest::Approx(*d.loglik).epsilon(1e-9));
  o.restarts = 0;
  CHECK_THROWS_AS(mle_fit(parse_model_spec("exp:full"), exp_sample(), o), UsageError);
}

TEST_CASE("fits are deterministic") {
  auto a = mle_fit(parse_model_spec("lomax:full"), lomax_sample());
  auto b = mle_fit(parse_model_spec("lomax:full"), lomax_sample());
  CHECK(a.estimates == b.estimates);
  CHECK(*a.loglik == *b.loglik);
}

TEST_CASE("moment fit packaging") {
  auto r = mme_fit(parse_model_spec("exp:full"), exp_sample());
  CHECK(r.method == Method::MME);
  CHECK(r.has_estimates());
  CHECK(r.rho);
  auto l = mme_fit(parse_model_spec("lomax:full"), exp_sample());
  CHECK_FALSE(l.has_estimates());
}
