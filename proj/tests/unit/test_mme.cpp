#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "pseudopoisson/errors.hpp"
#include "pseudopoisson/mme.hpp"
#include "pseudopoisson/moments.hpp"

using namespace pseudopoisson;
using fixtures::rel_close;

namespace {

SampleMoments from_population(const ParamVector& p) {
  MomentSet pm = population_moments(p);
  SampleMoments m;
  m.m1 = pm.e1;
  m.m2 = pm.e2;
  m.s12 = pm.cov;
  m.s22 = pm.v2;
  m.s11 = pm.v1;
  m.n = 1000000;
  return m;
}

bool params_close(const ParamVector& a, const ParamVector& b, double rel) {
  if (a.index() != b.index()) return false;
  if (auto* e = std::get_if<ExpParams>(&a)) {
    const auto& f = std::get<ExpParams>(b);
    return rel_close(e->alpha, f.alpha, rel, rel) && rel_close(e->beta, f.beta, rel, rel) &&
           rel_close(e->gamma, f.gamma, rel, rel) && rel_close(e->delta, f.delta, rel, rel);
  }
  const auto& l = std::get<LomaxParams>(a);
  const auto& k = std::get<LomaxParams>(b);
  return rel_close(l.alpha, k.alpha, rel, rel) && rel_close(l.beta, k.beta, rel, rel) &&
         rel_close(l.gamma, k.gamma, rel, rel) && rel_close(l.delta, k.delta, rel, rel) &&
         rel_close(l.eta, k.eta, rel, rel);
}

bool recovers(const MmeReport& r, const ParamVector& truth, double rel) {
  if (!r.estimates) return false;
  if (params_close(*r.estimates, truth, rel)) return true;
  for (const auto& alt : r.alternatives) {
    if (params_close(alt, truth, rel)) return true;
  }
  return false;
}

std::string describe(const ParamVector& p) {
  return std::visit(
      [](const auto& q) {
        return std::to_string(q.alpha) + "," + std::to_string(q.beta) + "," +
               std::to_string(q.gamma) + "," + std::to_string(q.delta);
      },
      p);
}

}  // namespace

TEST_CASE("exponential full model recovers nu = 0.5 at alpha = 1") {
  ExpParams truth{1.0, 2.0, std::log(2.0), 0.5};
  auto r = mme_exp_full(from_population(truth));
  REQUIRE(r.estimates);
  const auto& e = std::get<ExpParams>(*r.estimates);
  CHECK(std::fabs(e.nu() - 0.5) < 1e-10);
  CHECK(r.bound_check.status == BoundStatus::Passed);
  CHECK(r.trace.method == "bisection");
}

TEST_CASE("exponential full model round trip on random truths") {
  std::mt19937_64 rng(31);
  int checked = 0;
  for (int i = 0; i < 200 && checked < 60; ++i) {
    ExpParams t = fixtures::random_exp(rng);
    t.alpha = fixtures::uniform(rng, 0.3, 6.0);
    t.gamma = fixtures::uniform(rng, 0.1, 3.0);
    ++checked;
    auto m = from_population(t);
    auto r = mme_exp_full(m);
    CAPTURE(describe(t));
    CHECK(recovers(r, t, 1e-8));
  }
}

TEST_CASE("exponential sub-model round trips") {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 40; ++i) {
    const double a = fixtures::uniform(rng, 0.2, 6.0);
    const double b = fixtures::nonzero_beta(rng, 20.0);
    const double d = std::max(-b, 0.0) + fixtures::uniform(rng, 0.0, 5.0);
    const double g = fixtures::uniform(rng, 0.1, 3.0);

    ExpParams t2{a, b, 1.0, d};
    CHECK(recovers(mme_exp_case2(from_population(t2)), t2, 1e-8));

    ExpParams t3{a, std::fabs(b), g, 0.0};
    CHECK(recovers(mme_exp_case3(from_population(t3)), t3, 1e-8));

    const int sign = b > 0 ? 1 : -1;
    ExpParams t4{a, static_cast<double>(sign), 1.0, std::max(-sign, 0) + d};
    CHECK(recovers(mme_exp_case4(from_population(t4), sign), t4, 1e-8));

    ExpParams t5{a, std::fabs(b), 1.0, 0.0};
    CHECK(recovers(mme_exp_case5(from_population(t5)), t5, 1e-8));

    // Principal branch: alpha (1 - nu) <= 1.
    double g1 = -std::log1p(-std::min(0.95, 0.95 / a) * fixtures::uniform(rng, 0.2, 1.0));
    ExpParams t1{a, static_cast<double>(sign), g1, std::max(-sign, 0) + d};
    CAPTURE(describe(t1));
    CHECK(recovers(mme_exp_case1(from_population(t1), sign), t1, 1e-8));
  }
}

TEST_CASE("exponential case I: Lambert W root equals bisection root") {
  for (double a : {0.5, 1.0, 2.0, 4.0}) {
    for (double s : {0.05, 0.2, 0.36}) {
      SampleMoments m{a, 30.0, -s, 40.0, a, 1000};
      MmeReport r;
      try {
        r = mme_exp_case1(m, -1);
      } catch (const ExistenceError&) {
        continue;
      }
      const double nu_w = std::get<ExpParams>(*r.estimates).nu();
      // Independent oracle: bisection on the covariance equation over (0, 1).
      auto cov = [&](double nu) { return a * (1.0 - nu) * std::exp(a * (nu - 1.0)) - s; };
      double lo = 0.0, hi = 1.0;
      std::vector<double> roots;
      const int grid = 4000;
      for (int k = 0; k < grid; ++k) {
        double x0 = lo + (hi - lo) * k / grid, x1 = lo + (hi - lo) * (k + 1) / grid;
        if ((cov(x0) < 0) != (cov(x1) < 0)) {
          for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (x0 + x1);
            ((cov(mid) < 0) == (cov(x0) < 0) ? x0 : x1) = mid;
          }
          roots.push_back(0.5 * (x0 + x1));
        }
      }
      REQUIRE_FALSE(roots.empty());
      double best = 1e9;
      for (double x : roots) best = std::min(best, std::fabs(x - nu_w));
      CHECK(best < 1e-10);
      CHECK(r.alternatives.size() + 1 == roots.size());
    }
  }
}

TEST_CASE("exponential case I existence conditions") {
  SampleMoments wrong_sign{1.0, 3.0, 0.1, 5.0, 1.0, 100};
  CHECK_THROWS_AS(mme_exp_case1(wrong_sign, -1), ExistenceError);
  SampleMoments too_big{1.0, 3.0, 0.5, 5.0, 1.0, 100};
  try {
    mme_exp_case1(too_big, 1);
    FAIL("expected ExistenceError");
  } catch (const ExistenceError& e) {
    CHECK(std::string(e.what()).find("1/e") != std::string::npos);
  }
  auto r = estimate_mme(parse_model_spec("exp:c1+"), too_big);
  CHECK_FALSE(r.available());
  CHECK(r.bound_check.status == BoundStatus::Violated);
  CHECK(r.alpha == 1.0);
}

TEST_CASE("bound window violations name the side") {
  // Ratio above M1.
  SampleMoments high{1.0, 2.0, 1.0, 2.5, 1.0, 100};
  try {
    mme_exp_full(high);
    FAIL("expected ExistenceError");
  } catch (const ExistenceError& e) {
    CHECK(std::string(e.what()).find("upper bound") != std::string::npos);
  }
  // Ratio below M1^2/(e^M1 - 1).
  SampleMoments low{1.0, 2.0, 0.01, 3.0, 1.0, 100};
  try {
    mme_lomax_eta1_full(low);
    FAIL("expected ExistenceError");
  } catch (const ExistenceError& e) {
    CHECK(std::string(e.what()).find("M1^2/(e^M1 - 1)") != std::string::npos);
  }
  SampleMoments flat{1.0, 2.0, 0.3, 2.0, 1.0, 100};
  CHECK_THROWS_AS(mme_exp_full(flat), DegenerateDispersionError);
  auto r = estimate_mme(parse_model_spec("exp:full"), high);
  CHECK_FALSE(r.available());
  CHECK(r.alpha == 1.0);
  CHECK(r.bound_check.status == BoundStatus::Violated);
}

TEST_CASE("Bernoulli fast path agrees with bisection") {
  std::mt19937_64 rng(3);
  int used = 0;
  for (int i = 0; i < 300; ++i) {
    const double a = fixtures::uniform(rng, 0.1, 6.0);
    const double nu = fixtures::uniform(rng, 0.01, 0.999);
    const double ratio = exp_dispersion_lhs(a, nu);
    auto fast = solve_exp_nu_bernoulli(a, ratio);
    const double slow = solve_exp_nu_bisection(a, ratio);
    if (a * (1 - nu) * (1 - nu) < 0.5) {
      REQUIRE(fast);
      ++used;
      CHECK(std::fabs(*fast - slow) < 1e-9);
    } else {
      CHECK_FALSE(fast);
    }
  }
  CHECK(used > 50);

  ExpParams t{2.0, 3.0, 0.2, 1.0};
  MmeOptions opts;
  opts.bernoulli_fast_path = true;
  auto r = mme_exp_full(from_population(t), opts);
  CHECK(r.trace.method == "newton-bernoulli");
  CHECK(recovers(r, t, 1e-8));
}

TEST_CASE("implicit equation left sides are strictly increasing") {
  for (double a : {0.2, 1.0, 3.0, 7.0}) {
    double prev = -1.0;
    for (int k = 1; k <= 1000; ++k) {
      double nu = k / 1001.0;
      double v = exp_dispersion_lhs(a, nu);
      REQUIRE(v > prev);
      prev = v;
    }
    prev = -1.0;
    for (int k = 0; k < 1000; ++k) {
      double g = std::exp(std::log(1e-4) + (std::log(1e4) - std::log(1e-4)) * k / 999.0);
      double v = lomax_dispersion_lhs(a, g);
      REQUIRE(v > prev);
      prev = v;
    }
  }
}

TEST_CASE("Lomax dispersion left side at vanishing scale") {
  for (double a : {0.3, 1.0, 2.5, 6.0}) {
    CHECK(std::fabs(lomax_dispersion_lhs(a, 1e-8) - a * a / std::expm1(a)) < 1e-6);
  }
}

TEST_CASE("Lomax eta1 and case round trips") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 25; ++i) {
    const double a = fixtures::uniform(rng, 0.3, 6.0);
    const double b = fixtures::nonzero_beta(rng, 20.0);
    const double d = std::max(-b, 0.0) + fixtures::uniform(rng, 0.0, 5.0);
    const double g = std::exp(fixtures::uniform(rng, std::log(0.05), std::log(20.0)));
    const int sign = b > 0 ? 1 : -1;

    LomaxParams full{a, b, g, d, 1.0};
    CAPTURE(describe(full));
    CHECK(recovers(mme_lomax_eta1_full(from_population(full)), full, 1e-8));

    LomaxParams c3{a, std::fabs(b), g, 0.0, 1.0};
    CHECK(recovers(mme_lomax_case3(from_population(c3)), c3, 1e-8));

    LomaxParams c2{a, b, 1.0, d, 1.0};
    CHECK(recovers(mme_lomax_case2(from_population(c2)), c2, 1e-8));

    LomaxParams c4{a, static_cast<double>(sign), 1.0, std::max(-sign, 0) + d, 1.0};
    CHECK(recovers(mme_lomax_case4(from_population(c4), sign), c4, 1e-8));

    LomaxParams c5{a, std::fabs(b), 1.0, 0.0, 1.0};
    CHECK(recovers(mme_lomax_case5(from_population(c5)), c5, 1e-8));

    LomaxParams c1{a, static_cast<double>(sign), g, std::max(-sign, 0) + d, 1.0};
    CHECK(recovers(mme_lomax_case1(from_population(c1), sign), c1, 1e-8));
  }
}

TEST_CASE("Lomax closed forms match series evaluation") {
  for (double a : {0.4, 1.0, 3.3}) {
    LomaxParams t{a, -2.0, 1.0, 3.0, 1.0};
    auto m = from_population(t);
    auto r2 = mme_lomax_case2(m);
    CHECK(rel_close(std::get<LomaxParams>(*r2.estimates).beta, -2.0, 1e-10));
  }
}

TEST_CASE("Lomax case I reports every admissible root") {
  // Scan a range of covariances; whenever several roots exist they must all
  // reproduce the covariance.
  for (double a : {0.5, 2.0, 5.0}) {
    for (double s : {0.01, 0.05, 0.1, 0.2}) {
      SampleMoments m{a, 10.0, s, 20.0, a, 1000};
      MmeReport r;
      try {
        r = mme_lomax_case1(m, 1);
      } catch (const ExistenceError&) {
        continue;
      }
      std::vector<ParamVector> all{*r.estimates};
      all.insert(all.end(), r.alternatives.begin(), r.alternatives.end());
      for (const auto& p : all) {
        CHECK(rel_close(population_moments(p).cov, s, 1e-8));
      }
    }
  }
  SampleMoments impossible{1.0, 10.0, 0.9, 20.0, 1.0, 1000};
  CHECK_THROWS_AS(mme_lomax_case1(impossible, 1), ExistenceUnknownError);
  auto r = estimate_mme(parse_model_spec("lomax:c1+"), impossible);
  CHECK(r.bound_check.status == BoundStatus::Unknown);
}

TEST_CASE("case estimators reduce to the full estimator") {
  // Truth with gamma = 1: the full and Case II estimators coincide.
  ExpParams t{2.0, -4.0, 1.0, 6.0};
  auto m = from_population(t);
  CHECK(params_close(*mme_exp_full(m).estimates, *mme_exp_case2(m).estimates, 1e-8));
  // Truth with beta = 1, gamma = 1: Case IV agrees with the full estimator.
  ExpParams t4{1.2, 1.0, 1.0, 0.5};
  auto m4 = from_population(t4);
  CHECK(params_close(*mme_exp_full(m4).estimates, *mme_exp_case4(m4, 1).estimates, 1e-8));
  CHECK(params_close(*mme_exp_full(m4).estimates, *mme_exp_case1(m4, 1).estimates, 1e-8));
  // Beyond the principal branch the truth is reported as the alternative root.
  ExpParams t5{2.0, 1.0, 1.0, 0.5};
  CHECK(recovers(mme_exp_case1(from_population(t5), 1), t5, 1e-8));

  LomaxParams l{2.0, -4.0, 1.0, 6.0, 1.0};
  auto ml = from_population(l);
  CHECK(params_close(*mme_lomax_eta1_full(ml).estimates, *mme_lomax_case2(ml).estimates, 1e-8));
}

TEST_CASE("moment-equivalence mapping gives the same Lomax scale") {
  // Oracle: start from an exponential truth, take its moments, and solve the
  // three moment-equivalence equations for (beta', gamma', delta') with a
  // secant iteration on gamma'; compare with the Lomax estimator.
  ExpParams e{3.0, -6.0, 0.8, 9.0};
  auto m = from_population(e);
  const double ratio = m.s12 * m.s12 / (m.s22 - m.m2);
  auto resid = [&](double lg) {
    LomaxParams p{m.m1, 1.0, std::exp(lg), 0.0, 1.0};
    auto pm = lomax_moments(p);
    return pm.cov * pm.cov / (pm.v2 - pm.e2) - ratio;
  };
  double x0 = std::log(0.5), x1 = std::log(5.0);
  for (int it = 0; it < 100; ++it) {
    double f0 = resid(x0), f1 = resid(x1);
    if (f1 == f0) break;
    double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
    x0 = x1;
    x1 = x2;
    if (std::fabs(x1 - x0) < 1e-15) break;
  }
  auto r = mme_lomax_eta1_full(m);
  CHECK(rel_close(std::get<LomaxParams>(*r.estimates).gamma, std::exp(x1), 1e-8));
}

TEST_CASE("free-shape Lomax has no moment estimator") {
  SampleMoments m{2.0, 3.0, 0.5, 5.0, 2.0, 100};
  auto r = estimate_mme(parse_model_spec("lomax:full"), m);
  CHECK(r.bound_check.status == BoundStatus::NotApplicable);
  CHECK_FALSE(r.available());
  CHECK(r.alpha == 2.0);
}

TEST_CASE("Case IV on data exactly at the boundary gives zero delta") {
  const double a = 1.7;
  SampleMoments m{a, 1.0 - std::exp(a * (std::exp(-1.0) - 1.0)), 0.3, 2.0, a, 100};
  auto r = mme_exp_case4(m, 1);
  CHECK(std::fabs(std::get<ExpParams>(*r.estimates).delta) < 1e-14);
}
