#include "pseudopoisson/serialize.hpp"

#include <cmath>
#include <limits>

namespace pseudopoisson {

namespace {

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw UsageError(std::string("missing field '") + key + "'");
  return j.at(key);
}

double param_field(const Json& j, const char* key, double fallback) {
  return j.contains(key) ? number_from_json(j.at(key)) : fallback;
}

int sign_from_json(const Json& j) {
  if (j.is_number_integer()) return j.get<int>();
  const auto s = j.get<std::string>();
  if (s == "+" || s == "+1" || s == "1") return 1;
  if (s == "-" || s == "-1") return -1;
  throw UsageError("sign must be + or -");
}

}  // namespace

Json number_to_json(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double number_from_json(const Json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw UsageError("not a number: " + s);
  }
  if (!j.is_number()) throw UsageError("expected a number");
  return j.get<double>();
}

Json to_json(const ParamVector& p) {
  Json j;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        j["family"] = std::is_same_v<T, ExpParams> ? "exp" : "lomax";
        j["alpha"] = number_to_json(v.alpha);
        j["beta"] = number_to_json(v.beta);
        j["gamma"] = number_to_json(v.gamma);
        j["delta"] = number_to_json(v.delta);
        if constexpr (std::is_same_v<T, LomaxParams>) j["eta"] = number_to_json(v.eta);
      },
      p);
  return j;
}

ParamVector params_from_json(const Json& j) {
  const auto fam = require(j, "family").get<std::string>();
  const double alpha = number_from_json(require(j, "alpha"));
  const double beta = number_from_json(require(j, "beta"));
  const double gamma = number_from_json(require(j, "gamma"));
  const double delta = number_from_json(require(j, "delta"));
  if (fam == "exp") return ExpParams{alpha, beta, gamma, delta};
  if (fam == "lomax") return LomaxParams{alpha, beta, gamma, delta, param_field(j, "eta", 1.0)};
  throw UsageError("unknown family '" + fam + "'");
}

Json to_json(const ModelSpec& spec) {
  return Json{{"id", spec.id()}, {"label", spec.label()}, {"k", spec.free_parameter_count()}};
}

ModelSpec spec_from_json(const Json& j) {
  if (j.is_string()) return parse_model_spec(j.get<std::string>());
  return parse_model_spec(require(j, "id").get<std::string>());
}

Json to_json(const FitResult& f) {
  Json j;
  j["model"] = to_json(f.spec);
  j["method"] = to_string(f.method);
  j["n"] = f.n;
  j["digest"] = f.digest;
  j["estimates"] = to_json(f.estimates);
  j["has_estimates"] = f.has_estimates();
  j["loglik"] = f.loglik ? number_to_json(*f.loglik) : Json(nullptr);
  j["aic"] = f.aic ? number_to_json(*f.aic) : Json(nullptr);
  j["rho"] = f.rho ? number_to_json(*f.rho) : Json(nullptr);
  j["rho_series_evaluated"] = f.rho_series_evaluated;
  const auto& d = f.diagnostics;
  j["diagnostics"] = {{"converged", d.converged},
                      {"iterations", d.iterations},
                      {"evaluations", d.evaluations},
                      {"starts_tried", d.starts_tried},
                      {"starts_converged", d.starts_converged},
                      {"bound_violations", d.bound_violations},
                      {"boundary_flags", d.boundary_flags},
                      {"inapplicable", d.inapplicable},
                      {"notes", d.notes}};
  Json alts = Json::array();
  for (const auto& a : f.alternatives) alts.push_back(to_json(a));
  j["alternatives"] = alts;
  return j;
}

FitResult fit_from_json(const Json& j) {
  FitResult f;
  f.spec = spec_from_json(require(j, "model"));
  const auto method = require(j, "method").get<std::string>();
  if (method != "mle" && method != "mme") throw UsageError("unknown method '" + method + "'");
  f.method = method == "mle" ? Method::MLE : Method::MME;
  f.n = require(j, "n").get<std::size_t>();
  f.digest = require(j, "digest").get<std::uint64_t>();
  f.estimates = params_from_json(require(j, "estimates"));
  if (j.contains("loglik") && !j["loglik"].is_null()) f.loglik = number_from_json(j["loglik"]);
  if (j.contains("aic") && !j["aic"].is_null()) f.aic = number_from_json(j["aic"]);
  if (j.contains("rho") && !j["rho"].is_null()) f.rho = number_from_json(j["rho"]);
  f.rho_series_evaluated = j.value("rho_series_evaluated", false);
  if (j.contains("diagnostics")) {
    const auto& d = j["diagnostics"];
    f.diagnostics.converged = d.value("converged", false);
    f.diagnostics.iterations = d.value("iterations", 0);
    f.diagnostics.evaluations = d.value("evaluations", 0);
    f.diagnostics.starts_tried = d.value("starts_tried", 0);
    f.diagnostics.starts_converged = d.value("starts_converged", 0);
    f.diagnostics.inapplicable = d.value("inapplicable", false);
    f.diagnostics.bound_violations = d.value("bound_violations", std::vector<std::string>{});
    f.diagnostics.boundary_flags = d.value("boundary_flags", std::vector<std::string>{});
    f.diagnostics.notes = d.value("notes", std::vector<std::string>{});
  }
  if (j.contains("alternatives")) {
    for (const auto& a : j["alternatives"]) f.alternatives.push_back(params_from_json(a));
  }
  if (!conforms(f.spec, f.estimates)) throw UsageError("estimates do not match model " + f.spec.id());
  return f;
}

Json to_json(const MomentSet& m) {
  return Json{{"e1", number_to_json(m.e1)},   {"e2", number_to_json(m.e2)},
              {"v1", number_to_json(m.v1)},   {"v2", number_to_json(m.v2)},
              {"cov", number_to_json(m.cov)}, {"rho", number_to_json(m.rho)}};
}

Json to_json(const SampleMoments& m) {
  return Json{{"n", m.n},
              {"m1", number_to_json(m.m1)},
              {"m2", number_to_json(m.m2)},
              {"s11", number_to_json(m.s11)},
              {"s22", number_to_json(m.s22)},
              {"s12", number_to_json(m.s12)}};
}

Json to_json(const LrtResult& r) {
  Json j{{"full", r.full.id()},
         {"sub", r.sub.id()},
         {"stat", number_to_json(r.stat)},
         {"df", r.df},
         {"level", r.level},
         {"critical", r.critical},
         {"p_value", number_to_json(r.p_value)},
         {"reject", r.reject},
         {"boundary_test", r.boundary_test}};
  j["closed_form_stat"] = r.closed_form_stat ? number_to_json(*r.closed_form_stat) : Json(nullptr);
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

Json to_json(const CorrelationBounds& b) {
  return Json{{"lower", b.lower},
              {"upper", b.upper},
              {"open_endpoints", b.open_endpoints},
              {"attained_at", b.attained_at}};
}

Json to_json(const StudyConfig& cfg) {
  Json est = Json::array();
  if (cfg.use_mme) est.push_back("mme");
  if (cfg.use_mle) est.push_back("mle");
  return Json{{"model", cfg.spec.id()}, {"truth", to_json(cfg.truth)}, {"n", cfg.n},
              {"reps", cfg.reps},       {"seed", cfg.seed},            {"estimators", est},
              {"ci_level", cfg.ci_level}, {"restarts", cfg.mle.restarts}};
}

StudyConfig study_config_from_json(const Json& j) {
  StudyConfig cfg;
  const int sign = j.contains("sign") ? sign_from_json(j["sign"]) : 0;
  cfg.spec = parse_model_spec(require(j, "model").get<std::string>(), sign);
  Json truth = require(j, "truth");
  if (!truth.contains("family")) truth["family"] = cfg.spec.family == Family::Exponential ? "exp" : "lomax";
  // Fixed coordinates may be omitted from the truth.
  for (const char* key : {"beta", "gamma", "delta"}) {
    if (!truth.contains(key)) truth[key] = nullptr;
  }
  cfg.truth = apply_constraints(cfg.spec, params_from_json(truth));
  cfg.n = require(j, "n").get<std::size_t>();
  cfg.reps = require(j, "reps").get<std::size_t>();
  cfg.seed = j.value("seed", std::uint64_t{1});
  cfg.ci_level = j.value("ci_level", 0.95);
  cfg.mle.restarts = j.value("restarts", cfg.mle.restarts);
  if (j.contains("estimators")) {
    cfg.use_mme = cfg.use_mle = false;
    for (const auto& e : j["estimators"]) {
      const auto s = e.get<std::string>();
      if (s == "mme") {
        cfg.use_mme = true;
      } else if (s == "mle") {
        cfg.use_mle = true;
      } else {
        throw UsageError("unknown estimator '" + s + "'");
      }
    }
  }
  validate(cfg);
  return cfg;
}

Json to_json(const SimulationSummary& s) {
  Json j;
  j["config"] = to_json(s.config);
  j["z"] = s.z;
  j["single_replicate"] = s.single_replicate;
  Json ests = Json::array();
  for (const auto& e : s.estimators) {
    Json je{{"method", to_string(e.method)}, {"available", e.available}, {"failures", e.failures}};
    Json ps = Json::array();
    for (const auto& p : e.parameters) {
      ps.push_back(Json{{"name", p.name},
                        {"truth", number_to_json(p.truth)},
                        {"mean", number_to_json(p.mean)},
                        {"se", number_to_json(p.se)},
                        {"ci", {number_to_json(p.ci_lower), number_to_json(p.ci_upper)}},
                        {"count", p.count}});
    }
    je["parameters"] = ps;
    ests.push_back(je);
  }
  j["estimators"] = ests;
  j["pearson"] = {{"mean", number_to_json(s.mean_pearson)},
                  {"se", number_to_json(s.pearson_se)},
                  {"failures", s.pearson_failures}};
  return j;
}

}  // namespace pseudopoisson
