#include "pseudopoisson/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "pseudopoisson/moments.hpp"
#include "pseudopoisson/parallel.hpp"
#include "pseudopoisson/simulation.hpp"

#ifndef PSEUDOPOISSON_VERSION
#define PSEUDOPOISSON_VERSION "0.0.0"
#endif

namespace pseudopoisson {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct NamedValue {
  std::string name;
  double value;
};

std::vector<NamedValue> free_parameters(const ModelSpec& spec, const ParamVector& p) {
  std::vector<NamedValue> out;
  std::visit(
      [&](const auto& v) {
        out.push_back({"alpha", v.alpha});
        if (!spec.fixes_beta()) out.push_back({"beta", v.beta});
        if (!spec.fixes_gamma()) out.push_back({"gamma", v.gamma});
        if (!spec.fixes_delta()) out.push_back({"delta", v.delta});
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, LomaxParams>) {
          if (!spec.fixes_eta()) out.push_back({"eta", v.eta});
        }
      },
      p);
  return out;
}

bool capped(const FitResult& f, const std::string& name) {
  for (const auto& flag : f.diagnostics.boundary_flags) {
    if (flag == name + " -> infinity") return true;
  }
  return false;
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string pad(const std::string& s, std::size_t width) {
  // Display width: the approximation glyphs are multi-byte.
  std::size_t shown = 0;
  for (unsigned char c : s) shown += (c & 0xC0) != 0x80;
  return shown >= width ? s + " " : s + std::string(width - shown, ' ');
}

void write_text(std::ostream& out, const std::optional<std::string>& path, const std::string& text) {
  if (!path) {
    out << text;
    return;
  }
  std::ofstream f(*path);
  if (!f) throw DataError("cannot write '" + *path + "'");
  f << text;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw DataError("'" + path + "' is not valid JSON: " + e.what());
  }
}

int parse_sign(const std::string& s) {
  if (s.empty()) return 0;
  if (s == "+" || s == "+1" || s == "pos") return 1;
  if (s == "-" || s == "-1" || s == "neg") return -1;
  throw UsageError("--sign must be + or -");
}

/// A fit stored either on its own or inside a fit report.
FitResult load_fit(const std::string& path, const std::string& selector, bool want_mle) {
  const Json j = read_json_file(path);
  if (j.contains("method")) return fit_from_json(j);
  if (!j.contains("models")) throw DataError("'" + path + "' holds no fit");
  std::vector<const Json*> blocks;
  for (const auto& m : j["models"]) {
    if (selector.empty() || m["model"]["id"] == selector) blocks.push_back(&m);
  }
  if (blocks.empty()) throw UsageError("no model '" + selector + "' in '" + path + "'");
  if (blocks.size() > 1) {
    throw UsageError("'" + path + "' holds several models; choose one with a model selector");
  }
  const Json& b = *blocks.front();
  const bool has_mle = b.contains("mle") && !b["mle"].is_null();
  const bool has_mme = b.contains("mme") && !b["mme"].is_null();
  if (want_mle) {
    if (!has_mle) throw UsageError("no maximum-likelihood fit for that model in '" + path + "'");
    return fit_from_json(b["mle"]);
  }
  if (has_mle) {
    auto f = fit_from_json(b["mle"]);
    if (f.has_estimates()) return f;
  }
  if (has_mme) return fit_from_json(b["mme"]);
  throw UsageError("no fit for that model in '" + path + "'");
}

std::string describe_error(const std::exception& e) { return e.what(); }

// ----------------------------------------------------------------------------
// Text rendering

std::string render_family(const FitReport& r, Family fam) {
  std::ostringstream s;
  std::size_t width = 8;
  for (const auto& m : r.models) width = std::max(width, m.spec.label().size() + 4);
  s << (fam == Family::Exponential ? "Exponential models" : "Lomax models") << '\n';
  s << pad("Model", width) << pad("Parameter", 11) << pad("m.m.e", 12) << pad("m.l.e", 12)
    << pad("-2 log L", 12) << "AIC\n";
  for (std::size_t i = 0; i < r.models.size(); ++i) {
    const auto& m = r.models[i];
    if (m.spec.family != fam) continue;
    const bool inapplicable = m.mle && m.mle->diagnostics.inapplicable;
    std::string label = m.spec.label();
    if (m.best_in_family) label += " *";
    std::vector<NamedValue> mme_vals, mle_vals;
    ParamVector shape = m.mle ? m.mle->estimates
                              : (m.mme ? m.mme->estimates : ParamVector{ExpParams{}});
    auto names = free_parameters(m.spec, shape);
    if (m.mme) mme_vals = free_parameters(m.spec, m.mme->estimates);
    if (m.mle) mle_vals = free_parameters(m.spec, m.mle->estimates);
    names.push_back({"rho", 0});
    mme_vals.push_back({"rho", m.mme && m.mme->rho ? *m.mme->rho : kNaN});
    mle_vals.push_back({"rho", m.mle && m.mle->rho ? *m.mle->rho : kNaN});
    for (std::size_t k = 0; k < names.size(); ++k) {
      const auto& name = names[k].name;
      const double mm = m.mme && k < mme_vals.size() ? mme_vals[k].value : kNaN;
      const double ml = m.mle && k < mle_vals.size() ? mle_vals[k].value : kNaN;
      s << pad(k == 0 ? label : "", width) << pad(name, 11) << pad(format_value(mm), 12)
        << pad(format_value(ml, m.mle && capped(*m.mle, name)), 12);
      if (k == 0) {
        const double stat = m.lrt && !inapplicable ? m.lrt->stat : kNaN;
        const double a = m.mle && m.mle->aic && !inapplicable ? *m.mle->aic : kNaN;
        s << pad(std::isnan(stat) ? "-" : fixed(stat, 3), 12) << (std::isnan(a) ? "-" : fixed(a, 3));
      }
      s << '\n';
    }
  }
  return s.str();
}

std::vector<std::string> block_notes(const ModelBlock& m) {
  std::vector<std::string> notes;
  if (m.mme) {
    for (const auto& v : m.mme->diagnostics.bound_violations) notes.push_back("m.m.e: " + v);
    for (const auto& n : m.mme->diagnostics.notes) notes.push_back("m.m.e: " + n);
  }
  if (!m.mle_error.empty()) notes.push_back("m.l.e: " + m.mle_error);
  if (m.mle) {
    for (const auto& n : m.mle->diagnostics.notes) notes.push_back(n);
    for (const auto& f : m.mle->diagnostics.boundary_flags) notes.push_back("boundary: " + f);
    if (m.mle->rho_series_evaluated) notes.push_back("rho series-evaluated (non-integer eta)");
  }
  if (m.lrt && !m.lrt->note.empty()) notes.push_back("LRT: " + m.lrt->note);
  if (m.lrt && !(m.mle && m.mle->diagnostics.inapplicable)) {
    notes.push_back("LRT vs " + m.lrt->full.id() + ": df " + std::to_string(m.lrt->df) + ", critical " +
                    fixed(m.lrt->critical, 3) + ", p " + format_value(m.lrt->p_value, false, 4) +
                    (m.lrt->reject ? ", rejected" : ", not rejected"));
  }
  return notes;
}

// ----------------------------------------------------------------------------
// Commands

struct Io {
  std::ostream& out;
  std::ostream& err;
};

struct FitArgs {
  std::string data;
  bool mirror = false;
  std::string model;
  std::string sign;
  std::string method = "both";
  bool all = false;
  bool json = false;
  std::string out;
  double level = 0.05;
  bool strict = false;
  int restarts = 5;
};

int cmd_fit(const FitArgs& a, Io io) {
  if (a.all == !a.model.empty()) throw UsageError("give exactly one of --model or --all");
  if (a.method != "mme" && a.method != "mle" && a.method != "both") {
    throw UsageError("--method must be mme, mle or both");
  }
  const BivariateSample sample = read_csv_file(a.data, a.mirror);
  FitRequest req;
  req.mme = a.method != "mle";
  req.mle = a.method != "mme";
  req.level = a.level;
  req.mle_options.restarts = a.restarts;
  if (a.all) {
    req.specs = all_model_specs();
    req.tests = req.mle;
  } else {
    req.specs = {parse_model_spec(a.model, parse_sign(a.sign))};
  }
  FitReport rep = build_fit_report(sample, req);
  rep.data_path = a.data;
  rep.mirrored = a.mirror;
  std::optional<std::string> out_path;
  if (!a.out.empty()) out_path = a.out;
  if (a.json) {
    Json j = to_json(rep);
    j["command"] = "fit";
    write_text(io.out, out_path, j.dump(2) + "\n");
  } else {
    write_text(io.out, out_path, render_text(rep));
  }
  if (a.strict && rep.failures(req.mme && !req.mle, req.mle) > 0) return kExitEstimation;
  return kExitOk;
}

struct LrtArgs {
  std::string full, sub, full_model, sub_model, data;
  bool mirror = false;
  double level = 0.05;
  bool json = false;
};

int cmd_lrt(const LrtArgs& a, Io io) {
  const FitResult full = load_fit(a.full, a.full_model, true);
  const FitResult sub = load_fit(a.sub, a.sub_model, true);
  std::optional<BivariateSample> sample;
  if (!a.data.empty()) sample = read_csv_file(a.data, a.mirror);
  const LrtResult r = lrt(full, sub, a.level, sample ? &*sample : nullptr);
  if (a.json) {
    io.out << to_json(r).dump(2) << '\n';
    return kExitOk;
  }
  io.out << sub.spec.label() << " vs " << full.spec.label() << '\n';
  io.out << "-2 log L  " << format_value(r.stat, false, 3) << '\n';
  if (r.closed_form_stat) io.out << "expanded  " << fixed(*r.closed_form_stat, 6) << '\n';
  io.out << "df        " << r.df << '\n';
  io.out << "critical  " << fixed(r.critical, 3) << " (level " << r.level << ")\n";
  io.out << "p-value   " << format_value(r.p_value, false, 4) << '\n';
  io.out << "decision  " << (r.reject ? "reject the sub-model" : "do not reject the sub-model") << '\n';
  if (!r.note.empty()) io.out << "note      " << r.note << '\n';
  return kExitOk;
}

struct BoundsArgs {
  std::string model, sign;
  bool json = false;
};

int cmd_bounds(const BoundsArgs& a, Io io) {
  std::vector<ModelSpec> specs;
  if (a.model.empty()) {
    specs = all_model_specs();
  } else {
    specs = {parse_model_spec(a.model, parse_sign(a.sign))};
  }
  Json arr = Json::array();
  std::ostringstream s;
  std::size_t width = 8;
  for (const auto& spec : specs) width = std::max(width, spec.label().size() + 2);
  s << pad("Model", 12) << pad("Case", width) << pad("lower", 12) << pad("upper", 12) << "limit\n";
  for (const auto& spec : specs) {
    const auto b = rho_bounds(spec);
    Json j = to_json(b);
    j["model"] = spec.id();
    arr.push_back(j);
    s << pad(spec.id(), 12) << pad(spec.label(), width) << pad(fixed(b.lower, 6), 12)
      << pad(fixed(b.upper, 6), 12) << b.attained_at << '\n';
  }
  if (a.json) {
    io.out << arr.dump(2) << '\n';
  } else {
    io.out << s.str();
  }
  return kExitOk;
}

struct ParamSource {
  std::string model, sign, params, fit, fit_model;
};

ParamVector resolve_params(const ParamSource& src) {
  if (!src.fit.empty()) {
    const FitResult f = load_fit(src.fit, src.fit_model, false);
    if (!f.has_estimates()) throw UsageError("the stored fit has no estimates");
    return f.estimates;
  }
  if (src.model.empty() || src.params.empty()) {
    throw UsageError("give --model with --params, or --fit");
  }
  const ModelSpec spec = parse_model_spec(src.model, parse_sign(src.sign));
  const ParamVector p = parse_params(spec, src.params);
  if (auto issue = admissibility_issue(p)) throw UsageError("inadmissible parameters: " + *issue);
  return p;
}

struct SimulateArgs {
  ParamSource src;
  std::size_t n = 0;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a, Io io) {
  if (a.src.model.empty()) throw UsageError("--model is required");
  const ModelSpec spec = parse_model_spec(a.src.model, parse_sign(a.src.sign));
  const ParamVector p = resolve_params(a.src);
  const BivariateSample s = sample_from(spec, p, a.n, a.seed);
  std::ostringstream csv;
  write_csv(csv, s);
  write_text(io.out, a.out.empty() ? std::nullopt : std::optional<std::string>(a.out), csv.str());
  return kExitOk;
}

struct StudyArgs {
  std::string config, out;
  bool json = false;
};

std::string render_study(const SimulationSummary& s) {
  std::ostringstream o;
  const auto& c = s.config;
  o << "study " << c.spec.id() << "  " << c.spec.label() << "  n=" << c.n << "  reps=" << c.reps
    << "  seed=" << c.seed << '\n';
  for (const auto& e : s.estimators) {
    o << '\n' << (e.method == Method::MME ? "m.m.e" : "m.l.e") << "  failures " << e.failures << '/'
      << c.reps << (e.available ? "" : "  (unavailable)") << '\n';
    o << pad("parameter", 11) << pad("truth", 12) << pad("mean", 12) << pad("SE", 10)
      << "CI (" << fixed(100 * c.ci_level, 0) << "%)\n";
    for (const auto& p : e.parameters) {
      o << pad(p.name, 11) << pad(fixed(p.truth, 3), 12) << pad(fixed(p.mean, 3), 12)
        << pad(fixed(p.se, 3), 10) << '(' << fixed(p.ci_lower, 3) << ", " << fixed(p.ci_upper, 3)
        << ")\n";
    }
  }
  o << "\nmean Pearson correlation " << fixed(s.mean_pearson, 3) << " (SE " << fixed(s.pearson_se, 3)
    << ")\n";
  if (s.single_replicate) o << "single replicate: SEs are 0 and intervals degenerate\n";
  return o.str();
}

int cmd_study(const StudyArgs& a, Io io) {
  const StudyConfig cfg = study_config_from_json(read_json_file(a.config));
  const SimulationSummary s = run_study(cfg);
  const std::string json = to_json(s).dump(2) + "\n";
  if (!a.out.empty()) write_text(io.out, a.out, json);
  if (a.json && a.out.empty()) {
    io.out << json;
  } else {
    io.out << render_study(s);
  }
  return kExitOk;
}

struct CurveArgs {
  ParamSource src;
  Count x1_max = 10;
  std::string data;
  bool mirror = false;
  bool json = false;
  std::string out;
};

int cmd_curve(const CurveArgs& a, Io io) {
  const ParamVector p = resolve_params(a.src);
  std::optional<BivariateSample> sample;
  if (!a.data.empty()) sample = read_csv_file(a.data, a.mirror);
  const auto rows = curve_grid(p, a.x1_max, sample ? &*sample : nullptr);
  std::ostringstream s;
  if (a.json) {
    Json arr = Json::array();
    for (const auto& r : rows) {
      Json j{{"x1", r.x1}, {"rate", r.rate}};
      if (sample) {
        j["observed"] = r.observed;
        j["relative_frequency"] = r.relative_frequency;
        j["observed_mean_x2"] = number_to_json(r.observed_mean);
      }
      arr.push_back(j);
    }
    s << Json{{"params", to_json(p)}, {"rows", arr}}.dump(2) << '\n';
  } else {
    s << "x1,rate" << (sample ? ",observed,relative_frequency,observed_mean_x2" : "") << '\n';
    s << std::setprecision(12);
    for (const auto& r : rows) {
      s << r.x1 << ',' << r.rate;
      if (sample) {
        s << ',' << r.observed << ',' << r.relative_frequency << ',';
        if (!std::isnan(r.observed_mean)) s << r.observed_mean;
      }
      s << '\n';
    }
  }
  write_text(io.out, a.out.empty() ? std::nullopt : std::optional<std::string>(a.out), s.str());
  return kExitOk;
}

struct PmfArgs {
  ParamSource src;
  Count x1_max = 10;
  Count x2_max = 10;
  bool json = false;
  std::string out;
};

int cmd_pmf(const PmfArgs& a, Io io) {
  const ParamVector p = resolve_params(a.src);
  const auto grid = pmf_grid(p, a.x1_max, a.x2_max);
  std::ostringstream s;
  if (a.json) {
    s << Json{{"params", to_json(p)}, {"x1_max", a.x1_max}, {"x2_max", a.x2_max}, {"p", grid}}.dump(2)
      << '\n';
  } else {
    s << "x1,x2,p\n" << std::setprecision(12);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      for (std::size_t j = 0; j < grid[i].size(); ++j) s << i << ',' << j << ',' << grid[i][j] << '\n';
    }
  }
  write_text(io.out, a.out.empty() ? std::nullopt : std::optional<std::string>(a.out), s.str());
  return kExitOk;
}

struct MomentsArgs {
  ParamSource src;
  std::string data;
  bool mirror = false;
  bool json = false;
};

int cmd_moments(const MomentsArgs& a, Io io) {
  if (!a.data.empty()) {
    const BivariateSample s = read_csv_file(a.data, a.mirror);
    const SampleMoments m = sample_moments(s);
    Json j = to_json(m);
    const auto first = s.first();
    const auto second = s.second();
    auto guarded = [](auto f) -> double {
      try {
        return f();
      } catch (const DomainError&) {
        return kNaN;
      }
    };
    j["dispersion_x1"] = number_to_json(guarded([&] { return dispersion_index(first); }));
    j["dispersion_x2"] = number_to_json(guarded([&] { return dispersion_index(second); }));
    j["pearson"] = number_to_json(guarded([&] { return pearson_correlation(s); }));
    if (a.json) {
      io.out << j.dump(2) << '\n';
    } else {
      for (const auto& [k, v] : j.items()) {
        io.out << pad(k, 16) << (v.is_number() ? format_value(v.get<double>(), false, 6) : "-") << '\n';
      }
    }
    return kExitOk;
  }
  const ParamVector p = resolve_params(a.src);
  const MomentSet m = population_moments(p);
  Json j = to_json(m);
  if (a.json) {
    io.out << Json{{"params", to_json(p)}, {"moments", j}}.dump(2) << '\n';
  } else {
    for (const auto& [k, v] : j.items()) io.out << pad(k, 6) << fixed(v.get<double>(), 8) << '\n';
  }
  return kExitOk;
}

void add_param_source(CLI::App* app, ParamSource& src, bool allow_fit) {
  app->add_option("--model", src.model, "<exp|lomax>:<full|eta1|c1|c2|c3|c4|c5>");
  app->add_option("--sign", src.sign, "Sign of beta for cases I and IV (+ or -)");
  app->add_option("--params", src.params, "alpha=..,beta=..,gamma=..,delta=..[,eta=..]");
  if (allow_fit) {
    app->add_option("--fit", src.fit, "Fit JSON written by `fit --json`");
    app->add_option("--fit-model", src.fit_model, "Model to take from a multi-model fit report");
  }
}

}  // namespace

std::string version() { return PSEUDOPOISSON_VERSION; }

std::size_t FitReport::failures(bool mme_requested, bool mle_requested) const {
  std::size_t n = 0;
  for (const auto& m : models) {
    if (mle_requested && (!m.mle_error.empty() || !m.mle)) ++n;
    if (mme_requested && (!m.mme || !m.mme->has_estimates())) ++n;
  }
  return n;
}

std::string format_value(double v, bool is_capped, int digits) {
  if (std::isnan(v)) return "-";
  if (is_capped) return "≈∞";
  if (std::isinf(v)) return v > 0 ? "∞" : "-∞";
  if (std::fabs(v) < 1e-4) return "≈0";
  if (std::fabs(v) >= 1e7) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
  }
  return fixed(v, digits);
}

FitReport build_fit_report(const BivariateSample& sample, const FitRequest& req) {
  FitReport rep;
  rep.moments = sample_moments(sample);
  rep.digest = sample.digest();

  auto blocks = parallel_map<ModelBlock>(req.specs.size(), [&](std::size_t i) {
    ModelBlock b;
    b.spec = req.specs[i];
    if (req.mme) b.mme = mme_fit(b.spec, sample);
    if (req.mle) {
      try {
        b.mle = mle_fit(b.spec, sample, req.mle_options);
      } catch (const NonConvergenceError& e) {
        b.mle = e.best();
        b.mle_error = describe_error(e);
      } catch (const Error& e) {
        b.mle_error = describe_error(e);
      }
    }
    return b;
  });

  if (req.tests) {
    std::map<std::string, std::size_t> full_index;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (blocks[i].spec == full_model_of(blocks[i].spec)) full_index[blocks[i].spec.id()] = i;
    }
    for (auto& b : blocks) {
      const auto it = full_index.find(full_model_of(b.spec).id());
      if (it == full_index.end() || b.spec == full_model_of(b.spec)) continue;
      const auto& full = blocks[it->second];
      if (!b.mle || !full.mle || !b.mle_error.empty() || !full.mle_error.empty()) continue;
      b.lrt = lrt(*full.mle, *b.mle, req.level, &sample);
    }
  }

  auto aic_of = [](const ModelBlock& b) {
    if (!b.mle || !b.mle->aic || !std::isfinite(*b.mle->aic)) return std::numeric_limits<double>::infinity();
    return *b.mle->aic;
  };
  for (Family fam : {Family::Exponential, Family::Lomax}) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (blocks[i].spec.family != fam || !std::isfinite(aic_of(blocks[i]))) continue;
      if (!best || aic_of(blocks[i]) < aic_of(blocks[*best])) best = i;
    }
    if (best) blocks[*best].best_in_family = true;
  }
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (!std::isfinite(aic_of(blocks[i]))) continue;
    if (!rep.best || aic_of(blocks[i]) < aic_of(blocks[*rep.best])) rep.best = i;
  }
  rep.models = std::move(blocks);
  return rep;
}

Json to_json(const FitReport& r) {
  Json j;
  j["version"] = version();
  j["data"] = {{"path", r.data_path},
               {"mirrored", r.mirrored},
               {"digest", r.digest},
               {"moments", to_json(r.moments)}};
  Json models = Json::array();
  for (std::size_t i = 0; i < r.models.size(); ++i) {
    const auto& m = r.models[i];
    Json b;
    b["model"] = to_json(m.spec);
    b["mme"] = m.mme ? to_json(*m.mme) : Json(nullptr);
    b["mle"] = m.mle ? to_json(*m.mle) : Json(nullptr);
    b["lrt"] = m.lrt ? to_json(*m.lrt) : Json(nullptr);
    b["mle_error"] = m.mle_error.empty() ? Json(nullptr) : Json(m.mle_error);
    b["inapplicable"] = m.mle && m.mle->diagnostics.inapplicable;
    b["best_in_family"] = m.best_in_family;
    b["best"] = r.best && *r.best == i;
    b["notes"] = block_notes(m);
    models.push_back(b);
  }
  j["models"] = models;
  j["best"] = r.best ? Json(r.models[*r.best].spec.id()) : Json(nullptr);
  return j;
}

std::string render_text(const FitReport& r) {
  std::ostringstream s;
  s << "pseudopoisson " << version() << "  fit";
  if (!r.data_path.empty()) s << "  data=" << r.data_path;
  s << "  n=" << r.moments.n << (r.mirrored ? "  mirrored" : "") << '\n';
  s << "M1=" << format_value(r.moments.m1, false, 4) << "  M2=" << format_value(r.moments.m2, false, 4)
    << "  S12=" << format_value(r.moments.s12, false, 4) << "  S22=" << format_value(r.moments.s22, false, 4)
    << "\n\n";
  bool any_exp = false, any_lomax = false;
  for (const auto& m : r.models) (m.spec.family == Family::Exponential ? any_exp : any_lomax) = true;
  if (any_exp) s << render_family(r, Family::Exponential) << '\n';
  if (any_lomax) s << render_family(r, Family::Lomax) << '\n';
  if (r.best) {
    const auto& b = r.models[*r.best];
    s << "best by AIC: " << b.spec.id() << "  " << b.spec.label() << "  AIC " << fixed(*b.mle->aic, 3)
      << '\n';
  } else if (std::any_of(r.models.begin(), r.models.end(), [](const ModelBlock& m) { return m.mle.has_value(); })) {
    s << "no model has a finite AIC\n";
  }
  bool header = false;
  for (const auto& m : r.models) {
    const bool inapplicable = m.mle && m.mle->diagnostics.inapplicable;
    auto notes = block_notes(m);
    if (inapplicable) {
      notes.erase(notes.begin(), notes.end());
      notes.emplace_back("inapplicable (zero-likelihood observation)");
    }
    if (notes.empty()) continue;
    if (!header) {
      s << "\nnotes\n";
      header = true;
    }
    for (const auto& n : notes) s << "  " << pad(m.spec.id(), 12) << n << '\n';
  }
  return s.str();
}

std::vector<CurveRow> curve_grid(const ParamVector& p, Count x1_max, const BivariateSample* sample) {
  if (x1_max < 0) throw UsageError("x1_max must be >= 0");
  if (auto issue = admissibility_issue(p)) throw DomainError(*issue);
  std::vector<CurveRow> rows(static_cast<std::size_t>(x1_max) + 1);
  std::vector<double> x2_total(rows.size(), 0.0);
  for (Count x = 0; x <= x1_max; ++x) {
    rows[static_cast<std::size_t>(x)].x1 = x;
    rows[static_cast<std::size_t>(x)].rate = conditional_rate(x, p);
  }
  if (sample) {
    for (auto c : sample->pairs()) {
      if (c.x1 > x1_max) continue;
      ++rows[static_cast<std::size_t>(c.x1)].observed;
      x2_total[static_cast<std::size_t>(c.x1)] += static_cast<double>(c.x2);
    }
    const auto n = static_cast<double>(sample->size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      rows[i].relative_frequency = static_cast<double>(rows[i].observed) / n;
      rows[i].observed_mean = rows[i].observed ? x2_total[i] / static_cast<double>(rows[i].observed) : kNaN;
    }
  } else {
    for (auto& r : rows) r.observed_mean = kNaN;
  }
  return rows;
}

std::vector<std::vector<double>> pmf_grid(const ParamVector& p, Count x1_max, Count x2_max) {
  if (x1_max < 0 || x2_max < 0) throw UsageError("grid limits must be >= 0");
  if (auto issue = admissibility_issue(p)) throw DomainError(*issue);
  std::vector<std::vector<double>> g(static_cast<std::size_t>(x1_max) + 1,
                                     std::vector<double>(static_cast<std::size_t>(x2_max) + 1));
  for (Count i = 0; i <= x1_max; ++i) {
    for (Count j = 0; j <= x2_max; ++j) {
      g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = joint_pmf(p, i, j);
    }
  }
  return g;
}

ParamVector parse_params(const ModelSpec& spec, const std::string& text) {
  std::map<std::string, double> kv;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("expected name=value in --params, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    if (key != "alpha" && key != "beta" && key != "gamma" && key != "delta" && key != "eta") {
      throw UsageError("unknown parameter '" + key + "'");
    }
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(val, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != val.size() || val.empty()) throw UsageError("bad value for " + key + ": '" + val + "'");
    kv[key] = v;
  }
  if (kv.count("eta") && spec.family == Family::Exponential) throw UsageError("eta belongs to the Lomax family");
  auto get = [&](const char* key, bool is_fixed, double fixed_value) {
    const auto it = kv.find(key);
    if (it == kv.end()) {
      if (!is_fixed) throw UsageError(std::string("missing parameter ") + key + " for " + spec.id());
      return fixed_value;
    }
    if (is_fixed && it->second != fixed_value) {
      throw UsageError(std::string(key) + " is fixed by " + spec.id());
    }
    return it->second;
  };
  const double alpha = get("alpha", false, 0);
  const double beta = get("beta", spec.fixes_beta(), spec.sign);
  const double gamma = get("gamma", spec.fixes_gamma(), 1.0);
  const double delta = get("delta", spec.fixes_delta(), 0.0);
  if (spec.family == Family::Exponential) return ExpParams{alpha, beta, gamma, delta};
  return LomaxParams{alpha, beta, gamma, delta, get("eta", spec.fixes_eta(), 1.0)};
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fitting, testing and simulation for bivariate pseudo-Poisson count models",
               "pseudopoisson"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version());
  Io io{out, err};

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Fit models to paired counts");
  fit->add_option("--data", fa.data, "CSV with columns x1,x2")->required();
  fit->add_flag("--mirror", fa.mirror, "Swap the columns before fitting");
  fit->add_option("--model", fa.model, "<exp|lomax>:<full|eta1|c1|c2|c3|c4|c5>");
  fit->add_option("--sign", fa.sign, "Sign of beta for cases I and IV (+ or -)");
  fit->add_option("--method", fa.method, "mme, mle or both");
  fit->add_flag("--all", fa.all, "Fit every model of both families, test and rank by AIC");
  fit->add_flag("--json", fa.json, "Structured output");
  fit->add_option("--out", fa.out, "Write the report to a file");
  fit->add_option("--level", fa.level, "Test level");
  fit->add_flag("--strict", fa.strict, "Exit 4 when a requested estimation fails");
  fit->add_option("--restarts", fa.restarts, "Optimizer starts per model");

  LrtArgs la;
  auto* lrt_cmd = app.add_subcommand("lrt", "Likelihood-ratio test between two stored fits");
  lrt_cmd->add_option("--full", la.full, "Fit JSON of the full model")->required();
  lrt_cmd->add_option("--sub", la.sub, "Fit JSON of the sub-model")->required();
  lrt_cmd->add_option("--full-model", la.full_model, "Model to take from a multi-model report");
  lrt_cmd->add_option("--sub-model", la.sub_model, "Model to take from a multi-model report");
  lrt_cmd->add_option("--data", la.data, "Sample, enables the expanded-form cross-check");
  lrt_cmd->add_flag("--mirror", la.mirror, "Swap the data columns");
  lrt_cmd->add_option("--level", la.level, "Test level");
  lrt_cmd->add_flag("--json", la.json, "Structured output");

  BoundsArgs ba;
  auto* bounds = app.add_subcommand("bounds", "Attainable correlation range per model");
  bounds->add_option("--model", ba.model, "Model selector (all models when omitted)");
  bounds->add_option("--sign", ba.sign, "Sign of beta for cases I and IV");
  bounds->add_flag("--json", ba.json, "Structured output");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Draw a sample from a model");
  add_param_source(simulate, sa.src, false);
  simulate->add_option("--n", sa.n, "Sample size")->required();
  simulate->add_option("--seed", sa.seed, "Random seed");
  simulate->add_option("--out", sa.out, "CSV path (stdout when omitted)");

  StudyArgs sta;
  auto* study = app.add_subcommand("study", "Replication study");
  study->add_option("--config", sta.config, "Study JSON")->required();
  study->add_option("--out", sta.out, "Write the JSON summary here");
  study->add_flag("--json", sta.json, "Print JSON instead of text");

  CurveArgs ca;
  auto* curve = app.add_subcommand("curve", "Conditional mean grid E(X2 | X1 = x1)");
  add_param_source(curve, ca.src, true);
  curve->add_option("--x1-max", ca.x1_max, "Largest x1");
  curve->add_option("--data", ca.data, "Observed data for relative frequencies");
  curve->add_flag("--mirror", ca.mirror, "Swap the data columns");
  curve->add_flag("--json", ca.json, "Structured output");
  curve->add_option("--out", ca.out, "Output path");

  PmfArgs pa;
  auto* pmf = app.add_subcommand("pmf", "Joint mass function grid");
  add_param_source(pmf, pa.src, true);
  pmf->add_option("--x1-max", pa.x1_max, "Largest x1");
  pmf->add_option("--x2-max", pa.x2_max, "Largest x2");
  pmf->add_flag("--json", pa.json, "Structured output");
  pmf->add_option("--out", pa.out, "Output path");

  MomentsArgs ma;
  auto* moments = app.add_subcommand("moments", "Sample or population moments");
  add_param_source(moments, ma.src, true);
  moments->add_option("--data", ma.data, "CSV with columns x1,x2");
  moments->add_flag("--mirror", ma.mirror, "Swap the data columns");
  moments->add_flag("--json", ma.json, "Structured output");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (fit->parsed()) return cmd_fit(fa, io);
    if (lrt_cmd->parsed()) return cmd_lrt(la, io);
    if (bounds->parsed()) return cmd_bounds(ba, io);
    if (simulate->parsed()) return cmd_simulate(sa, io);
    if (study->parsed()) return cmd_study(sta, io);
    if (curve->parsed()) return cmd_curve(ca, io);
    if (pmf->parsed()) return cmd_pmf(pa, io);
    if (moments->parsed()) return cmd_moments(ma, io);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const InsufficientDataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const Json::exception& e) {
    err << "error: malformed JSON input: " << e.what() << '\n';
    return kExitData;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitEstimation;
  }
  return kExitUsage;
}

}  // namespace pseudopoisson
