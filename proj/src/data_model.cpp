#include "pseudopoisson/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pseudopoisson/errors.hpp"

namespace pseudopoisson {

BivariateSample::BivariateSample(std::vector<CountPair> pairs) : pairs_(std::move(pairs)) {
  if (pairs_.size() < 2) {
    throw InsufficientDataError("bivariate sample needs at least 2 pairs, got " +
                                std::to_string(pairs_.size()));
  }
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    if (pairs_[i].x1 < 0 || pairs_[i].x2 < 0) {
      throw DataError("negative count in pair " + std::to_string(i));
    }
  }
}

BivariateSample BivariateSample::mirrored() const {
  std::vector<CountPair> swapped;
  swapped.reserve(pairs_.size());
  for (const auto& p : pairs_) swapped.push_back({p.x2, p.x1});
  return BivariateSample(std::move(swapped));
}

std::uint64_t BivariateSample::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& p : pairs_) {
    mix(static_cast<std::uint64_t>(p.x1));
    mix(static_cast<std::uint64_t>(p.x2));
  }
  return h;
}

std::vector<Count> BivariateSample::first() const {
  std::vector<Count> out;
  out.reserve(pairs_.size());
  for (const auto& p : pairs_) out.push_back(p.x1);
  return out;
}

std::vector<Count> BivariateSample::second() const {
  std::vector<Count> out;
  out.reserve(pairs_.size());
  for (const auto& p : pairs_) out.push_back(p.x2);
  return out;
}

namespace {
__extension__ using Wide = __int128;
}

SampleMoments sample_moments(const BivariateSample& sample) {
  // Integer sums are exact, so the centred moments follow from
  // (n * sum(xy) - sum(x) * sum(y)) / n^2 without cancellation error.
  Wide s1 = 0, s2 = 0, s11 = 0, s12 = 0, s22 = 0;
  for (const auto& p : sample.pairs()) {
    s1 += p.x1;
    s2 += p.x2;
    s11 += static_cast<Wide>(p.x1) * p.x1;
    s12 += static_cast<Wide>(p.x1) * p.x2;
    s22 += static_cast<Wide>(p.x2) * p.x2;
  }
  const auto n = static_cast<Wide>(sample.size());
  const long double nn = static_cast<long double>(n) * static_cast<long double>(n);
  SampleMoments m;
  m.n = sample.size();
  m.m1 = static_cast<double>(static_cast<long double>(s1) / static_cast<long double>(n));
  m.m2 = static_cast<double>(static_cast<long double>(s2) / static_cast<long double>(n));
  m.s11 = static_cast<double>(static_cast<long double>(n * s11 - s1 * s1) / nn);
  m.s12 = static_cast<double>(static_cast<long double>(n * s12 - s1 * s2) / nn);
  m.s22 = static_cast<double>(static_cast<long double>(n * s22 - s2 * s2) / nn);
  return m;
}

double dispersion_index(std::span<const Count> values) {
  if (values.empty()) throw InsufficientDataError("dispersion index of an empty sequence");
  Wide s = 0, ss = 0;
  for (Count v : values) {
    s += v;
    ss += static_cast<Wide>(v) * v;
  }
  if (s == 0) throw DomainError("dispersion index undefined: mean is zero");
  const auto n = static_cast<Wide>(values.size());
  const long double mean = static_cast<long double>(s) / static_cast<long double>(n);
  const long double var =
      static_cast<long double>(n * ss - s * s) / (static_cast<long double>(n) * static_cast<long double>(n));
  return static_cast<double>(var / mean);
}

double pearson_correlation(const BivariateSample& sample) {
  const SampleMoments m = sample_moments(sample);
  if (m.s11 <= 0.0 || m.s22 <= 0.0) {
    throw DomainError("correlation undefined: a marginal has zero variance");
  }
  return std::clamp(m.s12 / std::sqrt(m.s11 * m.s22), -1.0, 1.0);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<Count> parse_count(std::string_view field) {
  field = trim(field);
  if (field.empty()) return std::nullopt;
  Count v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) return std::nullopt;
  return v;
}

}  // namespace

BivariateSample read_csv(std::istream& in, bool mirror) {
  std::vector<CountPair> pairs;
  std::string line;
  std::size_t lineno = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = trim(line);
    if (lineno == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (view.empty()) continue;
    const auto comma = view.find(',');
    const bool first_row = !seen_content;
    seen_content = true;
    if (comma == std::string_view::npos) {
      throw DataError("line " + std::to_string(lineno) + ": expected two comma-separated columns");
    }
    auto a = parse_count(view.substr(0, comma));
    auto b = parse_count(view.substr(comma + 1));
    if (!a || !b) {
      if (first_row) continue;  // header
      throw DataError("line " + std::to_string(lineno) + ": non-integer field");
    }
    if (*a < 0 || *b < 0) {
      throw DataError("line " + std::to_string(lineno) + ": negative count");
    }
    pairs.push_back(mirror ? CountPair{*b, *a} : CountPair{*a, *b});
  }
  if (pairs.empty()) throw DataError("no data rows found");
  if (pairs.size() < 2) throw InsufficientDataError("need at least 2 data rows");
  return BivariateSample(std::move(pairs));
}

BivariateSample read_csv_file(const std::string& path, bool mirror) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_csv(in, mirror);
}

void write_csv(std::ostream& out, const BivariateSample& sample) {
  out << "x1,x2\n";
  for (const auto& p : sample.pairs()) out << p.x1 << ',' << p.x2 << '\n';
}

// ---------------------------------------------------------------------------

double ExpParams::mu() const { return std::exp(alpha); }
double ExpParams::nu() const { return std::exp(-gamma); }

double exp_survival(Count x1, double gamma) {
  return std::exp(-gamma * static_cast<double>(x1));
}

double lomax_survival(Count x1, double gamma, double eta) {
  if (x1 == 0) return 1.0;
  return std::exp(-eta * std::log1p(static_cast<double>(x1) / gamma));
}

namespace {
// delta + beta (1 - S). For beta < 0 the form (delta + beta) + |beta| S stays
// exact when delta and -beta are both huge; otherwise expm1 keeps small
// 1 - S accurate.
double rate_from_log_survival(double beta, double delta, double log_s) {
  if (beta < 0.0) return (delta + beta) - beta * std::exp(log_s);
  return delta - beta * std::expm1(log_s);
}
}  // namespace

double exp_rate(Count x1, const ExpParams& p) {
  if (x1 == 0) return p.delta;
  return rate_from_log_survival(p.beta, p.delta, -p.gamma * static_cast<double>(x1));
}

double lomax_rate(Count x1, const LomaxParams& p) {
  if (x1 == 0) return p.delta;
  return rate_from_log_survival(p.beta, p.delta, -p.eta * std::log1p(static_cast<double>(x1) / p.gamma));
}

double conditional_rate(Count x1, const ParamVector& p) {
  return std::visit(
      [x1](const auto& q) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(q)>, ExpParams>) {
          return exp_rate(x1, q);
        } else {
          return lomax_rate(x1, q);
        }
      },
      p);
}

namespace {

constexpr double kAdmissibleSlack = 1e-12;

template <class P>
std::optional<std::string> common_issue(const P& p) {
  if (!(std::isfinite(p.alpha) && std::isfinite(p.beta) && std::isfinite(p.gamma) && std::isfinite(p.delta))) {
    return "non-finite parameter";
  }
  if (p.alpha <= 0.0) return "alpha must be > 0";
  if (p.gamma <= 0.0) return "gamma must be > 0";
  if (p.beta == 0.0) return "beta must be non-zero";
  if (p.delta < std::max(-p.beta, 0.0) - kAdmissibleSlack * (1.0 + std::abs(p.beta))) {
    return "delta must be >= max(-beta, 0)";
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> admissibility_issue(const ParamVector& pv) {
  return std::visit(
      [](const auto& p) -> std::optional<std::string> {
        if (auto issue = common_issue(p)) return issue;
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, LomaxParams>) {
          if (!std::isfinite(p.eta) || p.eta <= 0.0) return "eta must be > 0";
        }
        const double tol = kAdmissibleSlack * (1.0 + std::abs(p.beta) + std::abs(p.delta));
        if (conditional_rate(0, P(p)) < -tol) return "conditional rate negative at x1 = 0";
        if (conditional_rate(1, P(p)) < -tol) return "conditional rate negative at x1 = 1";
        if (p.delta + p.beta < -tol) return "conditional rate limit delta + beta negative";
        return std::nullopt;
      },
      pv);
}

bool is_admissible(const ExpParams& p) { return !admissibility_issue(ParamVector{p}); }
bool is_admissible(const LomaxParams& p) { return !admissibility_issue(ParamVector{p}); }
bool is_admissible(const ParamVector& p) { return !admissibility_issue(p); }

double alpha_of(const ParamVector& p) {
  return std::visit([](const auto& q) { return q.alpha; }, p);
}

// ---------------------------------------------------------------------------

int ModelSpec::free_parameter_count() const {
  int k = family == Family::Exponential ? 4 : 5;
  if (fixes_eta()) --k;
  if (fixes_beta()) --k;
  if (fixes_gamma()) --k;
  if (fixes_delta()) --k;
  return k;
}

std::vector<std::string> ModelSpec::free_parameter_names() const {
  std::vector<std::string> names{"alpha"};
  if (!fixes_beta()) names.emplace_back("beta");
  if (!fixes_gamma()) names.emplace_back("gamma");
  if (!fixes_delta()) names.emplace_back("delta");
  if (family == Family::Lomax && !fixes_eta()) names.emplace_back("eta");
  return names;
}

std::string to_string(Family f) { return f == Family::Exponential ? "exp" : "lomax"; }

std::string ModelSpec::id() const {
  std::string c;
  switch (model_case) {
    case Case::Full: c = "full"; break;
    case Case::LomaxEta1: c = "eta1"; break;
    case Case::I: c = "c1"; break;
    case Case::II: c = "c2"; break;
    case Case::III: c = "c3"; break;
    case Case::IV: c = "c4"; break;
    case Case::V: c = "c5"; break;
  }
  if (fixes_beta()) c += sign > 0 ? "+" : "-";
  return to_string(family) + ":" + c;
}

std::string ModelSpec::label() const {
  const std::string s = sign > 0 ? "1" : "-1";
  const bool lomax = family == Family::Lomax;
  std::string out = lomax ? "Lomax " : "Exponential ";
  switch (model_case) {
    case Case::Full: return out + "full";
    case Case::LomaxEta1: return out + "(eta = 1)";
    case Case::I: return out + "Case I (beta = " + s + ")";
    case Case::II: return out + "Case II (gamma = 1)";
    case Case::III: return out + "Case III (delta = 0)";
    case Case::IV: return out + "Case IV (beta = " + s + ", gamma = 1)";
    case Case::V: return out + "Case V (delta = 0, gamma = 1)";
  }
  return out;
}

void validate(const ModelSpec& spec) {
  if (spec.model_case == Case::LomaxEta1 && spec.family != Family::Lomax) {
    throw UsageError("eta1 sub-model exists only for the Lomax family");
  }
  if (spec.fixes_beta()) {
    if (spec.sign != 1 && spec.sign != -1) throw UsageError(spec.label() + " needs a sign of +1 or -1");
  } else if (spec.sign != 0) {
    throw UsageError("sign only applies to Cases I and IV");
  }
}

ModelSpec parse_model_spec(const std::string& selector, int sign) {
  const auto colon = selector.find(':');
  if (colon == std::string::npos) throw UsageError("model selector must look like <exp|lomax>:<case>: " + selector);
  const std::string fam = selector.substr(0, colon);
  std::string c = selector.substr(colon + 1);
  ModelSpec spec;
  if (fam == "exp" || fam == "exponential") {
    spec.family = Family::Exponential;
  } else if (fam == "lomax") {
    spec.family = Family::Lomax;
  } else {
    throw UsageError("unknown family '" + fam + "'");
  }
  int parsed_sign = 0;
  if (!c.empty() && (c.back() == '+' || c.back() == '-')) {
    parsed_sign = c.back() == '+' ? 1 : -1;
    c.pop_back();
  }
  if (c == "full") spec.model_case = Case::Full;
  else if (c == "eta1") spec.model_case = Case::LomaxEta1;
  else if (c == "c1") spec.model_case = Case::I;
  else if (c == "c2") spec.model_case = Case::II;
  else if (c == "c3") spec.model_case = Case::III;
  else if (c == "c4") spec.model_case = Case::IV;
  else if (c == "c5") spec.model_case = Case::V;
  else throw UsageError("unknown case '" + c + "'");
  spec.sign = sign != 0 ? sign : parsed_sign;
  if (!spec.fixes_beta()) spec.sign = 0;
  validate(spec);
  return spec;
}

std::vector<ModelSpec> all_model_specs() {
  std::vector<ModelSpec> out;
  for (Family f : {Family::Exponential, Family::Lomax}) {
    out.push_back({f, Case::Full, 0});
    if (f == Family::Lomax) out.push_back({f, Case::LomaxEta1, 0});
    out.push_back({f, Case::I, 1});
    out.push_back({f, Case::I, -1});
    out.push_back({f, Case::II, 0});
    out.push_back({f, Case::III, 0});
    out.push_back({f, Case::IV, 1});
    out.push_back({f, Case::IV, -1});
    out.push_back({f, Case::V, 0});
  }
  return out;
}

ModelSpec full_model_of(const ModelSpec& spec) { return {spec.family, Case::Full, 0}; }

bool is_nested(const ModelSpec& sub, const ModelSpec& full) {
  if (sub.family != full.family || sub == full) return false;
  // Each fixed coordinate of `full` must be fixed to the same value in `sub`.
  if (full.fixes_beta() && (!sub.fixes_beta() || sub.sign != full.sign)) return false;
  if (full.fixes_gamma() && !sub.fixes_gamma()) return false;
  if (full.fixes_delta() && !sub.fixes_delta()) return false;
  if (full.fixes_eta() && !sub.fixes_eta()) return false;
  return sub.free_parameter_count() < full.free_parameter_count();
}

namespace {
constexpr double kFixedTol = 1e-12;
bool near(double a, double b) { return std::abs(a - b) <= kFixedTol * (1.0 + std::abs(b)); }
}  // namespace

bool conforms(const ModelSpec& spec, const ParamVector& pv) {
  const bool is_exp = std::holds_alternative<ExpParams>(pv);
  if (is_exp != (spec.family == Family::Exponential)) return false;
  return std::visit(
      [&](const auto& p) {
        if (spec.fixes_beta() && !near(p.beta, spec.sign)) return false;
        if (spec.fixes_gamma() && !near(p.gamma, 1.0)) return false;
        if (spec.fixes_delta() && p.delta != 0.0) return false;
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, LomaxParams>) {
          if (spec.fixes_eta() && !near(p.eta, 1.0)) return false;
        }
        return true;
      },
      pv);
}

ParamVector apply_constraints(const ModelSpec& spec, ParamVector pv) {
  std::visit(
      [&](auto& p) {
        if (spec.fixes_beta()) p.beta = spec.sign;
        if (spec.fixes_gamma()) p.gamma = 1.0;
        if (spec.fixes_delta()) p.delta = 0.0;
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, LomaxParams>) {
          if (spec.fixes_eta()) p.eta = 1.0;
        }
      },
      pv);
  return pv;
}

bool has_zero_rate_conflict(const ModelSpec& spec, const BivariateSample& sample) {
  if (!spec.fixes_delta()) return false;
  return std::any_of(sample.pairs().begin(), sample.pairs().end(),
                     [](const CountPair& p) { return p.x1 == 0 && p.x2 > 0; });
}

}  // namespace pseudopoisson
