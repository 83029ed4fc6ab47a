#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace pseudopoisson {

using Count = std::int64_t;

struct CountPair {
  Count x1 = 0;
  Count x2 = 0;

  friend bool operator==(const CountPair&, const CountPair&) = default;
};

/// Paired non-negative counts. Construction validates the invariants, so a
/// live instance always has n >= 2 and no negative entries.
class BivariateSample {
 public:
  explicit BivariateSample(std::vector<CountPair> pairs);

  [[nodiscard]] std::span<const CountPair> pairs() const { return pairs_; }
  [[nodiscard]] std::size_t size() const { return pairs_.size(); }

  /// Roles of x1 and x2 swapped.
  [[nodiscard]] BivariateSample mirrored() const;

  /// Order-sensitive 64-bit FNV-1a digest of the pairs.
  [[nodiscard]] std::uint64_t digest() const;

  [[nodiscard]] std::vector<Count> first() const;
  [[nodiscard]] std::vector<Count> second() const;

 private:
  std::vector<CountPair> pairs_;
};

/// Population-style moments (divisor n). S22 is the centred second moment of x2.
struct SampleMoments {
  double m1 = 0.0;
  double m2 = 0.0;
  double s12 = 0.0;
  double s22 = 0.0;
  double s11 = 0.0;
  std::size_t n = 0;
};

SampleMoments sample_moments(const BivariateSample& sample);

/// Population variance over mean. Throws DomainError when the mean is zero.
double dispersion_index(std::span<const Count> values);

/// Throws DomainError when either marginal variance is zero.
double pearson_correlation(const BivariateSample& sample);

/// Reads `x1,x2` rows. A non-numeric first line is treated as a header.
/// Blank lines are skipped. Errors carry the 1-based line number.
BivariateSample read_csv(std::istream& in, bool mirror = false);
BivariateSample read_csv_file(const std::string& path, bool mirror = false);
void write_csv(std::ostream& out, const BivariateSample& sample);

// ---------------------------------------------------------------------------
// Parameters

struct ExpParams {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double delta = 0.0;

  [[nodiscard]] double mu() const;
  [[nodiscard]] double nu() const;
  friend bool operator==(const ExpParams&, const ExpParams&) = default;
};

struct LomaxParams {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double delta = 0.0;
  double eta = 1.0;

  friend bool operator==(const LomaxParams&, const LomaxParams&) = default;
};

using ParamVector = std::variant<ExpParams, LomaxParams>;

/// Conditional rate delta + beta * F(x).
double exp_rate(Count x1, const ExpParams& p);
double lomax_rate(Count x1, const LomaxParams& p);
double conditional_rate(Count x1, const ParamVector& p);

/// Survival part 1 - F(x) of each family's distribution function.
double exp_survival(Count x1, double gamma);
double lomax_survival(Count x1, double gamma, double eta);

/// Checks positivity constraints, beta != 0, delta >= max(-beta, 0), and the
/// conditional rate at x = 0, x = 1 and the x -> infinity limit. Both
/// distribution functions are monotone, so those three points bound the rate.
bool is_admissible(const ExpParams& p);
bool is_admissible(const LomaxParams& p);
bool is_admissible(const ParamVector& p);

/// Human-readable reason a parameter set is inadmissible, or nullopt.
std::optional<std::string> admissibility_issue(const ParamVector& p);

double alpha_of(const ParamVector& p);

// ---------------------------------------------------------------------------
// Model specification

enum class Family { Exponential, Lomax };

enum class Case { Full, LomaxEta1, I, II, III, IV, V };

struct ModelSpec {
  Family family = Family::Exponential;
  Case model_case = Case::Full;
  /// +1 or -1 for Cases I and IV, 0 otherwise.
  int sign = 0;

  [[nodiscard]] bool fixes_beta() const { return model_case == Case::I || model_case == Case::IV; }
  [[nodiscard]] bool fixes_gamma() const {
    return model_case == Case::II || model_case == Case::IV || model_case == Case::V;
  }
  [[nodiscard]] bool fixes_delta() const { return model_case == Case::III || model_case == Case::V; }
  /// Every Lomax model except Full has eta' = 1.
  [[nodiscard]] bool fixes_eta() const {
    return family == Family::Lomax && model_case != Case::Full;
  }

  [[nodiscard]] int free_parameter_count() const;

  /// Names of the free parameters, alpha first, in the family's canonical order.
  [[nodiscard]] std::vector<std::string> free_parameter_names() const;

  /// Compact selector, e.g. "exp:full", "lomax:c4-", "exp:c1+".
  [[nodiscard]] std::string id() const;

  /// Long label, e.g. "Case IV (beta = -1, gamma = 1)".
  [[nodiscard]] std::string label() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Throws UsageError for invalid combinations (Eta1 outside Lomax, missing sign).
void validate(const ModelSpec& spec);

/// Parses `<exp|lomax>:<full|eta1|c1|c2|c3|c4|c5>` with an optional trailing
/// sign (`c1+`, `c4-`); `sign` overrides when non-zero.
ModelSpec parse_model_spec(const std::string& selector, int sign = 0);

/// Every sub-model of both families (both signs for I and IV).
std::vector<ModelSpec> all_model_specs();

/// Full model of the spec's family (Lomax Full for every Lomax case).
ModelSpec full_model_of(const ModelSpec& spec);

/// True when `sub`'s parameter space is a constrained subset of `full`'s.
bool is_nested(const ModelSpec& sub, const ModelSpec& full);

/// True when `p` belongs to spec's family and honours its fixed values.
bool conforms(const ModelSpec& spec, const ParamVector& p);

/// Overwrites the spec's fixed coordinates in `p` with their fixed values.
ParamVector apply_constraints(const ModelSpec& spec, ParamVector p);

/// Models with delta = 0 give zero likelihood to (0, x2 > 0) observations.
bool has_zero_rate_conflict(const ModelSpec& spec, const BivariateSample& sample);

std::string to_string(Family f);

}  // namespace pseudopoisson
