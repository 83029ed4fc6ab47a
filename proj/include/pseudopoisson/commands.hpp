#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pseudopoisson/inference.hpp"
#include "pseudopoisson/mle.hpp"
#include "pseudopoisson/serialize.hpp"

namespace pseudopoisson {

enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitData = 3, kExitEstimation = 4 };

std::string version();

struct ModelBlock {
  ModelSpec spec;
  std::optional<FitResult> mme;
  std::optional<FitResult> mle;
  /// Against the family's full model; absent for the full model itself.
  std::optional<LrtResult> lrt;
  std::string mle_error;
  bool best_in_family = false;
};

struct FitReport {
  std::string data_path;
  bool mirrored = false;
  SampleMoments moments;
  std::uint64_t digest = 0;
  std::vector<ModelBlock> models;
  /// Index of the finite-AIC minimum over all models.
  std::optional<std::size_t> best;

  /// Number of requested estimations that failed.
  [[nodiscard]] std::size_t failures(bool mme_requested, bool mle_requested) const;
};

struct FitRequest {
  std::vector<ModelSpec> specs;
  bool mme = true;
  bool mle = true;
  /// Likelihood-ratio tests against each family's full model (needs mle).
  bool tests = false;
  double level = 0.05;
  MleOptions mle_options;
};

/// Fits every requested model concurrently, then assembles the report in
/// request order. Estimation failures are recorded, never thrown.
FitReport build_fit_report(const BivariateSample& sample, const FitRequest& req);

Json to_json(const FitReport& r);
std::string render_text(const FitReport& r);

/// Table formatting: "-" for missing values, "≈0" below 1e-4 in magnitude,
/// "≈∞" for boundary-capped values, otherwise fixed with `digits` decimals.
std::string format_value(double v, bool capped = false, int digits = 3);

struct CurveRow {
  Count x1 = 0;
  double rate = 0.0;
  std::size_t observed = 0;
  double relative_frequency = 0.0;
  /// Observed mean of x2 at this x1 (NaN when no observation).
  double observed_mean = 0.0;
};

std::vector<CurveRow> curve_grid(const ParamVector& p, Count x1_max,
                                 const BivariateSample* sample = nullptr);

/// P(X1 = i, X2 = j) for i <= x1_max, j <= x2_max, row-major.
std::vector<std::vector<double>> pmf_grid(const ParamVector& p, Count x1_max, Count x2_max);

/// Parses "alpha=5,beta=-20,gamma=0.5,delta=25[,eta=1]". Fixed coordinates
/// of the spec may be omitted; free ones are required.
ParamVector parse_params(const ModelSpec& spec, const std::string& text);

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pseudopoisson
