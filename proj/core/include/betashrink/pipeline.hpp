#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "betashrink/estimators.hpp"

// Real-data workflow: CSV ingestion with complete-case handling,
// collinearity diagnostics, restriction construction (user partition or
// backward AIC screen), the full estimator table and nonparametric
// bootstrap standard errors.

namespace betashrink::pipe {

struct AnalysisSpec {
  std::string data_path;
  std::string response;
  std::vector<std::string> predictors;  // empty -> all non-response columns
  std::vector<std::string> inactive;    // ignored when auto_aic is set
  bool auto_aic = false;
  int max_inactive = -1;                // <0 -> no cap for the AIC screen
  std::optional<double> fixed_k;        // absent -> estimate
  double alpha = 0.05;
  std::optional<double> fixed_delta;    // absent -> grid-optimized
  int bootstrap_B = 0;                  // 0 -> no bootstrap column
  std::uint64_t seed = 0;
  bool squeeze = false;                 // apply (y(n-1)+0.5)/n to responses
  int threads = 0;
};

struct IngestReport {
  Eigen::Index rows_read = 0;
  Eigen::Index rows_dropped = 0;  // incomplete rows (complete-case analysis)
  bool squeezed = false;
};

// Parses the numeric columns named by the analysis spec; rows with missing
// values are dropped and counted.  Responses must lie strictly in (0,1) unless
// the squeeze flag rewrites them first; boundary values otherwise name
// the offending rows in the error.
Dataset ingest_csv(const std::string& path, const AnalysisSpec& spec,
                   IngestReport* report = nullptr);

// sqrt(lambda_max / lambda_min) of X'WX; a nonpositive lambda_min is
// reported as +infinity.
double condition_number(const BetaFit& fit);

// Backward elimination on AIC = -2 loglik + 2(p+1), phi counted as a
// parameter.  Drops the predictor whose removal improves AIC most until
// no drop improves it (or max_inactive is reached); returns the
// zero-restriction on the dropped coordinates of the full model.
Restriction aic_screen(const Dataset& d, int max_inactive = -1);

struct CoefficientTable {
  std::vector<std::string> variables;
  std::vector<std::string> estimators;  // always the seven names
  // coef[e][v], se[e][v]; NaN marks unavailable entries (p2 < 3 Stein).
  std::vector<std::vector<double>> coef;
  std::vector<std::vector<double>> se;
  double condition_number = 0.0;
  double aic_full = 0.0;
  double aic_restricted = 0.0;
  double k = 0.0;
  double t_n = 0.0;
  double delta = 0.0;
  double alpha = 0.05;
  Eigen::Index p2 = 0;
  int bootstrap_B = 0;
  int bootstrap_dropped = 0;
  bool bootstrap_flagged = false;  // >10% resample failures
  IngestReport ingest;

  // Header: variable,estimator,coef,se (full precision; empty se cells
  // when no bootstrap was run, "na" cells for unavailable estimators).
  void write_csv(std::ostream& os) const;
  // 4-decimal presentation view.
  void print_pretty(std::ostream& os) const;
};

// Bootstrap replicate coefficients: out[e] is a B_ok x p matrix of the
// estimator-e coefficients across case resamples (failed resamples are
// dropped and counted).  The restriction is held fixed across resamples.
struct BootstrapResult {
  std::vector<MatrixXd> replicates;  // indexed like EstimatorSet::names()
  int dropped = 0;
  bool flagged = false;
};

BootstrapResult bootstrap_replicates(const Dataset& d, const Restriction& r,
                                     const EstimatorOptions& opts, int B,
                                     std::uint64_t seed, int threads = 0);

// Column-wise standard deviations of the replicate matrices.
std::vector<VectorXd> bootstrap_se(const BootstrapResult& boot);

// Full orchestration: ingest -> fit -> diagnostics -> restriction ->
// estimators -> bootstrap.
CoefficientTable analyze(const AnalysisSpec& spec);

}  // namespace betashrink::pipe
