#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "betashrink/estimators.hpp"
#include "betashrink/rng.hpp"

// Monte Carlo relative-efficiency harness: correlated Gaussian
// predictors (AR(1) correlation rho^|i-j|), beta responses, a sweep over
// the restriction-violation distance Delta, and RMSE ratio tables
// sum MSE(UR) / sum MSE(candidate) for every estimator.

namespace betashrink::sim {

struct SimConfig {
  int n = 100;
  int p1 = 3;
  int p2 = 10;
  double rho = 0.9;
  double phi = 5.0;
  std::vector<double> beta1 = {2.75, -1.75, 1.45};
  std::vector<double> delta_grid;  // default: 11 equispaced points on [0,2]
  int reps = 1000;
  double alpha = 0.05;
  double delta_shrink = 0.5;  // RLS/SPE delta
  std::uint64_t seed = 0;
  int threads = 0;  // 0 -> hardware_concurrency

  int p() const { return p1 + p2; }
  std::vector<double> grid() const;
};

// Flat key=value config (one per line, '#' comments).  Keys match the
// field names: n, p1, p2, rho, phi, beta1, delta_grid, reps, alpha,
// delta_shrink, seed, threads (lists comma-separated).
SimConfig parse_config(const std::string& path);

struct RmseCell {
  double rmse = 0.0;
  int reps_used = 0;
  bool flagged = false;  // >5% replication failures
};

struct RmseTable {
  std::vector<double> deltas;
  std::vector<std::string> estimators;
  std::map<std::pair<int, std::string>, RmseCell> cells;  // (delta idx, name)

  const RmseCell& at(int delta_idx, const std::string& name) const;
  // Header: delta,estimator,rmse,reps_used
  void write_csv(std::ostream& os) const;
  // Long-format data behind the RMSE-versus-Delta figures.
  void write_figure_csv(std::ostream& os) const;
};

// Rows i.i.d. N(0, Sigma), Sigma_ij = rho^|i-j|, sampled through the
// closed-form Cholesky recursion of the AR(1) correlation.
MatrixXd gen_design(int n, int p, double rho, Rng& rng);

// One beta response per row, mu_i = logistic(x_i' beta); draws at the
// representable boundary are redrawn and counted.
VectorXd gen_response(const MatrixXd& X, const VectorXd& beta, double phi,
                      Rng& rng, long* boundary_redraws = nullptr);

// The full Delta sweep with the zero-restriction on the p2 inactive
// coordinates.  Replication r of grid point d uses an Rng seeded
// deterministically from (seed, d, r), so the table is byte-identical
// for a given config regardless of thread count.
RmseTable run_sweep(const SimConfig& config);

struct ScreenSpec {
  enum class Kind { kOracle, kMarginal };
  Kind kind = Kind::kOracle;
  // kOracle: the working set is active ++ retained_inactive (indices into
  // the full design), with the restriction zeroing retained_inactive.
  std::vector<Eigen::Index> active;
  std::vector<Eigen::Index> retained_inactive;
  // kMarginal: per-column logit-scale association screen.
  double screen_alpha = 0.01;
  bool bonferroni = false;
};

// Marginal association screen: for each column, the squared correlation
// t-statistic of logit(y) on that column against the chi2_1 critical
// value at screen_alpha (Bonferroni-adjusted on request).  Returns the
// retained column indices.
std::vector<Eigen::Index> marginal_screen(const MatrixXd& X, const VectorXd& y,
                                          double screen_alpha, bool bonferroni);

// High-dimensional sweep: screen to a working set, then run the
// low-dimensional pipeline on the working columns with the restriction
// zeroing the screened-in inactive coordinates.  RMSE is computed on
// the working-set coefficients.
RmseTable run_highdim(const SimConfig& config, const ScreenSpec& screen);

}  // namespace betashrink::sim
