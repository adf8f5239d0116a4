#pragma once

// Independent oracles used by the tests.  Every routine here reaches a
// value through a different route than the library implementation it
// checks: direct summation with Euler-Maclaurin tails instead of
// recurrence-shifted Bernoulli asymptotics, Lanczos log-gamma instead of
// std::lgamma, Monte Carlo sampling instead of Poisson-mixture series,
// KKT systems instead of projection formulas, finite differences
// instead of analytic gradients.

#include <Eigen/Dense>
#include <functional>

#include "betashrink/beta_model.hpp"
#include "betashrink/rng.hpp"

namespace oracles {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// psi(x) by direct series with an Euler-Maclaurin tail (abs err ~ 1e-13).
double digamma_series(double x);

// psi'(x) by direct summation of 1/(x+k)^2 with an Euler-Maclaurin tail.
double trigamma_series(double x);

// Lanczos log-gamma, independent of std::lgamma.
double lgamma_lanczos(double x);

// Beta regression log density evaluated through lgamma_lanczos.
double beta_log_density(double y, double mu, double phi);

// Monte Carlo estimate of E[f(X)], X ~ chi^2_dof(noncentrality), with
// its standard error.
struct McEstimate {
  double mean = 0.0;
  double se = 0.0;
};
McEstimate mc_chi2_expectation(int dof, double noncentrality, long draws,
                               betashrink::Rng& rng,
                               const std::function<double(double)>& f);

// Central-difference gradient of the log-likelihood in (beta, phi).
VectorXd fd_score(const betashrink::Dataset& d, const VectorXd& beta,
                  double phi, double h = 1e-5);

// Constrained minimum of (b - target)' M (b - target) subject to
// H b = h, solved through the KKT system (Lagrange multipliers).
VectorXd constrained_min_kkt(const MatrixXd& M, const VectorXd& target,
                             const MatrixXd& H, const VectorXd& h);

// MVN sample with AR(1) covariance drawn through an explicit dense
// Cholesky factor (checks the closed-form recursion in gen_design).
MatrixXd mvn_ar1_dense_cholesky(int n, int p, double rho, betashrink::Rng& rng);

}  // namespace oracles
