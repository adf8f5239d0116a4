#pragma once

#include <stdexcept>

// Special-function layer used by the Wald test and the closed-form
// bias/variance expressions: digamma/trigamma, regularized incomplete
// gamma, and noncentral chi-square machinery (CDF, inverse moments,
// truncated expectations) evaluated through Poisson mixtures of central
// chi-square quantities.
//
// All functions are pure and thread-safe.

namespace betashrink::special {

// psi(x) = d log Gamma(x) / dx.  Throws std::domain_error for x <= 0.
// Absolute error <= 1e-12 for x >= 1e-3.
double digamma(double x);

// psi'(x).  Throws std::domain_error for x <= 0.
// Absolute error <= 1e-10 for x >= 1e-3.
double trigamma(double x);

// Regularized lower incomplete gamma P(a, x) and its complement Q(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Central chi-square CDF and (lower-tail) quantile.
double chi2_cdf(double dof, double x);
double chi2_quantile(double dof, double prob);

// Upper-alpha critical value of the central chi-square, i.e. the
// pretest threshold chi^2_{dof, alpha}.
double chi2_upper_quantile(double dof, double alpha);

// A noncentral chi-square law chi^2_dof(noncentrality).
struct NoncentralChi2 {
  int dof;               // nu >= 1
  double noncentrality;  // Delta* >= 0

  NoncentralChi2(int dof_, double noncentrality_)
      : dof(dof_), noncentrality(noncentrality_) {
    if (dof < 1) throw std::domain_error("NoncentralChi2: dof must be >= 1");
    if (!(noncentrality >= 0.0))
      throw std::domain_error("NoncentralChi2: noncentrality must be >= 0");
  }
};

// P(chi^2_nu(Delta*) <= x) via the Poisson mixture
//   sum_j e^{-L} L^j / j! * P(chi^2_{nu+2j} <= x),  L = Delta*/2,
// truncated once the remaining Poisson tail mass drops below 1e-12
// (hard cap of 10000 terms).  Absolute error <= 1e-9.
double noncentral_chi2_cdf(const NoncentralChi2& d, double x);

// E[(chi^2_nu(Delta*))^{-power}] for power in {1, 2}.
// Requires nu >= 3 (power 1) resp. nu >= 5 (power 2) for finiteness.
double inv_moment(const NoncentralChi2& d, int power);

// E[(chi^2_nu(Delta*))^{-power} I(chi^2_nu(Delta*) < cutoff)] for power
// in {0, 1, 2}.  Each mixture component reduces to a ratio of incomplete
// gamma functions in closed form.
double truncated_expectation(const NoncentralChi2& d, int power, double cutoff);

// The six chi-square expectations entering the variance expressions of
// the Stein-type estimators, all at cutoff c = p2 - 2:
//   inv1_p2   = E[ 1 / chi^2_{p2+2}(D*) ]
//   inv1_p4   = E[ 1 / chi^2_{p2+4}(D*) ]
//   inv2_p2   = E[ 1 / (chi^2_{p2+2}(D*))^2 ]
//   inv2_p4   = E[ 1 / (chi^2_{p2+4}(D*))^2 ]
//   sq_trunc_p2 = E[ (1 - c/chi^2_{p2+2})^2 I(chi^2_{p2+2} < c) ]
//   sq_trunc_p4 = E[ (1 - c/chi^2_{p2+4})^2 I(chi^2_{p2+4} < c) ]
struct SteinMoments {
  double inv1_p2;
  double inv1_p4;
  double inv2_p2;
  double inv2_p4;
  double sq_trunc_p2;
  double sq_trunc_p4;
};

// Requires p2 >= 3 (the Stein estimators are undefined below that).
SteinMoments stein_factor_moments(int p2, double delta_star);

}  // namespace betashrink::special
