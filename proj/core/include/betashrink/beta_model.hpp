#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "betashrink/errors.hpp"

// Beta regression with mean mu and precision phi:
//   y ~ Beta(mu*phi, (1-mu)*phi),  logit(mu_i) = x_i' beta.
// Provides log-likelihood, score, expected (Fisher) information and a
// joint Fisher-scoring maximum-likelihood fit of (beta, phi).

namespace betashrink {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline double logistic(double eta) {
  // Branch keeps exp() argument negative on both sides.
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

struct Dataset {
  VectorXd y;                      // n responses, each strictly in (0,1)
  MatrixXd X;                      // n x p design
  std::vector<std::string> names;  // p column labels

  Dataset(VectorXd y_, MatrixXd X_, std::vector<std::string> names_ = {});

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p() const { return X.cols(); }
};

struct FisherInfo {
  MatrixXd k_bb;     // K_bb = phi X'WX (the beta-block, symmetric PSD)
  VectorXd k_bphi;   // K_bphi = X'Tc
  double k_phiphi;   // K_phiphi = trace(D)
  VectorXd W;        // diagonal weights w_i
  VectorXd T;        // 1/g'(mu_i) = mu_i(1-mu_i) for the logit link
  VectorXd D;        // d_i
  VectorXd c;        // c_i

  // Asymptotic precision of beta-hat when phi is estimated jointly:
  // the Schur complement K_bb - K_bphi K_bphi' / K_phiphi.
  MatrixXd beta_information() const {
    return k_bb - (k_bphi * k_bphi.transpose()) / k_phiphi;
  }
};

struct SolverOptions {
  int max_iter = 100;
  double tol = 1e-8;  // on the sup-norm of the (U_beta, U_phi) score
};

struct BetaFit {
  VectorXd beta;
  double phi = 0.0;
  VectorXd mu;  // fitted means, mu_i = logistic(x_i' beta)
  FisherInfo info;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  MatrixXd X;  // the design the fit was computed on

  MatrixXd xwx() const { return info.k_bb / phi; }
};

// log f(y; mu, phi) for a single observation.  Throws std::domain_error
// on boundary or out-of-range arguments.
double log_density(double y, double mu, double phi);

double log_likelihood(const Dataset& d, const VectorXd& beta, double phi);

// Returns (U_beta, U_phi).
std::pair<VectorXd, double> score(const Dataset& d, const VectorXd& beta,
                                  double phi);

FisherInfo fisher_information(const Dataset& d, const VectorXd& beta,
                              double phi);

// Joint Fisher scoring on (beta, log phi) with step halving.  Initial
// values: OLS of logit(y) on X for beta, method of moments for phi.
// Non-convergence is flagged on the result, not thrown; a singular
// information matrix raises NumericalError (the ridge path is the
// remedy for such designs).
BetaFit fit_mle(const Dataset& d, const SolverOptions& opts = {});

}  // namespace betashrink
