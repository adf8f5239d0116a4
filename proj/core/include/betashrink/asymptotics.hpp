#pragma once

#include <iosfwd>

#include "betashrink/estimators.hpp"

// Closed-form asymptotic distributional biases and second-moment
// (variance) matrices of the seven estimators under local alternatives
// H beta = h + vartheta/sqrt(n).
//
// Scaling convention: the inputs (A, info, beta, vartheta) describe the
// limit experiment of kappa = sqrt(n)(estimator - beta), i.e. info is
// the per-observation information (so kappa_1 ~ N(., A info^{-1} A'))
// and beta is on the same sqrt(n) scale as vartheta wherever the
// expressions contain (A - I)beta.  Any consistent scaling works; the
// Monte Carlo harnesses pass info_full/n together with sqrt(n)*beta.

namespace betashrink::asy {

struct LocalAlternative {
  VectorXd vartheta;   // p2
  double delta_star;   // vartheta' (H I^{-1} H')^{-1} vartheta

  static LocalAlternative make(const Restriction& r, const MatrixXd& info,
                               const VectorXd& vartheta);
};

double delta_star(const Restriction& r, const MatrixXd& info,
                  const VectorXd& vartheta);

struct AsymptoticInputs {
  MatrixXd A;      // p x p smoother
  MatrixXd info;   // p x p information I
  VectorXd beta;   // p
  Restriction r;
  LocalAlternative la;
  double alpha = 0.05;
  double delta = 0.5;
};

// Per-estimator p-vectors; rs/rps are empty when p2 < 3.
struct EstimatorBias {
  VectorXd ur, rr, rls, rpt, spe, rs, rps;
  bool stein_available = false;
  const VectorXd& by_name(const std::string& name) const;
};

// Per-estimator p x p matrices, symmetrized; rs/rps empty when p2 < 3.
// These are limits of E[kappa kappa'], i.e. second moments about the
// true beta, which include the squared-bias contribution.
struct EstimatorVariance {
  MatrixXd ur, rr, rls, rpt, spe, rs, rps;
  bool stein_available = false;
  const MatrixXd& by_name(const std::string& name) const;
};

EstimatorBias bias_all(const AsymptoticInputs& in);
EstimatorVariance variance_all(const AsymptoticInputs& in);

struct AsymptoticReport {
  AsymptoticInputs inputs;
  EstimatorBias bias;
  EstimatorVariance variance;
};

AsymptoticReport evaluate(const AsymptoticInputs& in);

// CSV: one row per estimator, bias components then the diagonal of the
// variance matrix.
void write_report_csv(std::ostream& os, const AsymptoticReport& rep);

}  // namespace betashrink::asy
