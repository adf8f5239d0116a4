#pragma once

#include <optional>
#include <vector>

#include "betashrink/beta_model.hpp"

// The estimator family built on one maximum-likelihood fit:
// ridge-unrestricted (UR), restricted MLE, ridge-restricted (RR), the
// Wald statistic T_n, and the shrinkage combinations RLS, RPT, SPE, RS
// and RPS.  All estimators share one fit, one ridge parameter k and one
// information matrix.

namespace betashrink {

// Which matrix plays the role of the information I of beta-hat.
// kEffective (the Schur complement over phi) is the asymptotic precision
// of beta-hat under joint (beta, phi) estimation and is the default;
// kBetaBlock uses K_bb = phi X'WX directly.
enum class InfoMatrix { kEffective, kBetaBlock };

inline MatrixXd information_matrix(const FisherInfo& info, InfoMatrix which) {
  return which == InfoMatrix::kEffective ? info.beta_information() : info.k_bb;
}

// Linear hypothesis H beta = h with H of full row rank p2.
struct Restriction {
  MatrixXd H;  // p2 x p
  VectorXd h;  // p2

  Restriction(MatrixXd H_, VectorXd h_);

  Eigen::Index p2() const { return H.rows(); }

  // Zero-restriction on a set of coordinates: rows of H are unit vectors
  // picking the inactive indices, h = 0.
  static Restriction zero_block(Eigen::Index p,
                                const std::vector<Eigen::Index>& inactive);
};

// The shared smoother A = (X'WX + kI)^{-1} X'WX and the projection factor
// J = I^{-1} H' (H I^{-1} H')^{-1} entering the restricted estimators.
struct RidgeContext {
  double k = 0.0;
  MatrixXd A;  // p x p
  MatrixXd J;  // p x p2, satisfies H J = I_{p2}

  static RidgeContext make(const BetaFit& fit, const Restriction& r, double k,
                           InfoMatrix which = InfoMatrix::kEffective);
};

// k-hat = 1 / (phi'phi) with phi = C' beta-hat, C the eigenvectors of
// X'WX; by orthonormality this equals 1/||beta-hat||^2.
double estimate_k(const BetaFit& fit);

VectorXd ridge_unrestricted(const BetaFit& fit, double k);

VectorXd restricted_mle(const BetaFit& fit, const Restriction& r,
                        InfoMatrix which = InfoMatrix::kEffective);

VectorXd ridge_restricted(const BetaFit& fit, const Restriction& r, double k,
                          InfoMatrix which = InfoMatrix::kEffective);

// T_n = (H b_ur - h)' (H I^{-1} H')^{-1} (H b_ur - h) with I the
// full-sample information (the two n factors in the displayed statistic
// cancel).
double wald_statistic(const BetaFit& fit, const VectorXd& ur,
                      const Restriction& r,
                      InfoMatrix which = InfoMatrix::kEffective);

// delta * rr + (1 - delta) * ur, delta in [0,1].
VectorXd shrink_linear(const VectorXd& ur, const VectorXd& rr, double delta);

// ur - delta (ur - rr) I(t_n <= chi^2_{p2,alpha}); delta = 1 is the
// pretest estimator, general delta the shrinkage pretest.
VectorXd shrink_pretest(const VectorXd& ur, const VectorXd& rr, double t_n,
                        int p2, double alpha, double delta);

// rr + g (ur - rr) with g = 1 - (p2-2)/t_n; positive_part clamps g at 0.
// Requires p2 >= 3.  t_n = 0 is an error for the plain Stein estimator;
// the positive-part version returns rr there (the limit of g+).
VectorXd shrink_stein(const VectorXd& ur, const VectorXd& rr, double t_n,
                      int p2, bool positive_part);

struct EstimatorSet {
  VectorXd mle, ur, rr, rls, rpt, spe, rs, rps;
  double k = 0.0;
  double delta = 0.5;
  double alpha = 0.05;
  double t_n = 0.0;
  bool pretest_accepted = false;
  bool stein_available = false;  // false when p2 < 3 (rs/rps left empty)

  static const std::vector<std::string>& names();  // the seven estimators
  const VectorXd& by_name(const std::string& name) const;
};

struct EstimatorOptions {
  std::optional<double> fixed_k;      // absent -> estimate_k
  std::optional<double> fixed_delta;  // absent -> grid-optimized delta
  double alpha = 0.05;
  InfoMatrix info = InfoMatrix::kEffective;
};

// Plug-in optimal delta for the linear-shrinkage estimator: grid search
// over delta in {0, 0.01, ..., 1} minimizing the trace of the estimated
// asymptotic MSE of RLS evaluated at (A, I-hat, beta-hat, vartheta-hat).
double optimal_delta_rls(const BetaFit& fit, const Restriction& r,
                         const RidgeContext& ctx,
                         InfoMatrix which = InfoMatrix::kEffective);

// Builds all seven estimators from one fit, one k and one restriction.
// A restriction with p2 = 0 is the identity pass-through: every
// estimator equals UR and t_n = 0.
EstimatorSet build_estimator_set(const BetaFit& fit, const Restriction& r,
                                 const EstimatorOptions& opts = {});

}  // namespace betashrink
