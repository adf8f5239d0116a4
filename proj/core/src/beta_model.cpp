#include "betashrink/beta_model.hpp"

#include <algorithm>
#include <cmath>

#include "betashrink/special_functions.hpp"

namespace betashrink {

using special::digamma;
using special::trigamma;

namespace {

// Keep mu strictly inside (0,1).  Beyond |eta| ~ 27 the data carry no
// information about mu anyway, and the clamp keeps every downstream
// gamma-function argument in a numerically safe range.
constexpr double kMuEps = 1e-12;

double clamp_mu(double mu) { return std::clamp(mu, kMuEps, 1.0 - kMuEps); }

VectorXd fitted_means(const MatrixXd& X, const VectorXd& beta) {
  VectorXd eta = X * beta;
  VectorXd mu(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) mu[i] = clamp_mu(logistic(eta[i]));
  return mu;
}

}  // namespace

Dataset::Dataset(VectorXd y_, MatrixXd X_, std::vector<std::string> names_)
    : y(std::move(y_)), X(std::move(X_)), names(std::move(names_)) {
  if (y.size() == 0 || X.cols() == 0) throw DataError("Dataset: empty data");
  if (y.size() != X.rows())
    throw DataError("Dataset: y length does not match design rows");
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (!(y[i] > 0.0 && y[i] < 1.0))
      throw DataError("Dataset: response at row " + std::to_string(i) +
                      " is outside the open interval (0,1)");
  if (names.empty())
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      names.push_back("x" + std::to_string(j + 1));
  if (static_cast<Eigen::Index>(names.size()) != X.cols())
    throw DataError("Dataset: name count does not match design columns");
}

double log_density(double y, double mu, double phi) {
  if (!(y > 0.0 && y < 1.0))
    throw std::domain_error("log_density: y must lie strictly in (0,1)");
  if (!(mu > 0.0 && mu < 1.0))
    throw std::domain_error("log_density: mu must lie strictly in (0,1)");
  if (!(phi > 0.0)) throw std::domain_error("log_density: phi must be > 0");
  return std::lgamma(phi) - std::lgamma(mu * phi) - std::lgamma((1.0 - mu) * phi) +
         (mu * phi - 1.0) * std::log(y) +
         ((1.0 - mu) * phi - 1.0) * std::log1p(-y);
}

double log_likelihood(const Dataset& d, const VectorXd& beta, double phi) {
  if (!(phi > 0.0)) throw std::domain_error("log_likelihood: phi must be > 0");
  const VectorXd mu = fitted_means(d.X, beta);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < d.n(); ++i) ll += log_density(d.y[i], mu[i], phi);
  return ll;
}

std::pair<VectorXd, double> score(const Dataset& d, const VectorXd& beta,
                                  double phi) {
  if (!(phi > 0.0)) throw std::domain_error("score: phi must be > 0");
  const VectorXd mu = fitted_means(d.X, beta);
  const Eigen::Index n = d.n();
  VectorXd resid(n);  // T (y* - mu*)
  double u_phi = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ystar = logit(d.y[i]);
    const double mustar = digamma(mu[i] * phi) - digamma((1.0 - mu[i]) * phi);
    const double t = mu[i] * (1.0 - mu[i]);
    resid[i] = t * (ystar - mustar);
    u_phi += mu[i] * (ystar - mustar) + std::log1p(-d.y[i]) -
             digamma((1.0 - mu[i]) * phi) + digamma(phi);
  }
  VectorXd u_beta = phi * (d.X.transpose() * resid);
  return {std::move(u_beta), u_phi};
}

FisherInfo fisher_information(const Dataset& d, const VectorXd& beta,
                              double phi) {
  if (!(phi > 0.0))
    throw std::domain_error("fisher_information: phi must be > 0");
  const VectorXd mu = fitted_means(d.X, beta);
  const Eigen::Index n = d.n();
  FisherInfo info;
  info.W.resize(n);
  info.T.resize(n);
  info.D.resize(n);
  info.c.resize(n);
  const double tg_phi = trigamma(phi);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = trigamma(mu[i] * phi);
    const double b = trigamma((1.0 - mu[i]) * phi);
    const double t = mu[i] * (1.0 - mu[i]);
    info.T[i] = t;
    info.W[i] = phi * (a + b) * t * t;
    info.c[i] = phi * (a * mu[i] - b * (1.0 - mu[i]));
    info.D[i] = a * mu[i] * mu[i] + b * (1.0 - mu[i]) * (1.0 - mu[i]) - tg_phi;
  }
  info.k_bb = phi * (d.X.transpose() * info.W.asDiagonal() * d.X);
  info.k_bb = 0.5 * (info.k_bb + info.k_bb.transpose()).eval();
  info.k_bphi = d.X.transpose() * (info.T.cwiseProduct(info.c));
  info.k_phiphi = info.D.sum();
  return info;
}

BetaFit fit_mle(const Dataset& d, const SolverOptions& opts) {
  const Eigen::Index n = d.n();
  const Eigen::Index p = d.p();

  // OLS of logit(y) on X for the starting beta; phi by moments from the
  // OLS residual variance mapped through the link (clamped, since near-
  // degenerate mu would otherwise explode the estimate).
  VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = logit(d.y[i]);
  VectorXd beta = d.X.colPivHouseholderQr().solve(z);
  const VectorXd resid = z - d.X * beta;
  const double dof = std::max<double>(n - p, 1);
  const double s2 = std::max(resid.squaredNorm() / dof, 1e-8);
  const VectorXd mu0 = fitted_means(d.X, beta);
  double phi_acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = std::max(mu0[i] * (1.0 - mu0[i]), 1e-2);
    phi_acc += 1.0 / (s2 * v);
  }
  double phi = std::clamp(phi_acc / n - 1.0, 0.1, 1e4);

  double ll = log_likelihood(d, beta, phi);
  BetaFit fit;
  fit.converged = false;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    auto [u_beta, u_phi] = score(d, beta, phi);
    const double sup = std::max(u_beta.cwiseAbs().maxCoeff(), std::fabs(u_phi));
    if (sup < opts.tol) {
      fit.converged = true;
      break;
    }
    const FisherInfo info = fisher_information(d, beta, phi);

    // Joint step in (beta, log phi); the log scale keeps phi positive.
    MatrixXd K(p + 1, p + 1);
    K.topLeftCorner(p, p) = info.k_bb;
    K.topRightCorner(p, 1) = phi * info.k_bphi;
    K.bottomLeftCorner(1, p) = phi * info.k_bphi.transpose();
    K(p, p) = phi * phi * info.k_phiphi;
    VectorXd U(p + 1);
    U.head(p) = u_beta;
    U[p] = phi * u_phi;

    Eigen::LDLT<MatrixXd> ldlt(K);
    VectorXd step = ldlt.solve(U);
    const VectorXd pivots = ldlt.vectorD().cwiseAbs();
    if (ldlt.info() != Eigen::Success || !step.allFinite() ||
        pivots.minCoeff() < 1e-12 * pivots.maxCoeff())
      throw NumericalError(
          "fit_mle: singular information matrix; the design is rank "
          "deficient, consider the ridge estimator");

    // Step halving: accept ascent steps.  Near the optimum the
    // log-likelihood differences fall below double precision, so a step
    // that keeps ll within rounding while reducing the score sup-norm
    // also counts as progress.
    const double ll_slack = 1e-10 * (1.0 + std::fabs(ll));
    double lam = 1.0;
    bool accepted = false;
    for (int h = 0; h < 20; ++h) {
      VectorXd nb = beta + lam * step.head(p);
      const double nphi = std::clamp(
          phi * std::exp(std::clamp(lam * step[p], -5.0, 5.0)), 1e-8, 1e8);
      const double nll = log_likelihood(d, nb, nphi);
      bool take = std::isfinite(nll) && nll >= ll + 1e-12;
      if (!take && std::isfinite(nll) && nll >= ll - ll_slack) {
        const auto [nu_beta, nu_phi] = score(d, nb, nphi);
        const double nsup =
            std::max(nu_beta.cwiseAbs().maxCoeff(), std::fabs(nu_phi));
        take = nsup < sup || nll >= ll;
      }
      if (take) {
        beta = std::move(nb);
        phi = nphi;
        ll = nll;
        accepted = true;
        break;
      }
      lam *= 0.5;
    }
    if (!accepted) break;  // stalled: return flagged as not converged
  }

  fit.beta = beta;
  fit.phi = phi;
  fit.mu = fitted_means(d.X, beta);
  fit.info = fisher_information(d, beta, phi);
  fit.loglik = ll;
  fit.iterations = it;
  fit.X = d.X;
  return fit;
}

}  // namespace betashrink
