#include "betashrink/estimators.hpp"

#include <cmath>
#include <limits>

#include "betashrink/special_functions.hpp"

namespace betashrink {

Restriction::Restriction(MatrixXd H_, VectorXd h_)
    : H(std::move(H_)), h(std::move(h_)) {
  if (H.rows() != h.size())
    throw std::invalid_argument("Restriction: H rows must match h length");
  if (H.rows() > H.cols())
    throw std::invalid_argument("Restriction: requires p2 <= p");
  if (H.rows() > 0) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(H.transpose());
    if (qr.rank() < H.rows())
      throw std::invalid_argument("Restriction: H must have full row rank");
  }
}

Restriction Restriction::zero_block(Eigen::Index p,
                                    const std::vector<Eigen::Index>& inactive) {
  const Eigen::Index p2 = static_cast<Eigen::Index>(inactive.size());
  MatrixXd H = MatrixXd::Zero(p2, p);
  for (Eigen::Index r = 0; r < p2; ++r) {
    const Eigen::Index j = inactive[static_cast<std::size_t>(r)];
    if (j < 0 || j >= p)
      throw std::invalid_argument("Restriction: inactive index out of range");
    H(r, j) = 1.0;
  }
  return Restriction(std::move(H), VectorXd::Zero(p2));
}

RidgeContext RidgeContext::make(const BetaFit& fit, const Restriction& r,
                                double k, InfoMatrix which) {
  if (k < 0.0) throw std::domain_error("RidgeContext: requires k >= 0");
  RidgeContext ctx;
  ctx.k = k;
  const Eigen::Index p = fit.beta.size();
  const MatrixXd xwx = fit.xwx();
  Eigen::LDLT<MatrixXd> ldlt(xwx + k * MatrixXd::Identity(p, p));
  ctx.A = ldlt.solve(xwx);
  if (ldlt.info() != Eigen::Success || !ctx.A.allFinite())
    throw NumericalError("RidgeContext: X'WX + kI is singular");
  if (r.p2() > 0) {
    const MatrixXd info = information_matrix(fit.info, which);
    Eigen::LDLT<MatrixXd> ildlt(info);
    const MatrixXd IiHt = ildlt.solve(r.H.transpose());  // I^{-1} H'
    const MatrixXd S = r.H * IiHt;                       // H I^{-1} H'
    Eigen::LDLT<MatrixXd> sldlt(S);
    ctx.J = sldlt.solve(IiHt.transpose()).transpose();   // I^{-1}H' S^{-1}
    if (sldlt.info() != Eigen::Success || !ctx.J.allFinite())
      throw NumericalError("RidgeContext: H I^{-1} H' is singular");
  } else {
    ctx.J.resize(p, 0);
  }
  return ctx;
}

double estimate_k(const BetaFit& fit) {
  // Eigendecompose X'WX; varphi = C' beta-hat has the same norm as
  // beta-hat because C is orthonormal, so k-hat = 1/||beta-hat||^2.
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(fit.xwx());
  if (es.info() != Eigen::Success)
    throw NumericalError("estimate_k: eigendecomposition failed");
  const VectorXd varphi = es.eigenvectors().transpose() * fit.beta;
  const double denom = varphi.squaredNorm();
  if (denom < 1e-300)
    throw NumericalError("estimate_k: beta-hat is zero, k-hat undefined");
  return 1.0 / denom;
}

VectorXd ridge_unrestricted(const BetaFit& fit, double k) {
  if (k < 0.0) throw std::domain_error("ridge_unrestricted: requires k >= 0");
  const Eigen::Index p = fit.beta.size();
  const MatrixXd xwx = fit.xwx();
  Eigen::LDLT<MatrixXd> ldlt(xwx + k * MatrixXd::Identity(p, p));
  VectorXd out = ldlt.solve(xwx * fit.beta);
  if (ldlt.info() != Eigen::Success || !out.allFinite())
    throw NumericalError("ridge_unrestricted: X'WX + kI is singular");
  return out;
}

VectorXd restricted_mle(const BetaFit& fit, const Restriction& r,
                        InfoMatrix which) {
  if (r.p2() == 0) return fit.beta;
  const MatrixXd info = information_matrix(fit.info, which);
  Eigen::LDLT<MatrixXd> ildlt(info);
  const MatrixXd IiHt = ildlt.solve(r.H.transpose());
  if (ildlt.info() != Eigen::Success || !IiHt.allFinite())
    throw NumericalError("restricted_mle: information matrix is singular");
  const MatrixXd S = r.H * IiHt;
  Eigen::LDLT<MatrixXd> sldlt(S);
  const VectorXd gap = r.H * fit.beta - r.h;
  VectorXd out = fit.beta - IiHt * sldlt.solve(gap);
  if (sldlt.info() != Eigen::Success || !out.allFinite())
    throw NumericalError("restricted_mle: H I^{-1} H' is singular");
  return out;
}

VectorXd ridge_restricted(const BetaFit& fit, const Restriction& r, double k,
                          InfoMatrix which) {
  const VectorXd rmle = restricted_mle(fit, r, which);
  const Eigen::Index p = fit.beta.size();
  const MatrixXd xwx = fit.xwx();
  Eigen::LDLT<MatrixXd> ldlt(xwx + k * MatrixXd::Identity(p, p));
  VectorXd out = ldlt.solve(xwx * rmle);
  if (ldlt.info() != Eigen::Success || !out.allFinite())
    throw NumericalError("ridge_restricted: X'WX + kI is singular");
  return out;
}

double wald_statistic(const BetaFit& fit, const VectorXd& ur,
                      const Restriction& r, InfoMatrix which) {
  if (r.p2() == 0) return 0.0;
  const MatrixXd info = information_matrix(fit.info, which);
  Eigen::LDLT<MatrixXd> ildlt(info);
  const MatrixXd S = r.H * ildlt.solve(r.H.transpose());
  Eigen::LDLT<MatrixXd> sldlt(S);
  const VectorXd gap = r.H * ur - r.h;
  const double t = gap.dot(sldlt.solve(gap));
  if (sldlt.info() != Eigen::Success || !std::isfinite(t))
    throw NumericalError("wald_statistic: H I^{-1} H' is singular");
  return std::max(t, 0.0);
}

VectorXd shrink_linear(const VectorXd& ur, const VectorXd& rr, double delta) {
  if (!(delta >= 0.0 && delta <= 1.0))
    throw std::domain_error("shrink_linear: delta must lie in [0,1]");
  return delta * rr + (1.0 - delta) * ur;
}

VectorXd shrink_pretest(const VectorXd& ur, const VectorXd& rr, double t_n,
                        int p2, double alpha, double delta) {
  if (!(delta >= 0.0 && delta <= 1.0))
    throw std::domain_error("shrink_pretest: delta must lie in [0,1]");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("shrink_pretest: alpha must lie in (0,1)");
  const double threshold = special::chi2_upper_quantile(p2, alpha);
  if (t_n <= threshold) {  // boundary included
    if (delta == 1.0) return rr;  // the pretest estimator IS rr here
    return ur - delta * (ur - rr);
  }
  return ur;
}

VectorXd shrink_stein(const VectorXd& ur, const VectorXd& rr, double t_n,
                      int p2, bool positive_part) {
  if (p2 < 3) throw std::domain_error("shrink_stein: requires p2 >= 3");
  if (t_n == 0.0) {
    if (positive_part) return rr;  // limit of the clamped factor
    throw std::domain_error("shrink_stein: t_n = 0 is undefined without the positive part");
  }
  if (!(t_n > 0.0)) throw std::domain_error("shrink_stein: requires t_n >= 0");
  double g = 1.0 - (p2 - 2.0) / t_n;
  if (positive_part) g = std::max(0.0, g);
  return rr + g * (ur - rr);
}

const std::vector<std::string>& EstimatorSet::names() {
  static const std::vector<std::string> kNames = {"UR",  "RR", "RLS", "RPT",
                                                  "SPE", "RS", "RPS"};
  return kNames;
}

const VectorXd& EstimatorSet::by_name(const std::string& name) const {
  if (name == "UR") return ur;
  if (name == "RR") return rr;
  if (name == "RLS") return rls;
  if (name == "RPT") return rpt;
  if (name == "SPE") return spe;
  if (name == "RS") return rs;
  if (name == "RPS") return rps;
  if (name == "MLE") return mle;
  throw std::invalid_argument("EstimatorSet: unknown estimator " + name);
}

double optimal_delta_rls(const BetaFit& fit, const Restriction& r,
                         const RidgeContext& ctx, InfoMatrix which) {
  if (r.p2() == 0) return 0.0;
  const Eigen::Index p = fit.beta.size();
  const MatrixXd info = information_matrix(fit.info, which);
  const MatrixXd Ii = info.ldlt().solve(MatrixXd::Identity(p, p));
  // Plug-in moments of the limit distribution at the estimated
  // parameters: E1 = (A-I) b, E4 = J(H(A-I)b + vartheta-hat) with
  // vartheta-hat = H b_ur - h, V4 = J H A I^{-1} A'.
  const MatrixXd AIA = ctx.A * Ii * ctx.A.transpose();
  const VectorXd e1 = (ctx.A - MatrixXd::Identity(p, p)) * fit.beta;
  const VectorXd vartheta = r.H * (ctx.A * fit.beta) - r.h;
  const VectorXd e4 = ctx.J * (r.H * e1 + vartheta);
  const VectorXd e3 = e1 - e4;
  const double tr_v4 = (ctx.J * (r.H * AIA)).trace();
  // tr V(RLS)(delta) = tr V(UR) - 2 delta e3'e4 - delta(2-delta)(tr V4 + |e4|^2)
  const double lin = e3.dot(e4);
  const double quad = tr_v4 + e4.squaredNorm();
  double best_delta = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 100; ++i) {
    const double delta = i / 100.0;
    const double obj = -2.0 * delta * lin - delta * (2.0 - delta) * quad;
    if (obj < best) {
      best = obj;
      best_delta = delta;
    }
  }
  return best_delta;
}

EstimatorSet build_estimator_set(const BetaFit& fit, const Restriction& r,
                                 const EstimatorOptions& opts) {
  EstimatorSet set;
  set.mle = fit.beta;
  set.alpha = opts.alpha;
  set.k = opts.fixed_k ? *opts.fixed_k : estimate_k(fit);

  if (r.p2() == 0) {
    // Vacuous restriction: identity pass-through.
    set.ur = ridge_unrestricted(fit, set.k);
    set.rr = set.ur;
    set.rls = set.ur;
    set.rpt = set.ur;
    set.spe = set.ur;
    set.rs = set.ur;
    set.rps = set.ur;
    set.t_n = 0.0;
    set.pretest_accepted = true;
    set.delta = opts.fixed_delta.value_or(0.5);
    set.stein_available = true;
    return set;
  }

  const RidgeContext ctx = RidgeContext::make(fit, r, set.k, opts.info);
  set.ur = ctx.A * fit.beta;
  set.rr = ctx.A * restricted_mle(fit, r, opts.info);
  set.t_n = wald_statistic(fit, set.ur, r, opts.info);
  set.delta = opts.fixed_delta ? *opts.fixed_delta
                               : optimal_delta_rls(fit, r, ctx, opts.info);

  set.rls = shrink_linear(set.ur, set.rr, set.delta);
  const double threshold =
      special::chi2_upper_quantile(static_cast<double>(r.p2()), opts.alpha);
  set.pretest_accepted = set.t_n <= threshold;
  set.rpt = set.pretest_accepted ? set.rr : set.ur;
  set.spe = shrink_pretest(set.ur, set.rr, set.t_n, static_cast<int>(r.p2()),
                           opts.alpha, set.delta);
  if (r.p2() >= 3) {
    set.stein_available = true;
    set.rps = shrink_stein(set.ur, set.rr, set.t_n, static_cast<int>(r.p2()), true);
    if (set.t_n > 0.0)
      set.rs = shrink_stein(set.ur, set.rr, set.t_n, static_cast<int>(r.p2()), false);
    else
      set.rs = set.rr;  // measure-zero corner, matches the RPS limit
  } else {
    set.stein_available = false;
  }
  return set;
}

}  // namespace betashrink
