#include "betashrink/asymptotics.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "betashrink/special_functions.hpp"

namespace betashrink::asy {

using special::NoncentralChi2;

double delta_star(const Restriction& r, const MatrixXd& info,
                  const VectorXd& vartheta) {
  if (vartheta.size() != r.p2())
    throw std::invalid_argument("delta_star: vartheta length must equal p2");
  if (r.p2() == 0) return 0.0;
  Eigen::LDLT<MatrixXd> ildlt(info);
  const MatrixXd S = r.H * ildlt.solve(r.H.transpose());
  Eigen::LDLT<MatrixXd> sldlt(S);
  const double d = vartheta.dot(sldlt.solve(vartheta));
  if (sldlt.info() != Eigen::Success || !std::isfinite(d))
    throw NumericalError("delta_star: H I^{-1} H' is singular");
  return std::max(d, 0.0);
}

LocalAlternative LocalAlternative::make(const Restriction& r,
                                        const MatrixXd& info,
                                        const VectorXd& vartheta) {
  return LocalAlternative{vartheta,
                          ::betashrink::asy::delta_star(r, info, vartheta)};
}

namespace {

// Shared building blocks of the bias/variance expressions.
struct Blocks {
  Eigen::Index p = 0;
  int p2 = 0;
  MatrixXd J;       // I^{-1} H' (H I^{-1} H')^{-1}
  VectorXd e1;      // (A - I) beta                  = E[kappa_1]
  VectorXd e4;      // J (H (A-I) beta + vartheta)   = E[kappa_4]
  VectorXd e3;      // e1 - e4                       = E[kappa_3]
  MatrixXd v1;      // A I^{-1} A'                   = Var(kappa_1)
  MatrixXd v4;      // J H A I^{-1} A'               = Var(kappa_4)
  double dstar = 0.0;
  double crit = 0.0;  // chi^2_{p2, alpha}
};

Blocks make_blocks(const AsymptoticInputs& in) {
  Blocks b;
  b.p = in.beta.size();
  b.p2 = static_cast<int>(in.r.p2());
  Eigen::LDLT<MatrixXd> ildlt(in.info);
  const MatrixXd Ii = ildlt.solve(MatrixXd::Identity(b.p, b.p));
  if (ildlt.info() != Eigen::Success || !Ii.allFinite())
    throw NumericalError("asymptotics: information matrix is singular");
  const MatrixXd IiHt = Ii * in.r.H.transpose();
  const MatrixXd S = in.r.H * IiHt;
  b.J = S.ldlt().solve(IiHt.transpose()).transpose();
  b.e1 = (in.A - MatrixXd::Identity(b.p, b.p)) * in.beta;
  b.e4 = b.J * (in.r.H * b.e1 + in.la.vartheta);
  b.e3 = b.e1 - b.e4;
  b.v1 = in.A * Ii * in.A.transpose();
  b.v4 = b.J * (in.r.H * b.v1);
  b.dstar = in.la.delta_star;
  b.crit = special::chi2_upper_quantile(b.p2, in.alpha);
  return b;
}

MatrixXd sym(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

const VectorXd& EstimatorBias::by_name(const std::string& name) const {
  if (name == "UR") return ur;
  if (name == "RR") return rr;
  if (name == "RLS") return rls;
  if (name == "RPT") return rpt;
  if (name == "SPE") return spe;
  if (name == "RS") return rs;
  if (name == "RPS") return rps;
  throw std::invalid_argument("EstimatorBias: unknown estimator " + name);
}

const MatrixXd& EstimatorVariance::by_name(const std::string& name) const {
  if (name == "UR") return ur;
  if (name == "RR") return rr;
  if (name == "RLS") return rls;
  if (name == "RPT") return rpt;
  if (name == "SPE") return spe;
  if (name == "RS") return rs;
  if (name == "RPS") return rps;
  throw std::invalid_argument("EstimatorVariance: unknown estimator " + name);
}

EstimatorBias bias_all(const AsymptoticInputs& in) {
  const Blocks b = make_blocks(in);
  EstimatorBias out;
  out.ur = b.e1;
  out.rr = b.e3;
  out.rls = b.e1 - in.delta * b.e4;
  const double psi2_crit =
      special::noncentral_chi2_cdf(NoncentralChi2(b.p2 + 2, b.dstar), b.crit);
  out.rpt = b.e1 - b.e4 * psi2_crit;
  out.spe = b.e1 - in.delta * b.e4 * psi2_crit;
  if (b.p2 >= 3) {
    out.stein_available = true;
    const double c = b.p2 - 2.0;
    const NoncentralChi2 d2(b.p2 + 2, b.dstar);
    const double inv1 = special::inv_moment(d2, 1);
    out.rs = b.e1 - c * b.e4 * inv1;
    // Positive-part correction E[(1 - c/X) I(X < c)] with X = chi^2_{p2+2},
    // assembled from the CDF at c and the truncated inverse moment.
    const double cdf_c = special::noncentral_chi2_cdf(d2, c);
    const double trunc1 = special::truncated_expectation(d2, 1, c);
    out.rps = out.rs - b.e4 * (cdf_c - c * trunc1);
  }
  return out;
}

EstimatorVariance variance_all(const AsymptoticInputs& in) {
  const Blocks b = make_blocks(in);
  EstimatorVariance out;
  const MatrixXd e3e4 = sym(b.e3 * b.e4.transpose());
  const MatrixXd e4e4 = b.e4 * b.e4.transpose();
  const MatrixXd v4s = sym(b.v4);

  out.ur = sym(b.v1) + b.e1 * b.e1.transpose();
  // Var(kappa_3) in its quadratic form (I - JH) V1 (I - JH)', which is
  // PSD by construction and collapses to V1 - JHV1 as A -> I.
  const MatrixXd proj = MatrixXd::Identity(b.p, b.p) - b.J * in.r.H;
  out.rr = sym(proj * b.v1 * proj.transpose()) + b.e3 * b.e3.transpose();

  const double d = in.delta;
  out.rls = out.ur - 2.0 * d * e3e4 - d * (2.0 - d) * (v4s + e4e4);

  const double psi2 =
      special::noncentral_chi2_cdf(NoncentralChi2(b.p2 + 2, b.dstar), b.crit);
  const double psi4 =
      special::noncentral_chi2_cdf(NoncentralChi2(b.p2 + 4, b.dstar), b.crit);
  auto pretest_variance = [&](double dd) {
    return out.ur - 2.0 * dd * e3e4 * psi2 -
           dd * (2.0 - dd) * (v4s * psi2 + e4e4 * psi4);
  };
  out.rpt = pretest_variance(1.0);
  out.spe = pretest_variance(d);

  if (b.p2 >= 3) {
    out.stein_available = true;
    const double c = b.p2 - 2.0;
    const special::SteinMoments m = special::stein_factor_moments(b.p2, b.dstar);
    out.rs = out.ur - 2.0 * c * e3e4 * m.inv1_p2 +
             v4s * (c * c * m.inv2_p2 - 2.0 * c * m.inv1_p2) +
             e4e4 * (c * c * m.inv2_p4 - 2.0 * c * m.inv1_p4);
    // E[(1 - c/X) I(X < c)] at X = chi^2_{p2+2}.
    const NoncentralChi2 d2(b.p2 + 2, b.dstar);
    const double lin_trunc =
        special::noncentral_chi2_cdf(d2, c) -
        c * special::truncated_expectation(d2, 1, c);
    out.rps = out.rs - 2.0 * e3e4 * lin_trunc -
              (v4s * m.sq_trunc_p2 + e4e4 * m.sq_trunc_p4);
  }
  return out;
}

AsymptoticReport evaluate(const AsymptoticInputs& in) {
  return AsymptoticReport{in, bias_all(in), variance_all(in)};
}

void write_report_csv(std::ostream& os, const AsymptoticReport& rep) {
  const Eigen::Index p = rep.inputs.beta.size();
  os << "estimator";
  for (Eigen::Index j = 0; j < p; ++j) os << ",bias" << (j + 1);
  for (Eigen::Index j = 0; j < p; ++j) os << ",var" << (j + 1);
  os << "\n";
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << ',' << buf;
  };
  for (const auto& name : EstimatorSet::names()) {
    const bool stein = (name == "RS" || name == "RPS");
    if (stein && !rep.bias.stein_available) continue;
    os << name;
    const VectorXd& bv = rep.bias.by_name(name);
    const MatrixXd& vm = rep.variance.by_name(name);
    for (Eigen::Index j = 0; j < p; ++j) num(bv[j]);
    for (Eigen::Index j = 0; j < p; ++j) num(vm(j, j));
    os << "\n";
  }
}

}  // namespace betashrink::asy
