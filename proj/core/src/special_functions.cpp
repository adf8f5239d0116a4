#include "betashrink/special_functions.hpp"

#include <cmath>
#include <limits>

namespace betashrink::special {

namespace {

constexpr double kPoissonTailTol = 1e-12;  // stop once tail mass < this
constexpr int kMaxMixtureTerms = 10000;
constexpr double kCentralEps = 1e-14;  // Delta* below this -> central fast path

// Bernoulli-number coefficients B_{2k}/(2k) for the asymptotic expansions.
constexpr double kB2 = 1.0 / 6.0;
constexpr double kB4 = -1.0 / 30.0;
constexpr double kB6 = 1.0 / 42.0;
constexpr double kB8 = -1.0 / 30.0;
constexpr double kB10 = 5.0 / 66.0;
constexpr double kB12 = -691.0 / 2730.0;
constexpr double kB14 = 7.0 / 6.0;

// Poisson weight exp(-lambda) lambda^j / j!, evaluated in log space so
// large lambda does not underflow the leading terms.
double poisson_weight(double lambda, int j) {
  if (lambda == 0.0) return j == 0 ? 1.0 : 0.0;
  return std::exp(-lambda + j * std::log(lambda) - std::lgamma(j + 1.0));
}

}  // namespace

double digamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("digamma: requires x > 0");
  double result = 0.0;
  // Recurrence psi(x) = psi(x+1) - 1/x until the asymptotic range.
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  // psi(x) ~ ln x - 1/(2x) - sum_k B_{2k} / (2k x^{2k})
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = inv2 * (kB2 / 2.0 +
                  inv2 * (kB4 / 4.0 +
                  inv2 * (kB6 / 6.0 +
                  inv2 * (kB8 / 8.0 +
                  inv2 * (kB10 / 10.0 +
                  inv2 * (kB12 / 12.0 +
                  inv2 * kB14 / 14.0))))));
  return result + std::log(x) - 0.5 * inv - series;
}

double trigamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("trigamma: requires x > 0");
  double result = 0.0;
  // Recurrence psi'(x) = psi'(x+1) + 1/x^2.
  while (x < 10.0) {
    result += 1.0 / (x * x);
    x += 1.0;
  }
  // psi'(x) ~ 1/x + 1/(2x^2) + sum_k B_{2k} / x^{2k+1}
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = inv * inv2 * (kB2 +
                  inv2 * (kB4 +
                  inv2 * (kB6 +
                  inv2 * (kB8 +
                  inv2 * (kB10 +
                  inv2 * (kB12 +
                  inv2 * kB14))))));
  return result + inv + 0.5 * inv2 + series;
}

// Regularized incomplete gamma, series branch (x < a + 1).
static double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized incomplete gamma, continued-fraction branch (x >= a + 1),
// modified Lentz algorithm; returns Q(a, x).
static double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_p(double a, double x) {
  if (!(a > 0.0)) throw std::domain_error("gamma_p: requires a > 0");
  if (x < 0.0) throw std::domain_error("gamma_p: requires x >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
  if (!(a > 0.0)) throw std::domain_error("gamma_q: requires a > 0");
  if (x < 0.0) throw std::domain_error("gamma_q: requires x >= 0");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double chi2_cdf(double dof, double x) {
  if (!(dof > 0.0)) throw std::domain_error("chi2_cdf: requires dof > 0");
  if (x < 0.0) throw std::domain_error("chi2_cdf: requires x >= 0");
  return gamma_p(0.5 * dof, 0.5 * x);
}

double chi2_quantile(double dof, double prob) {
  if (!(dof > 0.0)) throw std::domain_error("chi2_quantile: requires dof > 0");
  if (!(prob >= 0.0 && prob < 1.0))
    throw std::domain_error("chi2_quantile: requires prob in [0, 1)");
  if (prob == 0.0) return 0.0;
  // Bracket then bisect; 200 halvings are plenty for double precision.
  double hi = dof + 10.0;
  while (chi2_cdf(dof, hi) < prob) hi *= 2.0;
  double lo = 0.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (chi2_cdf(dof, mid) < prob)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double chi2_upper_quantile(double dof, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("chi2_upper_quantile: requires alpha in (0, 1)");
  return chi2_quantile(dof, 1.0 - alpha);
}

double noncentral_chi2_cdf(const NoncentralChi2& d, double x) {
  if (x < 0.0) throw std::domain_error("noncentral_chi2_cdf: requires x >= 0");
  if (x == 0.0) return 0.0;
  const double lambda = 0.5 * d.noncentrality;
  if (lambda < 0.5 * kCentralEps) return chi2_cdf(d.dof, x);
  double sum = 0.0;
  double mass = 0.0;
  for (int j = 0; j < kMaxMixtureTerms; ++j) {
    const double w = poisson_weight(lambda, j);
    sum += w * gamma_p(0.5 * d.dof + j, 0.5 * x);
    mass += w;
    if (1.0 - mass < kPoissonTailTol) break;
  }
  return std::min(sum, 1.0);
}

double inv_moment(const NoncentralChi2& d, int power) {
  if (power != 1 && power != 2)
    throw std::domain_error("inv_moment: power must be 1 or 2");
  if (power == 1 && d.dof < 3)
    throw std::domain_error("inv_moment: power 1 requires dof >= 3");
  if (power == 2 && d.dof < 5)
    throw std::domain_error("inv_moment: power 2 requires dof >= 5");
  const double lambda = 0.5 * d.noncentrality;
  // Central closed forms: 1/(nu-2) and 1/((nu-2)(nu-4)).
  if (lambda < 0.5 * kCentralEps) {
    const double m = d.dof;
    return power == 1 ? 1.0 / (m - 2.0) : 1.0 / ((m - 2.0) * (m - 4.0));
  }
  double sum = 0.0;
  double mass = 0.0;
  for (int j = 0; j < kMaxMixtureTerms; ++j) {
    const double w = poisson_weight(lambda, j);
    const double m = d.dof + 2.0 * j;
    sum += power == 1 ? w / (m - 2.0) : w / ((m - 2.0) * (m - 4.0));
    mass += w;
    if (1.0 - mass < kPoissonTailTol) break;
  }
  return sum;
}

double truncated_expectation(const NoncentralChi2& d, int power, double cutoff) {
  if (power < 0 || power > 2)
    throw std::domain_error("truncated_expectation: power must be in {0,1,2}");
  if (!(cutoff > 0.0))
    throw std::domain_error("truncated_expectation: requires cutoff > 0");
  if (power == 1 && d.dof < 3)
    throw std::domain_error("truncated_expectation: power 1 requires dof >= 3");
  if (power == 2 && d.dof < 5)
    throw std::domain_error("truncated_expectation: power 2 requires dof >= 5");
  if (power == 0) return noncentral_chi2_cdf(d, cutoff);

  const double lambda = 0.5 * d.noncentrality;
  // For a central chi^2_m component,
  //   E[X^{-q} I(X < c)] = 2^{-q} Gamma(m/2-q)/Gamma(m/2) P(m/2-q, c/2),
  // which is P(m/2-1, c/2)/(m-2) for q=1 and
  // P(m/2-2, c/2)/((m-2)(m-4)) for q=2.
  auto component = [&](double m) {
    if (power == 1) return gamma_p(0.5 * m - 1.0, 0.5 * cutoff) / (m - 2.0);
    return gamma_p(0.5 * m - 2.0, 0.5 * cutoff) / ((m - 2.0) * (m - 4.0));
  };
  if (lambda < 0.5 * kCentralEps) return component(d.dof);
  double sum = 0.0;
  double mass = 0.0;
  for (int j = 0; j < kMaxMixtureTerms; ++j) {
    const double w = poisson_weight(lambda, j);
    sum += w * component(d.dof + 2.0 * j);
    mass += w;
    if (1.0 - mass < kPoissonTailTol) break;
  }
  return sum;
}

SteinMoments stein_factor_moments(int p2, double delta_star) {
  if (p2 < 3)
    throw std::domain_error("stein_factor_moments: requires p2 >= 3");
  const double c = p2 - 2.0;
  const NoncentralChi2 d2(p2 + 2, delta_star);
  const NoncentralChi2 d4(p2 + 4, delta_star);
  // (1 - c/X)^2 I(X < c) expands to I - 2c X^{-1} I + c^2 X^{-2} I.
  auto sq_trunc = [&](const NoncentralChi2& d) {
    return noncentral_chi2_cdf(d, c) - 2.0 * c * truncated_expectation(d, 1, c) +
           c * c * truncated_expectation(d, 2, c);
  };
  return SteinMoments{
      inv_moment(d2, 1), inv_moment(d4, 1),
      inv_moment(d2, 2), inv_moment(d4, 2),
      sq_trunc(d2),      sq_trunc(d4),
  };
}

}  // namespace betashrink::special
