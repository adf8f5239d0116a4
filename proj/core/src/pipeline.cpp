#include "betashrink/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <set>
#include <thread>

#include "betashrink/csv.hpp"
#include "betashrink/rng.hpp"

namespace betashrink::pipe {

namespace {

void parallel_for(int threads, int count, const std::function<void(int)>& fn) {
  int nthreads = threads > 0 ? threads
                             : static_cast<int>(std::thread::hardware_concurrency());
  nthreads = std::max(1, std::min(nthreads, count));
  if (nthreads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < nthreads; ++t)
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  for (auto& th : pool) th.join();
}

double aic_of(const Dataset& d, const SolverOptions& opts = {}) {
  const BetaFit fit = fit_mle(d, opts);
  if (!fit.converged)
    throw NumericalError("aic_screen: submodel fit did not converge");
  return -2.0 * fit.loglik + 2.0 * (static_cast<double>(d.p()) + 1.0);
}

Dataset select_columns(const Dataset& d, const std::vector<Eigen::Index>& cols) {
  MatrixXd X(d.n(), static_cast<Eigen::Index>(cols.size()));
  std::vector<std::string> names;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    X.col(static_cast<Eigen::Index>(j)) = d.X.col(cols[j]);
    names.push_back(d.names[static_cast<std::size_t>(cols[j])]);
  }
  return Dataset(d.y, std::move(X), std::move(names));
}

}  // namespace

Dataset ingest_csv(const std::string& path, const AnalysisSpec& spec,
                   IngestReport* report) {
  const csv::Table t = csv::read_file(path);
  const std::size_t ycol = t.column(spec.response);
  std::vector<std::string> predictors = spec.predictors;
  if (predictors.empty())
    for (const auto& name : t.header)
      if (name != spec.response) predictors.push_back(name);
  std::vector<std::size_t> pcols;
  for (const auto& name : predictors) {
    if (name == spec.response)
      throw DataError("ingest_csv: response cannot also be a predictor");
    pcols.push_back(t.column(name));
  }

  // Complete-case analysis: drop any row with a missing cell among the
  // used columns.
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    bool complete = t.rows[i][ycol].has_value();
    for (const auto c : pcols) complete = complete && t.rows[i][c].has_value();
    if (complete) keep.push_back(i);
  }
  IngestReport rep;
  rep.rows_read = static_cast<Eigen::Index>(t.rows.size());
  rep.rows_dropped = static_cast<Eigen::Index>(t.rows.size() - keep.size());
  if (keep.empty()) throw DataError("ingest_csv: no complete rows");

  const Eigen::Index n = static_cast<Eigen::Index>(keep.size());
  VectorXd y(n);
  MatrixXd X(n, static_cast<Eigen::Index>(pcols.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    y[i] = *t.rows[keep[static_cast<std::size_t>(i)]][ycol];
    for (std::size_t j = 0; j < pcols.size(); ++j)
      X(i, static_cast<Eigen::Index>(j)) =
          *t.rows[keep[static_cast<std::size_t>(i)]][pcols[j]];
  }

  if (spec.squeeze) {
    const double nn = static_cast<double>(n);
    y = (y.array() * (nn - 1.0) + 0.5) / nn;
    rep.squeezed = true;
  } else {
    std::string bad;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!(y[i] > 0.0 && y[i] < 1.0)) {
        if (!bad.empty()) bad += ", ";
        bad += std::to_string(keep[static_cast<std::size_t>(i)] + 2);  // 1-based file line
      }
    if (!bad.empty())
      throw DataError(
          "ingest_csv: response values on file line(s) {" + bad +
          "} lie on the boundary of (0,1); rerun with the squeeze option or "
          "clean the data");
  }
  if (report) *report = rep;
  return Dataset(std::move(y), std::move(X), predictors);
}

double condition_number(const BetaFit& fit) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(fit.xwx());
  if (es.info() != Eigen::Success)
    throw NumericalError("condition_number: eigendecomposition failed");
  const double lmin = es.eigenvalues().minCoeff();
  const double lmax = es.eigenvalues().maxCoeff();
  if (lmin <= 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(lmax / lmin);
}

Restriction aic_screen(const Dataset& d, int max_inactive) {
  if (d.n() <= d.p())
    throw DataError("aic_screen: requires n > p");
  const int cap = max_inactive < 0 ? static_cast<int>(d.p()) : max_inactive;
  std::vector<Eigen::Index> active(static_cast<std::size_t>(d.p()));
  for (Eigen::Index j = 0; j < d.p(); ++j)
    active[static_cast<std::size_t>(j)] = j;
  std::vector<Eigen::Index> dropped;
  double current = aic_of(d);
  while (static_cast<int>(dropped.size()) < cap && active.size() > 1) {
    double best = current;
    int best_pos = -1;
    for (std::size_t pos = 0; pos < active.size(); ++pos) {
      std::vector<Eigen::Index> trial = active;
      trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(pos));
      double aic;
      try {
        aic = aic_of(select_columns(d, trial));
      } catch (const NumericalError&) {
        continue;  // a submodel that cannot be fit is not a candidate
      }
      if (aic < best) {
        best = aic;
        best_pos = static_cast<int>(pos);
      }
    }
    if (best_pos < 0) break;  // no drop improves AIC
    dropped.push_back(active[static_cast<std::size_t>(best_pos)]);
    active.erase(active.begin() + best_pos);
    current = best;
  }
  std::sort(dropped.begin(), dropped.end());
  return Restriction::zero_block(d.p(), dropped);
}

BootstrapResult bootstrap_replicates(const Dataset& d, const Restriction& r,
                                     const EstimatorOptions& opts, int B,
                                     std::uint64_t seed, int threads) {
  if (B < 2) throw std::invalid_argument("bootstrap: requires B >= 2");
  const auto& names = EstimatorSet::names();
  const Eigen::Index n = d.n();
  const Eigen::Index p = d.p();
  std::vector<std::optional<std::vector<VectorXd>>> rows(
      static_cast<std::size_t>(B));
  parallel_for(threads, B, [&](int b) {
    Rng rng = Rng::for_stream(seed, 0xB007u, static_cast<std::uint64_t>(b));
    try {
      VectorXd y(n);
      MatrixXd X(n, p);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto pick =
            static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
        y[i] = d.y[pick];
        X.row(i) = d.X.row(pick);
      }
      const Dataset resample(std::move(y), std::move(X), d.names);
      // A resample counts as failed only when the fit throws; a fit that
      // stalls at max_iter still carries finite monotone-ascent
      // estimates (degenerate resamples pin phi at its cap, for one).
      const BetaFit fit = fit_mle(resample);
      const EstimatorSet set = build_estimator_set(fit, r, opts);
      std::vector<VectorXd> row;
      for (const auto& nm : names) {
        if ((nm == "RS" || nm == "RPS") && !set.stein_available)
          row.push_back(VectorXd::Constant(p, std::nan("")));
        else
          row.push_back(set.by_name(nm));
      }
      rows[static_cast<std::size_t>(b)] = std::move(row);
    } catch (const std::exception&) {
      // failed resample: dropped and counted
    }
  });

  BootstrapResult out;
  int ok = 0;
  for (const auto& row : rows)
    if (row) ++ok;
  out.dropped = B - ok;
  out.flagged = out.dropped > 0.10 * B;
  if (ok == 0) throw NumericalError("bootstrap: every resample fit failed");
  for (std::size_t e = 0; e < names.size(); ++e) {
    MatrixXd m(ok, p);
    int i = 0;
    for (const auto& row : rows)
      if (row) m.row(i++) = (*row)[e].transpose();
    out.replicates.push_back(std::move(m));
  }
  return out;
}

std::vector<VectorXd> bootstrap_se(const BootstrapResult& boot) {
  std::vector<VectorXd> out;
  for (const auto& m : boot.replicates) {
    const Eigen::Index B = m.rows();
    VectorXd se(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double mean = m.col(j).mean();
      se[j] = B > 1 ? std::sqrt((m.col(j).array() - mean).square().sum() /
                                static_cast<double>(B - 1))
                    : 0.0;
    }
    out.push_back(std::move(se));
  }
  return out;
}

CoefficientTable analyze(const AnalysisSpec& spec) {
  CoefficientTable table;
  const Dataset d = ingest_csv(spec.data_path, spec, &table.ingest);
  const BetaFit fit = fit_mle(d);
  if (!fit.converged)
    throw NumericalError("analyze: maximum-likelihood fit did not converge");

  Restriction r = [&] {
    if (spec.auto_aic) return aic_screen(d, spec.max_inactive);
    std::vector<Eigen::Index> idx;
    for (const auto& name : spec.inactive) {
      const auto it = std::find(d.names.begin(), d.names.end(), name);
      if (it == d.names.end())
        throw DataError("analyze: inactive column '" + name +
                        "' is not a predictor");
      idx.push_back(it - d.names.begin());
    }
    std::sort(idx.begin(), idx.end());
    return Restriction::zero_block(d.p(), idx);
  }();

  EstimatorOptions opts;
  opts.alpha = spec.alpha;
  opts.fixed_k = spec.fixed_k;
  opts.fixed_delta = spec.fixed_delta;
  const EstimatorSet set = build_estimator_set(fit, r, opts);

  table.variables = d.names;
  table.estimators = EstimatorSet::names();
  table.condition_number = condition_number(fit);
  table.aic_full = -2.0 * fit.loglik + 2.0 * (static_cast<double>(d.p()) + 1.0);
  table.k = set.k;
  table.t_n = set.t_n;
  table.delta = set.delta;
  table.alpha = set.alpha;
  table.p2 = r.p2();
  table.bootstrap_B = spec.bootstrap_B;

  // AIC of the restricted (active-columns-only) model, for the report.
  if (r.p2() > 0 && r.p2() < d.p()) {
    std::set<Eigen::Index> restricted;
    for (Eigen::Index row = 0; row < r.p2(); ++row)
      for (Eigen::Index j = 0; j < d.p(); ++j)
        if (r.H(row, j) != 0.0) restricted.insert(j);
    std::vector<Eigen::Index> active_cols;
    for (Eigen::Index j = 0; j < d.p(); ++j)
      if (!restricted.count(j)) active_cols.push_back(j);
    try {
      table.aic_restricted = aic_of(select_columns(d, active_cols));
    } catch (const NumericalError&) {
      table.aic_restricted = std::nan("");
    }
  } else {
    table.aic_restricted = table.aic_full;
  }

  const double na = std::nan("");
  const bool stein = set.stein_available;
  for (const auto& nm : table.estimators) {
    std::vector<double> coefs;
    const bool avail = stein || (nm != "RS" && nm != "RPS");
    for (Eigen::Index j = 0; j < d.p(); ++j)
      coefs.push_back(avail ? set.by_name(nm)[j] : na);
    table.coef.push_back(std::move(coefs));
    table.se.emplace_back(static_cast<std::size_t>(d.p()),
                          spec.bootstrap_B >= 2 ? 0.0 : na);
  }

  if (spec.bootstrap_B >= 2) {
    const BootstrapResult boot = bootstrap_replicates(
        d, r, opts, spec.bootstrap_B, spec.seed, spec.threads);
    const auto ses = bootstrap_se(boot);
    table.bootstrap_dropped = boot.dropped;
    table.bootstrap_flagged = boot.flagged;
    for (std::size_t e = 0; e < table.estimators.size(); ++e)
      for (Eigen::Index j = 0; j < d.p(); ++j) {
        const bool avail =
            stein || (table.estimators[e] != "RS" && table.estimators[e] != "RPS");
        table.se[e][static_cast<std::size_t>(j)] = avail ? ses[e][j] : na;
      }
  }
  return table;
}

void CoefficientTable::write_csv(std::ostream& os) const {
  os << "variable,estimator,coef,se\n";
  for (std::size_t v = 0; v < variables.size(); ++v)
    for (std::size_t e = 0; e < estimators.size(); ++e) {
      os << variables[v] << ',' << estimators[e] << ',';
      const double c = coef[e][v];
      const double s = se[e][v];
      os << (std::isnan(c) ? "na" : csv::format_full(c)) << ',';
      if (bootstrap_B >= 2)
        os << (std::isnan(s) ? "na" : csv::format_full(s));
      os << "\n";
    }
}

void CoefficientTable::print_pretty(std::ostream& os) const {
  os << "Coefficients\n";
  os << std::left << std::setw(16) << "variable";
  for (const auto& e : estimators) os << std::right << std::setw(10) << e;
  os << "\n";
  auto row = [&](const std::vector<std::vector<double>>& m, std::size_t v) {
    os << std::left << std::setw(16) << variables[v];
    for (std::size_t e = 0; e < estimators.size(); ++e) {
      if (std::isnan(m[e][v]))
        os << std::right << std::setw(10) << "na";
      else
        os << std::right << std::setw(10) << std::fixed << std::setprecision(4)
           << m[e][v];
    }
    os << "\n";
  };
  for (std::size_t v = 0; v < variables.size(); ++v) row(coef, v);
  if (bootstrap_B >= 2) {
    os << "Bootstrap standard errors (B=" << bootstrap_B;
    if (bootstrap_dropped > 0) os << ", dropped " << bootstrap_dropped;
    os << ")\n";
    for (std::size_t v = 0; v < variables.size(); ++v) row(se, v);
  }
  os.unsetf(std::ios::fixed);
}

}  // namespace betashrink::pipe
