#include "betashrink/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <thread>

#include "betashrink/csv.hpp"
#include "betashrink/special_functions.hpp"

namespace betashrink::sim {

namespace {

// Runs fn(0..count-1) on a small worker pool.  Work items own their RNG
// and write to preallocated slots, so scheduling cannot change results.
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
  pool.reserve(nthreads);
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

VectorXd assemble_beta(const SimConfig& c, double delta) {
  VectorXd beta = VectorXd::Zero(c.p());
  for (int j = 0; j < c.p1; ++j) beta[j] = c.beta1[static_cast<std::size_t>(j)];
  if (c.p2 > 0) beta[c.p1] = std::sqrt(delta);
  return beta;
}

struct RepResult {
  bool ok = false;
  std::map<std::string, double> sqerr;
};

std::vector<std::string> estimator_names_for(int p2) {
  std::vector<std::string> names = {"UR", "RR", "RLS", "RPT", "SPE"};
  if (p2 >= 3) {
    names.push_back("RS");
    names.push_back("RPS");
  }
  return names;
}

void fill_table(RmseTable& table, int delta_idx,
                const std::vector<std::string>& names,
                const std::vector<RepResult>& results, int reps) {
  std::map<std::string, double> ur_sum, est_sum;
  int used = 0;
  for (const auto& res : results) {
    if (!res.ok) continue;
    ++used;
    for (const auto& nm : names) {
      ur_sum[nm] += res.sqerr.at("UR");
      est_sum[nm] += res.sqerr.at(nm);
    }
  }
  const bool flagged = (reps - used) > 0.05 * reps;
  for (const auto& nm : names) {
    RmseCell cell;
    cell.reps_used = used;
    cell.flagged = flagged;
    if (nm == "UR")
      cell.rmse = 1.0;  // self-ratio by definition
    else
      cell.rmse = est_sum[nm] > 0.0 ? ur_sum[nm] / est_sum[nm] : 0.0;
    table.cells[{delta_idx, nm}] = cell;
  }
}

}  // namespace

std::vector<double> SimConfig::grid() const {
  if (!delta_grid.empty()) return delta_grid;
  std::vector<double> g(11);
  for (int i = 0; i < 11; ++i) g[static_cast<std::size_t>(i)] = 0.2 * i;
  return g;
}

SimConfig parse_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("simulate: cannot open config file " + path);
  SimConfig c;
  c.beta1.clear();
  std::string line;
  int lineno = 0;
  bool beta1_set = false;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::string s;
    for (char ch : line)
      if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw DataError("simulate: config line " + std::to_string(lineno) +
                      " is not key=value");
    const std::string key = s.substr(0, eq);
    const std::string val = s.substr(eq + 1);
    auto as_list = [&](std::vector<double>& out) {
      out.clear();
      std::stringstream ss(val);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
      }
    };
    try {
      if (key == "n") c.n = std::stoi(val);
      else if (key == "p1") c.p1 = std::stoi(val);
      else if (key == "p2") c.p2 = std::stoi(val);
      else if (key == "rho") c.rho = std::stod(val);
      else if (key == "phi") c.phi = std::stod(val);
      else if (key == "beta1") { as_list(c.beta1); beta1_set = true; }
      else if (key == "delta_grid") as_list(c.delta_grid);
      else if (key == "reps") c.reps = std::stoi(val);
      else if (key == "alpha") c.alpha = std::stod(val);
      else if (key == "delta_shrink") c.delta_shrink = std::stod(val);
      else if (key == "seed") c.seed = std::stoull(val);
      else if (key == "threads") c.threads = std::stoi(val);
      else
        throw DataError("simulate: unknown config key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw DataError("simulate: cannot parse value for key '" + key + "'");
    }
  }
  if (!beta1_set) c.beta1 = {2.75, -1.75, 1.45};
  if (static_cast<int>(c.beta1.size()) != c.p1)
    throw DataError("simulate: beta1 length must equal p1");
  if (!(c.rho >= 0.0 && c.rho < 1.0))
    throw DataError("simulate: rho must lie in [0,1)");
  if (!(c.phi > 0.0)) throw DataError("simulate: phi must be > 0");
  return c;
}

const RmseCell& RmseTable::at(int delta_idx, const std::string& name) const {
  return cells.at({delta_idx, name});
}

void RmseTable::write_csv(std::ostream& os) const {
  os << "delta,estimator,rmse,reps_used\n";
  for (std::size_t d = 0; d < deltas.size(); ++d)
    for (const auto& nm : estimators) {
      const auto& cell = at(static_cast<int>(d), nm);
      os << csv::format_full(deltas[d]) << ',' << nm << ','
         << csv::format_full(cell.rmse) << ',' << cell.reps_used << "\n";
    }
}

void RmseTable::write_figure_csv(std::ostream& os) const {
  os << "delta,estimator,rmse\n";
  for (std::size_t d = 0; d < deltas.size(); ++d)
    for (const auto& nm : estimators) {
      const auto& cell = at(static_cast<int>(d), nm);
      os << csv::format_full(deltas[d]) << ',' << nm << ','
         << csv::format_full(cell.rmse) << "\n";
    }
}

MatrixXd gen_design(int n, int p, double rho, Rng& rng) {
  if (!(rho >= 0.0 && rho < 1.0))
    throw std::domain_error("gen_design: rho must lie in [0,1)");
  MatrixXd X(n, p);
  // The Cholesky factor of the AR(1) correlation acts on a standard
  // normal row as x_1 = z_1, x_j = rho x_{j-1} + sqrt(1-rho^2) z_j.
  const double s = std::sqrt(1.0 - rho * rho);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = rng.normal();
    for (int j = 1; j < p; ++j) X(i, j) = rho * X(i, j - 1) + s * rng.normal();
  }
  return X;
}

VectorXd gen_response(const MatrixXd& X, const VectorXd& beta, double phi,
                      Rng& rng, long* boundary_redraws) {
  if (!(phi > 0.0)) throw std::domain_error("gen_response: phi must be > 0");
  const Eigen::Index n = X.rows();
  VectorXd y(n);
  long redraws = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = logistic(X.row(i).dot(beta));
    const double a = mu * phi;
    const double b = (1.0 - mu) * phi;
    double v = rng.beta(a, b);
    int guard = 0;
    while (!(v > 0.0 && v < 1.0)) {
      ++redraws;
      if (++guard > 10000)
        throw NumericalError("gen_response: beta draw pinned at the boundary");
      v = rng.beta(a, b);
    }
    y[i] = v;
  }
  if (boundary_redraws) *boundary_redraws += redraws;
  return y;
}

RmseTable run_sweep(const SimConfig& config) {
  RmseTable table;
  table.deltas = config.grid();
  table.estimators = estimator_names_for(config.p2);
  std::vector<Eigen::Index> inactive(static_cast<std::size_t>(config.p2));
  for (int j = 0; j < config.p2; ++j)
    inactive[static_cast<std::size_t>(j)] = config.p1 + j;
  const Restriction r = Restriction::zero_block(config.p(), inactive);

  for (std::size_t d = 0; d < table.deltas.size(); ++d) {
    const VectorXd beta = assemble_beta(config, table.deltas[d]);
    std::vector<RepResult> results(static_cast<std::size_t>(config.reps));
    parallel_for(config.threads, config.reps, [&](int rep) {
      Rng rng = Rng::for_stream(config.seed, static_cast<std::uint64_t>(d),
                                static_cast<std::uint64_t>(rep));
      RepResult& out = results[static_cast<std::size_t>(rep)];
      try {
        const MatrixXd X = gen_design(config.n, config.p(), config.rho, rng);
        const VectorXd y = gen_response(X, beta, config.phi, rng);
        const Dataset data(y, X);
        const BetaFit fit = fit_mle(data);
        if (!fit.converged) return;
        EstimatorOptions opts;
        opts.alpha = config.alpha;
        opts.fixed_delta = config.delta_shrink;
        const EstimatorSet set = build_estimator_set(fit, r, opts);
        for (const auto& nm : table.estimators)
          out.sqerr[nm] = (set.by_name(nm) - beta).squaredNorm();
        out.ok = true;
      } catch (const std::exception&) {
        out.ok = false;  // failures are excluded and counted
      }
    });
    fill_table(table, static_cast<int>(d), table.estimators, results,
               config.reps);
  }
  return table;
}

std::vector<Eigen::Index> marginal_screen(const MatrixXd& X, const VectorXd& y,
                                          double screen_alpha, bool bonferroni) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (n < 3) throw DataError("marginal_screen: needs at least 3 rows");
  VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = logit(y[i]);
  const double zbar = z.mean();
  const VectorXd zc = z.array() - zbar;
  const double szz = zc.squaredNorm();
  const double alpha_eff =
      bonferroni ? screen_alpha / static_cast<double>(p) : screen_alpha;
  // |t|^2 threshold from the chi2_1 critical value (normal-squared).
  const double crit = special::chi2_upper_quantile(1.0, alpha_eff);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < p; ++j) {
    const VectorXd xc = X.col(j).array() - X.col(j).mean();
    const double sxx = xc.squaredNorm();
    if (sxx <= 0.0 || szz <= 0.0) continue;
    const double rho = xc.dot(zc) / std::sqrt(sxx * szz);
    const double r2 = std::min(rho * rho, 1.0 - 1e-15);
    const double t2 = r2 * (static_cast<double>(n) - 2.0) / (1.0 - r2);
    if (t2 > crit) keep.push_back(j);
  }
  return keep;
}

RmseTable run_highdim(const SimConfig& config, const ScreenSpec& screen) {
  RmseTable table;
  table.deltas = config.grid();

  for (std::size_t d = 0; d < table.deltas.size(); ++d) {
    const VectorXd beta = assemble_beta(config, table.deltas[d]);
    std::vector<RepResult> results(static_cast<std::size_t>(config.reps));
    std::vector<std::string> names;  // fixed by the first successful rep
    if (screen.kind == ScreenSpec::Kind::kOracle) {
      const int p2w = static_cast<int>(screen.retained_inactive.size());
      names = estimator_names_for(p2w);
    } else {
      names = estimator_names_for(3);  // marginal screen: assume RS/RPS viable
    }
    parallel_for(config.threads, config.reps, [&](int rep) {
      Rng rng = Rng::for_stream(config.seed, static_cast<std::uint64_t>(d),
                                static_cast<std::uint64_t>(rep));
      RepResult& out = results[static_cast<std::size_t>(rep)];
      try {
        const MatrixXd X = gen_design(config.n, config.p(), config.rho, rng);
        const VectorXd y = gen_response(X, beta, config.phi, rng);

        std::vector<Eigen::Index> working;
        if (screen.kind == ScreenSpec::Kind::kOracle) {
          working = screen.active;
          working.insert(working.end(), screen.retained_inactive.begin(),
                         screen.retained_inactive.end());
        } else {
          working = marginal_screen(X, y, screen.screen_alpha, screen.bonferroni);
        }
        std::sort(working.begin(), working.end());
        working.erase(std::unique(working.begin(), working.end()), working.end());
        if (static_cast<Eigen::Index>(working.size()) >= X.rows())
          throw DataError("run_highdim: working set larger than sample size");
        if (working.empty()) return;

        MatrixXd Xw(X.rows(), static_cast<Eigen::Index>(working.size()));
        VectorXd betaw(static_cast<Eigen::Index>(working.size()));
        std::vector<Eigen::Index> inactive_w;
        for (std::size_t c = 0; c < working.size(); ++c) {
          Xw.col(static_cast<Eigen::Index>(c)) = X.col(working[c]);
          betaw[static_cast<Eigen::Index>(c)] = beta[working[c]];
          if (working[c] >= config.p1)
            inactive_w.push_back(static_cast<Eigen::Index>(c));
        }
        const Restriction rw =
            Restriction::zero_block(Xw.cols(), inactive_w);

        const Dataset data(y, Xw);
        const BetaFit fit = fit_mle(data);
        if (!fit.converged) return;
        EstimatorOptions opts;
        opts.alpha = config.alpha;
        opts.fixed_delta = config.delta_shrink;
        const EstimatorSet set = build_estimator_set(fit, rw, opts);
        for (const auto& nm : names) {
          if ((nm == "RS" || nm == "RPS") && !set.stein_available) return;
          out.sqerr[nm] = (set.by_name(nm) - betaw).squaredNorm();
        }
        out.ok = true;
      } catch (const std::exception&) {
        out.ok = false;
      }
    });
    if (table.estimators.empty()) table.estimators = names;
    fill_table(table, static_cast<int>(d), names, results, config.reps);
  }
  return table;
}

}  // namespace betashrink::sim
