// betashrink: beta regression with ridge-type shrinkage estimation.
//
// Subcommands:
//   fit          fit a CSV dataset and emit the coefficient/SE table
//   simulate     run the Monte Carlo RMSE sweep from a config file
//   asymptotics  evaluate the closed-form asymptotic bias/variance table
//
// Exit codes: 0 success, 2 data error, 3 numerical failure.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "betashrink/asymptotics.hpp"
#include "betashrink/pipeline.hpp"
#include "betashrink/simulation.hpp"

namespace {

using namespace betashrink;

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open output file " + path);
  f << contents;
}

// Flat key=value reader shared by `fit --config` and `asymptotics`.
std::map<std::string, std::string> read_kv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(f, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::string s;
    for (char ch : line)
      if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw DataError("config line is not key=value: " + line);
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return kv;
}

int run_fit(const pipe::AnalysisSpec& spec, const std::string& out_path) {
  const pipe::CoefficientTable table = pipe::analyze(spec);

  std::cout << "betashrink fit report\n";
  std::cout << "  rows read: " << table.ingest.rows_read
            << ", dropped (incomplete): " << table.ingest.rows_dropped << "\n";
  if (table.ingest.squeezed)
    std::cout << "  responses squeezed via (y(n-1)+0.5)/n\n";
  std::cout << "  weight convention: w_i = phi {psi'(mu_i phi) + "
               "psi'((1-mu_i) phi)} (mu_i(1-mu_i))^2 (logit link)\n";
  std::cout << "  condition number of X'WX: " << table.condition_number << "\n";
  std::cout << "  AIC full: " << table.aic_full
            << ", restricted: " << table.aic_restricted << "\n";
  std::cout << "  k: " << table.k << ", T_n: " << table.t_n
            << ", delta: " << table.delta << ", alpha: " << table.alpha
            << ", p2: " << table.p2 << "\n";
  if (table.bootstrap_flagged)
    std::cout << "  WARNING: more than 10% of bootstrap resamples failed ("
              << table.bootstrap_dropped << " of " << table.bootstrap_B << ")\n";
  table.print_pretty(std::cout);

  std::ostringstream os;
  table.write_csv(os);
  write_file(out_path, os.str());
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

struct HighdimFlags {
  bool enabled = false;
  std::string screen = "oracle";  // oracle | marginal
  std::vector<Eigen::Index> active;
  std::vector<Eigen::Index> retained;
  double screen_alpha = 0.01;
  bool bonferroni = false;
};

int run_simulate(const std::string& config_path, const std::string& out_path,
                 const std::string& figure_path, const HighdimFlags& hd) {
  const sim::SimConfig config = sim::parse_config(config_path);
  sim::RmseTable table;
  if (hd.enabled) {
    sim::ScreenSpec screen;
    if (hd.screen == "oracle") {
      screen.kind = sim::ScreenSpec::Kind::kOracle;
      screen.active = hd.active;
      screen.retained_inactive = hd.retained;
      if (screen.active.empty())
        throw DataError("simulate: --active is required for the oracle screen");
    } else if (hd.screen == "marginal") {
      screen.kind = sim::ScreenSpec::Kind::kMarginal;
      screen.screen_alpha = hd.screen_alpha;
      screen.bonferroni = hd.bonferroni;
    } else {
      throw DataError("simulate: --screen must be 'oracle' or 'marginal'");
    }
    table = sim::run_highdim(config, screen);
  } else {
    table = sim::run_sweep(config);
  }
  {
    std::ostringstream os;
    table.write_csv(os);
    write_file(out_path, os.str());
  }
  if (!figure_path.empty()) {
    std::ostringstream os;
    table.write_figure_csv(os);
    write_file(figure_path, os.str());
  }
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

// The asymptotics subcommand instantiates the formula inputs from a
// synthetic design: the design and information are realized at the true
// parameters, then the displayed formulas are evaluated.  Keys: n, p1,
// p2, rho, phi, beta1, vartheta, alpha, delta, k (or k=estimate), seed.
int run_asymptotics(const std::string& config_path, const std::string& out_path) {
  auto kv = read_kv(config_path);
  auto get = [&](const std::string& key, const std::string& dflt) {
    auto it = kv.find(key);
    return it == kv.end() ? dflt : it->second;
  };
  auto list = [&](const std::string& key) {
    std::vector<double> v;
    for (const auto& tok : split_names(get(key, ""))) v.push_back(std::stod(tok));
    return v;
  };
  const int n = std::stoi(get("n", "1000"));
  const int p1 = std::stoi(get("p1", "3"));
  const int p2 = std::stoi(get("p2", "3"));
  const double rho = std::stod(get("rho", "0.5"));
  const double phi = std::stod(get("phi", "5"));
  const double alpha = std::stod(get("alpha", "0.05"));
  const double delta = std::stod(get("delta", "0.5"));
  const std::uint64_t seed = std::stoull(get("seed", "1"));
  std::vector<double> beta1 = list("beta1");
  if (beta1.empty()) beta1 = {1.0, -0.6, 0.5};
  std::vector<double> vth = list("vartheta");
  if (vth.empty()) vth.assign(p2, 0.0);
  if (static_cast<int>(beta1.size()) != p1)
    throw DataError("asymptotics: beta1 length must equal p1");
  if (static_cast<int>(vth.size()) != p2)
    throw DataError("asymptotics: vartheta length must equal p2");

  const int p = p1 + p2;
  Rng rng(seed);
  const MatrixXd X = sim::gen_design(n, p, rho, rng);
  VectorXd beta(p);
  for (int j = 0; j < p1; ++j) beta[j] = beta1[static_cast<std::size_t>(j)];
  for (int j = 0; j < p2; ++j)
    beta[p1 + j] = vth[static_cast<std::size_t>(j)] / std::sqrt(n);

  std::vector<Eigen::Index> inactive;
  for (int j = 0; j < p2; ++j) inactive.push_back(p1 + j);
  const Restriction r = Restriction::zero_block(p, inactive);

  const Dataset d(sim::gen_response(X, beta, phi, rng), X);
  const FisherInfo info = fisher_information(d, beta, phi);
  const MatrixXd info_n = info.beta_information() / static_cast<double>(n);

  BetaFit at_truth;
  at_truth.beta = beta;
  at_truth.phi = phi;
  at_truth.info = info;
  at_truth.X = X;
  const double k = get("k", "estimate") == "estimate"
                       ? 1.0 / beta.squaredNorm()
                       : std::stod(get("k", "0"));
  const MatrixXd xwx = info.k_bb / phi;
  const MatrixXd A =
      (xwx + k * MatrixXd::Identity(p, p)).ldlt().solve(xwx);

  VectorXd vartheta(p2);
  for (int j = 0; j < p2; ++j) vartheta[j] = vth[static_cast<std::size_t>(j)];

  asy::AsymptoticInputs in{A,
                           info_n,
                           std::sqrt(static_cast<double>(n)) * beta,
                           r,
                           asy::LocalAlternative::make(r, info_n, vartheta),
                           alpha,
                           delta};
  const asy::AsymptoticReport rep = asy::evaluate(in);
  std::ostringstream os;
  asy::write_report_csv(os, rep);
  write_file(out_path, os.str());
  std::cout << "wrote " << out_path << " (Delta* = " << in.la.delta_star << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) try {
  CLI::App app{"beta regression with ridge-type shrinkage estimation"};
  app.require_subcommand(1);

  // ---- fit ----
  auto* fit = app.add_subcommand("fit", "fit a CSV dataset");
  std::string data_path, response, inactive_arg, out_path = "table.csv";
  std::string k_arg = "estimate", delta_arg = "optimize", config_path;
  pipe::AnalysisSpec spec;
  bool auto_aic = false;
  fit->add_option("--data", data_path, "input CSV file");
  fit->add_option("--response", response, "response column name");
  fit->add_option("--predictors", spec.predictors,
                  "predictor columns (default: all other columns)")
      ->delimiter(',');
  fit->add_option("--inactive", inactive_arg,
                  "comma-separated inactive columns, or 'auto-aic'");
  fit->add_flag("--auto-aic", auto_aic, "choose the inactive set by AIC");
  fit->add_option("--max-inactive", spec.max_inactive,
                  "cap on AIC-screened inactive count");
  fit->add_option("--alpha", spec.alpha, "pretest level (default 0.05)");
  fit->add_option("--delta", delta_arg, "RLS/SPE delta, or 'optimize'");
  fit->add_option("--k", k_arg, "ridge parameter, or 'estimate'");
  fit->add_option("--bootstrap", spec.bootstrap_B, "bootstrap resamples B");
  fit->add_option("--seed", spec.seed, "bootstrap seed");
  fit->add_flag("--squeeze", spec.squeeze,
                "apply the (y(n-1)+0.5)/n boundary squeeze");
  fit->add_option("--threads", spec.threads, "worker threads (0 = auto)");
  fit->add_option("--out", out_path, "output CSV (default table.csv)");
  fit->add_option("--config", config_path, "key=value config file mirroring the options");

  // ---- simulate ----
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo RMSE sweep");
  std::string sim_config, sim_out = "rmse.csv", figure_path;
  HighdimFlags hd;
  std::vector<long long> active_idx, retained_idx;
  simulate->add_option("--config", sim_config, "simulation config file")->required();
  simulate->add_option("--out", sim_out, "output CSV (default rmse.csv)");
  simulate->add_option("--figure-data", figure_path,
                       "also write long-format per-Delta CSV");
  simulate->add_flag("--highdim", hd.enabled,
                     "screen to a working set before estimating");
  simulate->add_option("--screen", hd.screen, "oracle (default) or marginal");
  simulate->add_option("--active", active_idx,
                       "oracle screen: active column indices")
      ->delimiter(',');
  simulate->add_option("--retained", retained_idx,
                       "oracle screen: retained inactive column indices")
      ->delimiter(',');
  simulate->add_option("--screen-alpha", hd.screen_alpha,
                       "marginal screen level (default 0.01)");
  simulate->add_flag("--bonferroni", hd.bonferroni,
                     "Bonferroni-adjust the marginal screen");

  // ---- asymptotics ----
  auto* asym = app.add_subcommand("asymptotics", "closed-form bias/variance table");
  std::string asy_config, asy_out = "asymptotics.csv";
  asym->add_option("--config", asy_config, "asymptotics config file")->required();
  asym->add_option("--out", asy_out, "output CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) {
      if (!config_path.empty()) {
        auto kv = read_kv(config_path);
        auto opt = [&](const std::string& key) { return kv.count(key) ? kv[key] : ""; };
        if (!opt("data").empty()) data_path = opt("data");
        if (!opt("response").empty()) response = opt("response");
        if (!opt("predictors").empty()) spec.predictors = split_names(opt("predictors"));
        if (!opt("inactive").empty()) inactive_arg = opt("inactive");
        if (!opt("alpha").empty()) spec.alpha = std::stod(opt("alpha"));
        if (!opt("delta").empty()) delta_arg = opt("delta");
        if (!opt("k").empty()) k_arg = opt("k");
        if (!opt("bootstrap").empty()) spec.bootstrap_B = std::stoi(opt("bootstrap"));
        if (!opt("seed").empty()) spec.seed = std::stoull(opt("seed"));
        if (!opt("squeeze").empty()) spec.squeeze = opt("squeeze") == "1";
        if (!opt("max_inactive").empty()) spec.max_inactive = std::stoi(opt("max_inactive"));
        if (!opt("out").empty()) out_path = opt("out");
      }
      if (data_path.empty() || response.empty())
        throw DataError("fit: --data and --response are required");
      spec.data_path = data_path;
      spec.response = response;
      if (inactive_arg == "auto-aic" || auto_aic)
        spec.auto_aic = true;
      else
        spec.inactive = split_names(inactive_arg);
      if (k_arg != "estimate") spec.fixed_k = std::stod(k_arg);
      if (delta_arg != "optimize") spec.fixed_delta = std::stod(delta_arg);
      return run_fit(spec, out_path);
    }
    if (simulate->parsed()) {
      for (const auto v : active_idx) hd.active.push_back(static_cast<Eigen::Index>(v));
      for (const auto v : retained_idx)
        hd.retained.push_back(static_cast<Eigen::Index>(v));
      return run_simulate(sim_config, sim_out, figure_path, hd);
    }
    if (asym->parsed()) return run_asymptotics(asy_config, asy_out);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::domain_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
} catch (const std::exception& e) {
  std::cerr << "error: " << e.what() << "\n";
  return 3;
} catch (...) {
  std::cerr << "error: unknown failure\n";
  return 3;
}
