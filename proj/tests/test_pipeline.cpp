#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "betashrink/csv.hpp"
#include "betashrink/pipeline.hpp"
#include "betashrink/rng.hpp"
#include "betashrink/simulation.hpp"
#include "oracles.hpp"

using namespace betashrink;

namespace {

std::string tmp_path(const std::string& name) {
  return std::string(BETASHRINK_TEST_TMP) + "/" + name;
}

// Writes a small synthetic CSV dataset and returns its path.
std::string write_synthetic_csv(const std::string& name, int n, int p,
                                const VectorXd& beta, double phi,
                                std::uint64_t seed, double rho = 0.4) {
  Rng rng(seed);
  const MatrixXd X = sim::gen_design(n, p, rho, rng);
  const VectorXd y = sim::gen_response(X, beta, phi, rng);
  const std::string path = tmp_path(name);
  std::ofstream f(path);
  f << "y";
  for (int j = 0; j < p; ++j) f << ",x" << (j + 1);
  f << "\n";
  f.precision(17);
  for (int i = 0; i < n; ++i) {
    f << y[i];
    for (int j = 0; j < p; ++j) f << ',' << X(i, j);
    f << "\n";
  }
  return path;
}

pipe::AnalysisSpec basic_spec(const std::string& path, int p) {
  pipe::AnalysisSpec spec;
  spec.data_path = path;
  spec.response = "y";
  for (int j = 0; j < p; ++j) spec.predictors.push_back("x" + std::to_string(j + 1));
  return spec;
}

}  // namespace

TEST_CASE("csv ingestion: complete-case handling and validation errors") {
  const std::string path = tmp_path("ingest.csv");
  {
    std::ofstream f(path);
    f << "y,a,b\n0.5,1.0,2.0\n0.25,NA,0.5\n0.75,2.0,1.0\n";
  }
  pipe::AnalysisSpec spec;
  spec.data_path = path;
  spec.response = "y";
  spec.predictors = {"a", "b"};
  pipe::IngestReport rep;
  const Dataset d = pipe::ingest_csv(path, spec, &rep);
  CHECK(d.n() == 2);
  CHECK(rep.rows_read == 3);
  CHECK(rep.rows_dropped == 1);
  CHECK(d.names == std::vector<std::string>{"a", "b"});

  {
    std::ofstream f(path);
    f << "y,a\n0.5,1.0\n1.0,2.0\n";  // boundary response
  }
  spec.predictors = {"a"};
  CHECK_THROWS_WITH_AS(static_cast<void>(pipe::ingest_csv(path, spec, nullptr)),
                       doctest::Contains("line(s) {3}"), DataError);
  // The squeeze flag rescues boundary responses.
  spec.squeeze = true;
  const Dataset ds = pipe::ingest_csv(path, spec, &rep);
  CHECK(rep.squeezed);
  CHECK(ds.y.maxCoeff() < 1.0);
  CHECK(ds.y.minCoeff() > 0.0);
  spec.squeeze = false;

  {
    std::ofstream f(path);
    f << "y,a\n0.5,oops\n";
  }
  CHECK_THROWS_WITH_AS(static_cast<void>(pipe::ingest_csv(path, spec, nullptr)),
                       doctest::Contains("column 'a'"), DataError);
  CHECK_THROWS_AS(static_cast<void>(pipe::ingest_csv(tmp_path("missing.csv"),
                                                     spec, nullptr)),
                  DataError);
}

TEST_CASE("csv round trip preserves values") {
  VectorXd beta(2);
  beta << 0.8, -0.5;
  const std::string path = write_synthetic_csv("roundtrip.csv", 40, 2, beta, 5.0, 91u);
  pipe::AnalysisSpec spec = basic_spec(path, 2);
  const Dataset d = pipe::ingest_csv(path, spec, nullptr);
  // Write back at full precision and re-ingest.
  const std::string path2 = tmp_path("roundtrip2.csv");
  {
    std::ofstream f(path2);
    f << "y,x1,x2\n";
    for (Eigen::Index i = 0; i < d.n(); ++i)
      f << csv::format_full(d.y[i]) << ',' << csv::format_full(d.X(i, 0)) << ','
        << csv::format_full(d.X(i, 1)) << "\n";
  }
  const Dataset d2 = pipe::ingest_csv(path2, spec, nullptr);
  CHECK((d.y - d2.y).cwiseAbs().maxCoeff() == 0.0);
  CHECK((d.X - d2.X).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("condition number") {
  // Craft a fit whose X'WX is a chosen diagonal.
  BetaFit fit;
  fit.phi = 2.0;
  fit.info.k_bb = 2.0 * MatrixXd::Identity(3, 3);
  CHECK(pipe::condition_number(fit) == doctest::Approx(1.0));
  MatrixXd d2(2, 2);
  d2 << 100.0, 0.0, 0.0, 1.0;
  fit.info.k_bb = 2.0 * d2;
  CHECK(pipe::condition_number(fit) == doctest::Approx(10.0));
  fit.info.k_bb << 1.0, 1.0, 1.0, 1.0;  // singular
  CHECK(std::isinf(pipe::condition_number(fit)));
}

TEST_CASE("aic screen drops noise and keeps strong predictors") {
  VectorXd beta(3);
  beta << 1.2, -0.9, 0.0;  // third column is pure noise
  int dropped_noise = 0;
  bool ever_dropped_strong = false;
  for (std::uint64_t s = 0; s < 50; ++s) {
    Rng rng(1000u + s);
    const MatrixXd X = sim::gen_design(500, 3, 0.3, rng);
    const VectorXd y = sim::gen_response(X, beta, 5.0, rng);
    const Restriction r = pipe::aic_screen(Dataset(y, X));
    for (Eigen::Index row = 0; row < r.p2(); ++row) {
      if (r.H(row, 2) == 1.0) ++dropped_noise;
      if (r.H(row, 0) == 1.0 || r.H(row, 1) == 1.0) ever_dropped_strong = true;
    }
  }
  CHECK(dropped_noise >= 45);  // >= 90% screening power
  CHECK_FALSE(ever_dropped_strong);

  // Strong-only model: the screen keeps everything.
  Rng rng(4242u);
  const MatrixXd X = sim::gen_design(600, 2, 0.3, rng);
  VectorXd b2(2);
  b2 << 1.5, -1.0;
  const VectorXd y = sim::gen_response(X, b2, 5.0, rng);
  const Dataset d(y, X);
  CHECK(pipe::aic_screen(d).p2() == 0);
  // Deterministic: repeated calls agree.
  const Restriction r1 = pipe::aic_screen(d);
  const Restriction r2 = pipe::aic_screen(d);
  CHECK(r1.p2() == r2.p2());
  if (r1.p2() > 0) CHECK((r1.H - r2.H).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("bootstrap SE is zero for a degenerate dataset") {
  // Identical rows: every case resample is the same dataset, so every
  // replicate estimate coincides.
  MatrixXd X = MatrixXd::Ones(25, 1);
  VectorXd y = VectorXd::Constant(25, 0.37);
  const Dataset d(y, X);
  const Restriction r(MatrixXd(0, 1), VectorXd(0));
  EstimatorOptions opts;
  opts.fixed_k = 0.1;
  opts.fixed_delta = 0.5;
  const pipe::BootstrapResult boot = pipe::bootstrap_replicates(d, r, opts, 20, 5u, 1);
  CHECK(boot.dropped == 0);
  const auto ses = pipe::bootstrap_se(boot);
  for (const auto& se : ses) CHECK(se.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("bootstrap SE of an intercept-only mean matches s/sqrt(n)") {
  Rng rng(2024u);
  const int n = 200;
  MatrixXd X = MatrixXd::Ones(n, 1);
  VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = rng.beta(0.45 * 6.0, 0.55 * 6.0);
  const Dataset d(y, X);
  const Restriction r(MatrixXd(0, 1), VectorXd(0));
  EstimatorOptions opts;
  opts.fixed_k = 0.0;
  opts.fixed_delta = 0.5;
  const pipe::BootstrapResult boot =
      pipe::bootstrap_replicates(d, r, opts, 1000, 77u, 1);
  // Map the UR intercept replicates through the link to the mean scale.
  const MatrixXd& reps = boot.replicates[0];
  VectorXd mus(reps.rows());
  for (Eigen::Index b = 0; b < reps.rows(); ++b) mus[b] = logistic(reps(b, 0));
  const double mean = mus.mean();
  const double se_boot =
      std::sqrt((mus.array() - mean).square().sum() / (mus.size() - 1.0));
  const double sd_y = std::sqrt((y.array() - y.mean()).square().sum() / (n - 1.0));
  const double classical = sd_y / std::sqrt(static_cast<double>(n));
  CHECK(std::fabs(se_boot - classical) / classical < 0.15);
}

TEST_CASE("analyze: vacuous restriction collapses every estimator onto UR") {
  VectorXd beta(3);
  beta << 0.9, -0.6, 0.4;
  const std::string path = write_synthetic_csv("vacuous.csv", 120, 3, beta, 5.0, 5u);
  pipe::AnalysisSpec spec = basic_spec(path, 3);
  spec.fixed_delta = 0.5;
  const pipe::CoefficientTable t = pipe::analyze(spec);
  CHECK(t.p2 == 0);
  for (std::size_t e = 1; e < t.estimators.size(); ++e)
    for (std::size_t v = 0; v < t.variables.size(); ++v)
      CHECK(t.coef[e][v] == t.coef[0][v]);
}

TEST_CASE("analyze is deterministic and writes the documented CSV shape") {
  VectorXd beta(4);
  beta << 1.0, -0.7, 0.05, -0.02;
  const std::string path = write_synthetic_csv("deter.csv", 150, 4, beta, 5.0, 6u);
  pipe::AnalysisSpec spec = basic_spec(path, 4);
  spec.inactive = {"x3", "x4"};
  spec.bootstrap_B = 25;
  spec.seed = 99u;
  spec.fixed_delta = 0.5;
  std::ostringstream a, b;
  pipe::analyze(spec).write_csv(a);
  pipe::analyze(spec).write_csv(b);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("variable,estimator,coef,se\n", 0) == 0);
  // p2 = 2 < 3: the Stein columns are marked unavailable.
  CHECK(a.str().find("x1,RS,na,na") != std::string::npos);
}

TEST_CASE("analyze on a known inactive block: estimator geometry and SEs") {
  VectorXd beta(6);
  beta << 1.1, -0.8, 0.5, 0.0, 0.0, 0.0;
  const std::string path = write_synthetic_csv("known.csv", 180, 6, beta, 5.0, 8u, 0.6);
  pipe::AnalysisSpec spec = basic_spec(path, 6);
  spec.inactive = {"x4", "x5", "x6"};
  spec.bootstrap_B = 200;
  spec.seed = 4u;
  spec.fixed_delta = 0.5;
  const pipe::CoefficientTable t = pipe::analyze(spec);

  // Componentwise betweenness on the UR-RR segment for RLS/SPE/RPS.
  auto col = [&](const std::string& nm) {
    for (std::size_t e = 0; e < t.estimators.size(); ++e)
      if (t.estimators[e] == nm) return e;
    REQUIRE(false);
    return std::size_t{0};
  };
  const std::size_t ur = col("UR"), rr = col("RR");
  for (const char* nm : {"RLS", "SPE", "RPS"}) {
    const std::size_t e = col(nm);
    for (std::size_t v = 0; v < t.variables.size(); ++v) {
      const double lo = std::min(t.coef[ur][v], t.coef[rr][v]) - 1e-12;
      const double hi = std::max(t.coef[ur][v], t.coef[rr][v]) + 1e-12;
      CHECK(t.coef[e][v] >= lo);
      CHECK(t.coef[e][v] <= hi);
    }
  }

  // Restricted coordinates: the RR bootstrap SE is below UR's.
  for (std::size_t v = 3; v < 6; ++v) CHECK(t.se[rr][v] < t.se[ur][v]);

  // The shrinkage path recovers efficiency on most coordinates.
  const std::size_t rps = col("RPS");
  int better = 0;
  for (std::size_t v = 0; v < 6; ++v)
    if (t.se[rps][v] <= t.se[ur][v]) ++better;
  CHECK(better >= 4);  // >= 70% of coordinates
}
