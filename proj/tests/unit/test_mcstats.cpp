#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "htclt/combinatorics.hpp"
#include "htclt/errors.hpp"
#include "htclt/fixedpoint.hpp"
#include "htclt/mcstats.hpp"
#include "htclt/spectra.hpp"

using namespace htclt;

namespace {

constexpr cplx I{0.0, 1.0};

ExperimentConfig config(EnsembleSpec spec, std::vector<int> dims, int M, Statistic st,
                        std::uint64_t seed = 1, int threads = 2) {
  ExperimentConfig c;
  c.ensemble = std::move(spec);
  c.dims = std::move(dims);
  c.replicas = M;
  c.statistic = std::move(st);
  c.base_seed = seed;
  c.threads = threads;
  return c;
}

std::vector<double> normals(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> x(n);
  for (double& v : x) v = g(rng);
  return x;
}

}  // namespace

TEST_CASE("replica rows are the requested statistics") {
  const SampleTable t = run_replicas(config(EnsembleSpec::wigner(), {2}, 3, Statistic::moments({2})));
  REQUIRE(t.blocks.size() == 1);
  REQUIRE(t.blocks[0].rows.size() == 3);
  for (std::size_t m = 0; m < 3; ++m) {
    const SymmetricMatrix a = sample_matrix(EnsembleSpec::wigner(), 2, t.blocks[0].seeds[m]);
    const SpectralSample spectrum(a);
    double sq = 0.0;
    for (double l : spectrum.eigenvalues()) sq += l * l;
    CHECK(t.blocks[0].rows[m][0].real() == doctest::Approx(sq));
    CHECK(t.blocks[0].seeds[m] == 1 + m);
  }
  CHECK(t.features == std::vector<std::string>{"tr_A^2"});
}

TEST_CASE("replicas are deterministic across runs and thread counts") {
  const Statistic st = Statistic::resolvent({cplx(0.5, 1.0)});
  const EnsembleSpec spec = EnsembleSpec::levy(1.4);
  const SampleTable a = run_replicas(config(spec, {20, 30}, 16, st, 9, 1));
  const SampleTable b = run_replicas(config(spec, {20, 30}, 16, st, 9, 4));
  for (std::size_t k = 0; k < a.blocks.size(); ++k) CHECK(a.blocks[k].rows == b.blocks[k].rows);
  std::ostringstream sa, sb;
  write_sample_csv(sa, a);
  write_sample_csv(sb, b);
  CHECK(sa.str() == sb.str());
  CHECK(a.config_hash == config(spec, {20, 30}, 16, st, 9, 7).hash());
  CHECK(a.config_hash != config(spec, {20, 30}, 16, st, 10, 1).hash());
}

TEST_CASE("sample CSV schema") {
  const SampleTable t = run_replicas(
      config(EnsembleSpec::wigner(), {4}, 2, Statistic::resolvent({cplx(0.0, 2.0)})));
  std::ostringstream os;
  write_sample_csv(os, t);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "# schema=1");
  std::getline(in, line);
  CHECK(line == "N,replica,seed,re_tr_G(0+2i),im_tr_G(0+2i)");
}

TEST_CASE("resolvent statistics are conjugation symmetric per replica") {
  const cplx z{0.3, 0.8};
  const SampleTable t = run_replicas(
      config(EnsembleSpec::erdos_renyi(1.5), {40}, 8, Statistic::resolvent({z, std::conj(z)})));
  for (const auto& row : t.blocks[0].rows) CHECK(row[1] == std::conj(row[0]));
}

TEST_CASE("sparse graph fourth moment mean") {
  const int N = 1000;
  const SampleTable t = run_replicas(config(EnsembleSpec::erdos_renyi(1.0), {N}, 200, Statistic::moments({4}), 404, 0));
  std::vector<double> x;
  for (cplx v : t.blocks[0].column(0)) x.push_back(v.real() / N);
  double mean = 0.0, ss = 0.0;
  for (double v : x) mean += v / x.size();
  for (double v : x) ss += (v - mean) * (v - mean);
  const double se = std::sqrt(ss / (x.size() - 1) / x.size());
  CHECK(std::abs(mean - 3.0) < 3 * se);
}

TEST_CASE("standardized KS test is calibrated") {
  int passed = 0;
  for (int r = 0; r < 100; ++r) {
    const GaussianityReport g = gaussianity_report(normals(2000, 100 + r), 1.0);
    CHECK(g.method == "standardized");
    passed += g.p_value > 0.01;
  }
  CHECK(passed >= 95);
}

TEST_CASE("KS test rejects exponential samples") {
  std::mt19937_64 rng(5);
  std::exponential_distribution<double> e;
  std::vector<double> x(2000);
  for (double& v : x) v = e(rng) - 1.0;
  CHECK(gaussianity_report(x, 1.0).p_value < 0.01);
  CHECK(gaussianity_report(x, std::nullopt, 3).p_value < 0.01);
}

TEST_CASE("fitted-variance KS and moment checks on normal samples") {
  int passed = 0;
  for (int r = 0; r < 40; ++r) passed += gaussianity_report(normals(2000, 300 + r), std::nullopt, r, 200).p_value > 0.01;
  CHECK(passed >= 36);
  const std::vector<double> x = normals(2000, 78);
  const GaussianityReport g = gaussianity_report(x, std::nullopt, 1);
  CHECK(g.method == "lilliefors");
  CHECK(g.fitted_variance == doctest::Approx(1.0).epsilon(0.1));
  CHECK(std::abs(g.skewness) < 3 * g.skewness_se);
  CHECK(std::abs(g.excess_kurtosis) < 3 * g.excess_kurtosis_se);
  CHECK_THROWS_AS(gaussianity_report(normals(100, 1), 1.0), ConfigError);
  CHECK_THROWS_AS(gaussianity_report(x, 0.0), DomainError);
}

TEST_CASE("Kolmogorov distribution tail") {
  // P(√n D > 1.36) ≈ 0.05 and P(√n D > 1.63) ≈ 0.01 for large n
  CHECK(kolmogorov_pvalue(1.36 / std::sqrt(10000.0), 10000) == doctest::Approx(0.049).epsilon(0.05));
  CHECK(kolmogorov_pvalue(1.63 / std::sqrt(10000.0), 10000) == doctest::Approx(0.0098).epsilon(0.05));
  CHECK(kolmogorov_pvalue(0.0, 100) == doctest::Approx(1.0));
}

TEST_CASE("bootstrap errors shrink like one over root M") {
  const Statistic st = Statistic::moments({2});
  const EnsembleSpec spec = EnsembleSpec::wigner(EntryLaw::Gaussian);
  ReportOptions ro;
  ro.gaussianity = false;
  const StatReport small = summarize(run_replicas(config(spec, {10}, 500, st, 1)), ro);
  const StatReport large = summarize(run_replicas(config(spec, {10}, 2000, st, 1)), ro);
  const double ratio = small.blocks[0].covariance_se[0][0] / large.blocks[0].covariance_se[0][0];
  CHECK(ratio > 2.0 / 1.5);
  CHECK(ratio < 2.0 * 1.5);
}

TEST_CASE("reports are reproducible and covariances are symmetric") {
  const ExperimentConfig c = config(EnsembleSpec::erdos_renyi(2.0), {30}, 600, Statistic::moments({2, 3, 4}), 3);
  ReportOptions ro;
  ro.seed = 8;
  const StatReport a = summarize(run_replicas(c), ro), b = summarize(run_replicas(c), ro);
  const BlockReport& r = a.blocks[0];
  CHECK(r.covariance == b.blocks[0].covariance);
  CHECK(r.covariance_se == b.blocks[0].covariance_se);
  for (std::size_t f = 0; f < r.features.size(); ++f)
    CHECK(r.features[f].mean == b.blocks[0].features[f].mean);
  for (std::size_t i = 0; i < r.covariance.size(); ++i) {
    CHECK(r.covariance[i][i] >= 0.0);
    for (std::size_t j = 0; j < r.covariance.size(); ++j) CHECK(r.covariance[i][j] == r.covariance[j][i]);
  }
}

TEST_CASE("variance scaling") {
  CHECK_THROWS_AS(variance_scaling(run_replicas(config(EnsembleSpec::wigner(), {4, 8, 16}, 10, Statistic::moments({2})))),
                  DomainError);
  CHECK_THROWS_AS(variance_scaling(run_replicas(config(EnsembleSpec::wigner(), {4, 8}, 10, Statistic::moments({3})))),
                  ConfigError);
  const ScalingFit f = variance_scaling(
      config(EnsembleSpec::wigner(EntryLaw::Gaussian), {20, 40, 80, 200}, 400, Statistic::moments({1})));
  // Var Tr A = N Var a_ii = 1 for Gaussian entries
  CHECK(std::abs(f.slope) < 0.3);
  CHECK(f.ci_low <= f.slope);
  CHECK(f.slope <= f.ci_high);
  CHECK(f.spans_decade);
}

TEST_CASE("empirical rho") {
  const cplx z{0.0, 2.0};
  const double zero[] = {0.0};
  const auto e0 = empirical_rho(z, zero, EnsembleSpec::erdos_renyi(1.0), 50, 3, 1);
  CHECK(e0[0].value == cplx(0.0));

  const int N = 300;
  const double ts[] = {1.0, 2.5};
  const auto w = empirical_rho(z, ts, EnsembleSpec::wigner(), N, 1, 7);
  const cplx mean_diag = trace_resolvent(sample_matrix(EnsembleSpec::wigner(), N, 7), z) / double(N);
  for (int i = 0; i < 2; ++i) CHECK(std::abs(w[i].value - (-I * ts[i] * mean_diag)) < 1e-10);
}

TEST_CASE("empirical pair rho") {
  const cplx z{0.0, 2.0}, zp{1.0, 1.5};
  {
    const EnsembleSpec spec = EnsembleSpec::erdos_renyi(1.0);
    const std::pair<double, double> tts[] = {{1.0, 0.0}};
    const double ts[] = {1.0};
    const auto pair = empirical_rho_pair(z, zp, 0.5, tts, spec, 500, 3, 2);
    const auto single = empirical_rho(z, ts, spec, 500, 2, 3);
    CHECK(std::abs(pair[0].value - single[0].value) < 2e-2);
  }
  {
    // independent copies: Φ linear makes the estimate additive
    const std::pair<double, double> tts[] = {{1.0, 1.0}, {0.5, 2.0}};
    const auto pair = empirical_rho_pair(z, zp, 0.0, tts, EnsembleSpec::wigner(), 2000, 11);
    const KernelSpec k = KernelSpec::from(EnsembleSpec::wigner());
    const cplx s = stieltjes_limit(z, solve_rho(z, k)), sp = stieltjes_limit(zp, solve_rho(zp, k));
    for (int i = 0; i < 2; ++i)
      CHECK(std::abs(pair[i].value - (-I * tts[i].first * s - I * tts[i].second * sp)) < 1e-2);
  }
}

TEST_CASE("configs are validated") {
  CHECK_THROWS_AS(config(EnsembleSpec::wigner(), {}, 10, Statistic::moments({2})).validate(), ConfigError);
  CHECK_THROWS_AS(config(EnsembleSpec::wigner(), {1}, 10, Statistic::moments({2})).validate(), ConfigError);
  CHECK_THROWS_AS(config(EnsembleSpec::wigner(), {4}, 1, Statistic::moments({2})).validate(), ConfigError);
  CHECK_THROWS_AS(config(EnsembleSpec::wigner(), {4}, 2, Statistic::resolvent({1.0})).validate(), DomainError);
  CHECK_THROWS_AS(config(EnsembleSpec::wigner(), {4}, 2, Statistic::function("exp")).validate(), ConfigError);
  CHECK_THROWS_AS(config(EnsembleSpec::wigner(), {20000}, 2, Statistic::moments({2})).validate(), CapacityError);
  for (const std::string& id : known_functions())
    CHECK_NOTHROW(config(EnsembleSpec::wigner(), {4}, 2, Statistic::function(id)).validate());
}
