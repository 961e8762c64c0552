#include "htclt/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "htclt/combinatorics.hpp"
#include "htclt/errors.hpp"
#include "htclt/fixedpoint.hpp"
#include "htclt/mcstats.hpp"
#include "htclt/numerics.hpp"
#include "htclt/spectra.hpp"

namespace htclt {

namespace {

constexpr cplx I{0.0, 1.0};

std::string num(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

std::string num(cplx x) {
  std::ostringstream os;
  os.precision(6);
  os << x.real() << (x.imag() < 0 ? "-" : "+") << std::abs(x.imag()) << 'i';
  return os.str();
}

struct Check {
  CriterionResult& r;
  bool ok = true;
  std::vector<std::string> failures;

  template <typename T>
  void metric(const std::string& key, T value) {
    r.metrics.emplace_back(key, num(value));
  }
  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      failures.push_back(what);
    }
  }
};

std::uint64_t seed_for(const AcceptanceOptions& o, int id) {
  return o.seed + static_cast<std::uint64_t>(id) * 1000003ULL;
}

ExperimentConfig experiment(const EnsembleSpec& spec, std::vector<int> dims, int M,
                            Statistic st, std::uint64_t seed, int threads) {
  ExperimentConfig cfg;
  cfg.ensemble = spec;
  cfg.dims = std::move(dims);
  cfg.replicas = M;
  cfg.statistic = std::move(st);
  cfg.base_seed = seed;
  cfg.threads = threads;
  return cfg;
}

std::vector<double> real_parts(const std::vector<cplx>& v) {
  std::vector<double> out;
  for (cplx x : v) out.push_back(x.real());
  return out;
}

std::vector<double> imag_parts(const std::vector<cplx>& v) {
  std::vector<double> out;
  for (cplx x : v) out.push_back(x.imag());
  return out;
}

void semicircle(Check& c, const AcceptanceOptions&) {
  const KernelSpec k = KernelSpec::from(EnsembleSpec::wigner());
  const SolverOptions so;
  const RhoSolver solver(k, so, so.t_max_factor / 2.0);
  double worst = 0.0;
  for (int j = 0; j < 20; ++j) {
    const cplx z{-3.0 + 6.0 * j / 19.0, 2.0};
    const cplx s = stieltjes_limit(z, solver.solve(z));
    worst = std::max(worst, std::abs(s - 1.0 / (z - s)));
  }
  c.metric("max_closure_error", worst);
  c.require(worst < 1e-6, "closure error " + num(worst) + " >= 1e-6");
}

void catalan(Check& c, const AcceptanceOptions&) {
  const CSequence semicircle_c{1, 0, 0, 0, 0};
  const double expected[] = {0, 1, 0, 2, 0, 5, 0, 14};
  for (int K = 1; K <= 8; ++K) {
    const double m = limiting_moment_mean(K, semicircle_c);
    c.metric("K" + std::to_string(K), m);
    c.require(m == expected[K - 1], "K=" + std::to_string(K) + " gives " + num(m));
  }
}

void injective_identity(Check& c, const AcceptanceOptions& o) {
  const EnsembleSpec spec = EnsembleSpec::wigner(EntryLaw::Gaussian);
  std::vector<std::vector<MultiGraph>> quotients(6);
  for (int K = 1; K <= 5; ++K)
    for (const Partition& pi : partitions(K)) quotients[K].push_back(quotient_cycle_graph(pi));
  double worst = 0.0;
  std::uint64_t seed = seed_for(o, 3);
  for (int N : {5, 6, 7})
    for (int rep = 0; rep < 50; ++rep) {
      const SymmetricMatrix a = sample_matrix(spec, N, seed++);
      for (int K = 1; K <= 5; ++K) {
        double rhs = 0.0;
        for (const MultiGraph& t : quotients[K]) rhs += injective_trace(a, t);
        const double lhs = trace_power(a, K, TracePath::Multiplication) / N;
        worst = std::max(worst, std::abs(lhs - rhs));
      }
    }
  c.metric("max_abs_error", worst);
  c.require(worst < 1e-10, "identity error " + num(worst) + " >= 1e-10");
}

void mean_moments(Check& c, const AcceptanceOptions& o) {
  const EnsembleSpec spec = EnsembleSpec::erdos_renyi(1.0);
  const int N = 1000;
  const SampleTable t = run_replicas(
      experiment(spec, {N}, 200, Statistic::moments({2, 3, 4, 5, 6}), seed_for(o, 4), o.threads));
  const CSequence cs = spec.c_sequence(6);
  for (std::size_t f = 0; f < t.features.size(); ++f) {
    const int K = t.statistic.orders[f];
    std::vector<double> x = real_parts(t.blocks[0].column(f));
    for (double& v : x) v /= N;
    const double mean = mean_of<double>(x);
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double se = std::sqrt(ss / (x.size() - 1) / x.size());
    const double limit = limiting_moment_mean(K, cs);
    const double zscore = (mean - limit) / se;
    c.metric("K" + std::to_string(K) + "_mean", mean);
    c.metric("K" + std::to_string(K) + "_limit", limit);
    c.metric("K" + std::to_string(K) + "_z", zscore);
    c.require(std::abs(zscore) <= 3.0,
              "K=" + std::to_string(K) + " off by " + num(zscore) + " SE");
  }
}

void moment_clt(Check& c, const AcceptanceOptions& o) {
  const EnsembleSpec spec = EnsembleSpec::erdos_renyi(2.0);
  const int N = 400;
  const SampleTable t = run_replicas(
      experiment(spec, {N}, 2000, Statistic::moments({3}), seed_for(o, 5), o.threads));
  const std::vector<double> raw = real_parts(t.blocks[0].column(0));
  const std::vector<double> z = centered_statistic(raw, Normalization::SqrtN, N);
  double var = 0.0;
  for (double v : z) var += v * v;
  var /= static_cast<double>(z.size() - 1);
  const double predicted = limiting_moment_covariance(3, 3, spec.c_sequence(3));
  c.metric("empirical_variance", var);
  c.metric("predicted_variance", predicted);
  c.require(std::abs(var - predicted) <= 0.1 * std::abs(predicted),
            "variance " + num(var) + " not within 10% of " + num(predicted));
  try {
    const GaussianityReport g = gaussianity_report(z, predicted, seed_for(o, 5));
    c.metric("ks_p_value", g.p_value);
    c.metric("excess_kurtosis", g.excess_kurtosis);
    c.metric("excess_kurtosis_se", g.excess_kurtosis_se);
    c.require(g.p_value > 0.01, "standardized KS p = " + num(g.p_value));
  } catch (const DomainError& e) {
    c.require(false, std::string("standardized KS impossible: ") + e.what());
  }
}

void sqrt_n_scaling(Check& c, const AcceptanceOptions& o) {
  const std::vector<int> dims{200, 400, 800, 1600};
  const ScalingFit er = variance_scaling(
      experiment(EnsembleSpec::erdos_renyi(1.0), dims, 1000, Statistic::moments({3}),
                 seed_for(o, 6), o.threads));
  c.metric("er_slope", er.slope);
  c.metric("er_ci_low", er.ci_low);
  c.metric("er_ci_high", er.ci_high);
  for (std::size_t i = 0; i < er.dims.size(); ++i)
    c.metric("er_var_N" + std::to_string(er.dims[i]), er.variances[i]);
  c.require(er.slope >= 0.8 && er.slope <= 1.2, "ER slope " + num(er.slope) + " outside [0.8, 1.2]");

  const ScalingFit wig = variance_scaling(
      experiment(EnsembleSpec::wigner(EntryLaw::Gaussian), dims, 1000,
                 Statistic::resolvent({cplx{0.0, 2.0}}), seed_for(o, 6) + 77, o.threads));
  c.metric("wigner_slope", wig.slope);
  c.metric("wigner_ci_low", wig.ci_low);
  c.metric("wigner_ci_high", wig.ci_high);
  c.require(wig.slope >= -0.3 && wig.slope <= 0.3,
            "Wigner slope " + num(wig.slope) + " outside [-0.3, 0.3]");
}

void rho_consistency(Check& c, const AcceptanceOptions& o) {
  const EnsembleSpec spec = EnsembleSpec::erdos_renyi(1.0);
  const cplx z{0.0, 2.0};
  const RhoGrid rho = solve_rho(z, KernelSpec::from(spec));
  const std::vector<double> ts{0.5, 1.0, 2.0};
  const auto emp = empirical_rho(z, ts, spec, 2000, 20, seed_for(o, 7));
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double d = std::abs(rho.at(ts[i]) - emp[i].value);
    c.metric("t" + num(ts[i]) + "_solver", rho.at(ts[i]));
    c.metric("t" + num(ts[i]) + "_empirical", emp[i].value);
    c.require(d < 5e-2, "t=" + num(ts[i]) + " differs by " + num(d));
  }
}

void stieltjes_mc(Check& c, const AcceptanceOptions& o) {
  const EnsembleSpec spec = EnsembleSpec::erdos_renyi(1.0);
  const std::vector<cplx> zs{{0.0, 2.0}, {1.0, 1.0}};
  const int N = 4000;
  const SampleTable t = run_replicas(
      experiment(spec, {N}, 10, Statistic::resolvent(zs), seed_for(o, 8), o.threads));
  const KernelSpec k = KernelSpec::from(spec);
  for (std::size_t f = 0; f < zs.size(); ++f) {
    const std::vector<cplx> col = t.blocks[0].column(f);
    const cplx mc = mean_of<cplx>(col) / static_cast<double>(N);
    const cplx s = stieltjes_limit(zs[f], solve_rho(zs[f], k));
    c.metric("z" + num(zs[f]) + "_solver", s);
    c.metric("z" + num(zs[f]) + "_monte_carlo", mc);
    c.require(std::abs(s - mc) < 5e-2, "z=" + num(zs[f]) + " differs by " + num(std::abs(s - mc)));
  }
}

void pair_marginal(Check& c, const AcceptanceOptions&) {
  const EnsembleSpec spec = EnsembleSpec::erdos_renyi(1.0);
  const PairMeasureSpec pair = PairMeasureSpec::from(spec);
  const cplx z{0.0, 2.0};
  const SolverOptions so = CovarianceOptions{}.solver;
  const RhoSolver solver(pair.kernel, so, so.t_max_factor / z.imag());
  const RhoGrid rz = solver.solve(z);
  const RhoGrid reference = solver.solve(z);
  double worst = 0.0;
  for (double u : {0.0, 0.5, 1.0}) {
    const RhoSurface s = solve_rho_pair(z, z, u, pair, rz, rz, so);
    for (double t : {0.1, 0.5, 1.0, 2.0, 5.0})
      worst = std::max(worst, std::abs(s.at(t, 0.0) - reference.at(t)));
    c.metric("u" + num(u) + "_iterations", static_cast<double>(s.iterations));
  }
  c.metric("max_deviation", worst);
  c.require(worst <= 2.0 * so.tol, "marginal deviation " + num(worst) + " > 2 tol");
}

void stieltjes_covariance(Check& c, const AcceptanceOptions& o) {
  const EnsembleSpec spec = EnsembleSpec::erdos_renyi(1.0);
  const cplx z{0.0, 2.0};
  const int N = 1000;
  const SampleTable t = run_replicas(
      experiment(spec, {N}, 2000, Statistic::resolvent({z}), seed_for(o, 10), o.threads));
  ReportOptions ro;
  ro.bootstrap = 200;
  ro.gaussianity = false;
  ro.seed = seed_for(o, 10);
  const StatReport rep = summarize(t, ro);
  const BlockReport& b = rep.blocks[0];
  const cplx emp = b.pseudo_covariance[0][0];
  const double se_re = b.pseudo_covariance_se_re[0][0];
  const double se_im = b.pseudo_covariance_se_im[0][0];
  const CovarianceResult cov = covariance_C(z, z, spec);
  c.metric("covariance_C", cov.value);
  c.metric("u_quadrature_error", cov.u_error);
  c.metric("L_pair", cov.l_pair);
  c.metric("L", cov.l_z);
  c.metric("empirical", emp);
  c.metric("bootstrap_se_re", se_re);
  c.metric("bootstrap_se_im", se_im);
  c.metric("empirical_var_re", b.covariance[0][0]);
  c.metric("empirical_var_im", b.covariance[1][1]);
  c.metric("empirical_cov_re_im", b.covariance[0][1]);
  c.require(std::abs(cov.value.real() - emp.real()) <= 3.0 * se_re,
            "real part differs by " + num(std::abs(cov.value.real() - emp.real()) / se_re) + " SE");
  c.require(std::abs(cov.value.imag() - emp.imag()) <= 3.0 * se_im,
            "imaginary part differs by " + num(std::abs(cov.value.imag() - emp.imag()) / se_im) +
                " SE");
}

void levy_properties(Check& c, const AcceptanceOptions& o) {
  const EnsembleSpec spec = EnsembleSpec::levy(1.5);
  // (a) entry exponent
  for (cplx lambda : {cplx{1.0, 0.0}, cplx{0.0, -2.0}}) {
    const ComplexEstimate e = empirical_phi(spec, 10000, lambda, 1000000, seed_for(o, 11));
    const cplx limit = phi_limit(spec, lambda);
    c.metric("phi" + num(lambda) + "_empirical", e.value);
    c.metric("phi" + num(lambda) + "_limit", limit);
    c.metric("phi" + num(lambda) + "_se_re", e.se_re);
    c.metric("phi" + num(lambda) + "_se_im", e.se_im);
    const bool ok_re = std::abs(e.value.real() - limit.real()) <= 3.0 * std::max(e.se_re, 1e-300);
    const bool ok_im = std::abs(e.value.imag() - limit.imag()) <= 3.0 * std::max(e.se_im, 1e-300);
    c.require(ok_re && ok_im, "phi at lambda=" + num(lambda) + " outside 3 SE");
  }
  // (b) homogeneity
  const SolverOptions so;
  const RhoGrid rho = solve_rho({0.0, 2.0}, KernelSpec::from(spec), so);
  const cplx r1 = rho.at(1.0);
  double worst = 0.0;
  for (double t : {0.25, 4.0}) worst = std::max(worst, std::abs(rho.at(t) - std::pow(t, 0.75) * r1));
  c.metric("homogeneity_error", worst);
  c.require(worst < so.tol, "homogeneity error " + num(worst));
  // (c) Gaussianity of the resolvent trace
  const int N = 500;
  const SampleTable t = run_replicas(experiment(spec, {N}, 2000,
                                                Statistic::resolvent({cplx{0.0, 2.0}}),
                                                seed_for(o, 11) + 5, o.threads));
  const std::vector<cplx> zc =
      centered_statistic(std::span<const cplx>(t.blocks[0].column(0)), Normalization::SqrtN, N);
  const GaussianityReport re = gaussianity_report(real_parts(zc), std::nullopt, seed_for(o, 11));
  const GaussianityReport im =
      gaussianity_report(imag_parts(zc), std::nullopt, seed_for(o, 11) + 1);
  c.metric("ks_p_re", re.p_value);
  c.metric("ks_p_im", im.p_value);
  c.metric("fitted_var_re", re.fitted_variance);
  c.metric("fitted_var_im", im.fitted_variance);
  c.require(re.p_value > 0.01, "real part KS p = " + num(re.p_value));
  c.require(im.p_value > 0.01, "imaginary part KS p = " + num(im.p_value));
}

struct Entry {
  const char* name;
  double budget;
  void (*fn)(Check&, const AcceptanceOptions&);
};

const Entry kEntries[kCriterionCount] = {
    {"semicircle closure", 10, semicircle},
    {"Catalan moments", 5, catalan},
    {"injective-trace identity", 30, injective_identity},
    {"exploding-moment mean moments", 300, mean_moments},
    {"moment CLT", 900, moment_clt},
    {"sqrt-N variance scaling", 1200, sqrt_n_scaling},
    {"rho consistency", 300, rho_consistency},
    {"Stieltjes limit", 300, stieltjes_mc},
    {"pair/marginal consistency", 120, pair_marginal},
    {"Stieltjes covariance", 3600, stieltjes_covariance},
    {"Levy properties", 1200, levy_properties},
};

void dump_diagnostics(const CriterionResult& r, const AcceptanceOptions& o) {
  nlohmann::json j;
  j["criterion"] = r.id;
  j["name"] = r.name;
  j["detail"] = r.detail;
  for (const auto& [k, v] : r.metrics) j["metrics"][k] = v;
  std::error_code ec;
  std::filesystem::create_directories(o.dump_dir, ec);
  std::ofstream(std::filesystem::path(o.dump_dir) /
                ("criterion" + std::to_string(r.id) + "_diagnostics.json"))
      << j.dump(2) << '\n';
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "PASS";
    case Verdict::Fail:
      return "FAIL";
    case Verdict::Warn:
      return "WARN";
    case Verdict::Skip:
      return "SKIP";
  }
  return "?";
}

CriterionResult run_criterion(int id, const AcceptanceOptions& opts) {
  if (id < 1 || id > kCriterionCount) throw ConfigError("no criterion " + std::to_string(id));
  const Entry& e = kEntries[id - 1];
  CriterionResult r;
  r.id = id;
  r.name = e.name;
  r.budget_seconds = e.budget;
  if (id == 10 && !opts.long_running) {
    r.verdict = Verdict::Skip;
    r.detail = "long-running criterion disabled";
    return r;
  }
  Check c{r, true, {}};
  const auto start = std::chrono::steady_clock::now();
  try {
    e.fn(c, opts);
  } catch (const std::exception& ex) {
    c.require(false, std::string("exception: ") + ex.what());
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.require(r.seconds <= e.budget, "runtime " + num(r.seconds) + " s over budget " + num(e.budget));
  if (c.ok) {
    r.verdict = Verdict::Pass;
  } else {
    std::ostringstream os;
    for (std::size_t i = 0; i < c.failures.size(); ++i) os << (i ? "; " : "") << c.failures[i];
    r.detail = os.str();
    // no finite-N rate is known for this one, so a miss is reported, not fatal
    r.verdict = id == 10 ? Verdict::Warn : Verdict::Fail;
    if (id == 10) dump_diagnostics(r, opts);
  }
  if (r.detail.empty()) {
    std::ostringstream os;
    for (std::size_t i = 0; i < r.metrics.size() && i < 4; ++i)
      os << (i ? ", " : "") << r.metrics[i].first << '=' << r.metrics[i].second;
    r.detail = os.str();
  }
  return r;
}

std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& opts, const std::function<void(const CriterionResult&)>& on_result) {
  std::vector<CriterionResult> out;
  for (int id = 1; id <= kCriterionCount; ++id) {
    if (!opts.only.empty() && !opts.only.count(id)) continue;
    out.push_back(run_criterion(id, opts));
    if (on_result) on_result(out.back());
  }
  return out;
}

std::string format_line(const CriterionResult& r) {
  std::ostringstream os;
  os << '[' << to_string(r.verdict) << "] " << r.id << ' ' << r.name;
  os.precision(3);
  os << " (" << std::fixed << r.seconds << " s): " << r.detail;
  return os.str();
}

std::string results_json(const std::vector<CriterionResult>& results) {
  nlohmann::json j = nlohmann::json::array();
  for (const CriterionResult& r : results) {
    nlohmann::json e;
    e["id"] = r.id;
    e["name"] = r.name;
    e["verdict"] = to_string(r.verdict);
    e["seconds"] = r.seconds;
    e["budget_seconds"] = r.budget_seconds;
    e["detail"] = r.detail;
    for (const auto& [k, v] : r.metrics) e["metrics"][k] = v;
    j.push_back(std::move(e));
  }
  return j.dump(2);
}

}  // namespace htclt
