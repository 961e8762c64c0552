#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "htclt/combinatorics.hpp"
#include "htclt/ensembles.hpp"
#include "htclt/errors.hpp"
#include "htclt/fixedpoint.hpp"

using namespace htclt;

namespace {

constexpr cplx I{0.0, 1.0};

cplx semicircle(cplx z) {
  // root of s² − zs + 1 = 0 with Im s < 0 for Im z > 0
  cplx s = (z - std::sqrt(z * z - 4.0)) / 2.0;
  if (s.imag() * z.imag() > 0) s = (z + std::sqrt(z * z - 4.0)) / 2.0;
  return s;
}

// ∫_0^∞ g(y) e^{iy/x} dy
cplx laplace_of_kernel(const KernelSpec& k, cplx x) {
  boost::math::quadrature::exp_sinh<double> integrator;
  const cplx w = I / x;
  auto re = [&](double y) { return (kernel_g(k, y) * std::exp(w * y)).real(); };
  auto im = [&](double y) { return (kernel_g(k, y) * std::exp(w * y)).imag(); };
  return {integrator.integrate(re), integrator.integrate(im)};
}

// J_1(2√v)/√v from its power series
double bessel_ratio_series(double v) {
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    term *= -v / (k * (k + 1.0));
    sum += term;
  }
  return sum;
}

CovarianceOptions quick_covariance() {
  CovarianceOptions o;
  o.estimate_u_error = false;
  return o;
}

}  // namespace

TEST_CASE("kernel values") {
  const KernelSpec w = KernelSpec::from(EnsembleSpec::wigner());
  for (double y : {0.01, 1.0, 30.0}) CHECK(kernel_g(w, y) == cplx(-1.0));
  const KernelSpec er = KernelSpec::from(EnsembleSpec::erdos_renyi(1.0));
  CHECK(std::abs(kernel_g(er, 1e-12) + 1.0) < 1e-10);
  for (double v : {0.1, 0.9, 3.0, 12.0}) CHECK(kernel_g(er, v).real() == doctest::Approx(-bessel_ratio_series(v)).epsilon(1e-10));
  const KernelSpec levy = KernelSpec::from(EnsembleSpec::levy(1.0));
  CHECK(std::abs(kernel_g(levy, 1.0) + 1.0) < 1e-12);
}

TEST_CASE("kernel transforms back to the limiting exponent") {
  for (const EnsembleSpec& spec :
       {EnsembleSpec::wigner(), EnsembleSpec::erdos_renyi(1.0), EnsembleSpec::levy(1.0),
        EnsembleSpec::levy(1.5), EnsembleSpec::exploding({{0.5, 0.7}, {2.0, 0.3}})}) {
    const KernelSpec k = KernelSpec::from(spec);
    for (cplx x : {cplx(1.0, -2.0), cplx(-0.5, -1.0), cplx(0.0, -3.0)}) {
      CAPTURE(to_string(spec.family));
      CAPTURE(x);
      CHECK(std::abs(laplace_of_kernel(k, x) - phi_limit(spec, x)) < 1e-6);
    }
  }
}

TEST_CASE("Wigner fixed point is linear and closes the semicircle equation") {
  const KernelSpec k = KernelSpec::from(EnsembleSpec::wigner());
  const cplx z = 2.0 * I;
  const RhoGrid rho = solve_rho(z, k);
  const cplx s = stieltjes_limit(z, rho);
  CHECK(std::abs(s - cplx(0.0, -0.41421356)) < 1e-6);
  CHECK(std::abs(s - 1.0 / (z - s)) < 1e-6);
  for (std::size_t i = 0; i < rho.t.size(); i += 17)
    CHECK(std::abs(rho.values[i] / rho.t[i] + I * s) < 1e-6);
  for (cplx w : {cplx(-1.5, 0.7), cplx(0.4, 1.0), cplx(2.5, 3.0)})
    CHECK(std::abs(stieltjes_limit(w, solve_rho(w, k)) - semicircle(w)) < 1e-6);
}

TEST_CASE("fixed point invariants") {
  for (const EnsembleSpec& spec :
       {EnsembleSpec::erdos_renyi(1.0), EnsembleSpec::levy(0.8), EnsembleSpec::levy(1.5),
        EnsembleSpec::exploding({{0.0, 0.5}, {3.0, 0.5}})}) {
    for (cplx z : {cplx(0.0, 2.0), cplx(1.0, 0.5)}) {
      const SolverOptions opts;
      const RhoGrid rho = solve_rho(z, KernelSpec::from(spec), opts);
      CAPTURE(to_string(spec.family));
      CAPTURE(z);
      for (cplx v : rho.values) CHECK(v.real() <= 1e-9);
      CHECK(rho.fixed_point_residual() < opts.tol);
      // ρ vanishes at 0, like t^{α/2} for Levy and like t otherwise
      const double rate = spec.family == Family::Levy ? spec.alpha / 2 : 1.0;
      CHECK(std::abs(rho.at(1e-12)) < 10.0 * std::pow(1e-12, rate) * std::max(1.0, std::abs(rho.at(1.0))));
      CHECK(rho.t.front() == doctest::Approx(opts.t_min));
      CHECK(rho.t.back() == doctest::Approx(opts.t_max_factor / z.imag()));
    }
  }
}

TEST_CASE("Stieltjes limit decays like 1/z") {
  const cplx z{0.0, 60.0};
  for (const EnsembleSpec& spec : {EnsembleSpec::erdos_renyi(1.0), EnsembleSpec::levy(1.2)}) {
    const cplx s = stieltjes_limit(z, solve_rho(z, KernelSpec::from(spec)));
    CHECK(std::abs(s * z - 1.0) < 0.02);
  }
}

TEST_CASE("Levy fixed point is homogeneous in t") {
  const double alpha = 1.3;
  const KernelSpec k = KernelSpec::from(EnsembleSpec::levy(alpha));
  const RhoGrid rho = solve_rho(cplx(0.5, 1.0), k);
  const cplx one = rho.at(1.0);
  for (double t : {0.25, 4.0}) CHECK(std::abs(rho.at(t) - std::pow(t, alpha / 2) * one) < 1e-8);
}

TEST_CASE("Stieltjes limit of a symmetric law is odd under reflection") {
  // s(−z̄) = −conj s(z) since the limiting spectrum is symmetric
  for (const EnsembleSpec& spec : {EnsembleSpec::erdos_renyi(2.0), EnsembleSpec::levy(1.1)}) {
    const KernelSpec k = KernelSpec::from(spec);
    const cplx z{0.7, 1.0};
    const cplx right = stieltjes_limit(z, solve_rho(z, k));
    const cplx left = stieltjes_limit(-std::conj(z), solve_rho(-std::conj(z), k));
    CHECK(std::abs(left + std::conj(right)) < 1e-8);
  }
  CHECK_THROWS_AS(solve_rho(cplx(0.0, -1.0), KernelSpec::from(EnsembleSpec::wigner())), DomainError);
}

TEST_CASE("solver reports non-convergence") {
  SolverOptions opts;
  opts.max_iterations = 2;
  CHECK_THROWS_AS(solve_rho(cplx(0.0, 0.3), KernelSpec::from(EnsembleSpec::erdos_renyi(1.0)), opts),
                  SolverError);
}

TEST_CASE("differentiated equation agrees with finite differences") {
  const KernelSpec k = KernelSpec::from(EnsembleSpec::erdos_renyi(1.0));
  SolverOptions opts;
  opts.tol = 1e-12;
  const RhoSolver solver(k, opts, opts.t_max_factor / 1.5);
  const cplx z{0.3, 1.5};
  const double h = 1e-4;
  const auto d = solver.derivative(solver.solve(z));
  const auto up = solver.solve(z + h).node_values, down = solver.solve(z - h).node_values;
  double worst = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) worst = std::max(worst, std::abs(d[i] - (up[i] - down[i]) / (2 * h)));
  CHECK(worst < 1e-6);
}

TEST_CASE("Wigner L has the closed form") {
  const KernelSpec k = KernelSpec::from(EnsembleSpec::wigner());
  for (cplx z : {cplx(0.0, 2.0), cplx(1.0, 1.0), cplx(-0.5, -1.5)}) {
    const cplx s = semicircle(z);
    // differentiating s = 1/(z − s) gives s' = −s²/(1 − s²)
    const cplx ds = -s * s / (1.0 - s * s);
    CHECK(std::abs(ds - (semicircle(z + 1e-5) - semicircle(z - 1e-5)) / 2e-5) < 1e-8);
    CHECK(std::abs(L_of_z(z, k) + (1.0 - ds) * s) < 1e-5);
  }
  // L(z) = −1/z + O(|z|^{-3})
  for (double y : {10.0, 20.0, 40.0}) {
    const cplx z{0.0, y};
    CHECK(std::abs(L_of_z(z, k) + 1.0 / z) * y * y < 2.0);
  }
}

TEST_CASE("pair surface collapses to the marginal and is additive for Wigner") {
  const SolverOptions opts;
  {
    const EnsembleSpec spec = EnsembleSpec::erdos_renyi(1.0);
    const PairMeasureSpec pm = PairMeasureSpec::from(spec);
    const cplx z{0.0, 2.0}, zp{0.5, 1.0};
    const RhoSolver solver(pm.kernel, opts, opts.t_max_factor / 1.0);
    const RhoGrid rz = solver.solve(z), rzp = solver.solve(zp);
    for (double u : {0.0, 0.5, 1.0}) {
      const RhoSurface surf = solve_rho_pair(z, zp, u, pm, rz, rzp, opts);
      for (cplx v : surf.combined().reshaped()) CHECK(v.real() <= 1e-9);
      for (double t : {0.3, 1.0, 3.0}) CHECK(std::abs(surf.at(t, 0.0) - rz.at(t)) < 2 * opts.tol);
    }
  }
  {
    const PairMeasureSpec pm = PairMeasureSpec::from(EnsembleSpec::wigner());
    const cplx z{0.0, 2.0}, zp{1.0, 1.0};
    const RhoSolver solver(pm.kernel, opts, opts.t_max_factor / 1.0);
    const RhoGrid rz = solver.solve(z), rzp = solver.solve(zp);
    const RhoSurface surf = solve_rho_pair(z, zp, 0.5, pm, rz, rzp, opts);
    const cplx s = semicircle(z), sp = semicircle(zp);
    for (double t : {0.5, 1.0, 2.0})
      for (double tp : {0.5, 1.5}) CHECK(std::abs(surf.at(t, tp) - (-I * t * s - I * tp * sp)) < 1e-6);
  }
  CHECK_THROWS_AS(PairMeasureSpec::from(EnsembleSpec::levy(1.0)), UnsupportedFamilyError);
}

TEST_CASE("Wigner covariance vanishes") {
  const CovarianceResult c = covariance_C(cplx(0.0, 2.0), cplx(1.0, 1.0), EnsembleSpec::wigner(), quick_covariance());
  CHECK(std::abs(c.value) < 1e-4);
}

TEST_CASE("covariance matches the combinatorial series far from the axis") {
  // E[Z(z)Z(z')] = Σ cov(K1, K2) z^{−K1−1} z'^{−K2−1} at large |z|
  const EnsembleSpec spec = EnsembleSpec::erdos_renyi(1.0);
  const cplx z{0.0, 10.0};
  const CSequence c = spec.c_sequence(14);
  cplx series = 0.0;
  for (int a = 1; a <= 7; ++a)
    for (int b = 1; b <= 7; ++b)
      series += limiting_moment_covariance(a, b, c) / (std::pow(z, a + 1) * std::pow(z, b + 1));
  const CovarianceResult r = covariance_C(z, z, spec, quick_covariance());
  CHECK(std::abs(r.value - series) < 2e-3 * std::abs(series));
}

TEST_CASE("covariance is symmetric and positive semidefinite") {
  const EnsembleSpec spec = EnsembleSpec::erdos_renyi(1.0);
  const cplx z{0.5, 1.5}, w{-1.0, 2.0};
  const cplx czw = covariance_C(z, w, spec, quick_covariance()).value;
  const cplx cwz = covariance_C(w, z, spec, quick_covariance()).value;
  CHECK(std::abs(czw - cwz) < 1e-6 * std::max(1.0, std::abs(czw)));
  // Var Re Z = ½ Re(E[ZZ] + E[ZZ̄]), Var Im Z = ½ Re(E[ZZ̄] − E[ZZ])
  const cplx zz = covariance_C(z, z, spec, quick_covariance()).value;
  const cplx zzbar = covariance_C(z, std::conj(z), spec, quick_covariance()).value;
  CHECK(0.5 * (zz + zzbar).real() >= -1e-6);
  CHECK(0.5 * (zzbar - zz).real() >= -1e-6);
  CHECK(zzbar.real() > 0.0);
}

TEST_CASE("rho grid CSV") {
  const RhoGrid rho = solve_rho(cplx(0.0, 2.0), KernelSpec::from(EnsembleSpec::wigner()));
  std::ostringstream os;
  write_rho_csv(os, rho);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "# schema=1");
  std::getline(in, line);
  CHECK(line.rfind("# z=", 0) == 0);
  std::getline(in, line);
  CHECK(line == "t,re_rho,im_rho");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == static_cast<int>(rho.t.size()));
  CHECK(os.str().find('\r') == std::string::npos);
}
