#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "htclt/ensembles.hpp"
#include "htclt/errors.hpp"

using namespace htclt;

namespace {

constexpr cplx I{0.0, 1.0};

// N ∫_1^∞ (e^{-2 x²/a_N²} − 1) α x^{−α−1} dx, the finite-N exponent at λ = −2i.
double levy_phi_finite_n(double alpha, int N) {
  const double aN = std::pow(static_cast<double>(N), 1.0 / alpha);
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [&](double s) {
    const double x = 1.0 + s;
    return std::expm1(-2.0 * x * x / (aN * aN)) * alpha * std::pow(x, -alpha - 1.0);
  };
  return N * integrator.integrate(f);
}

}  // namespace

TEST_CASE("Rademacher Wigner entries are +-1/sqrt(N)") {
  const SymmetricMatrix a = sample_matrix(EnsembleSpec::wigner(), 2, 11);
  CHECK(std::abs(std::abs(a(0, 1)) - 1.0 / std::sqrt(2.0)) < 1e-15);
}

TEST_CASE("sparse graph edge density matches p/N") {
  const int N = 1000;
  const SymmetricMatrix a = sample_matrix(EnsembleSpec::erdos_renyi(1.0, false), N, 5);
  double nonzero = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < i; ++j) nonzero += a(i, j) != 0.0;
  const double pairs = N * (N - 1) / 2.0, q = 1.0 / N;
  const double se = std::sqrt(pairs * q * (1 - q));
  CHECK(std::abs(nonzero - pairs * q) < 3 * se);
}

TEST_CASE("heavy tails produce large entries") {
  const EnsembleSpec spec = EnsembleSpec::levy(1.0);
  double biggest = 0.0;
  for (int r = 0; r < 200; ++r) {
    const SymmetricMatrix a = sample_matrix(spec, 100, 1000 + r);
    for (double v : a.packed()) biggest = std::max(biggest, std::abs(v));
  }
  CHECK(biggest > 5.0);
}

TEST_CASE("sampling is deterministic and symmetric") {
  for (const EnsembleSpec& spec :
       {EnsembleSpec::wigner(), EnsembleSpec::wigner(EntryLaw::Gaussian), EnsembleSpec::levy(1.3),
        EnsembleSpec::erdos_renyi(2.0), EnsembleSpec::exploding({{1.0, 0.5}, {4.0, 1.0}, {0.0, 0.3}})}) {
    const SymmetricMatrix a = sample_matrix(spec, 30, 99), b = sample_matrix(spec, 30, 99);
    CHECK(a.packed() == b.packed());
    const Eigen::MatrixXd d = a.dense();
    CHECK((d - d.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("diagonal policy zero clears the diagonal only") {
  EnsembleSpec spec = EnsembleSpec::wigner();
  const SymmetricMatrix same = sample_matrix(spec, 6, 3);
  spec.diagonal = DiagonalPolicy::Zero;
  const SymmetricMatrix zero = sample_matrix(spec, 6, 3);
  for (int i = 0; i < 6; ++i) {
    CHECK(zero(i, i) == 0.0);
    for (int j = 0; j < i; ++j) CHECK(zero(i, j) == same(i, j));
  }
}

TEST_CASE("recentered entries have mean zero") {
  std::mt19937_64 rng(17);
  for (const EnsembleSpec& spec : {EnsembleSpec::erdos_renyi(3.0), EnsembleSpec::exploding({{2.0, 1.0}})}) {
    const int M = 400000, N = 20;
    double sum = 0.0, sq = 0.0;
    for (int m = 0; m < M; ++m) {
      const double x = draw_entry(spec, N, rng);
      sum += x;
      sq += x * x;
    }
    const double mean = sum / M, se = std::sqrt((sq / M - mean * mean) / M);
    CHECK(std::abs(mean) < 4 * se);
  }
}

TEST_CASE("entry moments match the moment measure") {
  // N E[a^{2k}] = Σ w x^{k−1} for the uncentred sampler
  const std::vector<Atom> m{{1.0, 0.5}, {3.0, 0.25}};
  const EnsembleSpec spec = EnsembleSpec::exploding(m);
  std::mt19937_64 rng(8);
  const int N = 50, M = 2000000;
  std::vector<double> acc(5, 0.0);
  for (int s = 0; s < M; ++s) {
    const double a2 = std::pow(draw_entry(spec, N, rng), 2);
    for (int k = 1; k <= 4; ++k) acc[k] += std::pow(a2, k);
  }
  for (int k = 1; k <= 4; ++k) {
    double expect = 0.0;
    for (const Atom& at : m) expect += at.w * std::pow(at.x, k - 1);
    // the atom 3 draws dominate; allow 4 binomial standard errors
    const double est = N * acc[k] / M;
    const double rel_se = std::sqrt(N / (0.25 / 3.0) / M);
    CHECK(std::abs(est - expect) < 4 * rel_se * expect + 1e-12);
  }
  const CSequence c = spec.c_sequence(4);
  CHECK(c[0] == doctest::Approx(0.75));
  CHECK(c[1] == doctest::Approx(0.5 + 0.75));
  CHECK(c[3] == doctest::Approx(0.5 + 0.25 * 27.0));
}

TEST_CASE("limiting exponent values") {
  CHECK(phi_limit(EnsembleSpec::erdos_renyi(2.0), 0.0) == cplx(0.0));
  const cplx er = phi_limit(EnsembleSpec::erdos_renyi(1.0), std::numbers::pi);
  CHECK(er.real() == doctest::Approx(-2.0));
  CHECK(std::abs(er.imag()) < 1e-15);
  const cplx w = phi_limit(EnsembleSpec::wigner(), cplx(0.0, -3.0));
  CHECK(w.real() == doctest::Approx(-3.0));
  CHECK(w.imag() == doctest::Approx(0.0));
}

TEST_CASE("limiting exponent has non-positive real part on the closed lower half plane") {
  for (const EnsembleSpec& spec :
       {EnsembleSpec::wigner(), EnsembleSpec::levy(0.5), EnsembleSpec::levy(1.7),
        EnsembleSpec::erdos_renyi(2.5), EnsembleSpec::exploding({{0.0, 1.0}, {2.0, 0.5}})})
    for (double re = -5.0; re <= 5.0; re += 0.5)
      for (double im : {0.0, -0.1, -1.0, -4.0}) {
        CAPTURE(re);
        CAPTURE(im);
        CHECK(phi_limit(spec, cplx(re, im)).real() <= 1e-14);
      }
  CHECK_THROWS_AS(phi_limit(EnsembleSpec::wigner(), cplx(0.0, 1.0)), DomainError);
}

TEST_CASE("empirical exponent at zero is exactly zero") {
  const ComplexEstimate e = empirical_phi(EnsembleSpec::levy(1.2), 100, 0.0, 1000, 1);
  CHECK(e.value == cplx(0.0));
  CHECK(e.se_re == 0.0);
  CHECK(e.se_im == 0.0);
}

TEST_CASE("empirical exponent of the sparse graph") {
  const ComplexEstimate e =
      empirical_phi(EnsembleSpec::erdos_renyi(1.0, false), 10000, 1.0, 1000000, 2024);
  const cplx expect = std::exp(-I) - 1.0;
  CHECK(std::abs(e.value.real() - expect.real()) < 3 * e.se_re);
  CHECK(std::abs(e.value.imag() - expect.imag()) < 3 * e.se_im);
}

TEST_CASE("empirical Levy exponent against the finite-N integral and the limit") {
  const EnsembleSpec spec = EnsembleSpec::levy(1.5);
  const int N = 10000;
  const ComplexEstimate e = empirical_phi(spec, N, cplx(0.0, -2.0), 1000000, 77);
  const double finite = levy_phi_finite_n(1.5, N);
  const double limit = phi_limit(spec, cplx(0.0, -2.0)).real();
  CHECK(std::abs(e.value.real() - finite) < 3 * e.se_re);
  CHECK(std::abs(e.value.imag()) < 1e-12);
  CHECK(std::abs(e.value.real() - limit) < 3 * e.se_re);
  // the Pareto law has no mass on (0, 1): leading bias |λ| α/(2 − α) N^{1−2/α}
  const double bias = 2.0 * 1.5 / (2.0 - 1.5) * std::pow(N, 1.0 - 2.0 / 1.5);
  CHECK(finite - limit == doctest::Approx(bias).epsilon(1e-3));
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS_AS(EnsembleSpec::levy(2.0).validate(), ConfigError);
  CHECK_THROWS_AS(EnsembleSpec::levy(0.0).validate(), ConfigError);
  CHECK_THROWS_AS(EnsembleSpec::exploding({{-1.0, 1.0}}).validate(), ConfigError);
  CHECK_THROWS_AS(EnsembleSpec::exploding({{1.0, 0.0}}).validate(), ConfigError);
  CHECK_THROWS_AS(EnsembleSpec::erdos_renyi(0.0).validate(), ConfigError);
  CHECK_THROWS_AS(sample_matrix(EnsembleSpec::erdos_renyi(5.0), 3, 1), ConfigError);
  CHECK_THROWS_AS(sample_matrix(EnsembleSpec::wigner(), 1, 1), ConfigError);
  CHECK_THROWS_AS(family_from_string("gue"), ConfigError);
}
