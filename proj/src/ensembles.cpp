#include "htclt/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "htclt/errors.hpp"
#include "htclt/numerics.hpp"

namespace htclt {

namespace {

constexpr double kProbabilitySlack = 1e-12;

// Total probability that an exploding-moment entry lands on a nonzero atom.
double atom_mass(const std::vector<Atom>& m, int N) {
  double q = 0.0;
  for (const Atom& a : m)
    if (a.x > 0.0) q += a.w / (static_cast<double>(N) * a.x);
  return q;
}

double zero_atom_weight(const std::vector<Atom>& m) {
  double w0 = 0.0;
  for (const Atom& a : m)
    if (a.x == 0.0) w0 += a.w;
  return w0;
}

double uniform01_open_left(std::mt19937_64& rng) {
  // (0, 1]
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

double uniform01(std::mt19937_64& rng) {
  // [0, 1)
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::Levy: return "levy";
    case Family::ExplodingMoments: return "exploding_moments";
    case Family::ErdosRenyi: return "erdos_renyi";
    case Family::StandardWigner: return "standard_wigner";
  }
  return "unknown";
}

Family family_from_string(const std::string& s) {
  if (s == "levy") return Family::Levy;
  if (s == "exploding_moments") return Family::ExplodingMoments;
  if (s == "erdos_renyi") return Family::ErdosRenyi;
  if (s == "standard_wigner") return Family::StandardWigner;
  throw ConfigError("unknown ensemble family '" + s + "'");
}

EnsembleSpec EnsembleSpec::levy(double alpha) {
  EnsembleSpec s;
  s.family = Family::Levy;
  s.alpha = alpha;
  return s;
}

EnsembleSpec EnsembleSpec::exploding(std::vector<Atom> measure) {
  EnsembleSpec s;
  s.family = Family::ExplodingMoments;
  s.moment_measure = std::move(measure);
  return s;
}

EnsembleSpec EnsembleSpec::erdos_renyi(double p, bool recenter) {
  EnsembleSpec s;
  s.family = Family::ErdosRenyi;
  s.p = p;
  s.recenter = recenter;
  return s;
}

EnsembleSpec EnsembleSpec::wigner(EntryLaw law) {
  EnsembleSpec s;
  s.family = Family::StandardWigner;
  s.entry_law = law;
  return s;
}

void EnsembleSpec::validate() const {
  switch (family) {
    case Family::Levy:
      if (!(alpha > 0.0 && alpha < 2.0))
        throw ConfigError("levy: alpha must lie in (0, 2)");
      break;
    case Family::ExplodingMoments:
      if (moment_measure.empty())
        throw ConfigError("exploding_moments: moment measure is empty");
      for (const Atom& a : moment_measure) {
        if (!(a.x >= 0.0) || !std::isfinite(a.x))
          throw ConfigError("exploding_moments: atoms must be finite and >= 0");
        if (!(a.w > 0.0) || !std::isfinite(a.w))
          throw ConfigError("exploding_moments: weights must be finite and > 0");
      }
      break;
    case Family::ErdosRenyi:
      if (!(p > 0.0) || !std::isfinite(p))
        throw ConfigError("erdos_renyi: p must be positive");
      break;
    case Family::StandardWigner:
      break;
  }
}

double EnsembleSpec::levy_sigma() const {
  if (family != Family::Levy) throw ConfigError("levy_sigma: not a Levy spec");
  return std::tgamma(1.0 - alpha / 2.0);
}

std::vector<Atom> EnsembleSpec::effective_measure() const {
  switch (family) {
    case Family::ExplodingMoments: return moment_measure;
    case Family::ErdosRenyi: return {Atom{1.0, p}};
    case Family::StandardWigner: return {Atom{0.0, 1.0}};
    case Family::Levy: break;
  }
  throw ConfigError("levy matrices have no moment measure");
}

CSequence EnsembleSpec::c_sequence(int kmax) const {
  validate();
  const std::vector<Atom> m = effective_measure();
  CSequence c(static_cast<std::size_t>(std::max(kmax, 0)), 0.0);
  for (int k = 1; k <= kmax; ++k) {
    double ck = 0.0;
    for (const Atom& a : m) ck += a.w * (k == 1 ? 1.0 : std::pow(a.x, k - 1));
    c[static_cast<std::size_t>(k - 1)] = ck;
  }
  return c;
}

void EnsembleSpec::validate_dimension(int N) const {
  if (N < 2) throw ConfigError("dimension N must be at least 2");
  if (N > kMaxDimension)
    throw CapacityError("dimension " + std::to_string(N) + " exceeds the dense budget " +
                        std::to_string(kMaxDimension));
  if (family == Family::ErdosRenyi && p / N > 1.0 + kProbabilitySlack)
    throw ConfigError("erdos_renyi: edge probability p/N exceeds 1");
  if (family == Family::ExplodingMoments && atom_mass(moment_measure, N) > 1.0 + kProbabilitySlack)
    throw ConfigError("exploding_moments: atom probabilities sum above 1 at this N");
}

SymmetricMatrix::SymmetricMatrix(int n, std::uint64_t seed)
    : n_(n), seed_(seed), data_(static_cast<std::size_t>(n) * (n + 1) / 2, 0.0) {}

Eigen::MatrixXd SymmetricMatrix::dense() const {
  Eigen::MatrixXd m(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j <= i; ++j) {
      const double v = data_[index(i, j)];
      m(i, j) = v;
      m(j, i) = v;
    }
  return m;
}

SymmetricMatrix SymmetricMatrix::from_dense(const Eigen::MatrixXd& m, std::uint64_t seed) {
  if (m.rows() != m.cols()) throw ConfigError("from_dense: matrix is not square");
  SymmetricMatrix s(static_cast<int>(m.rows()), seed);
  for (int i = 0; i < s.n_; ++i)
    for (int j = 0; j <= i; ++j) s.data_[index(i, j)] = m(i, j);
  return s;
}

SymmetricMatrix SymmetricMatrix::minor(int k) const {
  if (k < 0 || k >= n_) throw DomainError("minor: index out of range");
  SymmetricMatrix out(n_ - 1, seed_);
  for (int i = 0, oi = 0; i < n_; ++i) {
    if (i == k) continue;
    for (int j = 0, oj = 0; j <= i; ++j) {
      if (j == k) continue;
      out.data_[index(oi, oj)] = data_[index(i, j)];
      ++oj;
    }
    ++oi;
  }
  return out;
}

double draw_entry(const EnsembleSpec& spec, int N, std::mt19937_64& rng) {
  const double n = static_cast<double>(N);
  switch (spec.family) {
    case Family::Levy: {
      // symmetric unit Pareto: P(|x| >= u) = u^{-alpha}, u >= 1
      const double mag = std::pow(uniform01_open_left(rng), -1.0 / spec.alpha);
      const double sign = (rng() >> 63) ? 1.0 : -1.0;
      return sign * mag / std::pow(n, 1.0 / spec.alpha);
    }
    case Family::ExplodingMoments: {
      double u = uniform01(rng);
      for (const Atom& a : spec.moment_measure) {
        if (a.x <= 0.0) continue;
        const double q = a.w / (n * a.x);
        if (u < q) {
          const double sign = (rng() >> 63) ? 1.0 : -1.0;
          return sign * std::sqrt(a.x);
        }
        u -= q;
      }
      const double w0 = zero_atom_weight(spec.moment_measure);
      if (w0 <= 0.0) return 0.0;
      const double rest = 1.0 - atom_mass(spec.moment_measure, N);
      std::normal_distribution<double> gauss(0.0, std::sqrt(w0 / (n * rest)));
      return gauss(rng);
    }
    case Family::ErdosRenyi: {
      const double q = spec.p / n;
      const double bit = uniform01(rng) < q ? 1.0 : 0.0;
      return spec.recenter ? bit - q : bit;
    }
    case Family::StandardWigner: {
      if (spec.entry_law == EntryLaw::Rademacher)
        return ((rng() >> 63) ? 1.0 : -1.0) / std::sqrt(n);
      std::normal_distribution<double> gauss(0.0, 1.0);
      return gauss(rng) / std::sqrt(n);
    }
  }
  return 0.0;
}

SymmetricMatrix sample_matrix(const EnsembleSpec& spec, int N, std::uint64_t seed) {
  spec.validate();
  spec.validate_dimension(N);
  std::mt19937_64 rng(seed);
  SymmetricMatrix a(N, seed);
  // Row-major fill of the lower triangle; the diagonal is drawn in sequence
  // either way so that off-diagonal entries do not depend on the policy.
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < i; ++j) a.set(i, j, draw_entry(spec, N, rng));
    const double d = draw_entry(spec, N, rng);
    a.set(i, i, spec.diagonal == DiagonalPolicy::SameLaw ? d : 0.0);
  }
  return a;
}

cplx phi_limit(const EnsembleSpec& spec, cplx lambda) {
  if (lambda.imag() > 0.0) throw DomainError("phi_limit: requires Im(lambda) <= 0");
  spec.validate();
  const cplx I(0.0, 1.0);
  if (lambda == cplx(0.0)) return 0.0;
  switch (spec.family) {
    case Family::Levy:
      return -spec.levy_sigma() * std::pow(I * lambda, spec.alpha / 2.0);
    case Family::ErdosRenyi:
      return spec.p * (std::exp(-I * lambda) - 1.0);
    case Family::StandardWigner:
      return -I * lambda;
    case Family::ExplodingMoments: {
      cplx acc = 0.0;
      for (const Atom& a : spec.moment_measure) {
        if (a.x == 0.0)
          acc += -I * lambda * a.w;
        else
          acc += a.w * (std::exp(-I * lambda * a.x) - 1.0) / a.x;
      }
      return acc;
    }
  }
  return 0.0;
}

ComplexEstimate empirical_phi(const EnsembleSpec& spec, int N, cplx lambda, int M,
                              std::uint64_t seed) {
  if (lambda.imag() > 0.0) throw DomainError("empirical_phi: requires Im(lambda) <= 0");
  if (M < 100) throw ConfigError("empirical_phi: need at least 100 draws");
  spec.validate();
  spec.validate_dimension(N);
  std::mt19937_64 rng(seed);
  const cplx I(0.0, 1.0);
  const double n = static_cast<double>(N);
  std::vector<double> re(static_cast<std::size_t>(M)), im(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) {
    const double a = draw_entry(spec, N, rng);
    const cplx f = n * (std::exp(-I * lambda * (a * a)) - 1.0);
    re[static_cast<std::size_t>(m)] = f.real();
    im[static_cast<std::size_t>(m)] = f.imag();
  }
  ComplexEstimate est;
  est.value = cplx(mean_of<double>(re), mean_of<double>(im));
  est.se_re = jackknife_se_mean(re);
  est.se_im = jackknife_se_mean(im);
  return est;
}

}  // namespace htclt
