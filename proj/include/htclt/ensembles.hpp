#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace htclt {

using cplx = std::complex<double>;

enum class Family { Levy, ExplodingMoments, ErdosRenyi, StandardWigner };
enum class EntryLaw { Rademacher, Gaussian };
enum class DiagonalPolicy { SameLaw, Zero };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

/// Atom of the moment measure m = Σ w δ_x on [0, ∞).
struct Atom {
  double x = 0.0;
  double w = 0.0;
};

/// Limits C_k = lim N E[a^{2k}], stored C[0] = C_1.
using CSequence = std::vector<double>;

/// Which matrix family to sample and with which parameters.
struct EnsembleSpec {
  Family family = Family::StandardWigner;
  double alpha = 1.0;              // Levy
  double p = 1.0;                  // ErdosRenyi
  std::vector<Atom> moment_measure; // ExplodingMoments
  EntryLaw entry_law = EntryLaw::Rademacher;  // StandardWigner
  bool recenter = true;
  DiagonalPolicy diagonal = DiagonalPolicy::SameLaw;

  static EnsembleSpec levy(double alpha);
  static EnsembleSpec exploding(std::vector<Atom> measure);
  static EnsembleSpec erdos_renyi(double p, bool recenter = true);
  static EnsembleSpec wigner(EntryLaw law = EntryLaw::Rademacher);

  /// Throws ConfigError when the parameters violate the family invariants.
  void validate() const;

  /// Tail constant of the Lévy exponent, Γ(1 − α/2) for unit Pareto tails.
  double levy_sigma() const;

  /// Moment measure m with C_{k+1} = ∫ x^k dm. ER gives pδ_1, Wigner δ_0.
  std::vector<Atom> effective_measure() const;

  /// C_1..C_kmax from the moment measure. Not defined for Levy.
  CSequence c_sequence(int kmax) const;

  /// Checks that entry probabilities are at most one at dimension N.
  void validate_dimension(int N) const;
};

/// Real symmetric matrix with packed lower-triangular storage.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  SymmetricMatrix(int n, std::uint64_t seed = 0);

  int dim() const noexcept { return n_; }
  std::uint64_t seed() const noexcept { return seed_; }

  double operator()(int i, int j) const noexcept {
    return i >= j ? data_[index(i, j)] : data_[index(j, i)];
  }
  void set(int i, int j, double v) noexcept {
    if (i >= j)
      data_[index(i, j)] = v;
    else
      data_[index(j, i)] = v;
  }

  Eigen::MatrixXd dense() const;
  static SymmetricMatrix from_dense(const Eigen::MatrixXd& m, std::uint64_t seed = 0);

  /// Copy with row/column k removed.
  SymmetricMatrix minor(int k) const;

  const std::vector<double>& packed() const noexcept { return data_; }

 private:
  static std::size_t index(int i, int j) noexcept {
    return static_cast<std::size_t>(i) * (static_cast<std::size_t>(i) + 1) / 2 +
           static_cast<std::size_t>(j);
  }

  int n_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<double> data_;
};

/// Largest dimension sample_matrix accepts.
inline constexpr int kMaxDimension = 12000;

/// Draws one sub-diagonal entry a of the family at dimension N.
double draw_entry(const EnsembleSpec& spec, int N, std::mt19937_64& rng);

SymmetricMatrix sample_matrix(const EnsembleSpec& spec, int N, std::uint64_t seed);

/// Limit Φ(λ) of N(E[exp(−iλa²)] − 1), defined for Im λ ≤ 0.
cplx phi_limit(const EnsembleSpec& spec, cplx lambda);

struct ComplexEstimate {
  cplx value;
  double se_re = 0.0;
  double se_im = 0.0;
};

/// Monte Carlo N(E[e^{−iλa²}] − 1) from M entry draws with jackknife errors.
ComplexEstimate empirical_phi(const EnsembleSpec& spec, int N, cplx lambda, int M,
                              std::uint64_t seed);

}  // namespace htclt
