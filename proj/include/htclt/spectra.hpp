#pragma once

#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "htclt/combinatorics.hpp"
#include "htclt/ensembles.hpp"

namespace htclt {

/// Eigenvalues of a dense symmetric matrix, ascending.
Eigen::VectorXd symmetric_eigenvalues(Eigen::MatrixXd a);

/// Eigenvalues ascending and orthonormal eigenvectors as columns.
void symmetric_eigensystem(Eigen::MatrixXd a, Eigen::VectorXd& values, Eigen::MatrixXd& vectors);

/// Derived spectral data of one matrix. Immutable once built.
class SpectralSample {
 public:
  /// Eigenvalues only; resolvent diagonals are unavailable.
  explicit SpectralSample(const SymmetricMatrix& a);
  /// Eigenvalues plus cached resolvent diagonals at each requested z.
  SpectralSample(const SymmetricMatrix& a, std::span<const cplx> diagonal_points);

  int dim() const noexcept { return static_cast<int>(eigenvalues_.size()); }
  const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }

  double trace_power(int K) const;
  cplx trace_resolvent(cplx z) const;
  double trace_function(const std::function<double(double)>& f) const;

  /// Cached (G(z)_jj)_j; throws DomainError when z was not requested.
  const std::vector<cplx>& resolvent_diagonal(cplx z) const;
  bool has_diagonal(cplx z) const;

 private:
  struct ZLess {
    bool operator()(cplx a, cplx b) const {
      return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
    }
  };
  std::vector<double> eigenvalues_;
  std::map<cplx, std::vector<cplx>, ZLess> diagonals_;
};

enum class TracePath { Eigenvalues, Multiplication };

/// Tr A^K, 1 <= K <= 12.
double trace_power(const SymmetricMatrix& a, int K, TracePath path = TracePath::Eigenvalues);

/// Several traces at once. The product path needs ceil(max K / 2) − 1 matrix
/// products and beats a full eigendecomposition for max K <= 6.
std::vector<double> trace_powers(const SymmetricMatrix& a, std::span<const int> orders,
                                 TracePath path = TracePath::Eigenvalues);

/// Σ_i 1/(z − λ_i).
cplx trace_resolvent(const SymmetricMatrix& a, cplx z);

/// (G(z)_jj)_j from the eigenvector expansion.
std::vector<cplx> resolvent_diagonal(const SymmetricMatrix& a, cplx z);

/// Σ_i f(λ_i).
double trace_function(const SymmetricMatrix& a, const std::function<double(double)>& f);

/// (1/N) Σ over injective labelings φ: V → [N] of Π_e A(φ(e)).
/// Requires N <= 8 and at most 5 vertices.
double injective_trace(const SymmetricMatrix& a, const MultiGraph& t);

enum class Normalization { SqrtN, One };

/// (x_m − mean)/scale with scale √N or 1; the sample mean stands in for E[x].
std::vector<double> centered_statistic(std::span<const double> samples, Normalization norm,
                                       int N = 1);
std::vector<cplx> centered_statistic(std::span<const cplx> samples, Normalization norm,
                                     int N = 1);

}  // namespace htclt
