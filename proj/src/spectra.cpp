#include "htclt/spectra.hpp"

#include <algorithm>
#include <cmath>

#include "htclt/errors.hpp"
#include "htclt/numerics.hpp"

namespace htclt {

namespace {

constexpr int kMaxTracePower = 12;
constexpr int kMaxInjectiveDim = 8;
constexpr int kMaxInjectiveVertices = 5;

void require_off_axis(cplx z, const char* who) {
  if (z.imag() == 0.0) throw DomainError(std::string(who) + ": z must be off the real axis");
}

std::vector<cplx> diagonal_from_eigensystem(const Eigen::VectorXd& values,
                                            const Eigen::MatrixXd& vectors, cplx z) {
  const Eigen::Index n = values.size();
  Eigen::VectorXcd inv(n);
  for (Eigen::Index i = 0; i < n; ++i) inv(i) = 1.0 / (z - values(i));
  // G_jj = Σ_i V_ji² / (z − λ_i)
  const Eigen::VectorXcd diag = vectors.cwiseAbs2().cast<cplx>() * inv;
  return {diag.data(), diag.data() + n};
}

template <typename T>
std::vector<T> centered_impl(std::span<const T> xs, Normalization norm, int N) {
  if (xs.size() < 2) throw ConfigError("centered_statistic: need at least 2 samples");
  const T mean = mean_of<T>(xs);
  const double scale = norm == Normalization::SqrtN ? std::sqrt(static_cast<double>(N)) : 1.0;
  std::vector<T> out;
  out.reserve(xs.size());
  for (const T& x : xs) out.push_back((x - mean) / scale);
  return out;
}

}  // namespace

Eigen::VectorXd symmetric_eigenvalues(Eigen::MatrixXd a) {
  if (a.size() == 0) return {};
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolverError("symmetric eigensolver failed", 0.0);
  return es.eigenvalues();
}

void symmetric_eigensystem(Eigen::MatrixXd a, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
  if (a.size() == 0) {
    values.resize(0);
    vectors.resize(0, 0);
    return;
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw SolverError("symmetric eigensolver failed", 0.0);
  values = es.eigenvalues();
  vectors = es.eigenvectors();
}

SpectralSample::SpectralSample(const SymmetricMatrix& a) {
  const Eigen::VectorXd w = symmetric_eigenvalues(a.dense());
  eigenvalues_.assign(w.data(), w.data() + w.size());
}

SpectralSample::SpectralSample(const SymmetricMatrix& a, std::span<const cplx> diagonal_points) {
  if (diagonal_points.empty()) {
    *this = SpectralSample(a);
    return;
  }
  for (cplx z : diagonal_points) require_off_axis(z, "SpectralSample");
  Eigen::VectorXd w;
  Eigen::MatrixXd v;
  symmetric_eigensystem(a.dense(), w, v);
  eigenvalues_.assign(w.data(), w.data() + w.size());
  for (cplx z : diagonal_points) diagonals_[z] = diagonal_from_eigensystem(w, v, z);
}

double SpectralSample::trace_power(int K) const {
  if (K < 1 || K > kMaxTracePower) throw DomainError("trace_power: K must lie in [1, 12]");
  std::vector<double> terms;
  terms.reserve(eigenvalues_.size());
  for (double l : eigenvalues_) terms.push_back(std::pow(l, K));
  return pairwise_sum<double>(terms);
}

cplx SpectralSample::trace_resolvent(cplx z) const {
  // real z is fine away from the spectrum
  std::vector<cplx> terms;
  terms.reserve(eigenvalues_.size());
  for (double l : eigenvalues_) {
    if (z == cplx(l)) throw DomainError("trace_resolvent: z is an eigenvalue");
    terms.push_back(1.0 / (z - l));
  }
  return pairwise_sum<cplx>(terms);
}

double SpectralSample::trace_function(const std::function<double(double)>& f) const {
  std::vector<double> terms;
  terms.reserve(eigenvalues_.size());
  for (double l : eigenvalues_) terms.push_back(f(l));
  return pairwise_sum<double>(terms);
}

const std::vector<cplx>& SpectralSample::resolvent_diagonal(cplx z) const {
  require_off_axis(z, "resolvent_diagonal");
  const auto it = diagonals_.find(z);
  if (it == diagonals_.end())
    throw DomainError("resolvent_diagonal: z was not requested when the sample was built");
  return it->second;
}

bool SpectralSample::has_diagonal(cplx z) const { return diagonals_.count(z) > 0; }

double trace_power(const SymmetricMatrix& a, int K, TracePath path) {
  const int orders[] = {K};
  return trace_powers(a, orders, path)[0];
}

std::vector<double> trace_powers(const SymmetricMatrix& a, std::span<const int> orders,
                                 TracePath path) {
  int top = 0;
  for (int K : orders) {
    if (K < 1 || K > kMaxTracePower) throw DomainError("trace_power: K must lie in [1, 12]");
    top = std::max(top, K);
  }
  std::vector<double> out;
  if (path == TracePath::Eigenvalues) {
    const SpectralSample s(a);
    for (int K : orders) out.push_back(s.trace_power(K));
    return out;
  }
  // Tr A^K = <A^h, A^{K-h}> with h = K/2; powers up to ceil(top/2) are needed
  const Eigen::MatrixXd m = a.dense();
  std::vector<Eigen::MatrixXd> pw(1, m);
  for (int p = 2; p <= (top + 1) / 2; ++p) {
    Eigen::MatrixXd next;
    next.noalias() = pw.back() * m;
    pw.push_back(std::move(next));
  }
  for (int K : orders) {
    if (K == 1) {
      out.push_back(m.trace());
      continue;
    }
    const int h = K / 2;
    out.push_back(pw[h - 1].cwiseProduct(pw[K - h - 1]).sum());
  }
  return out;
}

cplx trace_resolvent(const SymmetricMatrix& a, cplx z) {
  return SpectralSample(a).trace_resolvent(z);
}

std::vector<cplx> resolvent_diagonal(const SymmetricMatrix& a, cplx z) {
  require_off_axis(z, "resolvent_diagonal");
  Eigen::VectorXd w;
  Eigen::MatrixXd v;
  symmetric_eigensystem(a.dense(), w, v);
  return diagonal_from_eigensystem(w, v, z);
}

double trace_function(const SymmetricMatrix& a, const std::function<double(double)>& f) {
  return SpectralSample(a).trace_function(f);
}

double injective_trace(const SymmetricMatrix& a, const MultiGraph& t) {
  const int N = a.dim();
  const int nv = t.vertex_count();
  if (N > kMaxInjectiveDim || nv > kMaxInjectiveVertices)
    throw CapacityError("injective_trace: needs N <= 8 and at most 5 vertices");
  if (nv == 0 || t.has_isolated_vertex())
    throw DomainError("injective_trace: graph has isolated vertices");
  if (nv > N) return 0.0;

  std::vector<int> phi(static_cast<std::size_t>(nv), -1);
  std::vector<bool> used(static_cast<std::size_t>(N), false);
  double total = 0.0;
  auto recurse = [&](auto&& self, int v) -> void {
    if (v == nv) {
      double prod = 1.0;
      for (const auto& [e, m] : t.edges()) {
        const double x = a(phi[e.first], phi[e.second]);
        for (int r = 0; r < m; ++r) prod *= x;
      }
      total += prod;
      return;
    }
    for (int i = 0; i < N; ++i) {
      if (used[i]) continue;
      used[i] = true;
      phi[v] = i;
      self(self, v + 1);
      used[i] = false;
    }
  };
  recurse(recurse, 0);
  return total / N;
}

std::vector<double> centered_statistic(std::span<const double> samples, Normalization norm,
                                       int N) {
  return centered_impl<double>(samples, norm, N);
}

std::vector<cplx> centered_statistic(std::span<const cplx> samples, Normalization norm, int N) {
  return centered_impl<cplx>(samples, norm, N);
}

}  // namespace htclt
