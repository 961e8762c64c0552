#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <vector>

namespace htclt {

/// Sum by recursive halving; the result depends only on the element order.
template <typename T>
T pairwise_sum(std::span<const T> xs) {
  if (xs.empty()) return T{};
  if (xs.size() <= 8) {
    T acc{};
    for (const T& x : xs) acc += x;
    return acc;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

template <typename T>
T mean_of(std::span<const T> xs) {
  return pairwise_sum(xs) / static_cast<double>(xs.size());
}

/// Delete-one jackknife standard error of the sample mean.
inline double jackknife_se_mean(std::span<const double> xs) {
  const double n = static_cast<double>(xs.size());
  if (xs.size() < 2) return 0.0;
  const double total = pairwise_sum(xs);
  const double full = total / n;
  double ss = 0.0;
  for (double x : xs) {
    const double loo = (total - x) / (n - 1.0);
    ss += (loo - full) * (loo - full);
  }
  return std::sqrt((n - 1.0) / n * ss);
}

/// Gauss-Legendre rule on [a, b] split into equal panels.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const noexcept { return nodes.size(); }
};

QuadratureRule gauss_legendre(int order, double a = -1.0, double b = 1.0);
QuadratureRule composite_gauss_legendre(int panels, int order, double a, double b);

}  // namespace htclt
