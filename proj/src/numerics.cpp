#include "htclt/numerics.hpp"

#include <algorithm>

#include <boost/math/special_functions/legendre.hpp>

#include "htclt/errors.hpp"

namespace htclt {

QuadratureRule gauss_legendre(int order, double a, double b) {
  if (order < 1) throw ConfigError("gauss_legendre: order must be positive");
  // boost returns the non-negative zeros in increasing order
  const std::vector<double> zeros = boost::math::legendre_p_zeros<double>(order);
  std::vector<double> x;
  x.reserve(order);
  for (auto it = zeros.rbegin(); it != zeros.rend(); ++it)
    if (*it > 0.0) x.push_back(-*it);
  for (double z : zeros) x.push_back(z);

  QuadratureRule rule;
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (b + a);
  for (double xi : x) {
    const double dp = boost::math::legendre_p_prime(order, xi);
    const double w = 2.0 / ((1.0 - xi * xi) * dp * dp);
    rule.nodes.push_back(mid + half * xi);
    rule.weights.push_back(half * w);
  }
  return rule;
}

QuadratureRule composite_gauss_legendre(int panels, int order, double a, double b) {
  if (panels < 1) throw ConfigError("composite_gauss_legendre: panels must be positive");
  QuadratureRule rule;
  rule.nodes.reserve(static_cast<std::size_t>(panels) * order);
  rule.weights.reserve(static_cast<std::size_t>(panels) * order);
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const QuadratureRule panel = gauss_legendre(order, a + p * h, a + (p + 1) * h);
    rule.nodes.insert(rule.nodes.end(), panel.nodes.begin(), panel.nodes.end());
    rule.weights.insert(rule.weights.end(), panel.weights.begin(), panel.weights.end());
  }
  return rule;
}

}  // namespace htclt
