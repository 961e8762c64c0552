#include "htclt/fixedpoint.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "htclt/errors.hpp"
#include "htclt/numerics.hpp"

namespace htclt {

namespace {

constexpr cplx I{0.0, 1.0};

// J_1(2√v)/√v, equal to 1 at v = 0.
double bessel_kernel(double v) {
  if (v < 1e-8) return 1.0 - 0.5 * v;
  const double r = std::sqrt(v);
  return std::cyl_bessel_j(1.0, 2.0 * r) / r;
}

struct ZLess {
  bool operator()(cplx a, cplx b) const {
    return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
  }
};

void require_upper(cplx z, const char* who) {
  if (!(z.imag() > 0.0)) throw DomainError(std::string(who) + ": requires Im z > 0");
}

double sup_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

bool all_finite(const Eigen::MatrixXcd& m) {
  return m.real().allFinite() && m.imag().allFinite();
}

// Atoms with x > 0 carry τ; weight w·x, kernel t·k(x t y)·dy.
std::vector<Atom> positive_atoms(const KernelSpec& spec) {
  std::vector<Atom> out;
  for (const Atom& a : spec.measure)
    if (a.x > 0.0 && a.w > 0.0) out.push_back(a);
  return out;
}

Eigen::MatrixXcd pair_kernel(const Atom& a, const std::vector<double>& rows, const NodeSet& n) {
  Eigen::MatrixXcd p(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < n.size(); ++k)
      p(i, k) = rows[i] * bessel_kernel(a.x * rows[i] * n.y[k]) * n.weight[k];
  return p;
}

}  // namespace

KernelSpec KernelSpec::from(const EnsembleSpec& spec) {
  spec.validate();
  KernelSpec k;
  k.family = spec.family;
  if (spec.family == Family::Levy) {
    k.alpha = spec.alpha;
    k.sigma = spec.levy_sigma();
  } else {
    k.measure = spec.effective_measure();
  }
  return k;
}

cplx kernel_g(const KernelSpec& spec, double y) {
  if (y < 0.0) throw DomainError("kernel_g: y must be non-negative");
  if (spec.is_levy()) {
    if (y == 0.0) throw DomainError("kernel_g: Levy kernel is singular at 0");
    const double b = 0.5 * spec.alpha;
    return -spec.sigma / std::tgamma(b) * std::pow(y, b - 1.0);
  }
  double s = 0.0;
  for (const Atom& a : spec.measure) s += a.w * bessel_kernel(a.x * y);
  return -s;
}

PairMeasureSpec PairMeasureSpec::from(const EnsembleSpec& spec) {
  if (spec.family == Family::Levy)
    throw UnsupportedFamilyError("pair fixed point needs a moment measure; Levy has none");
  return PairMeasureSpec{KernelSpec::from(spec)};
}

double PairMeasureSpec::tau(double v, double vp) const {
  double s = 0.0;
  for (const Atom& a : kernel.measure)
    s += a.w * a.x * bessel_kernel(a.x * v) * bessel_kernel(a.x * vp);
  return s;
}

cplx PairMeasureSpec::mu(double v) const { return kernel_g(kernel, v); }

NodeSet make_nodes(const KernelSpec& spec, double t_max, int panels, int order) {
  if (!(t_max > 0.0)) throw DomainError("make_nodes: t_max must be positive");
  NodeSet n;
  n.t_max = t_max;
  // y = w^q; q = 2/α for Levy so that y^{α/2−1} dy is smooth in w
  const double q = spec.is_levy() ? 2.0 / spec.alpha : 2.0;
  const QuadratureRule r = composite_gauss_legendre(panels, order, 0.0, std::pow(t_max, 1.0 / q));
  n.y.reserve(r.size());
  n.weight.reserve(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double w = r.nodes[i];
    n.y.push_back(std::pow(w, q));
    n.weight.push_back(r.weights[i] * q * std::pow(w, q - 1.0));
  }
  return n;
}

cplx RhoGrid::at(double t) const {
  if (t < 0.0) throw DomainError("RhoGrid::at: t must be non-negative");
  if (t == 0.0) return 0.0;
  cplx s = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k)
    s += kernel_g(kernel, t * nodes.y[k]) * nodes.weight[k] *
         std::exp(I * nodes.y[k] * z + node_values[k]);
  return t * s;
}

double RhoGrid::fixed_point_residual() const {
  double d = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k)
    d = std::max(d, std::abs(at(nodes.y[k]) - node_values[k]));
  return d;
}

RhoSolver::RhoSolver(KernelSpec spec, SolverOptions opts, double t_max)
    : spec_(std::move(spec)), opts_(opts) {
  if (!(opts_.damping > 0.0 && opts_.damping <= 1.0))
    throw ConfigError("RhoSolver: damping must lie in (0, 1]");
  nodes_ = make_nodes(spec_, t_max, opts_.panels, opts_.order);
  const auto n = static_cast<Eigen::Index>(nodes_.size());
  kernel_.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < n; ++k)
      kernel_(i, k) = nodes_.y[i] * kernel_g(spec_, nodes_.y[i] * nodes_.y[k]) * nodes_.weight[k];
}

std::vector<cplx> RhoSolver::apply(cplx z, const std::vector<cplx>& rho) const {
  const auto n = static_cast<Eigen::Index>(nodes_.size());
  Eigen::VectorXcd e(n);
  for (Eigen::Index k = 0; k < n; ++k) e(k) = std::exp(I * nodes_.y[k] * z + rho[k]);
  const Eigen::VectorXcd out = kernel_ * e;
  return {out.data(), out.data() + n};
}

std::vector<cplx> RhoSolver::picard(cplx z, std::vector<cplx> rho, int& iterations,
                                    double& residual) const {
  const double th = opts_.damping;
  for (int it = 0; it < opts_.max_iterations; ++it) {
    const std::vector<cplx> next = apply(z, rho);
    residual = sup_diff(next, rho);
    ++iterations;
    if (!std::isfinite(residual)) throw SolverError("fixed point diverged", residual);
    if (residual < opts_.tol) return next;
    for (std::size_t k = 0; k < rho.size(); ++k) rho[k] = (1.0 - th) * rho[k] + th * next[k];
  }
  throw SolverError("fixed point did not converge", residual);
}

RhoGrid RhoSolver::finish(cplx z, std::vector<cplx> rho, int iterations, double residual) const {
  RhoGrid g;
  g.z = z;
  g.kernel = spec_;
  g.nodes = nodes_;
  g.node_values = std::move(rho);
  g.iterations = iterations;
  g.residual = residual;
  const int m = std::max(opts_.grid_points, 2);
  const double lo = std::min(opts_.t_min, nodes_.t_max);
  const double ratio = std::log(nodes_.t_max / lo) / (m - 1);
  g.t.reserve(static_cast<std::size_t>(m));
  g.values.reserve(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    const double t = lo * std::exp(ratio * j);
    g.t.push_back(t);
    g.values.push_back(g.at(t));
  }
  return g;
}

RhoGrid RhoSolver::solve(cplx z) const {
  require_upper(z, "solve_rho");
  std::vector<cplx> rho(nodes_.size(), cplx{});
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> ladder;
  for (double im = opts_.ladder_start; im > z.imag(); im *= 0.5) ladder.push_back(im);
  ladder.push_back(z.imag());
  for (double im : ladder) rho = picard({z.real(), im}, std::move(rho), iterations, residual);
  return finish(z, std::move(rho), iterations, residual);
}

std::vector<cplx> RhoSolver::derivative(const RhoGrid& rho) const {
  const auto n = static_cast<Eigen::Index>(nodes_.size());
  if (rho.node_values.size() != nodes_.size())
    throw DomainError("derivative: grid was solved on a different node set");
  Eigen::VectorXcd e(n), rhs(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    e(k) = std::exp(I * nodes_.y[k] * rho.z + rho.node_values[k]);
    rhs(k) = I * nodes_.y[k] * e(k);
  }
  // σ = K diag(e) (iy + σ)
  const Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(n, n) - kernel_ * e.asDiagonal();
  const Eigen::VectorXcd sigma = a.partialPivLu().solve(kernel_ * rhs);
  return {sigma.data(), sigma.data() + n};
}

RhoGrid solve_rho(cplx z, const KernelSpec& spec, const SolverOptions& opts) {
  require_upper(z, "solve_rho");
  return RhoSolver(spec, opts, opts.t_max_factor / z.imag()).solve(z);
}

cplx stieltjes_limit(cplx z, const RhoGrid& rho) {
  if (z != rho.z) throw DomainError("stieltjes_limit: grid was solved at a different z");
  std::vector<cplx> terms;
  terms.reserve(rho.nodes.size());
  for (std::size_t k = 0; k < rho.nodes.size(); ++k)
    terms.push_back(rho.nodes.weight[k] * std::exp(I * rho.nodes.y[k] * z + rho.node_values[k]));
  return -I * pairwise_sum<cplx>(terms);
}

cplx L_of_z(const RhoSolver& solver, const RhoGrid& rho) {
  const std::vector<cplx> sigma = solver.derivative(rho);
  const NodeSet& n = solver.nodes();
  std::vector<cplx> terms;
  terms.reserve(n.size());
  for (std::size_t k = 0; k < n.size(); ++k) {
    const cplx e = std::exp(I * n.y[k] * rho.z + rho.node_values[k]);
    terms.push_back(n.weight[k] / n.y[k] * (I * n.y[k] + sigma[k]) * e);
  }
  return pairwise_sum<cplx>(terms);
}

cplx L_of_z(cplx z, const KernelSpec& spec, const SolverOptions& opts) {
  if (z.imag() == 0.0) throw DomainError("L_of_z: z must be off the real axis");
  if (z.imag() < 0.0) return std::conj(L_of_z(std::conj(z), spec, opts));
  const RhoSolver solver(spec, opts, opts.t_max_factor / z.imag());
  return L_of_z(solver, solver.solve(z));
}

std::pair<cplx, cplx> RhoSurface::components_at(double t, double s) const {
  if (t < 0.0 || s < 0.0) throw DomainError("RhoSurface: arguments must be non-negative");
  const NodeSet& n = nodes();
  const auto m = static_cast<Eigen::Index>(n.size());
  Eigen::MatrixXcd base(m, m), full(m, m);
  for (Eigen::Index k = 0; k < m; ++k)
    for (Eigen::Index l = 0; l < m; ++l) {
      const cplx rz = marginal_z.node_values[k];
      const cplx rzp = marginal_zp.node_values[l];
      const cplx b = std::exp(I * n.y[k] * z + I * n.y[l] * zp + (1.0 - u) * (rz + rzp));
      base(k, l) = b * std::exp(u * rho1(k, l));
      full(k, l) = b * std::exp(u * (rz + rzp));
    }
  cplx d1 = 0.0, d2 = 0.0;
  for (const Atom& a : positive_atoms(spec.kernel)) {
    const Eigen::MatrixXcd pt = pair_kernel(a, {t}, n);
    const Eigen::MatrixXcd ps = pair_kernel(a, {s}, n);
    d1 += a.w * a.x * (pt * base * ps.transpose())(0, 0);
    d2 += a.w * a.x * (pt * full * ps.transpose())(0, 0);
  }
  const cplx marg = marginal_z.at(t) + marginal_zp.at(s);
  return {d1 + marg, d2 + marg};
}

cplx RhoSurface::at(double t, double s) const {
  const auto [r1, r2] = components_at(t, s);
  return u * r1 + (1.0 - u) * r2;
}

RhoSurface solve_rho_pair(cplx z, cplx zp, double u, const PairMeasureSpec& spec,
                          const RhoGrid& rho_z, const RhoGrid& rho_zp, const SolverOptions& opts) {
  if (spec.kernel.is_levy())
    throw UnsupportedFamilyError("pair fixed point needs a moment measure; Levy has none");
  require_upper(z, "solve_rho_pair");
  require_upper(zp, "solve_rho_pair");
  if (!(u >= 0.0 && u <= 1.0)) throw DomainError("solve_rho_pair: u must lie in [0, 1]");
  if (rho_z.z != z || rho_zp.z != zp)
    throw DomainError("solve_rho_pair: marginals were solved at different points");
  if (rho_z.nodes.y != rho_zp.nodes.y)
    throw DomainError("solve_rho_pair: marginals must share one node set");

  RhoSurface out;
  out.z = z;
  out.zp = zp;
  out.u = u;
  out.spec = spec;
  out.marginal_z = rho_z;
  out.marginal_zp = rho_zp;

  const NodeSet& n = rho_z.nodes;
  const auto m = static_cast<Eigen::Index>(n.size());
  Eigen::MatrixXcd marg(m, m), base(m, m);
  for (Eigen::Index k = 0; k < m; ++k)
    for (Eigen::Index l = 0; l < m; ++l) {
      marg(k, l) = rho_z.node_values[k] + rho_zp.node_values[l];
      base(k, l) = std::exp(I * n.y[k] * z + I * n.y[l] * zp + (1.0 - u) * marg(k, l));
    }

  struct Term {
    double weight;
    Eigen::MatrixXcd p;
  };
  std::vector<Term> terms;
  for (const Atom& a : positive_atoms(spec.kernel)) terms.push_back({a.w * a.x, pair_kernel(a, n.y, n)});

  auto image = [&](const Eigen::MatrixXcd& e) {
    Eigen::MatrixXcd r = marg;
    for (const Term& t : terms) r.noalias() += t.weight * (t.p * e * t.p.transpose());
    return r;
  };

  // ρ² has the marginals in the exponent; ρ^{u,1} is the fixed point of the same map.
  out.rho2 = image(base.cwiseProduct((u * marg).array().exp().matrix()));
  Eigen::MatrixXcd r1 = out.rho2;
  const double th = opts.damping;
  double residual = 0.0;
  int it = 0;
  for (;; ++it) {
    if (it >= opts.max_iterations) throw SolverError("pair fixed point did not converge", residual);
    const Eigen::MatrixXcd next = image(base.cwiseProduct((u * r1).array().exp().matrix()));
    if (!all_finite(next)) throw SolverError("pair fixed point diverged", residual);
    residual = (next - r1).cwiseAbs().maxCoeff();
    if (residual < opts.tol) {
      r1 = next;
      break;
    }
    r1 = (1.0 - th) * r1 + th * next;
  }
  out.rho1 = std::move(r1);
  out.iterations = it + 1;
  out.residual = residual;
  return out;
}

CovarianceResult covariance_C(cplx z, cplx zp, const EnsembleSpec& spec,
                              const CovarianceOptions& opts) {
  if (z.imag() == 0.0 || zp.imag() == 0.0)
    throw DomainError("covariance_C: arguments must be off the real axis");
  const PairMeasureSpec pair = PairMeasureSpec::from(spec);

  // Only even-even moment pairs survive in the limit, so C is odd in each argument.
  double sign = 1.0;
  if (z.imag() < 0.0) {
    z = -z;
    sign = -sign;
  }
  if (zp.imag() < 0.0) {
    zp = -zp;
    sign = -sign;
  }

  const SolverOptions& so = opts.solver;
  const RhoSolver solver(pair.kernel, so, so.t_max_factor / std::min(z.imag(), zp.imag()));
  const NodeSet& n = solver.nodes();
  const auto m = static_cast<Eigen::Index>(n.size());
  const double hz = opts.h_rel * z.imag();
  const double hzp = opts.h_rel * zp.imag();

  std::map<cplx, RhoGrid, ZLess> cache;
  auto marginal = [&](cplx w) -> const RhoGrid& {
    auto it = cache.find(w);
    if (it == cache.end()) it = cache.emplace(w, solver.solve(w)).first;
    return it->second;
  };

  // Central differences, matching the ones taken of the pair integrand.
  auto l_single = [&](cplx w, double h) {
    const RhoGrid& a = marginal(w + h);
    const RhoGrid& b = marginal(w - h);
    std::vector<cplx> terms;
    for (std::size_t k = 0; k < n.size(); ++k) {
      const cplx fa = std::exp(I * n.y[k] * (w + h) + a.node_values[k]);
      const cplx fb = std::exp(I * n.y[k] * (w - h) + b.node_values[k]);
      terms.push_back(n.weight[k] / n.y[k] * (fa - fb) / (2.0 * h));
    }
    return pairwise_sum<cplx>(terms);
  };

  Eigen::MatrixXcd outer(m, m);
  for (Eigen::Index k = 0; k < m; ++k)
    for (Eigen::Index l = 0; l < m; ++l)
      outer(k, l) = n.weight[k] * n.weight[l] / (n.y[k] * n.y[l]);

  auto l_pair = [&](int order) {
    const QuadratureRule rule = gauss_legendre(order, 0.0, 1.0);
    cplx total = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double u = rule.nodes[q];
      Eigen::MatrixXcd mixed = Eigen::MatrixXcd::Zero(m, m);
      for (int a : {-1, 1})
        for (int b : {-1, 1}) {
          const cplx za = z + static_cast<double>(a) * hz;
          const cplx zb = zp + static_cast<double>(b) * hzp;
          const RhoSurface s = solve_rho_pair(za, zb, u, pair, marginal(za), marginal(zb), so);
          const Eigen::MatrixXcd r = s.combined();
          for (Eigen::Index k = 0; k < m; ++k)
            for (Eigen::Index l = 0; l < m; ++l)
              mixed(k, l) += static_cast<double>(a * b) *
                             std::exp(I * n.y[k] * za + I * n.y[l] * zb + r(k, l));
        }
      total += rule.weights[q] * outer.cwiseProduct(mixed).sum() / (4.0 * hz * hzp);
    }
    return total;
  };

  CovarianceResult out;
  out.l_z = l_single(z, hz);
  out.l_zp = l_single(zp, hzp);
  out.l_pair = l_pair(opts.u_order);
  out.value = sign * 0.5 * (out.l_pair - out.l_z * out.l_zp);
  if (opts.estimate_u_error)
    out.u_error = 0.5 * std::abs(l_pair(2 * opts.u_order) - out.l_pair);
  return out;
}

void write_rho_csv(std::ostream& os, const RhoGrid& rho) {
  os << "# schema=1\n";
  os << "# z=" << rho.z.real() << (rho.z.imag() < 0 ? "" : "+") << rho.z.imag()
     << "i interpolation=" << rho.interpolation << "\n";
  os << "t,re_rho,im_rho\n";
  os.precision(17);
  for (std::size_t j = 0; j < rho.t.size(); ++j)
    os << rho.t[j] << ',' << rho.values[j].real() << ',' << rho.values[j].imag() << '\n';
}

}  // namespace htclt
