#pragma once

#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "htclt/ensembles.hpp"

namespace htclt {

/// Kernel g with Φ(x) = ∫_0^∞ g(y) e^{iy/x} dy.
struct KernelSpec {
  Family family = Family::StandardWigner;
  double alpha = 1.0;  // Levy
  double sigma = 0.0;  // Levy
  std::vector<Atom> measure;  // moment measure for every non-Levy family

  static KernelSpec from(const EnsembleSpec& spec);
  bool is_levy() const noexcept { return family == Family::Levy; }
};

/// Levy: −σ/Γ(α/2) · y^{α/2−1}; moment measure m: −∫ J_1(2√(xy))/√(xy) dm(x).
cplx kernel_g(const KernelSpec& spec, double y);

/// τ and μ of the two-variable decomposition of Φ(x + y), moment-measure families only.
struct PairMeasureSpec {
  KernelSpec kernel;

  static PairMeasureSpec from(const EnsembleSpec& spec);
  /// dτ/dv dv' = ∫ J_1(2√(vx)) J_1(2√(v'x)) / √(vv') dm(x)
  double tau(double v, double vp) const;
  /// dμ/dv, equal to g(v)
  cplx mu(double v) const;
};

struct SolverOptions {
  double damping = 0.5;         // Picard step θ
  double tol = 1e-10;           // sup-norm of F[ρ] − ρ
  int max_iterations = 20000;
  double ladder_start = 8.0;    // continuation starts at Im z = 8 and halves
  int panels = 32;              // composite Gauss-Legendre in the mapped variable
  int order = 16;
  double t_max_factor = 40.0;   // T_max = factor / Im z
  double t_min = 1e-4;          // output grid
  int grid_points = 256;
};

/// Quadrature in y on (0, T_max]. Levy maps y = w^{2/α} (regularising
/// y^{α/2−1}); the other families map y = w².
struct NodeSet {
  std::vector<double> y;
  std::vector<double> weight;
  double t_max = 0.0;
  std::size_t size() const noexcept { return y.size(); }
};

NodeSet make_nodes(const KernelSpec& spec, double t_max, int panels, int order);

/// ρ_z on the output t-grid, plus the quadrature-node values it was solved on.
/// Off-node values use the Nyström interpolant ρ(t) = t Σ_k g(t y_k) w_k e^{i y_k z + ρ(y_k)}.
struct RhoGrid {
  cplx z;
  KernelSpec kernel;
  std::vector<double> t;
  std::vector<cplx> values;
  std::string interpolation = "nystrom";
  NodeSet nodes;
  std::vector<cplx> node_values;
  int iterations = 0;
  double residual = 0.0;

  cplx at(double t) const;
  /// sup over nodes of |ρ − F[ρ]|
  double fixed_point_residual() const;
};

/// Fixed-point solver for ρ_z on one node set; reusable across z.
class RhoSolver {
 public:
  RhoSolver(KernelSpec spec, SolverOptions opts, double t_max);

  const NodeSet& nodes() const noexcept { return nodes_; }
  const KernelSpec& kernel() const noexcept { return spec_; }
  const SolverOptions& options() const noexcept { return opts_; }

  /// F[ρ] at the nodes.
  std::vector<cplx> apply(cplx z, const std::vector<cplx>& rho) const;

  /// Damped Picard with the Im z continuation ladder.
  RhoGrid solve(cplx z) const;

  /// ∂_z ρ_z at the nodes from the differentiated equation (one dense solve).
  std::vector<cplx> derivative(const RhoGrid& rho) const;

 private:
  std::vector<cplx> picard(cplx z, std::vector<cplx> rho, int& iterations, double& residual) const;
  RhoGrid finish(cplx z, std::vector<cplx> rho, int iterations, double residual) const;

  KernelSpec spec_;
  SolverOptions opts_;
  NodeSet nodes_;
  Eigen::MatrixXcd kernel_;  // y_i g(y_i y_k) w_k
};

/// Requires Im z > 0.
RhoGrid solve_rho(cplx z, const KernelSpec& spec, const SolverOptions& opts = {});

/// lim (1/N) Tr G(z) = −i ∫_0^∞ e^{itz + ρ_z(t)} dt.
cplx stieltjes_limit(cplx z, const RhoGrid& rho);

/// L(z) = ∫_0^∞ (1/t) ∂_z e^{itz + ρ_z(t)} dt; Im z < 0 by conjugation.
cplx L_of_z(cplx z, const KernelSpec& spec, const SolverOptions& opts = {});
cplx L_of_z(const RhoSolver& solver, const RhoGrid& rho);

/// ρ^u_{z,z'} = u ρ^{u,1} + (1 − u) ρ^2 on the node grid of the marginals.
struct RhoSurface {
  cplx z, zp;
  double u = 0.0;
  PairMeasureSpec spec;
  RhoGrid marginal_z, marginal_zp;     // share one node set
  Eigen::MatrixXcd rho1, rho2;         // [k, l] ↔ (y_k, y_l)
  int iterations = 0;
  double residual = 0.0;

  Eigen::MatrixXcd combined() const { return u * rho1 + (1.0 - u) * rho2; }
  /// Nyström evaluation of (ρ^{u,1}, ρ^2) at (t, s); s = 0 gives the marginal.
  std::pair<cplx, cplx> components_at(double t, double s) const;
  cplx at(double t, double s) const;
  const NodeSet& nodes() const noexcept { return marginal_z.nodes; }
};

/// Both marginals must share one node set (solve them with the same RhoSolver).
RhoSurface solve_rho_pair(cplx z, cplx zp, double u, const PairMeasureSpec& spec,
                          const RhoGrid& rho_z, const RhoGrid& rho_zp,
                          const SolverOptions& opts = {});

struct CovarianceOptions {
  int u_order = 8;
  bool estimate_u_error = true;  // repeat with 2·u_order
  double h_rel = 1e-3;           // finite-difference step h = h_rel · Im z
  SolverOptions solver{0.5, 1e-11, 20000, 8.0, 12, 16, 40.0, 1e-4, 64};
};

struct CovarianceResult {
  cplx value;        // C(z, z')
  cplx l_pair;       // L(z, z')
  cplx l_z, l_zp;    // L(z), L(z')
  double u_error = 0.0;
};

/// Covariance E[Z(z) Z(z')] of the limiting resolvent-trace process:
/// ½ (L(z,z') − L(z) L(z')) for real symmetric matrices.
CovarianceResult covariance_C(cplx z, cplx zp, const EnsembleSpec& spec,
                              const CovarianceOptions& opts = {});

/// CSV with header `# schema=1` then `t,re_rho,im_rho`.
void write_rho_csv(std::ostream& os, const RhoGrid& rho);

}  // namespace htclt
