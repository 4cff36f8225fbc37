#pragma once

#include <string>
#include <vector>

#include "tni/grid.hpp"
#include "tni/types.hpp"

namespace tni {

/// Node-based complex conductivity sigma = sigma_re + i*sigma_im,
/// both parts in cm^-1 kOhm^-1.
struct ConductivityField {
  Vec re;
  Vec im;

  static ConductivityField constant(const GridSpec& grid, double s_re, double s_im = 0.0);
  void validate() const;  // sigma' > 0, sigma'' >= 0, finite, matching sizes
  CVec complex_values() const;
  bool is_real() const { return im.size() == 0 || im.isZero(0.0); }
};

struct PhysicalConstants {
  double kappa = 1.36e-23;        // Boltzmann, J/K
  double hbar = 1.05e-34;         // Planck (reduced), J s
  double mu0 = 4e-7 * 3.14159265358979323846;  // vacuum permeability, H/m
};

enum class BcKind { FullDirichlet, Mixed };

/// Dirichlet data on the electrode set plus the no-flux gap set.
struct BoundarySpec {
  BcKind kind = BcKind::FullDirichlet;
  std::vector<int> dirichlet_nodes;  // ascending node ids (B or Gamma)
  CVec values;                       // aligned with dirichlet_nodes
  std::vector<int> gap_nodes;        // ascending, empty for full Dirichlet

  void validate() const;
};

BoundarySpec make_full_dirichlet(const GridOps& ops, const CVec& values_at_boundary);
BoundarySpec make_mixed(const BoundaryPartition& part, const CVec& values_at_electrodes);

struct PotentialField {
  CVec u;     // all nodes
  int n = 0;  // grid side, for mismatch checks
};

/// Electrode functions of the experiments: g_n = 5 sin(theta) (r/10)^n and
/// h_n = 5 cos(theta) (r/10)^n in polar coordinates about the corner (0,0).
/// With complex_combination set, returns g~_n = g_n + (i/2) h_n
/// (resp. h~_n = h_n + (i/2) g_n).
CVec boundary_function(char kind, int order, bool complex_combination,
                       const GridSpec& grid, const std::vector<int>& nodes);

/// Token form used by the CLI and experiment configs: g1, h2, gt1, ht2 for
/// the polar family, e1 = (x1+x2)/10 and e2 = (1+x1-x2)/10.
CVec electrode_token_values(const std::string& token, const GridSpec& grid,
                            const std::vector<int>& nodes);

/// Quadrature fraction of each edge's dual cell inside the domain: 1/2 for
/// edges lying on the boundary, 1 otherwise. Keeps the no-flux rows symmetric
/// and doubles as the edge quadrature weight.
Vec edge_boundary_weights(const GridSpec& grid);

/// Graph Laplacian D^T diag(c .* w) D with edge weights w = E12*s and the
/// boundary-edge halving c. Interior rows reproduce the plain weighted
/// 5-point stencil; gap-node rows implement the centered (ghost-node)
/// zero-flux condition.
template <typename Scalar>
Eigen::SparseMatrix<Scalar> weighted_laplacian_full(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& s_nodes, const GridOps& ops) {
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w =
      ops.interp.e12.cast<Scalar>() * s_nodes;
  const Vec c = edge_boundary_weights(ops.grid);
  Eigen::SparseMatrix<Scalar> dd = ops.diff.d.cast<Scalar>();
  Eigen::SparseMatrix<Scalar> weighted = (c.cast<Scalar>().cwiseProduct(w)).asDiagonal() * dd;
  return Eigen::SparseMatrix<Scalar>(dd.transpose() * weighted);
}

/// Derivative of D^T[(c .* E12 s) .* (D u)] with respect to s:
/// D^T diag(c .* D u) E12.
template <typename Scalar>
Eigen::SparseMatrix<Scalar> weighted_laplacian_sigma_derivative(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& u, const GridOps& ops) {
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> du = ops.diff.d.cast<Scalar>() * u;
  const Vec c = edge_boundary_weights(ops.grid);
  Eigen::SparseMatrix<Scalar> e12 = ops.interp.e12.cast<Scalar>();
  Eigen::SparseMatrix<Scalar> weighted = (c.cast<Scalar>().cwiseProduct(du)).asDiagonal() * e12;
  return Eigen::SparseMatrix<Scalar>(ops.diff.d.cast<Scalar>().transpose() * weighted);
}

/// The interior-row block of the weighted Laplacian, as the discrete
/// conductivity equation uses it.
CSpMat assemble_weighted_laplacian(const ConductivityField& sigma, const GridOps& ops);

/// Solve the discrete conductivity equation under the given boundary
/// condition. Dirichlet values are imposed exactly; gap nodes carry the
/// centered zero-flux rows. Throws "floating potential" when the Dirichlet
/// set is empty and reports the residual if the factorization fails to reach
/// a 1e-10 relative residual.
PotentialField solve(const ConductivityField& sigma, const BoundarySpec& bc, const GridOps& ops);

/// Internal power density at the nodes:
/// N1(E1 s .* |D1 u|^2) + N2(E2 s .* |D2 u|^2) with s = sigma_re.
/// For complex potentials |.|^2 is the complex modulus squared, matching
/// sigma'(|grad u'|^2 + |grad u''|^2).
Vec internal_functional(const ConductivityField& sigma, const PotentialField& u, const GridOps& ops);

/// Quasi-static validity number omega*mu*|sigma|*L^2 (dimensionless, SI).
double quasistatic_check_si(double length_m, double sigma_abs_si, double omega,
                            const PhysicalConstants& constants = {});

/// Same, with the length in cm and |sigma| in cm^-1 kOhm^-1.
double quasistatic_check(double length_cm, double sigma_abs_cm_kohm, double omega,
                         const PhysicalConstants& constants = {});

/// |sigma' + i omega eps'| in cm^-1 kOhm^-1 from sigma' in cm^-1 kOhm^-1 and
/// eps' in F/m.
double complex_conductivity_magnitude(double sigma_re_cm_kohm, double omega, double eps_f_per_m);

}  // namespace tni
