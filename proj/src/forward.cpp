#include "tni/forward.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace tni {

ConductivityField ConductivityField::constant(const GridSpec& grid, double s_re, double s_im) {
  ConductivityField f;
  f.re = Vec::Constant(grid.node_count(), s_re);
  f.im = Vec::Constant(grid.node_count(), s_im);
  return f;
}

void ConductivityField::validate() const {
  if (re.size() == 0) throw std::invalid_argument("conductivity: empty field");
  if (im.size() != 0 && im.size() != re.size())
    throw std::invalid_argument("conductivity: sigma'' size mismatch");
  if (!re.allFinite() || (im.size() != 0 && !im.allFinite()))
    throw std::invalid_argument("conductivity: non-finite values");
  if (re.minCoeff() <= 0.0) throw std::invalid_argument("conductivity: sigma' must be positive");
  if (im.size() != 0 && im.minCoeff() < 0.0)
    throw std::invalid_argument("conductivity: sigma'' must be nonnegative");
}

CVec ConductivityField::complex_values() const {
  CVec s(re.size());
  for (Eigen::Index k = 0; k < re.size(); ++k)
    s(k) = Complex(re(k), im.size() != 0 ? im(k) : 0.0);
  return s;
}

void BoundarySpec::validate() const {
  if (values.size() != static_cast<Eigen::Index>(dirichlet_nodes.size()))
    throw std::invalid_argument("boundary: values not aligned with Dirichlet nodes");
  if (!values.allFinite()) throw std::invalid_argument("boundary: non-finite electrode values");
  if (kind == BcKind::Mixed && gap_nodes.empty())
    throw std::invalid_argument("boundary: mixed kind requires a nonempty gap set");
}

BoundarySpec make_full_dirichlet(const GridOps& ops, const CVec& values_at_boundary) {
  BoundarySpec bc;
  bc.kind = BcKind::FullDirichlet;
  bc.dirichlet_nodes = ops.boundary;
  bc.values = values_at_boundary;
  bc.validate();
  return bc;
}

BoundarySpec make_mixed(const BoundaryPartition& part, const CVec& values_at_electrodes) {
  BoundarySpec bc;
  bc.kind = BcKind::Mixed;
  bc.dirichlet_nodes = part.electrode;
  bc.gap_nodes = part.gap;
  bc.values = values_at_electrodes;
  bc.validate();
  return bc;
}

CVec boundary_function(char kind, int order, bool complex_combination,
                       const GridSpec& grid, const std::vector<int>& nodes) {
  if (kind != 'g' && kind != 'h') throw std::invalid_argument("boundary_function: kind must be g or h");
  if (order < 0) throw std::invalid_argument("boundary_function: negative order");
  CVec out(nodes.size());
  for (size_t k = 0; k < nodes.size(); ++k) {
    const int i = nodes[k] % grid.n;
    const int j = nodes[k] / grid.n;
    const double x = grid.x(i), y = grid.y(j);
    const double r = std::hypot(x, y);
    const double theta = std::atan2(y, x);
    const double radial = std::pow(r / grid.extent, order);
    const double g = 5.0 * std::sin(theta) * radial;
    const double h = 5.0 * std::cos(theta) * radial;
    double primary = (kind == 'g') ? g : h;
    double secondary = (kind == 'g') ? h : g;
    out(k) = complex_combination ? Complex(primary, 0.5 * secondary) : Complex(primary, 0.0);
  }
  return out;
}

CVec electrode_token_values(const std::string& token, const GridSpec& grid,
                            const std::vector<int>& nodes) {
  if (token == "e1" || token == "e2") {
    CVec out(nodes.size());
    for (size_t k = 0; k < nodes.size(); ++k) {
      const double x = grid.x(nodes[k] % grid.n);
      const double y = grid.y(nodes[k] / grid.n);
      out(k) = (token == "e1") ? (x + y) / 10.0 : (1.0 + x - y) / 10.0;
    }
    return out;
  }
  if (token.size() >= 2 && (token[0] == 'g' || token[0] == 'h')) {
    const bool tilde = token[1] == 't';
    const std::string digits = token.substr(tilde ? 2 : 1);
    if (!digits.empty() &&
        std::all_of(digits.begin(), digits.end(), [](unsigned char c) { return std::isdigit(c); }))
      return boundary_function(token[0], std::stoi(digits), tilde, grid, nodes);
  }
  throw std::invalid_argument("unknown electrode token: " + token);
}

Vec edge_boundary_weights(const GridSpec& grid) {
  Vec c = Vec::Ones(grid.edge_count());
  const int n = grid.n;
  for (int i = 0; i < n - 1; ++i) {
    c(grid.hedge_id(i, 0)) = 0.5;
    c(grid.hedge_id(i, n - 1)) = 0.5;
  }
  for (int j = 0; j < n - 1; ++j) {
    c(grid.hedge_count() + grid.vedge_id(0, j)) = 0.5;
    c(grid.hedge_count() + grid.vedge_id(n - 1, j)) = 0.5;
  }
  return c;
}

CSpMat assemble_weighted_laplacian(const ConductivityField& sigma, const GridOps& ops) {
  sigma.validate();
  const CSpMat full = weighted_laplacian_full<Complex>(sigma.complex_values(), ops);
  Eigen::SparseMatrix<Complex, Eigen::RowMajor> rows(full);
  std::vector<CTriplet> trip;
  trip.reserve(full.nonZeros());
  int r = 0;
  for (int node : ops.interior) {
    for (Eigen::SparseMatrix<Complex, Eigen::RowMajor>::InnerIterator it(rows, node); it; ++it)
      trip.emplace_back(r, static_cast<int>(it.col()), it.value());
    ++r;
  }
  CSpMat out(static_cast<int>(ops.interior.size()), ops.grid.node_count());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

PotentialField solve(const ConductivityField& sigma, const BoundarySpec& bc, const GridOps& ops) {
  sigma.validate();
  bc.validate();
  if (bc.dirichlet_nodes.empty())
    throw std::runtime_error("floating potential: no Dirichlet node to pin the solution");

  const int nn = ops.grid.node_count();
  std::vector<int> unknown_of(nn, -1), dirichlet_of(nn, -1);
  for (size_t k = 0; k < bc.dirichlet_nodes.size(); ++k) dirichlet_of[bc.dirichlet_nodes[k]] = static_cast<int>(k);
  std::vector<int> unknown;
  unknown.reserve(nn - bc.dirichlet_nodes.size());
  for (int p = 0; p < nn; ++p)
    if (dirichlet_of[p] < 0) {
      unknown_of[p] = static_cast<int>(unknown.size());
      unknown.push_back(p);
    }

  const CSpMat full = weighted_laplacian_full<Complex>(sigma.complex_values(), ops);
  Eigen::SparseMatrix<Complex, Eigen::RowMajor> rows(full);

  std::vector<CTriplet> trip;
  trip.reserve(full.nonZeros());
  CVec rhs = CVec::Zero(unknown.size());
  for (size_t ur = 0; ur < unknown.size(); ++ur) {
    for (Eigen::SparseMatrix<Complex, Eigen::RowMajor>::InnerIterator it(rows, unknown[ur]); it; ++it) {
      const int col = static_cast<int>(it.col());
      if (unknown_of[col] >= 0)
        trip.emplace_back(static_cast<int>(ur), unknown_of[col], it.value());
      else
        rhs(ur) -= it.value() * bc.values(dirichlet_of[col]);
    }
  }
  CSpMat a(static_cast<int>(unknown.size()), static_cast<int>(unknown.size()));
  a.setFromTriplets(trip.begin(), trip.end());

  Eigen::SparseLU<CSpMat> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("forward solve: sparse factorization failed (singular system?)");
  const CVec u_unknown = lu.solve(rhs);

  const double rhs_norm = rhs.norm();
  const double rel_res = (a * u_unknown - rhs).norm() / (rhs_norm > 0.0 ? rhs_norm : 1.0);
  if (!(rel_res <= 1e-10)) {
    std::ostringstream msg;
    msg << "forward solve: relative residual " << rel_res << " exceeds 1e-10";
    throw std::runtime_error(msg.str());
  }

  PotentialField out;
  out.n = ops.grid.n;
  out.u = CVec::Zero(nn);
  for (size_t k = 0; k < unknown.size(); ++k) out.u(unknown[k]) = u_unknown(k);
  for (size_t k = 0; k < bc.dirichlet_nodes.size(); ++k) out.u(bc.dirichlet_nodes[k]) = bc.values(k);
  return out;
}

Vec internal_functional(const ConductivityField& sigma, const PotentialField& u, const GridOps& ops) {
  if (u.n != ops.grid.n) throw std::invalid_argument("internal_functional: grid mismatch");
  const Vec d1_sq = (ops.diff.d1.cast<Complex>() * u.u).cwiseAbs2();
  const Vec d2_sq = (ops.diff.d2.cast<Complex>() * u.u).cwiseAbs2();
  const Vec e1s = ops.interp.e1 * sigma.re;
  const Vec e2s = ops.interp.e2 * sigma.re;
  return ops.interp.n1 * e1s.cwiseProduct(d1_sq) + ops.interp.n2 * e2s.cwiseProduct(d2_sq);
}

double quasistatic_check_si(double length_m, double sigma_abs_si, double omega,
                            const PhysicalConstants& constants) {
  if (length_m <= 0.0 || sigma_abs_si < 0.0 || omega <= 0.0)
    throw std::invalid_argument("quasistatic_check: inputs must be positive");
  return omega * constants.mu0 * sigma_abs_si * length_m * length_m;
}

double quasistatic_check(double length_cm, double sigma_abs_cm_kohm, double omega,
                         const PhysicalConstants& constants) {
  // 1 cm^-1 kOhm^-1 = 0.1 S/m
  return quasistatic_check_si(0.01 * length_cm, 0.1 * sigma_abs_cm_kohm, omega, constants);
}

double complex_conductivity_magnitude(double sigma_re_cm_kohm, double omega, double eps_f_per_m) {
  const double sigma_im_cm_kohm = 10.0 * omega * eps_f_per_m;  // S/m -> cm^-1 kOhm^-1
  return std::hypot(sigma_re_cm_kohm, sigma_im_cm_kohm);
}

}  // namespace tni
