#include "tni/inverse.hpp"

#include <Eigen/SparseCholesky>
#ifdef TNI_HAVE_CHOLMOD
#include <Eigen/CholmodSupport>
#endif

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace tni {

namespace {

using RowMajorSpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Layout {
  int nn = 0;    // nodes
  int nexp = 0;  // experiments
  int nf = 0;    // free sigma unknowns
  bool complex_kind = false;
  std::vector<int> free_index;  // node -> free slot or -1
  std::vector<int> free_nodes;

  int sigma_cols() const { return complex_kind ? 2 * nf : nf; }
  int u_parts() const { return complex_kind ? 2 : 1; }
  int u_col(int exp, int part) const { return sigma_cols() + (exp * u_parts() + part) * nn; }
  int total_cols() const { return sigma_cols() + nexp * u_parts() * nn; }
};

Layout make_layout(const InverseProblem& problem) {
  Layout lay;
  lay.nn = problem.ops->grid.node_count();
  lay.nexp = static_cast<int>(problem.bcs.size());
  lay.complex_kind = problem.kind == InverseKind::Complex;
  lay.free_index.assign(lay.nn, -1);
  for (int p = 0; p < lay.nn; ++p)
    if (problem.s_free[p]) {
      lay.free_index[p] = lay.nf++;
      lay.free_nodes.push_back(p);
    }
  return lay;
}

std::vector<int> pde_rows(const InverseProblem& problem, int exp) {
  // interior nodes plus this experiment's gap nodes, ascending
  std::vector<int> rows = problem.ops->interior;
  const auto& gaps = problem.bcs[exp].gap_nodes;
  rows.insert(rows.end(), gaps.begin(), gaps.end());
  std::sort(rows.begin(), rows.end());
  return rows;
}

int residual_rows(const InverseProblem& problem, const Layout& lay) {
  int total = 0;
  const int ni = static_cast<int>(problem.ops->interior.size());
  for (int i = 0; i < lay.nexp; ++i) {
    const int np = static_cast<int>(pde_rows(problem, i).size());
    const int nb = static_cast<int>(problem.bcs[i].dirichlet_nodes.size());
    total += lay.complex_kind ? (2 * np + 2 * nb + ni) : (np + nb + ni);
  }
  return total;
}

Vec pack(const ReconstructionState& state, const Layout& lay) {
  Vec x(lay.total_cols());
  for (int k = 0; k < lay.nf; ++k) x(k) = state.s_re(lay.free_nodes[k]);
  if (lay.complex_kind)
    for (int k = 0; k < lay.nf; ++k) x(lay.nf + k) = state.s_im(lay.free_nodes[k]);
  for (int i = 0; i < lay.nexp; ++i) {
    x.segment(lay.u_col(i, 0), lay.nn) = state.u_re[i];
    if (lay.complex_kind) x.segment(lay.u_col(i, 1), lay.nn) = state.u_im[i];
  }
  return x;
}

void unpack(const Vec& x, const Layout& lay, ReconstructionState& state) {
  for (int k = 0; k < lay.nf; ++k) state.s_re(lay.free_nodes[k]) = x(k);
  if (lay.complex_kind)
    for (int k = 0; k < lay.nf; ++k) state.s_im(lay.free_nodes[k]) = x(lay.nf + k);
  for (int i = 0; i < lay.nexp; ++i) {
    state.u_re[i] = x.segment(lay.u_col(i, 0), lay.nn);
    if (lay.complex_kind) state.u_im[i] = x.segment(lay.u_col(i, 1), lay.nn);
  }
}

// Measurement model m(s, u', u'') = N1(E1 s .* (|D1u'|^2 + |D1u''|^2)) + ...
Vec measurement_model(const Vec& s, const Vec& u_re, const Vec* u_im, const GridOps& ops) {
  Vec d1_sq = (ops.diff.d1 * u_re).cwiseAbs2();
  Vec d2_sq = (ops.diff.d2 * u_re).cwiseAbs2();
  if (u_im) {
    d1_sq += (ops.diff.d1 * *u_im).cwiseAbs2();
    d2_sq += (ops.diff.d2 * *u_im).cwiseAbs2();
  }
  const Vec e1s = ops.interp.e1 * s;
  const Vec e2s = ops.interp.e2 * s;
  return ops.interp.n1 * e1s.cwiseProduct(d1_sq) + ops.interp.n2 * e2s.cwiseProduct(d2_sq);
}

Vec residual_impl(const ReconstructionState& state, const InverseProblem& problem) {
  const GridOps& ops = *problem.ops;
  const Layout lay = make_layout(problem);
  const auto& interior = ops.interior;

  Vec r(residual_rows(problem, lay));
  int at = 0;

  const SpMat l_re = weighted_laplacian_full<double>(state.s_re, ops);
  SpMat l_im;
  if (lay.complex_kind) l_im = weighted_laplacian_full<double>(state.s_im, ops);

  for (int i = 0; i < lay.nexp; ++i) {
    const std::vector<int> rows = pde_rows(problem, i);
    const BoundarySpec& bc = problem.bcs[i];

    if (!lay.complex_kind) {
      const Vec pde = l_re * state.u_re[i];
      for (int p : rows) r(at++) = pde(p);
      for (size_t k = 0; k < bc.dirichlet_nodes.size(); ++k)
        r(at++) = state.u_re[i](bc.dirichlet_nodes[k]) - bc.values(k).real();
      const Vec model = measurement_model(state.s_re, state.u_re[i], nullptr, ops);
      for (int p : interior) r(at++) = problem.data.H[i](p) - model(p);
    } else {
      const Vec pde_re = l_re * state.u_re[i] - l_im * state.u_im[i];
      const Vec pde_im = l_re * state.u_im[i] + l_im * state.u_re[i];
      for (int p : rows) r(at++) = pde_re(p);
      for (int p : rows) r(at++) = pde_im(p);
      for (size_t k = 0; k < bc.dirichlet_nodes.size(); ++k)
        r(at++) = state.u_re[i](bc.dirichlet_nodes[k]) - bc.values(k).real();
      for (size_t k = 0; k < bc.dirichlet_nodes.size(); ++k)
        r(at++) = state.u_im[i](bc.dirichlet_nodes[k]) - bc.values(k).imag();
      const Vec model = measurement_model(state.s_re, state.u_re[i], &state.u_im[i], ops);
      for (int p : interior) r(at++) = problem.data.H[i](p) - model(p);
    }
  }
  return r;
}

// Appends rows (selected by node id) of a node x node sparse block into the
// global triplet list, mapping columns through colmap (-1 drops a column).
void append_block(std::vector<Triplet>& out, const SpMat& block, const std::vector<int>& rows,
                  int row_offset, const std::vector<int>& colmap, double scale = 1.0) {
  const RowMajorSpMat rm(block);
  for (size_t k = 0; k < rows.size(); ++k)
    for (RowMajorSpMat::InnerIterator it(rm, rows[k]); it; ++it) {
      const int col = colmap[it.col()];
      if (col >= 0) out.emplace_back(row_offset + static_cast<int>(k), col, scale * it.value());
    }
}

// d model / d u as a node x node sparse matrix (for one u part).
SpMat measurement_du(const Vec& s, const Vec& u_part, const GridOps& ops) {
  const Vec w1 = (ops.interp.e1 * s).cwiseProduct(ops.diff.d1 * u_part) * 2.0;
  const Vec w2 = (ops.interp.e2 * s).cwiseProduct(ops.diff.d2 * u_part) * 2.0;
  return SpMat(ops.interp.n1 * (w1.asDiagonal() * ops.diff.d1)) +
         SpMat(ops.interp.n2 * (w2.asDiagonal() * ops.diff.d2));
}

// d model / d s as a node x node sparse matrix.
SpMat measurement_ds(const Vec& u_re, const Vec* u_im, const GridOps& ops) {
  Vec d1_sq = (ops.diff.d1 * u_re).cwiseAbs2();
  Vec d2_sq = (ops.diff.d2 * u_re).cwiseAbs2();
  if (u_im) {
    d1_sq += (ops.diff.d1 * *u_im).cwiseAbs2();
    d2_sq += (ops.diff.d2 * *u_im).cwiseAbs2();
  }
  return SpMat(ops.interp.n1 * (d1_sq.asDiagonal() * ops.interp.e1)) +
         SpMat(ops.interp.n2 * (d2_sq.asDiagonal() * ops.interp.e2));
}

SpMat jacobian_impl(const ReconstructionState& state, const InverseProblem& problem) {
  const GridOps& ops = *problem.ops;
  const Layout lay = make_layout(problem);
  const int nn = lay.nn;

  std::vector<int> identity_cols(nn);
  for (int p = 0; p < nn; ++p) identity_cols[p] = p;

  // column maps from node id to position in x
  std::vector<int> sigma_re_cols = lay.free_index;
  std::vector<int> sigma_im_cols(nn, -1);
  if (lay.complex_kind)
    for (int p = 0; p < nn; ++p)
      if (lay.free_index[p] >= 0) sigma_im_cols[p] = lay.nf + lay.free_index[p];

  const SpMat l_re = weighted_laplacian_full<double>(state.s_re, ops);
  SpMat l_im;
  if (lay.complex_kind) l_im = weighted_laplacian_full<double>(state.s_im, ops);

  std::vector<Triplet> trip;
  int at = 0;

  for (int i = 0; i < lay.nexp; ++i) {
    const std::vector<int> rows = pde_rows(problem, i);
    const BoundarySpec& bc = problem.bcs[i];
    const int np = static_cast<int>(rows.size());
    const int nb = static_cast<int>(bc.dirichlet_nodes.size());
    const int ni = static_cast<int>(ops.interior.size());

    auto u_colmap = [&](int part) {
      std::vector<int> map(nn);
      const int base = lay.u_col(i, part);
      for (int p = 0; p < nn; ++p) map[p] = base + p;
      return map;
    };
    const std::vector<int> ucols_re = u_colmap(0);

    if (!lay.complex_kind) {
      const SpMat b_re = weighted_laplacian_sigma_derivative<double>(state.u_re[i], ops);
      append_block(trip, l_re, rows, at, ucols_re);
      append_block(trip, b_re, rows, at, sigma_re_cols);
      at += np;
      for (int k = 0; k < nb; ++k)
        trip.emplace_back(at + k, ucols_re[bc.dirichlet_nodes[k]], 1.0);
      at += nb;
      append_block(trip, measurement_du(state.s_re, state.u_re[i], ops), ops.interior, at,
                   ucols_re, -1.0);
      append_block(trip, measurement_ds(state.u_re[i], nullptr, ops), ops.interior, at,
                   sigma_re_cols, -1.0);
      at += ni;
    } else {
      const std::vector<int> ucols_im = u_colmap(1);
      const SpMat b_ure = weighted_laplacian_sigma_derivative<double>(state.u_re[i], ops);
      const SpMat b_uim = weighted_laplacian_sigma_derivative<double>(state.u_im[i], ops);

      // d/d(.) of L(s')u' - L(s'')u''
      append_block(trip, l_re, rows, at, ucols_re);
      append_block(trip, l_im, rows, at, ucols_im, -1.0);
      append_block(trip, b_ure, rows, at, sigma_re_cols);
      append_block(trip, b_uim, rows, at, sigma_im_cols, -1.0);
      at += np;
      // d/d(.) of L(s')u'' + L(s'')u'
      append_block(trip, l_re, rows, at, ucols_im);
      append_block(trip, l_im, rows, at, ucols_re);
      append_block(trip, b_uim, rows, at, sigma_re_cols);
      append_block(trip, b_ure, rows, at, sigma_im_cols);
      at += np;
      for (int k = 0; k < nb; ++k)
        trip.emplace_back(at + k, ucols_re[bc.dirichlet_nodes[k]], 1.0);
      at += nb;
      for (int k = 0; k < nb; ++k)
        trip.emplace_back(at + k, ucols_im[bc.dirichlet_nodes[k]], 1.0);
      at += nb;
      append_block(trip, measurement_du(state.s_re, state.u_re[i], ops), ops.interior, at,
                   ucols_re, -1.0);
      append_block(trip, measurement_du(state.s_re, state.u_im[i], ops), ops.interior, at,
                   ucols_im, -1.0);
      append_block(trip, measurement_ds(state.u_re[i], &state.u_im[i], ops), ops.interior, at,
                   sigma_re_cols, -1.0);
      at += ni;
    }
  }

  SpMat j(residual_rows(problem, lay), lay.total_cols());
  j.setFromTriplets(trip.begin(), trip.end());
  return j;
}

}  // namespace

void ReconstructionConfig::validate() const {
  if (gamma < 0.0) throw std::invalid_argument("reconstruction: gamma must be nonnegative");
  if (!(step_tol > 0.0)) throw std::invalid_argument("reconstruction: step_tol must be positive");
  if (max_iters < 1) throw std::invalid_argument("reconstruction: max_iters must be >= 1");
  if (boundary_band < 0.0) throw std::invalid_argument("reconstruction: band must be nonnegative");
  if (!(armijo.backtrack > 0.0 && armijo.backtrack < 1.0))
    throw std::invalid_argument("reconstruction: backtrack ratio must be in (0,1)");
  if (!(armijo.slope > 0.0)) throw std::invalid_argument("reconstruction: Armijo slope must be positive");
}

void InverseProblem::validate() const {
  if (ops == nullptr) throw std::invalid_argument("inverse problem: missing grid ops");
  if (bcs.empty()) throw std::invalid_argument("inverse problem: need at least one experiment");
  if (data.H.size() != bcs.size())
    throw std::invalid_argument("inverse problem: data/experiment count mismatch");
  const int nn = ops->grid.node_count();
  for (const auto& h : data.H)
    if (h.size() != nn) throw std::invalid_argument("inverse problem: H grid mismatch");
  if (static_cast<int>(s_free.size()) != nn)
    throw std::invalid_argument("inverse problem: free-sigma mask size mismatch");
  for (const auto& bc : bcs) bc.validate();
}

std::vector<std::uint8_t> free_sigma_mask(const GridSpec& grid, double band_width) {
  std::vector<std::uint8_t> mask(grid.node_count(), 0);
  const double eps = 1e-12 * grid.extent;
  for (int j = 0; j < grid.n; ++j)
    for (int i = 0; i < grid.n; ++i) {
      const double d = std::min(std::min(grid.x(i), grid.extent - grid.x(i)),
                                std::min(grid.y(j), grid.extent - grid.y(j)));
      mask[grid.node_id(i, j)] = d > band_width + eps ? 1 : 0;
    }
  return mask;
}

Vec residual_real(const ReconstructionState& state, const InverseProblem& problem) {
  if (problem.kind != InverseKind::Real)
    throw std::invalid_argument("residual_real: problem is not the real kind");
  problem.validate();
  return residual_impl(state, problem);
}

Vec residual_complex(const ReconstructionState& state, const InverseProblem& problem) {
  if (problem.kind != InverseKind::Complex)
    throw std::invalid_argument("residual_complex: problem is not the complex kind");
  problem.validate();
  return residual_impl(state, problem);
}

SpMat jacobian(const ReconstructionState& state, const InverseProblem& problem) {
  problem.validate();
  return jacobian_impl(state, problem);
}

ReconstructionState initial_guess(const InverseProblem& problem, double sigma0_re,
                                  double sigma0_im, const Vec& known_re, const Vec& known_im) {
  problem.validate();
  if (!(sigma0_re > 0.0)) throw std::invalid_argument("initial_guess: sigma0' must be positive");
  const GridOps& ops = *problem.ops;
  const int nn = ops.grid.node_count();

  ReconstructionState state;
  state.s_re = known_re;
  state.s_im = problem.kind == InverseKind::Complex ? known_im : Vec();
  for (int p = 0; p < nn; ++p)
    if (problem.s_free[p]) {
      state.s_re(p) = sigma0_re;
      if (state.s_im.size() != 0) state.s_im(p) = sigma0_im;
    }

  ConductivityField sigma;
  sigma.re = state.s_re;
  sigma.im = state.s_im.size() != 0 ? state.s_im : Vec::Zero(nn);
  for (const auto& bc : problem.bcs) {
    const PotentialField u = solve(sigma, bc, ops);
    state.u_re.push_back(u.u.real());
    if (problem.kind == InverseKind::Complex) state.u_im.push_back(u.u.imag());
  }
  return state;
}

ReconstructionState gauss_newton(const InverseProblem& problem, const ReconstructionConfig& config,
                                 ReconstructionState state) {
  problem.validate();
  config.validate();
  const Layout lay = make_layout(problem);
  const bool verbose = std::getenv("TNI_GN_VERBOSE") != nullptr;

  Vec x = pack(state, lay);

  auto feasible = [&](const Vec& cand) {
    for (int k = 0; k < lay.nf; ++k)
      if (cand(k) <= 0.0) return false;
    return true;
  };
  auto residual_at = [&](const Vec& cand) {
    ReconstructionState tmp = state;
    unpack(cand, lay, tmp);
    return residual_impl(tmp, problem);
  };

  // The normal-equation sparsity pattern is iteration-independent, so the
  // symbolic analysis is done once. The supernodal Cholesky handles the
  // damped (positive definite) systems; the simplicial LDLT covers
  // gamma = 0, where the normal matrix may be only semidefinite.
  Eigen::SimplicialLDLT<SpMat> ldlt;
#ifdef TNI_HAVE_CHOLMOD
  Eigen::CholmodSupernodalLLT<SpMat, Eigen::Lower> supernodal;
  bool use_supernodal = config.gamma > 0.0;
#else
  bool use_supernodal = false;
#endif
  bool analyzed = false;

  for (int iter = 0; iter < config.max_iters; ++iter) {
    unpack(x, lay, state);
    const Vec r = residual_impl(state, problem);
    const SpMat j = jacobian_impl(state, problem);

    SpMat normal = SpMat(j.transpose() * j);
    SpMat id(normal.rows(), normal.cols());
    id.setIdentity();
    normal += config.gamma * id;

    Vec w;
#ifdef TNI_HAVE_CHOLMOD
    if (use_supernodal) {
      if (!analyzed) {
        supernodal.analyzePattern(normal);
        analyzed = true;
      }
      supernodal.factorize(normal);
      if (supernodal.info() == Eigen::Success) {
        w = supernodal.solve(Vec(-j.transpose() * r));
      } else {
        use_supernodal = false;  // not positive definite; switch solvers
        analyzed = false;
      }
    }
#endif
    if (!use_supernodal) {
      if (!analyzed) {
        ldlt.analyzePattern(normal);
        analyzed = true;
      }
      ldlt.factorize(normal);
      if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("gauss_newton: normal-equation factorization failed");
      w = ldlt.solve(Vec(-j.transpose() * r));
    }
    const double step_norm = w.norm();
    if (verbose)
      std::fprintf(stderr, "gn iter %d: ||r|| = %.6e, ||w|| = %.4f\n", iter, r.norm(), step_norm);

    if (step_norm < config.step_tol) {
      state.log.push_back({iter, r.norm(), step_norm, 0});
      state.converged = true;
      break;
    }

    const double f0 = r.squaredNorm();
    const double slope = 2.0 * r.dot(j * w);  // directional derivative of ||r||^2
    double t = 1.0;
    int backtracks = 0;
    bool accepted = false;
    while (backtracks <= config.armijo.max_backtracks) {
      const Vec cand = x + t * w;
      if (feasible(cand)) {
        const double f = residual_at(cand).squaredNorm();
        if (f <= f0 + config.armijo.slope * t * slope) {
          x = cand;
          accepted = true;
          break;
        }
      }
      t *= config.armijo.backtrack;
      ++backtracks;
    }
    if (!accepted) {
      std::ostringstream msg;
      msg << "gauss_newton: line search failed after " << config.armijo.max_backtracks
          << " backtracks at iteration " << iter << " (||r|| = " << r.norm()
          << ", ||w|| = " << step_norm << ", slope = " << slope << ")";
      throw std::runtime_error(msg.str());
    }
    state.log.push_back({iter, r.norm(), step_norm, backtracks});
  }

  unpack(x, lay, state);
  return state;
}

}  // namespace tni
