#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "tni/forward.hpp"
#include "tni/phantom.hpp"

using namespace tni;

namespace {

CVec affine_values(const GridSpec& g, const std::vector<int>& nodes) {
  CVec v(nodes.size());
  for (size_t k = 0; k < nodes.size(); ++k)
    v(k) = (g.x(nodes[k] % g.n) + g.y(nodes[k] / g.n)) / 10.0;
  return v;
}

// independent dense evaluation of the nodal power density
Vec dense_internal_functional(const Vec& s, const CVec& u, const GridSpec& g) {
  Vec out = Vec::Zero(g.node_count());
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      const int p = g.node_id(i, j);
      double acc_h = 0.0;
      int cnt_h = 0;
      for (int ii : {i - 1, i}) {
        if (ii < 0 || ii >= g.n - 1) continue;
        const double w = 0.5 * (s(g.node_id(ii, j)) + s(g.node_id(ii + 1, j)));
        const double d = std::abs(u(g.node_id(ii + 1, j)) - u(g.node_id(ii, j))) / g.dx();
        acc_h += w * d * d;
        ++cnt_h;
      }
      double acc_v = 0.0;
      int cnt_v = 0;
      for (int jj : {j - 1, j}) {
        if (jj < 0 || jj >= g.n - 1) continue;
        const double w = 0.5 * (s(g.node_id(i, jj)) + s(g.node_id(i, jj + 1)));
        const double d = std::abs(u(g.node_id(i, jj + 1)) - u(g.node_id(i, jj))) / g.dy();
        acc_v += w * d * d;
        ++cnt_v;
      }
      out(p) = acc_h / cnt_h + acc_v / cnt_v;
    }
  return out;
}

}  // namespace

TEST_CASE("weighted Laplacian annihilates linear fields for constant sigma") {
  const GridSpec grid{8, 10.0, 1};
  const GridOps ops = make_grid_ops(grid);
  const ConductivityField sigma = ConductivityField::constant(grid, 1.0);

  CVec u(grid.node_count());
  for (int j = 0; j < grid.n; ++j)
    for (int i = 0; i < grid.n; ++i)
      u(grid.node_id(i, j)) = Complex(0.3 * grid.x(i) - 1.1 * grid.y(j) + 2.0, 0.0);

  const CSpMat l_interior = assemble_weighted_laplacian(sigma, ops);
  CHECK((l_interior * u).lpNorm<Eigen::Infinity>() < 1e-13);
}

TEST_CASE("interior rows are complex-symmetric") {
  const GridSpec grid{6, 10.0, 1};
  const GridOps ops = make_grid_ops(grid);
  ConductivityField sigma = phantom("complex-default", grid);
  const CSpMat full = weighted_laplacian_full<Complex>(sigma.complex_values(), ops);
  const CMat dense = CMat(full);
  // complex symmetric (A = A^T), not Hermitian
  CHECK((dense - dense.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((dense - dense.adjoint()).cwiseAbs().maxCoeff() > 1e-6);
}

TEST_CASE("unit conductivity gives the standard 5-point stencil") {
  const GridSpec grid{3, 10.0, 1};
  const GridOps ops = make_grid_ops(grid);
  const ConductivityField sigma = ConductivityField::constant(grid, 1.0);
  const CMat dense = CMat(weighted_laplacian_full<Complex>(sigma.complex_values(), ops));
  const int center = grid.node_id(1, 1);
  const double inv_h2 = 1.0 / (grid.dx() * grid.dx());
  CHECK(dense(center, center).real() == doctest::Approx(4.0 * inv_h2));
  for (int nb : {grid.node_id(0, 1), grid.node_id(2, 1), grid.node_id(1, 0), grid.node_id(1, 2)})
    CHECK(dense(center, nb).real() == doctest::Approx(-inv_h2));
}

TEST_CASE("solver reproduces affine fields exactly") {
  const GridSpec grid{12, 10.0, 1};
  const GridOps ops = make_grid_ops(grid);
  const ConductivityField sigma = ConductivityField::constant(grid, 1.3);
  const BoundarySpec bc = make_full_dirichlet(ops, affine_values(grid, ops.boundary));
  const PotentialField u = solve(sigma, bc, ops);
  for (int j = 0; j < grid.n; ++j)
    for (int i = 0; i < grid.n; ++i)
      CHECK(std::abs(u.u(grid.node_id(i, j)) - Complex((grid.x(i) + grid.y(j)) / 10.0)) < 1e-12);
}

TEST_CASE("constant complex sigma with real data yields a real potential") {
  const GridSpec grid{10, 10.0, 1};
  const GridOps ops = make_grid_ops(grid);
  const ConductivityField sigma = ConductivityField::constant(grid, 0.8, 0.6);
  const BoundarySpec bc =
      make_full_dirichlet(ops, electrode_token_values("g1", grid, ops.boundary));
  const PotentialField u = solve(sigma, bc, ops);
  CHECK(u.u.imag().lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("scaling invariance: solve(c*sigma) = solve(sigma)") {
  const GridSpec grid{9, 10.0, 1};
  const GridOps ops = make_grid_ops(grid);
  const ConductivityField sigma = phantom("two-bumps", grid);
  ConductivityField scaled;
  const Complex c(0.7, 1.9);
  scaled.re = Vec(sigma.re.size());
  scaled.im = Vec(sigma.re.size());
  for (int p = 0; p < sigma.re.size(); ++p) {
    const Complex v = c * Complex(sigma.re(p), sigma.im(p));
    scaled.re(p) = v.real();
    scaled.im(p) = v.imag();
  }
  const BoundarySpec bc = make_full_dirichlet(ops, electrode_token_values("h2", grid, ops.boundary));
  const PotentialField u1 = solve(sigma, bc, ops);
  const PotentialField u2 = solve(scaled, bc, ops);
  CHECK((u1.u - u2.u).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("discrete maximum principle and flux conservation") {
  const GridSpec grid{20, 10.0, 1};
  const GridOps ops = make_grid_ops(grid);
  // piecewise conductivity jump
  ConductivityField sigma = ConductivityField::constant(grid, 0.5);
  for (int j = 0; j < grid.n; ++j)
    for (int i = 0; i < grid.n; ++i)
      if (grid.x(i) > 5.0) sigma.re(grid.node_id(i, j)) = 2.0;

  const BoundarySpec bc = make_full_dirichlet(ops, electrode_token_values("g1", grid, ops.boundary));
  const PotentialField u = solve(sigma, bc, ops);

  const double emin = bc.values.real().minCoeff();
  const double emax = bc.values.real().maxCoeff();
  CHECK(u.u.real().minCoeff() >= emin - 1e-12);
  CHECK(u.u.real().maxCoeff() <= emax + 1e-12);

  const CSpMat l_interior = assemble_weighted_laplacian(sigma, ops);
  const CVec residual = l_interior * u.u;
  CHECK(std::abs(residual.sum()) < 1e-10);
  CHECK(residual.lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("mixed boundary conditions enforce zero flux at gap nodes") {
  const GridSpec grid{15, 10.0, 1};
  const GridOps ops = make_grid_ops(grid);
  const ConductivityField sigma = phantom("two-bumps", grid);
  const BoundaryPartition part = classify_boundary(grid, symmetric_gap(4.5, 5.5));
  REQUIRE(!part.gap.empty());
  const BoundarySpec bc = make_mixed(part, electrode_token_values("g1", grid, part.electrode));
  const PotentialField u = solve(sigma, bc, ops);

  const CSpMat full = weighted_laplacian_full<Complex>(sigma.complex_values(), ops);
  const CVec residual = full * u.u;
  for (int p : part.gap) CHECK(std::abs(residual(p)) < 1e-10);
  for (int p : ops.interior) CHECK(std::abs(residual(p)) < 1e-10);

  // constant electrode data + zero flux admits only the constant solution
  const BoundarySpec bc_const =
      make_mixed(part, CVec::Constant(static_cast<Eigen::Index>(part.electrode.size()), 2.5));
  const PotentialField uc = solve(sigma, bc_const, ops);
  CHECK((uc.u.array() - Complex(2.5)).abs().maxCoeff() < 1e-10);
}

TEST_CASE("solve reports a floating potential") {
  const GridSpec grid{8, 10.0, 1};
  const GridOps ops = make_grid_ops(grid);
  const ConductivityField sigma = ConductivityField::constant(grid, 1.0);
  BoundarySpec bc;
  bc.kind = BcKind::Mixed;
  bc.gap_nodes = ops.boundary;
  bc.values = CVec(0);
  CHECK_THROWS_WITH_AS((void)solve(sigma, bc, ops),
                       "floating potential: no Dirichlet node to pin the solution",
                       std::runtime_error);
}

TEST_CASE("electrode functions at the corner nodes") {
  const GridSpec grid{3, 10.0, 1};
  const std::vector<int> nodes{grid.node_id(2, 0), grid.node_id(0, 2), grid.node_id(2, 2)};
  const CVec g1 = boundary_function('g', 1, false, grid, nodes);
  const CVec h1 = boundary_function('h', 1, false, grid, nodes);
  // (10, 0): theta = 0, r = 10
  CHECK(std::abs(g1(0)) < 1e-14);
  CHECK(h1(0).real() == doctest::Approx(5.0));
  // (0, 10): theta = pi/2
  CHECK(g1(1).real() == doctest::Approx(5.0));
  CHECK(std::abs(h1(1)) < 1e-14);
  // (10, 10): r = sqrt(200), g2 = 5 sqrt(2)
  const CVec g2 = boundary_function('g', 2, false, grid, nodes);
  CHECK(g2(2).real() == doctest::Approx(5.0 * std::sqrt(2.0)));

  const CVec gt1 = boundary_function('g', 1, true, grid, nodes);
  CHECK(gt1(0) == Complex(g1(0).real(), 0.5 * h1(0).real()));
  const CVec ht1 = boundary_function('h', 1, true, grid, nodes);
  CHECK(ht1(1) == Complex(h1(1).real(), 0.5 * g1(1).real()));

  CHECK_THROWS_AS((void)boundary_function('x', 1, false, grid, nodes), std::invalid_argument);
  CHECK_THROWS_AS((void)electrode_token_values("q3", grid, nodes), std::invalid_argument);
}

TEST_CASE("internal functional of an affine potential is constant") {
  const GridSpec grid{14, 10.0, 1};
  const GridOps ops = make_grid_ops(grid);
  const double s = 1.7;
  const ConductivityField sigma = ConductivityField::constant(grid, s);
  const BoundarySpec bc = make_full_dirichlet(ops, affine_values(grid, ops.boundary));
  const PotentialField u = solve(sigma, bc, ops);
  const Vec h = internal_functional(sigma, u, ops);
  for (int p : ops.interior) CHECK(h(p) == doctest::Approx(0.02 * s).epsilon(1e-10));

  PotentialField uc;
  uc.n = grid.n;
  uc.u = CVec::Constant(grid.node_count(), Complex(4.2, -1.0));
  CHECK(internal_functional(sigma, uc, ops).lpNorm<Eigen::Infinity>() < 1e-14);
}

TEST_CASE("internal functional matches a dense re-computation") {
  const GridSpec grid{10, 10.0, 1};
  const GridOps ops = make_grid_ops(grid);
  ConductivityField sigma = ConductivityField::constant(grid, 1.0);
  for (int j = 0; j < grid.n; ++j)
    for (int i = 0; i < grid.n; ++i)
      sigma.re(grid.node_id(i, j)) = 1.0 + 0.5 * ((i + j) % 2);  // checkerboard

  const BoundarySpec bc = make_full_dirichlet(ops, electrode_token_values("gt1", grid, ops.boundary));
  const PotentialField u = solve(sigma, bc, ops);
  const Vec h = internal_functional(sigma, u, ops);
  const Vec oracle = dense_internal_functional(sigma.re, u.u, grid);
  CHECK((h - oracle).lpNorm<Eigen::Infinity>() < 1e-12 * oracle.lpNorm<Eigen::Infinity>());
}

TEST_CASE("quasi-static validity numbers") {
  // tissue-like plate: omega mu |sigma| L^2 ~ 1.7e-4
  const double omega = 2.0 * 3.14159265358979323846 * 1e4;
  const double sigma_abs = complex_conductivity_magnitude(2.0, omega, 1e-6);
  const double value = quasistatic_check(10.0, sigma_abs, omega);
  CHECK(value == doctest::Approx(1.7e-4).epsilon(0.10));
  CHECK(value < 1.0);

  CHECK(quasistatic_check(10.0, 0.0, omega) == doctest::Approx(0.0));

  // gold slab at 100 Hz: far from quasi-static
  const double gold = quasistatic_check_si(0.01, 4.5e7, 2.0 * 3.14159265358979323846 * 100.0);
  CHECK(gold > 1.0);
}

TEST_CASE("conductivity field invariants") {
  const GridSpec grid{5, 10.0, 1};
  ConductivityField bad = ConductivityField::constant(grid, 1.0);
  bad.re(3) = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  ConductivityField neg = ConductivityField::constant(grid, 1.0, 0.5);
  neg.im(2) = -0.1;
  CHECK_THROWS_AS(neg.validate(), std::invalid_argument);

  const PhysicalConstants constants;
  CHECK(constants.kappa == doctest::Approx(1.36e-23));
  CHECK(constants.hbar == doctest::Approx(1.05e-34));
  CHECK(constants.mu0 > 0.0);
}
