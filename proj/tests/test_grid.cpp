#include <doctest.h>

#include <stdexcept>

#include "tni/grid.hpp"

using namespace tni;

namespace {

Vec node_field(const GridSpec& g, double (*f)(double, double)) {
  Vec v(g.node_count());
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) v(g.node_id(i, j)) = f(g.x(i), g.y(j));
  return v;
}

}  // namespace

TEST_CASE("difference operators on constant and linear fields") {
  const GridSpec grid{5, 10.0, 1};
  const auto diff = build_difference_operators(grid);

  const Vec c = Vec::Constant(grid.node_count(), 3.25);
  CHECK((diff.d1 * c).lpNorm<Eigen::Infinity>() == doctest::Approx(0.0));
  CHECK((diff.d2 * c).lpNorm<Eigen::Infinity>() == doctest::Approx(0.0));

  const Vec x = node_field(grid, [](double px, double) { return px; });
  const Vec d1x = diff.d1 * x;
  const Vec d2x = diff.d2 * x;
  for (int e = 0; e < d1x.size(); ++e) CHECK(d1x(e) == doctest::Approx(1.0));
  CHECK(d2x.lpNorm<Eigen::Infinity>() == doctest::Approx(0.0));

  // a*x + b*y + c maps to constant edge fields (a on horizontal, b on vertical)
  const Vec lin = node_field(grid, [](double px, double py) { return 2.0 * px - 0.5 * py + 1.0; });
  const Vec d1l = diff.d1 * lin;
  const Vec d2l = diff.d2 * lin;
  for (int e = 0; e < d1l.size(); ++e) CHECK(d1l(e) == doctest::Approx(2.0));
  for (int e = 0; e < d2l.size(); ++e) CHECK(d2l(e) == doctest::Approx(-0.5));
}

TEST_CASE("forward difference stencil on a 3x3 grid") {
  const GridSpec grid{3, 10.0, 1};
  const auto diff = build_difference_operators(grid);
  Vec psi(9);
  for (int j = 0; j < 3; ++j) {
    psi(grid.node_id(0, j)) = 0.0;
    psi(grid.node_id(1, j)) = 1.0;
    psi(grid.node_id(2, j)) = 4.0;
  }
  const Vec d1 = diff.d1 * psi;
  for (int j = 0; j < 3; ++j) {
    CHECK(d1(grid.hedge_id(0, j)) == doctest::Approx(0.2));
    CHECK(d1(grid.hedge_id(1, j)) == doctest::Approx(0.6));
  }
}

TEST_CASE("phi evaluates the row-normalized absolute transpose") {
  SpMat a(2, 2);
  std::vector<Triplet> t{{0, 0, 1.0}, {0, 1, -1.0}, {1, 1, 2.0}};
  a.setFromTriplets(t.begin(), t.end());
  const SpMat p = phi(a);
  const Mat dense = Mat(p);
  CHECK(dense(0, 0) == doctest::Approx(1.0));
  CHECK(dense(0, 1) == doctest::Approx(0.0));
  CHECK(dense(1, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(dense(1, 1) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("phi preserves constants and rejects degenerate columns") {
  const GridSpec grid{4, 10.0, 1};
  const auto diff = build_difference_operators(grid);
  const SpMat p = phi(diff.d1);
  const Vec c = Vec::Constant(p.cols(), 7.0);
  CHECK(((p * c).array() - 7.0).abs().maxCoeff() < 1e-14);

  SpMat bad(2, 2);
  std::vector<Triplet> t{{0, 0, 1.0}, {1, 0, 2.0}};  // column 1 empty
  bad.setFromTriplets(t.begin(), t.end());
  CHECK_THROWS_WITH_AS((void)phi(bad), "degenerate interpolation row", std::runtime_error);
}

TEST_CASE("interpolators are row-stochastic and preserve constants") {
  const GridSpec grid{6, 10.0, 1};
  const GridOps ops = make_grid_ops(grid);

  for (const auto* m : {&ops.interp.n1, &ops.interp.n2, &ops.interp.e1, &ops.interp.e2, &ops.interp.e12}) {
    Vec row_sums = *m * Vec::Ones(m->cols());
    CHECK((row_sums.array() - 1.0).abs().maxCoeff() < 1e-12);
    for (int k = 0; k < m->outerSize(); ++k)
      for (SpMat::InnerIterator it(*m, k); it; ++it) CHECK(it.value() >= 0.0);
  }

  const Vec c_edge = Vec::Constant(grid.hedge_count(), -2.5);
  CHECK(((ops.interp.n1 * c_edge).array() + 2.5).abs().maxCoeff() < 1e-14);
  const Vec c_node = Vec::Constant(grid.node_count(), 1.75);
  CHECK(((ops.interp.e12 * c_node).array() - 1.75).abs().maxCoeff() < 1e-14);
  // E1 followed by N1 keeps constants exactly
  CHECK(((ops.interp.n1 * (ops.interp.e1 * c_node)).array() - 1.75).abs().maxCoeff() < 1e-14);
}

TEST_CASE("E1 averages adjacent nodes") {
  const GridSpec grid{3, 10.0, 1};
  const GridOps ops = make_grid_ops(grid);
  const Vec x = node_field(grid, [](double px, double) { return px; });
  const Vec ex = ops.interp.e1 * x;
  for (int j = 0; j < 3; ++j) {
    CHECK(ex(grid.hedge_id(0, j)) == doctest::Approx(2.5));
    CHECK(ex(grid.hedge_id(1, j)) == doctest::Approx(7.5));
  }
}

TEST_CASE("interior/boundary partition is exhaustive and disjoint") {
  const GridSpec grid{7, 10.0, 1};
  const GridOps ops = make_grid_ops(grid);
  CHECK(static_cast<int>(ops.interior.size() + ops.boundary.size()) == grid.node_count());
  CHECK(static_cast<int>(ops.interior.size()) == (grid.n - 2) * (grid.n - 2));
  std::vector<bool> seen(grid.node_count(), false);
  for (int p : ops.interior) seen[p] = true;
  for (int p : ops.boundary) {
    CHECK(!seen[p]);
    seen[p] = true;
  }
}

TEST_CASE("boundary classification without gaps is full Dirichlet") {
  const GridSpec grid{9, 10.0, 1};
  const GridOps ops = make_grid_ops(grid);
  const auto part = classify_boundary(grid, GapSpec{});
  CHECK(part.gap.empty());
  CHECK(part.electrode == ops.boundary);
}

TEST_CASE("electrode set with the centered gaps") {
  // gap (4.5, 5.5) on every side; electrode intervals are closed
  SUBCASE("n=101 has 9 gap nodes per side") {
    const GridSpec grid{101, 10.0, 1};
    const auto part = classify_boundary(grid, symmetric_gap(4.5, 5.5));
    CHECK(static_cast<int>(part.gap.size()) == 4 * 9);
    for (int p : part.gap) {
      const double cx = grid.x(p % grid.n), cy = grid.y(p / grid.n);
      const double side_coord = (cy == 0.0 || cy == 10.0) ? cx : cy;
      CHECK(side_coord > 4.5);
      CHECK(side_coord < 5.5);
    }
  }
  SUBCASE("interval endpoints stay on the electrode") {
    const GridSpec grid{21, 10.0, 1};  // nodes every 0.5, so 4.5 and 5.5 are nodes
    const auto part = classify_boundary(grid, symmetric_gap(4.5, 5.5));
    CHECK(static_cast<int>(part.gap.size()) == 4);  // only the 5.0 nodes
    // corners are electrodes
    for (int corner : {grid.node_id(0, 0), grid.node_id(20, 0), grid.node_id(0, 20), grid.node_id(20, 20)})
      CHECK(std::find(part.electrode.begin(), part.electrode.end(), corner) != part.electrode.end());
  }
  SUBCASE("union with gaps is the whole boundary") {
    const GridSpec grid{14, 10.0, 1};
    const GridOps ops = make_grid_ops(grid);
    const auto part = classify_boundary(grid, symmetric_gap(4.5, 5.5));
    std::vector<int> all = part.electrode;
    all.insert(all.end(), part.gap.begin(), part.gap.end());
    std::sort(all.begin(), all.end());
    CHECK(all == ops.boundary);
  }
}

TEST_CASE("invalid gap intervals are rejected") {
  const GridSpec grid{11, 10.0, 1};
  GapSpec inverted;
  inverted[0].push_back({5.5, 4.5});
  CHECK_THROWS_AS((void)classify_boundary(grid, inverted), std::invalid_argument);

  GapSpec overlapping;
  overlapping[1].push_back({2.0, 5.0});
  overlapping[1].push_back({4.0, 6.0});
  CHECK_THROWS_AS((void)classify_boundary(grid, overlapping), std::invalid_argument);

  GapSpec outside;
  outside[2].push_back({8.0, 12.0});
  CHECK_THROWS_AS((void)classify_boundary(grid, outside), std::invalid_argument);
}

TEST_CASE("grid spec validation") {
  CHECK_THROWS_AS((GridSpec{2, 10.0, 1}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((GridSpec{5, -1.0, 1}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((GridSpec{5, 10.0, 0}.validate()), std::invalid_argument);
  const GridSpec g{60, 10.0, 2};
  CHECK(g.fine().n == 120);
  CHECK(g.edge_count() == 2 * 60 * 59);
}
