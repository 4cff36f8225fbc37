#include "tni/grid.hpp"

#include <algorithm>
#include <stdexcept>

namespace tni {

void GridSpec::validate() const {
  if (n < 3) throw std::invalid_argument("grid: need n >= 3 nodes per side");
  if (!(extent > 0.0)) throw std::invalid_argument("grid: extent must be positive");
  if (fine_factor < 1) throw std::invalid_argument("grid: fine_factor must be >= 1");
}

Vec2 GridSpec::edge_midpoint(int e) const {
  if (e < hedge_count()) {
    const int i = e % (n - 1);
    const int j = e / (n - 1);
    return {(i + 0.5) * dx(), j * dy()};
  }
  const int v = e - hedge_count();
  const int i = v % n;
  const int j = v / n;
  return {i * dx(), (j + 0.5) * dy()};
}

std::string to_string(OperatorRole role) {
  switch (role) {
    case OperatorRole::D1: return "D1";
    case OperatorRole::D2: return "D2";
    case OperatorRole::D: return "D";
    case OperatorRole::N1: return "N1";
    case OperatorRole::N2: return "N2";
    case OperatorRole::E1: return "E1";
    case OperatorRole::E2: return "E2";
    case OperatorRole::E12: return "E12";
  }
  return "?";
}

DifferenceOperators build_difference_operators(const GridSpec& grid) {
  grid.validate();
  const int n = grid.n;
  const double inv_dx = 1.0 / grid.dx();
  const double inv_dy = 1.0 / grid.dy();

  std::vector<Triplet> t1;
  t1.reserve(2 * grid.hedge_count());
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n - 1; ++i) {
      const int e = grid.hedge_id(i, j);
      t1.emplace_back(e, grid.node_id(i, j), -inv_dx);
      t1.emplace_back(e, grid.node_id(i + 1, j), inv_dx);
    }

  std::vector<Triplet> t2;
  t2.reserve(2 * grid.vedge_count());
  for (int j = 0; j < n - 1; ++j)
    for (int i = 0; i < n; ++i) {
      const int e = grid.vedge_id(i, j);
      t2.emplace_back(e, grid.node_id(i, j), -inv_dy);
      t2.emplace_back(e, grid.node_id(i, j + 1), inv_dy);
    }

  DifferenceOperators ops;
  ops.d1.resize(grid.hedge_count(), grid.node_count());
  ops.d1.setFromTriplets(t1.begin(), t1.end());
  ops.d2.resize(grid.vedge_count(), grid.node_count());
  ops.d2.setFromTriplets(t2.begin(), t2.end());

  std::vector<Triplet> td;
  td.reserve(t1.size() + t2.size());
  td.insert(td.end(), t1.begin(), t1.end());
  for (const auto& t : t2) td.emplace_back(t.row() + grid.hedge_count(), t.col(), t.value());
  ops.d.resize(grid.edge_count(), grid.node_count());
  ops.d.setFromTriplets(td.begin(), td.end());
  return ops;
}

SpMat phi(const SpMat& a) {
  // phi(A) = Diag(|A^T| 1)^{-1} |A^T|, assembled column-by-column of A.
  const int rows = static_cast<int>(a.cols());
  const int cols = static_cast<int>(a.rows());

  Vec row_sum = Vec::Zero(rows);
  for (int k = 0; k < a.outerSize(); ++k)
    for (SpMat::InnerIterator it(a, k); it; ++it) row_sum(it.col()) += std::abs(it.value());

  for (int r = 0; r < rows; ++r)
    if (row_sum(r) == 0.0) throw std::runtime_error("degenerate interpolation row");

  std::vector<Triplet> trip;
  trip.reserve(a.nonZeros());
  for (int k = 0; k < a.outerSize(); ++k)
    for (SpMat::InnerIterator it(a, k); it; ++it)
      trip.emplace_back(it.col(), it.row(), std::abs(it.value()) / row_sum(it.col()));

  SpMat out(rows, cols);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

Interpolators build_interpolators(const DifferenceOperators& diff) {
  // With D1, D2 stored as edges x nodes, phi of the operator itself averages
  // edges to nodes and phi of its transpose averages nodes to edges.
  Interpolators in;
  in.n1 = phi(diff.d1);
  in.n2 = phi(diff.d2);
  in.e1 = phi(SpMat(diff.d1.transpose()));
  in.e2 = phi(SpMat(diff.d2.transpose()));

  std::vector<Triplet> trip;
  trip.reserve(in.e1.nonZeros() + in.e2.nonZeros());
  for (int k = 0; k < in.e1.outerSize(); ++k)
    for (SpMat::InnerIterator it(in.e1, k); it; ++it)
      trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  const int h = static_cast<int>(in.e1.rows());
  for (int k = 0; k < in.e2.outerSize(); ++k)
    for (SpMat::InnerIterator it(in.e2, k); it; ++it)
      trip.emplace_back(static_cast<int>(it.row()) + h, static_cast<int>(it.col()), it.value());
  in.e12.resize(in.e1.rows() + in.e2.rows(), in.e1.cols());
  in.e12.setFromTriplets(trip.begin(), trip.end());
  return in;
}

const SpMat& GridOps::op(OperatorRole role) const {
  switch (role) {
    case OperatorRole::D1: return diff.d1;
    case OperatorRole::D2: return diff.d2;
    case OperatorRole::D: return diff.d;
    case OperatorRole::N1: return interp.n1;
    case OperatorRole::N2: return interp.n2;
    case OperatorRole::E1: return interp.e1;
    case OperatorRole::E2: return interp.e2;
    case OperatorRole::E12: return interp.e12;
  }
  throw std::logic_error("unknown operator role");
}

GridOps make_grid_ops(const GridSpec& grid) {
  grid.validate();
  GridOps ops;
  ops.grid = grid;
  ops.diff = build_difference_operators(grid);
  ops.interp = build_interpolators(ops.diff);
  for (int j = 0; j < grid.n; ++j)
    for (int i = 0; i < grid.n; ++i)
      (grid.is_boundary(i, j) ? ops.boundary : ops.interior).push_back(grid.node_id(i, j));
  return ops;
}

GapSpec symmetric_gap(double lo, double hi) {
  GapSpec gaps;
  for (auto& side : gaps) side.push_back({lo, hi});
  return gaps;
}

namespace {

void validate_intervals(const std::vector<Interval>& ivs, double extent) {
  std::vector<Interval> sorted = ivs;
  std::sort(sorted.begin(), sorted.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  double prev_hi = -1.0;
  for (const auto& iv : sorted) {
    if (!(iv.lo < iv.hi)) throw std::invalid_argument("boundary gaps: inverted interval");
    if (iv.lo < 0.0 || iv.hi > extent)
      throw std::invalid_argument("boundary gaps: interval outside [0, L]");
    if (iv.lo < prev_hi) throw std::invalid_argument("boundary gaps: overlapping intervals");
    prev_hi = iv.hi;
  }
}

bool strictly_inside_any(double c, const std::vector<Interval>& ivs) {
  for (const auto& iv : ivs)
    if (c > iv.lo && c < iv.hi) return true;
  return false;
}

}  // namespace

BoundaryPartition classify_boundary(const GridSpec& grid, const GapSpec& gaps) {
  grid.validate();
  for (const auto& side : gaps) validate_intervals(side, grid.extent);

  BoundaryPartition part;
  const int n = grid.n;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      if (!grid.is_boundary(i, j)) continue;
      // A node is a gap node only if every side it lies on places it
      // strictly inside a gap interval; electrode intervals are closed.
      bool on_some_side = false;
      bool gap_on_all = true;
      auto check = [&](Side s, double coord) {
        on_some_side = true;
        if (!strictly_inside_any(coord, gaps[static_cast<int>(s)])) gap_on_all = false;
      };
      if (j == 0) check(Side::Bottom, grid.x(i));
      if (i == n - 1) check(Side::Right, grid.y(j));
      if (j == n - 1) check(Side::Top, grid.x(i));
      if (i == 0) check(Side::Left, grid.y(j));
      const int id = grid.node_id(i, j);
      (on_some_side && gap_on_all ? part.gap : part.electrode).push_back(id);
    }
  return part;
}

}  // namespace tni
