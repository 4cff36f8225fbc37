#pragma once

#include <array>
#include <string>
#include <vector>

#include "tni/types.hpp"

namespace tni {

/// Uniform n x n grid on the square [0, extent]^2.
///
/// Node (i,j) sits at (i*dx, j*dy) with i,j in 0..n-1, so boundary nodes
/// coincide with the boundary of the square. Node fields are stored
/// x-fastest: value(i,j) lives at index i + j*n. Edge fields store all
/// horizontal edges in row-major order followed by all vertical edges.
struct GridSpec {
  int n = 3;             // nodes per side
  double extent = 10.0;  // side length, cm
  int fine_factor = 1;   // fine grid has n*fine_factor nodes per side

  void validate() const;

  double dx() const { return extent / (n - 1); }
  double dy() const { return dx(); }

  int node_count() const { return n * n; }
  int hedge_count() const { return (n - 1) * n; }
  int vedge_count() const { return n * (n - 1); }
  int edge_count() const { return hedge_count() + vedge_count(); }

  int node_id(int i, int j) const { return i + j * n; }
  // horizontal edge (i,j)->(i+1,j), i in 0..n-2
  int hedge_id(int i, int j) const { return i + j * (n - 1); }
  // vertical edge (i,j)->(i,j+1), j in 0..n-2, indexed within the vertical block
  int vedge_id(int i, int j) const { return i + j * n; }

  double x(int i) const { return i * dx(); }
  double y(int j) const { return j * dy(); }

  bool is_boundary(int i, int j) const {
    return i == 0 || j == 0 || i == n - 1 || j == n - 1;
  }

  // midpoint of an edge, by global edge index (horizontal block first)
  Vec2 edge_midpoint(int e) const;

  GridSpec fine() const { return GridSpec{n * fine_factor, extent, 1}; }
};

/// First-order forward difference operators. d1 maps node fields to
/// horizontal-edge fields, d2 to vertical-edge fields; d stacks them.
struct DifferenceOperators {
  SpMat d1;  // hedges x nodes
  SpMat d2;  // vedges x nodes
  SpMat d;   // all edges x nodes
};

/// Node<->edge interpolation operators. n1/n2 average incident edge values
/// to nodes; e1/e2 average endpoint node values to edges; e12 stacks e1, e2.
struct Interpolators {
  SpMat n1;   // nodes x hedges
  SpMat n2;   // nodes x vedges
  SpMat e1;   // hedges x nodes
  SpMat e2;   // vedges x nodes
  SpMat e12;  // all edges x nodes
};

enum class OperatorRole { D1, D2, D, N1, N2, E1, E2, E12 };

std::string to_string(OperatorRole role);

DifferenceOperators build_difference_operators(const GridSpec& grid);

/// Row-normalized absolute transpose: phi(A) = Diag(|A^T| 1)^{-1} |A^T|.
/// The result is row-stochastic and preserves constant vectors. Throws
/// "degenerate interpolation row" if some column of A is entirely zero.
SpMat phi(const SpMat& a);

Interpolators build_interpolators(const DifferenceOperators& diff);

/// Everything the discrete operators need, built once per grid and immutable
/// afterwards; safe to share across threads.
struct GridOps {
  GridSpec grid;
  DifferenceOperators diff;
  Interpolators interp;
  std::vector<int> interior;  // node ids, ascending
  std::vector<int> boundary;  // node ids, ascending

  const SpMat& op(OperatorRole role) const;
};

GridOps make_grid_ops(const GridSpec& grid);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Gap (no-flux) intervals per side, indexed Bottom=0, Right=1, Top=2, Left=3.
/// The side coordinate is x for bottom/top and y for left/right.
using GapSpec = std::array<std::vector<Interval>, 4>;

enum class Side { Bottom = 0, Right = 1, Top = 2, Left = 3 };

/// Same open gap (lo, hi) at the middle of every side.
GapSpec symmetric_gap(double lo, double hi);

/// Electrode/gap split of the boundary nodes. Electrode intervals are closed,
/// so a node lands in the gap set only when its side coordinate is strictly
/// inside a gap interval on every side it belongs to.
struct BoundaryPartition {
  std::vector<int> electrode;  // Gamma, ascending node ids
  std::vector<int> gap;        // ascending node ids
};

BoundaryPartition classify_boundary(const GridSpec& grid, const GapSpec& gaps);

}  // namespace tni
