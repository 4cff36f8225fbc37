#pragma once

#include <vector>

#include "tni/forward.hpp"
#include "tni/grid.hpp"
#include "tni/types.hpp"

namespace tni {

/// Nodal gradients of a solved potential, F = (N1 D1 u, N2 D2 u).
struct GradientField {
  CVec fx;
  CVec fy;
};

std::vector<GradientField> field_gradients(const std::vector<PotentialField>& us,
                                           const GridOps& ops);

/// K directions uniformly spaced on the unit circle.
std::vector<Vec2> unit_directions(int count);

/// Principal symbol of the linearized real-conductivity problem: the
/// 2n x (n+1) matrix with one measurement row and one PDE row per
/// experiment, Douglis-Nirenberg weights s = (0,1,...), t = (0,1,...,1).
CMat real_symbol(const std::vector<Vec2>& F, double sigma, const Vec2& xi);

/// Principal symbol of the linearized complex-conductivity problem: the
/// 3n x (2+2n) matrix with one measurement row and two PDE rows per
/// experiment, weights s = (0,1,1,...), t = (0,0,1,1,...).
CMat complex_symbol(const std::vector<CVec2>& F, double sigma_re, double sigma_im,
                    const Vec2& xi);

/// The (2+2n) x (2+2n) square sub-matrix used in the injectivity argument:
/// measurement rows of the first two experiments kept, the others deleted,
/// measurement rows moved on top (an even permutation of the n=2 symbol).
CMat complex_symbol_square_submatrix(const std::vector<CVec2>& F, double sigma_re,
                                     double sigma_im, const Vec2& xi);

/// Closed form of the Schur-complement determinant of the square sub-matrix
/// after eliminating the block-diagonal PDE block.
double schur_determinant(const CVec2& F1, const CVec2& F2, double sigma_re, double sigma_im,
                         const Vec2& xi);

/// Closed form of the square sub-matrix determinant,
/// 2 s'' s' |xi|^(4n-2) |s|^(2(n-1)) (|F2|^2 |F1.xi|^2 - |F1|^2 |F2.xi|^2),
/// equal to schur_determinant times the block-diagonal determinant.
double full_subdeterminant(const CVec2& F1, const CVec2& F2, double sigma_re, double sigma_im,
                           const Vec2& xi, int n);

/// Pointwise injectivity test |F_i|^2 |F_j.xi|^2 != |F_j|^2 |F_i.xi|^2, with
/// a scale-free margin: the inequality holds when the difference exceeds
/// rel_tol times the sum.
std::vector<bool> injectivity_condition(const CVec2& Fi, const CVec2& Fj,
                                        const std::vector<Vec2>& directions,
                                        double rel_tol = 1e-9);

enum class SymbolKind { Real, Complex };

/// Worst-case conditioning of the principal symbol per node: the maximum
/// over unit directions of sigma_max/sigma_min. Nodes where the symbol loses
/// rank store the cap sentinel.
struct ConditionMap {
  Vec values;
  int directions = 0;
  double cap = 1e16;
};

ConditionMap condition_map(const std::vector<GradientField>& fields,
                           const ConductivityField& sigma, SymbolKind kind,
                           int num_directions = 100, double cap = 1e16);

/// Serial reference; must produce values identical to condition_map.
ConditionMap condition_map_reference(const std::vector<GradientField>& fields,
                                     const ConductivityField& sigma, SymbolKind kind,
                                     int num_directions = 100, double cap = 1e16);

}  // namespace tni
