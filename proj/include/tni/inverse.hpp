#pragma once

#include <cstdint>
#include <vector>

#include "tni/measure.hpp"

namespace tni {

struct ArmijoParams {
  double slope = 1e-4;      // sufficient-decrease constant
  double backtrack = 0.5;   // step shrink factor
  int max_backtracks = 30;
};

struct ReconstructionConfig {
  double gamma = 1.6e-3;       // Tikhonov parameter on the step
  double step_tol = 0.1;       // stop when ||w||_2 drops below this
  int max_iters = 50;
  double boundary_band = 0.5;  // cm within which sigma is known
  ArmijoParams armijo;

  void validate() const;
};

enum class InverseKind { Real, Complex };

struct IterationRecord {
  int iter = 0;
  double residual_norm = 0.0;
  double step_norm = 0.0;
  int backtracks = 0;
};

struct ReconstructionState {
  Vec s_re;                // full node field; band entries stay at known values
  Vec s_im;                // empty for the real kind
  std::vector<Vec> u_re;   // per experiment
  std::vector<Vec> u_im;   // empty for the real kind
  std::vector<IterationRecord> log;
  bool converged = false;
};

struct InverseProblem {
  const GridOps* ops = nullptr;
  std::vector<BoundarySpec> bcs;  // one per experiment
  MeasurementSet data;            // H on the same grid
  InverseKind kind = InverseKind::Real;
  std::vector<std::uint8_t> s_free;  // per node, 1 = unknown

  void validate() const;
};

/// 1 for nodes strictly farther than band_width from the boundary.
std::vector<std::uint8_t> free_sigma_mask(const GridSpec& grid, double band_width);

/// Stacked nonlinear residual, per experiment: interior (+gap) rows of the
/// discrete conductivity equation, Dirichlet mismatch, and the measurement
/// mismatch H - [N1(E1 s .* |D1 u|^2) + N2(E2 s .* |D2 u|^2)] on interior
/// nodes.
Vec residual_real(const ReconstructionState& state, const InverseProblem& problem);

/// Complex-kind residual with the five-block structure: two coupled PDE
/// blocks, two Dirichlet blocks, and one measurement block per experiment.
Vec residual_complex(const ReconstructionState& state, const InverseProblem& problem);

/// Exact sparse Jacobian of the residual with respect to the unknown vector
/// [s_free; u_1; ...] (real) or [s'_free; s''_free; u_1'; u_1''; ...].
SpMat jacobian(const ReconstructionState& state, const InverseProblem& problem);

/// Constant conductivity off the band plus the matching forward solves.
ReconstructionState initial_guess(const InverseProblem& problem, double sigma0_re,
                                  double sigma0_im, const Vec& known_re, const Vec& known_im);

/// Gauss-Newton iteration on the damped least-squares steps
/// min ||J w + r||^2 + gamma ||w||^2 with Armijo backtracking on ||r||^2 and
/// feasibility clipping that keeps sigma' positive. Stops when the step
/// 2-norm falls below step_tol.
ReconstructionState gauss_newton(const InverseProblem& problem, const ReconstructionConfig& config,
                                 ReconstructionState state);

}  // namespace tni
