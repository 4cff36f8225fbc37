#pragma once

#include <cstdint>
#include <vector>

#include "tni/forward.hpp"
#include "tni/grid.hpp"
#include "tni/types.hpp"

namespace tni {

/// Normalized Gaussian heating pattern g(x,a) = (2 pi a)^-1 exp(-|x|^2/(2a)),
/// integrating to one over the plane; effective support area ~ pi*a.
double gaussian_pattern_value(double a, double rx, double ry);

struct HeatingPattern {
  Vec2 center{0.0, 0.0};
  double a = 0.01;  // cm^2

  double operator()(double px, double py) const {
    return gaussian_pattern_value(a, px - center.x(), py - center.y());
  }
};

struct ExperimentParams {
  double T0 = 300.0;                     // background temperature, K
  double delta_omega = 62831.853071795;  // bandwidth, rad/s
  double delta_z = 0.1;                  // plate thickness, cm
  double omega = 62831.853071795;        // working angular frequency, rad/s
  int M = 1000;                          // realization count

  void validate() const;
};

enum class MeasureModel { Deterministic, Stochastic };

/// Internal-functional data for a set of experiments: H_ii on the coarse
/// grid (units cm^-3 kOhm^-1) plus how it was produced.
struct MeasurementSet {
  std::vector<Vec> H;  // per experiment, coarse node field
  MeasureModel model = MeasureModel::Deterministic;
  ExperimentParams params;
  double a = 0.01;
  std::uint64_t seed = 0;  // stochastic provenance
};

/// The fine grid must place at least four nodes per effective pattern area
/// pi*a; throws an error naming the required resolution otherwise.
void check_sampling_rule(const GridSpec& fine, double a);

/// Mollified power density at every coarse node:
/// H(x) = integral of g(y-x, a) * power(y) dy over the domain, by fine-grid
/// trapezoidal quadrature truncated to a window where the Gaussian is
/// negligible. Parallel over coarse nodes.
Vec mollify_to_coarse(const Vec& power_fine, const GridSpec& fine, const GridSpec& coarse, double a);

/// Serial full-sum reference for mollify_to_coarse (no window truncation).
Vec mollify_to_coarse_reference(const Vec& power_fine, const GridSpec& fine,
                                const GridSpec& coarse, double a);

/// Deterministic synthesis: mollified sigma'|grad u_i|^2 from fine-grid
/// solutions, one coarse field per experiment. The background-temperature
/// term cancels exactly in this model.
MeasurementSet deterministic_measure(const ConductivityField& sigma_fine,
                                     const std::vector<PotentialField>& u_fine,
                                     const GridOps& fine_ops, const GridSpec& coarse,
                                     const ExperimentParams& params, double a);

/// Random edge currents with per-edge standard deviation
/// sqrt(kappa T(e) sigma'(e) / pi * [delta_omega / cell volume]); the bracket
/// is dropped in paper-normalized mode. Realization k is a pure function of
/// (seed, stream, k, edge).
struct CurrentSampler {
  Vec stddev;  // per edge
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  Vec draw(int realization) const;
  double draw_at(int realization, int edge) const;
};

CurrentSampler make_current_sampler(const Vec& sigma_re_edges, const Vec& temperature_edges,
                                    const GridSpec& fine, const ExperimentParams& params,
                                    std::uint64_t seed, std::uint64_t stream,
                                    bool paper_normalized = false,
                                    const PhysicalConstants& constants = {});

/// Edge quadrature weights c_e * dx * dy * dz used to turn edge samples into
/// the discrete current integral (all ones in paper-normalized mode).
Vec current_quadrature_weights(const GridSpec& fine, double delta_z, bool paper_normalized = false);

/// Discrete electrode current J = -sum_e q_e (D u)_e j_e, the adjoint-route
/// analog of -integral grad(u) . j_e.
Complex electrode_current(const PotentialField& u, const Vec& j_edges, const GridOps& ops,
                          double delta_z, bool paper_normalized = false);

/// Slow direct route: solves the grounded source problem with source
/// divergence of j and integrates e_i against the boundary flux. Matches the
/// adjoint route exactly in the discrete setting; kept as a cross-check.
CVec electrode_currents_direct(const ConductivityField& sigma, const BoundarySpec& geometry,
                               const std::vector<CVec>& electrode_values, const Vec& j_edges,
                               const GridOps& ops, double delta_z, bool paper_normalized = false);

/// Empirical covariance mean_k J^k (J^k)^* over M realizations.
CMat empirical_current_covariance(const std::vector<PotentialField>& us,
                                  const CurrentSampler& sampler, const GridOps& ops,
                                  double delta_z, int M, bool paper_normalized = false);

/// Deterministic covariance quadrature
/// (kappa/pi) dz domega sum_e c_e dx dy sigma'(e) T(e) (Du_i)_e conj(Du_j)_e.
CMat deterministic_current_covariance(const std::vector<PotentialField>& us,
                                      const Vec& sigma_re_edges, const Vec& temperature_edges,
                                      const GridOps& ops, const ExperimentParams& params,
                                      const PhysicalConstants& constants = {});

struct StochasticOptions {
  std::uint64_t seed = 1;
  bool paper_normalized = false;
  double window_rel_cut = 1e-14;  // Gaussian truncation for the heated term
};

/// Monte Carlo synthesis: per coarse node, the ensemble mean of |J_i|^2 with
/// heating there minus the background mean, scaled back to the units of the
/// deterministic model. Background realizations are drawn once and shared by
/// all heating centers; the heated ensemble adds an independent increment
/// with variance proportional to the heating pattern. Parallel over centers.
MeasurementSet stochastic_measure(const ConductivityField& sigma_fine,
                                  const std::vector<PotentialField>& u_fine,
                                  const GridOps& fine_ops, const GridSpec& coarse,
                                  const ExperimentParams& params, double a,
                                  const StochasticOptions& opts);

/// Serial reference for stochastic_measure; must produce identical values.
MeasurementSet stochastic_measure_reference(const ConductivityField& sigma_fine,
                                            const std::vector<PotentialField>& u_fine,
                                            const GridOps& fine_ops, const GridSpec& coarse,
                                            const ExperimentParams& params, double a,
                                            const StochasticOptions& opts);

/// Order-of-magnitude current variances (A^2). sigma is in cm^-1 Ohm^-1 and
/// lengths in cm so the products come out in amperes squared.
struct NoiseEstimate {
  double background_a2 = 0.0;
  double differential_a2 = 0.0;
  double snr = 0.0;
};

NoiseEstimate noise_magnitude(double T0, double delta_omega, double delta_z_cm,
                              double sigma_cm_ohm, double grad_sq_cm2, double area_cm2,
                              double heated_area_cm2, double delta_T,
                              const PhysicalConstants& constants = {});

/// The two scenarios the estimates are quoted for: the plate used in the
/// numerical experiments and a gold sheet near welding conditions.
NoiseEstimate noise_magnitude_numerical_scenario();
NoiseEstimate noise_magnitude_welding_scenario();

/// Energy of a quantum oscillator Theta(T, omega) = (hbar w / 2) coth(hbar w
/// / 2 kappa T); tends to kappa*T in the classical regime.
double planck_correction(double temperature, double omega, const PhysicalConstants& constants = {});

}  // namespace tni
