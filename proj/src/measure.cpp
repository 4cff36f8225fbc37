#include "tni/measure.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "tni/parallel.hpp"
#include "tni/rng.hpp"

namespace tni {

namespace {

constexpr double kPi = 3.14159265358979323846;
// cm^-1 kOhm^-1 -> cm^-1 Ohm^-1
constexpr double kPerKohmToPerOhm = 1e-3;

struct WindowBox {
  int ilo, ihi, jlo, jhi;
};

WindowBox clip_box(double lo_x, double hi_x, double lo_y, double hi_y, int imax, int jmax) {
  WindowBox b;
  b.ilo = std::max(0, static_cast<int>(std::ceil(lo_x)));
  b.ihi = std::min(imax, static_cast<int>(std::floor(hi_x)));
  b.jlo = std::max(0, static_cast<int>(std::ceil(lo_y)));
  b.jhi = std::min(jmax, static_cast<int>(std::floor(hi_y)));
  return b;
}

Vec node_quadrature_weights(const GridSpec& g) {
  Vec w(g.node_count());
  const double cell = g.dx() * g.dy();
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      const double wx = (i == 0 || i == g.n - 1) ? 0.5 : 1.0;
      const double wy = (j == 0 || j == g.n - 1) ? 0.5 : 1.0;
      w(g.node_id(i, j)) = cell * wx * wy;
    }
  return w;
}

}  // namespace

double gaussian_pattern_value(double a, double rx, double ry) {
  if (!(a > 0.0)) throw std::invalid_argument("heating pattern: width a must be positive");
  return std::exp(-(rx * rx + ry * ry) / (2.0 * a)) / (2.0 * kPi * a);
}

void ExperimentParams::validate() const {
  if (!(T0 > 0.0) || !(delta_omega > 0.0) || !(delta_z > 0.0) || !(omega > 0.0))
    throw std::invalid_argument("experiment params: T0, delta_omega, delta_z, omega must be positive");
  if (M < 1) throw std::invalid_argument("experiment params: M must be >= 1");
}

void check_sampling_rule(const GridSpec& fine, double a) {
  if (!(a > 0.0)) throw std::invalid_argument("heating pattern: width a must be positive");
  const double cell = fine.dx() * fine.dy();
  if (kPi * a < 4.0 * cell) {
    const int required = static_cast<int>(std::ceil(1.0 + 2.0 * fine.extent / std::sqrt(kPi * a)));
    std::ostringstream msg;
    msg << "fine grid too coarse for heating width a=" << a << ": need at least four nodes per "
        << "effective area pi*a, i.e. " << required << " nodes per side (got " << fine.n << ")";
    throw std::invalid_argument(msg.str());
  }
}

Vec mollify_to_coarse(const Vec& power_fine, const GridSpec& fine, const GridSpec& coarse, double a) {
  check_sampling_rule(fine, a);
  if (power_fine.size() != fine.node_count())
    throw std::invalid_argument("mollify: field/grid size mismatch");
  const Vec wq = node_quadrature_weights(fine);
  const double cut_radius = std::sqrt(-2.0 * a * std::log(1e-14));
  Vec out(coarse.node_count());

#pragma omp parallel for schedule(static)
  for (int c = 0; c < coarse.node_count(); ++c) {
    const double cx = coarse.x(c % coarse.n);
    const double cy = coarse.y(c / coarse.n);
    const WindowBox b = clip_box((cx - cut_radius) / fine.dx(), (cx + cut_radius) / fine.dx(),
                                 (cy - cut_radius) / fine.dy(), (cy + cut_radius) / fine.dy(),
                                 fine.n - 1, fine.n - 1);
    double acc = 0.0;
    for (int j = b.jlo; j <= b.jhi; ++j)
      for (int i = b.ilo; i <= b.ihi; ++i) {
        const int p = fine.node_id(i, j);
        acc += wq(p) * gaussian_pattern_value(a, fine.x(i) - cx, fine.y(j) - cy) * power_fine(p);
      }
    out(c) = acc;
  }
  return out;
}

Vec mollify_to_coarse_reference(const Vec& power_fine, const GridSpec& fine,
                                const GridSpec& coarse, double a) {
  check_sampling_rule(fine, a);
  if (power_fine.size() != fine.node_count())
    throw std::invalid_argument("mollify: field/grid size mismatch");
  const Vec wq = node_quadrature_weights(fine);
  Vec out(coarse.node_count());
  for (int c = 0; c < coarse.node_count(); ++c) {
    const double cx = coarse.x(c % coarse.n);
    const double cy = coarse.y(c / coarse.n);
    double acc = 0.0;
    for (int p = 0; p < fine.node_count(); ++p)
      acc += wq(p) * gaussian_pattern_value(a, fine.x(p % fine.n) - cx, fine.y(p / fine.n) - cy) *
             power_fine(p);
    out(c) = acc;
  }
  return out;
}

MeasurementSet deterministic_measure(const ConductivityField& sigma_fine,
                                     const std::vector<PotentialField>& u_fine,
                                     const GridOps& fine_ops, const GridSpec& coarse,
                                     const ExperimentParams& params, double a) {
  params.validate();
  check_sampling_rule(fine_ops.grid, a);
  MeasurementSet set;
  set.model = MeasureModel::Deterministic;
  set.params = params;
  set.a = a;
  for (const auto& u : u_fine) {
    const Vec power = internal_functional(sigma_fine, u, fine_ops);
    set.H.push_back(mollify_to_coarse(power, fine_ops.grid, coarse, a));
  }
  return set;
}

CurrentSampler make_current_sampler(const Vec& sigma_re_edges, const Vec& temperature_edges,
                                    const GridSpec& fine, const ExperimentParams& params,
                                    std::uint64_t seed, std::uint64_t stream,
                                    bool paper_normalized, const PhysicalConstants& constants) {
  params.validate();
  if (sigma_re_edges.size() != fine.edge_count() || temperature_edges.size() != fine.edge_count())
    throw std::invalid_argument("current sampler: edge field size mismatch");
  if (temperature_edges.minCoeff() <= 0.0)
    throw std::invalid_argument("current sampler: temperature must be positive");
  if (sigma_re_edges.minCoeff() <= 0.0)
    throw std::invalid_argument("current sampler: sigma' must be positive");

  CurrentSampler s;
  s.seed = seed;
  s.stream = stream;
  s.stddev.resize(fine.edge_count());
  const Vec c = edge_boundary_weights(fine);
  for (int e = 0; e < fine.edge_count(); ++e) {
    if (paper_normalized) {
      s.stddev(e) = std::sqrt(constants.kappa * temperature_edges(e) * sigma_re_edges(e) / kPi);
    } else {
      const double cell_volume = c(e) * fine.dx() * fine.dy() * params.delta_z;
      s.stddev(e) = std::sqrt(constants.kappa / kPi * temperature_edges(e) *
                              kPerKohmToPerOhm * sigma_re_edges(e) * params.delta_omega /
                              cell_volume);
    }
  }
  return s;
}

Vec CurrentSampler::draw(int realization) const {
  const GaussianStream g = GaussianStream::keyed(seed, stream);
  Vec j(stddev.size());
  for (Eigen::Index e = 0; e < stddev.size(); ++e)
    j(e) = stddev(e) * g.normal(static_cast<std::uint64_t>(realization), static_cast<std::uint64_t>(e));
  return j;
}

double CurrentSampler::draw_at(int realization, int edge) const {
  const GaussianStream g = GaussianStream::keyed(seed, stream);
  return stddev(edge) * g.normal(static_cast<std::uint64_t>(realization), static_cast<std::uint64_t>(edge));
}

Vec current_quadrature_weights(const GridSpec& fine, double delta_z, bool paper_normalized) {
  if (paper_normalized) return Vec::Ones(fine.edge_count());
  return edge_boundary_weights(fine) * (fine.dx() * fine.dy() * delta_z);
}

Complex electrode_current(const PotentialField& u, const Vec& j_edges, const GridOps& ops,
                          double delta_z, bool paper_normalized) {
  if (u.n != ops.grid.n || j_edges.size() != ops.grid.edge_count())
    throw std::invalid_argument("electrode_current: grid mismatch");
  const CVec du = ops.diff.d.cast<Complex>() * u.u;
  const Vec q = current_quadrature_weights(ops.grid, delta_z, paper_normalized);
  Complex acc(0.0, 0.0);
  for (Eigen::Index e = 0; e < du.size(); ++e) acc += q(e) * du(e) * j_edges(e);
  return -acc;
}

CVec electrode_currents_direct(const ConductivityField& sigma, const BoundarySpec& geometry,
                               const std::vector<CVec>& electrode_values, const Vec& j_edges,
                               const GridOps& ops, double delta_z, bool paper_normalized) {
  sigma.validate();
  if (geometry.dirichlet_nodes.empty())
    throw std::runtime_error("floating potential: no Dirichlet node to pin the solution");
  if (j_edges.size() != ops.grid.edge_count())
    throw std::invalid_argument("electrode_currents_direct: grid mismatch");

  const int nn = ops.grid.node_count();
  const Vec q = current_quadrature_weights(ops.grid, delta_z, paper_normalized);
  const Vec qj = q.cwiseProduct(j_edges);
  const CVec b = (-(ops.diff.d.transpose() * qj)).cast<Complex>();

  std::vector<int> dirichlet_of(nn, -1);
  for (size_t k = 0; k < geometry.dirichlet_nodes.size(); ++k)
    dirichlet_of[geometry.dirichlet_nodes[k]] = static_cast<int>(k);
  std::vector<int> unknown;
  std::vector<int> unknown_of(nn, -1);
  for (int p = 0; p < nn; ++p)
    if (dirichlet_of[p] < 0) {
      unknown_of[p] = static_cast<int>(unknown.size());
      unknown.push_back(p);
    }

  const CSpMat full = weighted_laplacian_full<Complex>(sigma.complex_values(), ops);
  Eigen::SparseMatrix<Complex, Eigen::RowMajor> rows(full);
  std::vector<CTriplet> trip;
  CVec rhs(unknown.size());
  for (size_t ur = 0; ur < unknown.size(); ++ur) {
    rhs(ur) = b(unknown[ur]);
    for (Eigen::SparseMatrix<Complex, Eigen::RowMajor>::InnerIterator it(rows, unknown[ur]); it; ++it)
      if (unknown_of[it.col()] >= 0)
        trip.emplace_back(static_cast<int>(ur), unknown_of[it.col()], it.value());
  }
  CSpMat a(static_cast<int>(unknown.size()), static_cast<int>(unknown.size()));
  a.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<CSpMat> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("electrode_currents_direct: factorization failed");
  const CVec phi_unknown = lu.solve(rhs);

  CVec phi = CVec::Zero(nn);
  for (size_t k = 0; k < unknown.size(); ++k) phi(unknown[k]) = phi_unknown(k);
  const CVec flux_all = full * phi - b;

  CVec currents = CVec::Zero(electrode_values.size());
  for (size_t i = 0; i < electrode_values.size(); ++i) {
    if (electrode_values[i].size() != static_cast<Eigen::Index>(geometry.dirichlet_nodes.size()))
      throw std::invalid_argument("electrode_currents_direct: electrode value size mismatch");
    Complex acc(0.0, 0.0);
    for (size_t k = 0; k < geometry.dirichlet_nodes.size(); ++k)
      acc += electrode_values[i](k) * flux_all(geometry.dirichlet_nodes[k]);
    currents(i) = -acc;
  }
  return currents;
}

CMat empirical_current_covariance(const std::vector<PotentialField>& us,
                                  const CurrentSampler& sampler, const GridOps& ops,
                                  double delta_z, int M, bool paper_normalized) {
  const int nexp = static_cast<int>(us.size());
  const Vec q = current_quadrature_weights(ops.grid, delta_z, paper_normalized);
  std::vector<CVec> weighted_grads(nexp);
  for (int i = 0; i < nexp; ++i) {
    if (us[i].n != ops.grid.n) throw std::invalid_argument("covariance: grid mismatch");
    weighted_grads[i] = q.cast<Complex>().cwiseProduct(ops.diff.d.cast<Complex>() * us[i].u);
  }

  CMat currents(M, nexp);
  const GaussianStream g = GaussianStream::keyed(sampler.seed, sampler.stream);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < M; ++k) {
    for (int i = 0; i < nexp; ++i) currents(k, i) = Complex(0.0, 0.0);
    for (Eigen::Index e = 0; e < sampler.stddev.size(); ++e) {
      const double j = sampler.stddev(e) * g.normal(k, e);
      for (int i = 0; i < nexp; ++i) currents(k, i) -= weighted_grads[i](e) * j;
    }
  }

  const CMat cov = pairwise_sum(M, [&](std::int64_t k) -> CMat {
    return currents.row(k).transpose() * currents.row(k).conjugate();
  });
  return cov / static_cast<double>(M);
}

CMat deterministic_current_covariance(const std::vector<PotentialField>& us,
                                      const Vec& sigma_re_edges, const Vec& temperature_edges,
                                      const GridOps& ops, const ExperimentParams& params,
                                      const PhysicalConstants& constants) {
  const int nexp = static_cast<int>(us.size());
  std::vector<CVec> grads(nexp);
  for (int i = 0; i < nexp; ++i) grads[i] = ops.diff.d.cast<Complex>() * us[i].u;
  const Vec c = edge_boundary_weights(ops.grid);
  const double cell = ops.grid.dx() * ops.grid.dy();

  CMat cov = CMat::Zero(nexp, nexp);
  for (Eigen::Index e = 0; e < sigma_re_edges.size(); ++e) {
    const double w = c(e) * cell * kPerKohmToPerOhm * sigma_re_edges(e) * temperature_edges(e);
    for (int i = 0; i < nexp; ++i)
      for (int j = 0; j < nexp; ++j) cov(i, j) += w * grads[i](e) * std::conj(grads[j](e));
  }
  return cov * (constants.kappa / kPi * params.delta_omega * params.delta_z);
}

namespace {

MeasurementSet stochastic_measure_impl(const ConductivityField& sigma_fine,
                                       const std::vector<PotentialField>& u_fine,
                                       const GridOps& fine_ops, const GridSpec& coarse,
                                       const ExperimentParams& params, double a,
                                       const StochasticOptions& opts, bool windowed) {
  params.validate();
  if (params.M < 2) throw std::invalid_argument("stochastic_measure: need M >= 2");
  check_sampling_rule(fine_ops.grid, a);
  sigma_fine.validate();

  const GridSpec& fine = fine_ops.grid;
  const int nexp = static_cast<int>(u_fine.size());
  const int M = params.M;
  const int ne = fine.edge_count();
  const PhysicalConstants constants;

  const Vec s_edges = fine_ops.interp.e12 * sigma_fine.re;
  const Vec q = current_quadrature_weights(fine, params.delta_z, opts.paper_normalized);
  const Vec c = edge_boundary_weights(fine);

  std::vector<CVec> weighted_grads(nexp);
  for (int i = 0; i < nexp; ++i) {
    if (u_fine[i].n != fine.n) throw std::invalid_argument("stochastic_measure: grid mismatch");
    weighted_grads[i] = q.cast<Complex>().cwiseProduct(fine_ops.diff.d.cast<Complex>() * u_fine[i].u);
  }

  // Background realizations: drawn once, shared by every heating center.
  const CurrentSampler bg = make_current_sampler(
      s_edges, Vec::Constant(ne, params.T0), fine, params, opts.seed, 0, opts.paper_normalized);
  const GaussianStream bg_stream = GaussianStream::keyed(opts.seed, 0);
  CMat background(M, nexp);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < M; ++k) {
    for (int i = 0; i < nexp; ++i) background(k, i) = Complex(0.0, 0.0);
    for (int e = 0; e < ne; ++e) {
      const double j = bg.stddev(e) * bg_stream.normal(k, e);
      for (int i = 0; i < nexp; ++i) background(k, i) -= weighted_grads[i](e) * j;
    }
  }
  Vec background_mean(nexp);
  for (int i = 0; i < nexp; ++i) {
    background_mean(i) = pairwise_sum(M, [&](std::int64_t k) { return std::norm(background(k, i)); }) /
                         static_cast<double>(M);
  }

  // Heated ensembles add an independent increment whose per-edge variance is
  // proportional to the heating pattern; outside the truncation window the
  // pattern is below window_rel_cut of its peak and the increment is dropped.
  const double measurement_scale =
      opts.paper_normalized
          ? constants.kappa / kPi / (fine.dx() * fine.dy())
          : constants.kappa / kPi * params.delta_omega * params.delta_z * kPerKohmToPerOhm;
  const double cut_radius = std::sqrt(-2.0 * a * std::log(opts.window_rel_cut));

  auto delta_std = [&](int e, double gx, double gy) {
    const double pattern = gaussian_pattern_value(a, gx, gy);
    if (opts.paper_normalized)
      return std::sqrt(constants.kappa * pattern * s_edges(e) / kPi);
    const double cell_volume = c(e) * fine.dx() * fine.dy() * params.delta_z;
    return std::sqrt(constants.kappa / kPi * pattern * kPerKohmToPerOhm * s_edges(e) *
                     params.delta_omega / cell_volume);
  };

  MeasurementSet set;
  set.model = MeasureModel::Stochastic;
  set.params = params;
  set.a = a;
  set.seed = opts.seed;
  for (int i = 0; i < nexp; ++i) set.H.emplace_back(Vec::Zero(coarse.node_count()));

#pragma omp parallel for schedule(dynamic) if (windowed)
  for (int cnode = 0; cnode < coarse.node_count(); ++cnode) {
    const double cx = coarse.x(cnode % coarse.n);
    const double cy = coarse.y(cnode / coarse.n);

    // window edge list with their increment standard deviations
    std::vector<int> edges;
    std::vector<double> stds;
    if (windowed) {
      const WindowBox hb =
          clip_box((cx - cut_radius) / fine.dx() - 0.5, (cx + cut_radius) / fine.dx() - 0.5,
                   (cy - cut_radius) / fine.dy(), (cy + cut_radius) / fine.dy(), fine.n - 2,
                   fine.n - 1);
      for (int j = hb.jlo; j <= hb.jhi; ++j)
        for (int i = hb.ilo; i <= hb.ihi; ++i) {
          const int e = fine.hedge_id(i, j);
          edges.push_back(e);
          stds.push_back(delta_std(e, (i + 0.5) * fine.dx() - cx, j * fine.dy() - cy));
        }
      const WindowBox vb =
          clip_box((cx - cut_radius) / fine.dx(), (cx + cut_radius) / fine.dx(),
                   (cy - cut_radius) / fine.dy() - 0.5, (cy + cut_radius) / fine.dy() - 0.5,
                   fine.n - 1, fine.n - 2);
      for (int j = vb.jlo; j <= vb.jhi; ++j)
        for (int i = vb.ilo; i <= vb.ihi; ++i) {
          const int e = fine.hedge_count() + fine.vedge_id(i, j);
          const Vec2 mid = fine.edge_midpoint(e);
          edges.push_back(e);
          stds.push_back(delta_std(e, mid.x() - cx, mid.y() - cy));
        }
    } else {
      for (int e = 0; e < ne; ++e) {
        const Vec2 mid = fine.edge_midpoint(e);
        edges.push_back(e);
        stds.push_back(delta_std(e, mid.x() - cx, mid.y() - cy));
      }
    }

    const GaussianStream heat = GaussianStream::keyed(opts.seed, 1 + static_cast<std::uint64_t>(cnode));
    CMat heated(M, nexp);
    for (int k = 0; k < M; ++k) {
      for (int i = 0; i < nexp; ++i) heated(k, i) = background(k, i);
      for (size_t w = 0; w < edges.size(); ++w) {
        // keyed by the global edge index so the draw does not depend on the
        // window extent
        const double j = stds[w] * heat.normal(k, edges[w]);
        for (int i = 0; i < nexp; ++i) heated(k, i) -= weighted_grads[i](edges[w]) * j;
      }
    }
    for (int i = 0; i < nexp; ++i) {
      const double heated_mean =
          pairwise_sum(M, [&](std::int64_t k) { return std::norm(heated(k, i)); }) /
          static_cast<double>(M);
      set.H[i](cnode) = (heated_mean - background_mean(i)) / measurement_scale;
    }
  }
  return set;
}

}  // namespace

MeasurementSet stochastic_measure(const ConductivityField& sigma_fine,
                                  const std::vector<PotentialField>& u_fine,
                                  const GridOps& fine_ops, const GridSpec& coarse,
                                  const ExperimentParams& params, double a,
                                  const StochasticOptions& opts) {
  return stochastic_measure_impl(sigma_fine, u_fine, fine_ops, coarse, params, a, opts, true);
}

MeasurementSet stochastic_measure_reference(const ConductivityField& sigma_fine,
                                            const std::vector<PotentialField>& u_fine,
                                            const GridOps& fine_ops, const GridSpec& coarse,
                                            const ExperimentParams& params, double a,
                                            const StochasticOptions& opts) {
  return stochastic_measure_impl(sigma_fine, u_fine, fine_ops, coarse, params, a, opts, false);
}

NoiseEstimate noise_magnitude(double T0, double delta_omega, double delta_z_cm,
                              double sigma_cm_ohm, double grad_sq_cm2, double area_cm2,
                              double heated_area_cm2, double delta_T,
                              const PhysicalConstants& constants) {
  if (!(T0 > 0.0) || !(delta_omega > 0.0) || !(delta_z_cm > 0.0) || !(sigma_cm_ohm > 0.0) ||
      !(grad_sq_cm2 > 0.0) || !(area_cm2 > 0.0) || heated_area_cm2 < 0.0 || delta_T < 0.0)
    throw std::invalid_argument("noise_magnitude: inputs must be positive");
  NoiseEstimate est;
  const double base = constants.kappa / kPi * sigma_cm_ohm * grad_sq_cm2 * delta_z_cm * delta_omega;
  est.background_a2 = base * T0 * area_cm2;
  est.differential_a2 = base * delta_T * heated_area_cm2;
  est.snr = est.differential_a2 / est.background_a2;
  return est;
}

NoiseEstimate noise_magnitude_numerical_scenario() {
  // 10 cm x 10 cm plate of thickness 0.1 cm, sigma' ~ 1e-3 cm^-1 Ohm^-1,
  // |grad u|^2 ~ 1e-2 cm^-2, 10 kHz bandwidth, heated spot 0.2 cm x 0.2 cm.
  return noise_magnitude(300.0, 2.0 * kPi * 1e4, 0.1, 1e-3, 1e-2, 100.0, 0.04, 10.0);
}

NoiseEstimate noise_magnitude_welding_scenario() {
  // 1 cm x 1 cm x 1 mm gold sheet (4.5e7 Ohm^-1 m^-1 = 4.5e5 Ohm^-1 cm^-1),
  // ~100 Hz band, heated spot 0.1 mm x 0.1 mm near the melting point.
  return noise_magnitude(300.0, 2.0 * kPi * 100.0, 0.1, 4.5e5, 1.0, 1.0, 1e-4, 1300.0);
}

double planck_correction(double temperature, double omega, const PhysicalConstants& constants) {
  if (!(temperature > 0.0) || !(omega > 0.0))
    throw std::invalid_argument("planck_correction: T and omega must be positive");
  const double x = constants.hbar * omega / (2.0 * constants.kappa * temperature);
  return constants.hbar * omega / 2.0 / std::tanh(x);
}

}  // namespace tni
