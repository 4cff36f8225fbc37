#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "tni/measure.hpp"
#include "tni/phantom.hpp"

using namespace tni;

namespace {

constexpr double kPi = 3.14159265358979323846;

CVec affine_values(const GridSpec& g, const std::vector<int>& nodes) {
  CVec v(nodes.size());
  for (size_t k = 0; k < nodes.size(); ++k)
    v(k) = (g.x(nodes[k] % g.n) + g.y(nodes[k] / g.n)) / 10.0;
  return v;
}

double rel_l2(const Vec& a, const Vec& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("gaussian pattern: peak, decay, normalization") {
  const double a = 0.01;
  CHECK(gaussian_pattern_value(a, 0.0, 0.0) == doctest::Approx(1.0 / (2.0 * kPi * a)));
  // value at distance sqrt(2a) is peak/e
  const double r = std::sqrt(2.0 * a);
  CHECK(gaussian_pattern_value(a, r, 0.0) ==
        doctest::Approx(gaussian_pattern_value(a, 0.0, 0.0) / std::exp(1.0)));

  // integral over a 120x120 grid on [0,10]^2 with an interior center
  const GridSpec fine{120, 10.0, 1};
  Vec ones = Vec::Ones(fine.node_count());
  const GridSpec single{3, 10.0, 1};
  // integrate g(y - (5,5)) via the mollifier of the constant-1 field
  Vec h = mollify_to_coarse_reference(ones, fine, single, a);
  // center node of the 3x3 target grid sits at (5,5)
  CHECK(h(single.node_id(1, 1)) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("sampling rule names the required resolution") {
  const GridSpec fine{40, 10.0, 1};
  CHECK_THROWS_AS(check_sampling_rule(fine, 0.01), std::invalid_argument);
  try {
    check_sampling_rule(fine, 0.01);
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("114") != std::string::npos);  // 1 + 2*10/sqrt(pi*0.01) = 113.8
  }
  CHECK_NOTHROW(check_sampling_rule(GridSpec{120, 10.0, 1}, 0.01));
}

TEST_CASE("windowed mollifier matches the full-sum reference") {
  const GridSpec fine{60, 10.0, 1};
  const GridSpec coarse{15, 10.0, 1};
  const double a = 0.1;
  Vec p(fine.node_count());
  for (int k = 0; k < p.size(); ++k) p(k) = 1.0 + std::sin(0.37 * k);
  const Vec fast = mollify_to_coarse(p, fine, coarse, a);
  const Vec slow = mollify_to_coarse_reference(p, fine, coarse, a);
  CHECK(rel_l2(fast, slow) < 1e-9);
}

TEST_CASE("deterministic measure approaches the pointwise power density") {
  // constant sigma and affine potential: sigma' |grad u|^2 = 0.02 s
  const GridSpec fine{120, 10.0, 1};
  const GridOps fine_ops = make_grid_ops(fine);
  const double s = 1.5;
  const ConductivityField sigma = ConductivityField::constant(fine, s);
  const BoundarySpec bc = make_full_dirichlet(fine_ops, affine_values(fine, fine_ops.boundary));
  const PotentialField u = solve(sigma, bc, fine_ops);

  const GridSpec coarse{20, 10.0, 1};
  ExperimentParams params;
  const MeasurementSet set = deterministic_measure(sigma, {u}, fine_ops, coarse, params, 0.01);
  REQUIRE(set.H.size() == 1);
  for (int j = 2; j < coarse.n - 2; ++j)
    for (int i = 2; i < coarse.n - 2; ++i)
      CHECK(set.H[0](coarse.node_id(i, j)) == doctest::Approx(0.02 * s).epsilon(0.01));
}

TEST_CASE("pattern centered away from the support sees nothing") {
  const GridSpec fine{120, 10.0, 1};
  Vec p = Vec::Zero(fine.node_count());
  for (int j = 0; j < fine.n; ++j)
    for (int i = 0; i < fine.n; ++i)
      if (fine.x(i) < 3.0) p(fine.node_id(i, j)) = 2.0;
  const GridSpec coarse{5, 10.0, 1};
  const Vec h = mollify_to_coarse_reference(p, fine, coarse, 0.01);
  CHECK(std::abs(h(coarse.node_id(3, 2))) < 1e-12);  // center (7.5, 5)
}

TEST_CASE("mollified functional tracks the forward internal functional") {
  // the 60x60 / 120x120 setup with the smooth phantom
  const GridSpec coarse{60, 10.0, 2};
  const GridSpec fine = coarse.fine();
  const GridOps fine_ops = make_grid_ops(fine);
  const ConductivityField sigma = phantom("two-bumps", fine);
  const BoundarySpec bc = make_full_dirichlet(fine_ops, affine_values(fine, fine_ops.boundary));
  const PotentialField u = solve(sigma, bc, fine_ops);

  const Vec power = internal_functional(sigma, u, fine_ops);
  const Vec power_coarse = restrict_to_coarse(power, fine, coarse);
  const Vec h = mollify_to_coarse(power, fine, coarse, 0.01);
  for (int j = 0; j < coarse.n; ++j)
    for (int i = 0; i < coarse.n; ++i) {
      const double d = std::min(std::min(coarse.x(i), 10.0 - coarse.x(i)),
                                std::min(coarse.y(j), 10.0 - coarse.y(j)));
      if (d < 1.0) continue;
      const int p = coarse.node_id(i, j);
      CHECK(h(p) == doctest::Approx(power_coarse(p)).epsilon(0.05));
    }
}

TEST_CASE("current sampler moments") {
  const GridSpec fine{6, 10.0, 1};
  ExperimentParams params;
  params.M = 10000;
  const Vec s_edges = Vec::Constant(fine.edge_count(), 1.3);
  const Vec t_edges = Vec::Constant(fine.edge_count(), 250.0);
  const CurrentSampler sampler =
      make_current_sampler(s_edges, t_edges, fine, params, 99, 0, /*paper_normalized=*/true);

  const PhysicalConstants constants;
  const double expected_var = constants.kappa * 250.0 * 1.3 / kPi;
  const int edge_a = 3, edge_b = 17;
  double mean_a = 0.0, var_a = 0.0, cov_ab = 0.0;
  for (int k = 0; k < params.M; ++k) {
    const double ja = sampler.draw_at(k, edge_a);
    const double jb = sampler.draw_at(k, edge_b);
    mean_a += ja;
    var_a += ja * ja;
    cov_ab += ja * jb;
  }
  mean_a /= params.M;
  var_a /= params.M;
  cov_ab /= params.M;

  const double se = std::sqrt(expected_var / params.M);
  CHECK(std::abs(mean_a) < 3.0 * se);
  CHECK(var_a == doctest::Approx(expected_var).epsilon(0.05));
  CHECK(std::abs(cov_ab) < 3.0 * expected_var / std::sqrt(double(params.M)));

  // deterministic given (seed, realization, edge); full draw agrees with draw_at
  const Vec j0 = sampler.draw(7);
  CHECK(j0(edge_a) == sampler.draw_at(7, edge_a));
  const CurrentSampler again =
      make_current_sampler(s_edges, t_edges, fine, params, 99, 0, true);
  CHECK(again.draw_at(7, edge_a) == sampler.draw_at(7, edge_a));

  CHECK_THROWS_AS((void)make_current_sampler(s_edges, Vec::Zero(fine.edge_count()), fine, params,
                                             1, 0, true),
                  std::invalid_argument);
}

TEST_CASE("electrode current: zeros and a dense hand evaluation") {
  const GridSpec grid{5, 10.0, 1};
  const GridOps ops = make_grid_ops(grid);
  const ConductivityField sigma = ConductivityField::constant(grid, 1.0);
  const BoundarySpec bc = make_full_dirichlet(ops, electrode_token_values("g1", grid, ops.boundary));
  const PotentialField u = solve(sigma, bc, ops);

  ExperimentParams params;
  CHECK(std::abs(electrode_current(u, Vec::Zero(grid.edge_count()), ops, params.delta_z)) == 0.0);

  PotentialField uc;
  uc.n = grid.n;
  uc.u = CVec::Constant(grid.node_count(), Complex(2.0, 1.0));
  Vec j(grid.edge_count());
  for (int e = 0; e < j.size(); ++e) j(e) = std::sin(1.0 + e);
  CHECK(std::abs(electrode_current(uc, j, ops, params.delta_z)) < 1e-14);

  // dense evaluation straight from the definition
  const Vec q = current_quadrature_weights(grid, params.delta_z);
  Complex expected(0.0, 0.0);
  for (int jj = 0; jj < grid.n; ++jj)
    for (int i = 0; i < grid.n - 1; ++i) {
      const int e = grid.hedge_id(i, jj);
      const Complex du = (u.u(grid.node_id(i + 1, jj)) - u.u(grid.node_id(i, jj))) / grid.dx();
      expected -= q(e) * du * j(e);
    }
  for (int jj = 0; jj < grid.n - 1; ++jj)
    for (int i = 0; i < grid.n; ++i) {
      const int e = grid.hedge_count() + grid.vedge_id(i, jj);
      const Complex du = (u.u(grid.node_id(i, jj + 1)) - u.u(grid.node_id(i, jj))) / grid.dy();
      expected -= q(e) * du * j(e);
    }
  const Complex got = electrode_current(u, j, ops, params.delta_z);
  CHECK(std::abs(got - expected) < 1e-12 * std::abs(expected));

  Vec wrong(grid.edge_count() + 1);
  CHECK_THROWS_AS((void)electrode_current(u, wrong, ops, params.delta_z), std::invalid_argument);
}

TEST_CASE("adjoint route equals the direct source solve") {
  const GridSpec grid{8, 10.0, 1};
  const GridOps ops = make_grid_ops(grid);
  const ConductivityField sigma = phantom("two-bumps", grid);
  ExperimentParams params;

  SUBCASE("full Dirichlet") {
    const CVec e1 = electrode_token_values("g1", grid, ops.boundary);
    const CVec e2 = electrode_token_values("h1", grid, ops.boundary);
    const BoundarySpec geom = make_full_dirichlet(ops, e1);
    const PotentialField u1 = solve(sigma, make_full_dirichlet(ops, e1), ops);
    const PotentialField u2 = solve(sigma, make_full_dirichlet(ops, e2), ops);

    const Vec s_edges = ops.interp.e12 * sigma.re;
    const CurrentSampler sampler = make_current_sampler(
        s_edges, Vec::Constant(grid.edge_count(), 300.0), grid, params, 5, 0);
    const Vec j = sampler.draw(0);

    const CVec direct = electrode_currents_direct(sigma, geom, {e1, e2}, j, ops, params.delta_z);
    const Complex a1 = electrode_current(u1, j, ops, params.delta_z);
    const Complex a2 = electrode_current(u2, j, ops, params.delta_z);
    CHECK(std::abs(direct(0) - a1) < 1e-9 * std::abs(a1));
    CHECK(std::abs(direct(1) - a2) < 1e-9 * std::abs(a2));
  }

  SUBCASE("mixed electrodes with gaps") {
    const GridSpec mgrid{11, 10.0, 1};  // node at 5.0 falls in the gap
    const GridOps mops = make_grid_ops(mgrid);
    const ConductivityField msigma = phantom("two-bumps", mgrid);
    const BoundaryPartition part = classify_boundary(mgrid, symmetric_gap(4.5, 5.5));
    REQUIRE(!part.gap.empty());
    const CVec e1 = electrode_token_values("g1", mgrid, part.electrode);
    const BoundarySpec geom = make_mixed(part, e1);
    const PotentialField u1 = solve(msigma, geom, mops);

    const Vec s_edges = mops.interp.e12 * msigma.re;
    const CurrentSampler sampler = make_current_sampler(
        s_edges, Vec::Constant(mgrid.edge_count(), 300.0), mgrid, params, 6, 0);
    const Vec j = sampler.draw(3);

    const CVec direct = electrode_currents_direct(msigma, geom, {e1}, j, mops, params.delta_z);
    const Complex adj = electrode_current(u1, j, mops, params.delta_z);
    CHECK(std::abs(direct(0) - adj) < 1e-9 * std::abs(adj));
  }
}

TEST_CASE("current covariance matches the deterministic quadrature") {
  // complex conductivity, complex boundary data, constant temperature
  const GridSpec grid{10, 10.0, 1};
  const GridOps ops = make_grid_ops(grid);
  const ConductivityField sigma = phantom("complex-default", grid);
  // the two experiments must be correlated for an entrywise relative check
  // of the off-diagonal covariance to be meaningful at this M
  std::vector<PotentialField> us;
  for (const char* tok : {"gt1", "gt2"})
    us.push_back(
        solve(sigma, make_full_dirichlet(ops, electrode_token_values(tok, grid, ops.boundary)), ops));

  ExperimentParams params;
  params.M = 20000;
  const Vec s_edges = ops.interp.e12 * sigma.re;
  const Vec t_edges = Vec::Constant(grid.edge_count(), 300.0);
  const CurrentSampler sampler = make_current_sampler(s_edges, t_edges, grid, params, 11, 0);

  const CMat emp = empirical_current_covariance(us, sampler, ops, params.delta_z, params.M);
  const CMat det = deterministic_current_covariance(us, s_edges, t_edges, ops, params);

  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(std::abs(emp(i, j) - det(i, j)) < 0.10 * std::abs(det(i, j)));
  // off-diagonals are genuinely exposed and Hermitian
  CHECK(std::abs(det(0, 1) - std::conj(det(1, 0))) < 1e-18);
  CHECK(std::abs(det(0, 1)) > 0.0);
}

TEST_CASE("stochastic measure converges to the deterministic measure") {
  // single-grid oracle: fine = coarse = 20x20, broad pattern, many realizations
  const GridSpec grid{20, 10.0, 1};
  const GridOps ops = make_grid_ops(grid);
  const ConductivityField sigma = phantom("two-bumps", grid);
  const CVec e1 = affine_values(grid, ops.boundary);
  const PotentialField u = solve(sigma, make_full_dirichlet(ops, e1), ops);

  ExperimentParams params;
  params.T0 = 0.05;
  params.M = 10000;
  const double a = 0.4;

  const MeasurementSet det = deterministic_measure(sigma, {u}, ops, grid, params, a);
  StochasticOptions opts;
  opts.seed = 2024;
  const MeasurementSet stoch = stochastic_measure(sigma, {u}, ops, grid, params, a, opts);

  CHECK(rel_l2(stoch.H[0], det.H[0]) < 0.10);

  // determinism: the same seed reproduces the values bitwise
  const MeasurementSet again = stochastic_measure(sigma, {u}, ops, grid, params, a, opts);
  CHECK((again.H[0] - stoch.H[0]).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("windowed stochastic estimator matches the full-edge reference") {
  const GridSpec grid{12, 10.0, 1};
  const GridOps ops = make_grid_ops(grid);
  const ConductivityField sigma = ConductivityField::constant(grid, 1.0);
  const PotentialField u =
      solve(sigma, make_full_dirichlet(ops, affine_values(grid, ops.boundary)), ops);

  ExperimentParams params;
  params.T0 = 0.05;
  params.M = 200;
  StochasticOptions opts;
  opts.seed = 7;
  const MeasurementSet fast = stochastic_measure(sigma, {u}, ops, grid, params, 1.2, opts);
  const MeasurementSet slow = stochastic_measure_reference(sigma, {u}, ops, grid, params, 1.2, opts);
  CHECK(rel_l2(fast.H[0], slow.H[0]) < 1e-4);
}

TEST_CASE("deterministic H is invariant under a global phase rotation") {
  const GridSpec coarse{10, 10.0, 4};
  const GridSpec fine = coarse.fine();
  const GridOps fine_ops = make_grid_ops(fine);
  const ConductivityField sigma = phantom("complex-default", fine);
  const CVec e = electrode_token_values("gt1", fine, fine_ops.boundary);
  const Complex rot = std::polar(1.0, 0.83);

  ExperimentParams params;
  const double a = 0.1;
  const PotentialField u1 = solve(sigma, make_full_dirichlet(fine_ops, e), fine_ops);
  const PotentialField u2 = solve(sigma, make_full_dirichlet(fine_ops, CVec(rot * e)), fine_ops);
  const MeasurementSet h1 = deterministic_measure(sigma, {u1}, fine_ops, coarse, params, a);
  const MeasurementSet h2 = deterministic_measure(sigma, {u2}, fine_ops, coarse, params, a);
  CHECK(rel_l2(h2.H[0], h1.H[0]) < 1e-10);
}

TEST_CASE("noise magnitude orders") {
  const NoiseEstimate num = noise_magnitude_numerical_scenario();
  CHECK(std::abs(std::log10(num.background_a2) - (-20.0)) < 1.0);
  CHECK(std::abs(std::log10(num.snr) - (-5.0)) < 1.0);
  CHECK(std::abs(std::log10(num.differential_a2) - (-25.0)) < 1.0);

  const NoiseEstimate gold = noise_magnitude_welding_scenario();
  CHECK(std::abs(std::log10(gold.background_a2) - (-14.0)) < 1.0);
  CHECK(std::abs(std::log10(gold.snr) - (-3.0)) < 1.0);
  CHECK(std::abs(std::log10(gold.differential_a2) - (-17.0)) < 1.0);

  const NoiseEstimate cold = noise_magnitude(300.0, 1e4, 0.1, 1e-3, 1e-2, 10.0, 0.04, 0.0);
  CHECK(cold.differential_a2 == 0.0);
  CHECK(cold.snr == 0.0);
}

TEST_CASE("quantum oscillator energy") {
  const PhysicalConstants c;
  const double omega = 2.0 * kPi * 1e4;
  CHECK(planck_correction(300.0, omega, c) / (c.kappa * 300.0) == doctest::Approx(1.0).epsilon(1e-10));

  // hbar w / 2 kappa T = 1
  const double t_match = c.hbar * omega / (2.0 * c.kappa);
  CHECK(planck_correction(t_match, omega, c) ==
        doctest::Approx(c.hbar * omega / 2.0 / std::tanh(1.0)));

  // large omega: zero-point energy hbar w / 2
  const double omega_big = 1e18;
  CHECK(planck_correction(0.1, omega_big, c) == doctest::Approx(c.hbar * omega_big / 2.0));

  CHECK_THROWS_AS((void)planck_correction(-1.0, omega, c), std::invalid_argument);
}
