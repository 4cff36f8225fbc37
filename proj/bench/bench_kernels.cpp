// Times the OpenMP kernels against their serial reference implementations
// and checks that both sides agree. Sizes are chosen so a run finishes in
// about a minute; pass --small for a quick smoke run.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>

#include "tni/measure.hpp"
#include "tni/parallel.hpp"
#include "tni/phantom.hpp"
#include "tni/symbol.hpp"

using namespace tni;

namespace {

template <class F>
double time_call(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(const char* name, double serial_s, double parallel_s, double agreement) {
  std::printf("%-28s serial %8.3f s   parallel %8.3f s   speedup %5.2fx   agreement %.2e\n", name,
              serial_s, parallel_s, serial_s / parallel_s, agreement);
}

}  // namespace

int main(int argc, char** argv) {
  bool small = false;
  for (int k = 1; k < argc; ++k)
    if (std::strcmp(argv[k], "--small") == 0) small = true;

  std::printf("threads: %d\n", thread_cap());

  // mollification of a fine-grid power density onto coarse nodes
  {
    const GridSpec coarse{small ? 12 : 40, 10.0, 2};
    const GridSpec fine = coarse.fine();
    const GridOps fine_ops = make_grid_ops(fine);
    const ConductivityField sigma = phantom("two-bumps", fine);
    const PotentialField u = solve(
        sigma, make_full_dirichlet(fine_ops, electrode_token_values("g1", fine, fine_ops.boundary)),
        fine_ops);
    const Vec power = internal_functional(sigma, u, fine_ops);
    const double a = small ? 0.6 : 0.2;

    Vec fast, slow;
    const double tp = time_call([&] { fast = mollify_to_coarse(power, fine, coarse, a); });
    const double ts = time_call([&] { slow = mollify_to_coarse_reference(power, fine, coarse, a); });
    report("mollify_to_coarse", ts, tp, (fast - slow).norm() / slow.norm());
  }

  // Monte Carlo synthesis of the internal functional
  {
    const GridSpec grid{small ? 14 : 16, 10.0, 1};
    const GridOps ops = make_grid_ops(grid);
    const ConductivityField sigma = phantom("two-bumps", grid);
    const PotentialField u = solve(
        sigma, make_full_dirichlet(ops, electrode_token_values("e1", grid, ops.boundary)), ops);
    ExperimentParams params;
    params.T0 = 0.05;
    params.M = small ? 100 : 400;
    StochasticOptions opts;
    opts.seed = 12;
    const double a = 2.0;

    MeasurementSet fast, slow;
    const double tp =
        time_call([&] { fast = stochastic_measure(sigma, {u}, ops, grid, params, a, opts); });
    const double ts = time_call(
        [&] { slow = stochastic_measure_reference(sigma, {u}, ops, grid, params, a, opts); });
    report("stochastic_measure", ts, tp, (fast.H[0] - slow.H[0]).norm() / slow.H[0].norm());
  }

  // per-node singular value sweep of the complex symbol
  {
    const GridSpec grid{small ? 20 : 48, 10.0, 1};
    const GridOps ops = make_grid_ops(grid);
    const ConductivityField sigma = phantom("complex-default", grid);
    std::vector<PotentialField> us;
    for (const char* tok : {"gt1", "gt2", "ht1", "ht2"})
      us.push_back(solve(
          sigma, make_full_dirichlet(ops, electrode_token_values(tok, grid, ops.boundary)), ops));
    const auto fields = field_gradients(us, ops);

    ConditionMap fast, slow;
    const double tp =
        time_call([&] { fast = condition_map(fields, sigma, SymbolKind::Complex, 100); });
    const double ts = time_call(
        [&] { slow = condition_map_reference(fields, sigma, SymbolKind::Complex, 100); });
    report("condition_map", ts, tp, (fast.values - slow.values).norm() / slow.values.norm());
  }

  return 0;
}
