// Command-line front end: forward solves, measurement synthesis, symbol
// condition maps, reconstructions, and declarative experiment runs.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "tni/io.hpp"
#include "tni/pipeline.hpp"

namespace {

struct CommonFlags {
  std::vector<std::string> dump_operators;
};

void add_grid_flags(CLI::App* cmd, tni::ExperimentConfig& cfg) {
  cmd->add_option("--n", cfg.grid.n, "coarse grid nodes per side");
  cmd->add_option("--extent", cfg.grid.extent, "domain side length, cm");
  cmd->add_option("--fine-factor", cfg.grid.fine_factor, "fine/coarse node ratio");
}

void add_conductivity_flags(CLI::App* cmd, tni::ExperimentConfig& cfg) {
  cmd->add_option("--phantom", cfg.phantom_name, "analytic phantom id");
  cmd->add_option("--sigma-re", cfg.sigma_re_csv, "sigma' grid CSV (overrides --phantom)");
  cmd->add_option("--sigma-im", cfg.sigma_im_csv, "sigma'' grid CSV");
}

void add_boundary_flags(CLI::App* cmd, tni::ExperimentConfig& cfg, std::string& gap_spec) {
  cmd->add_option("--bc", cfg.bc_tokens, "electrode tokens (g1, h2, gt1, ht2, e1, e2)");
  cmd->add_option("--gap", gap_spec, "no-flux gap LO:HI on every side (mixed BCs)");
}

void add_common_flags(CLI::App* cmd, tni::ExperimentConfig& cfg) {
  cmd->add_option("--out", cfg.out, "output directory")->envname("TNI_OUT");
  cmd->add_option("--seed", cfg.seed, "random seed")->envname("TNI_SEED");
  cmd->add_option("--threads", cfg.threads, "worker thread cap (0 = library default)")
      ->envname("TNI_THREADS");
}

void apply_gap(const std::string& gap_spec, tni::ExperimentConfig& cfg) {
  if (gap_spec.empty()) return;
  const auto colon = gap_spec.find(':');
  if (colon == std::string::npos)
    throw CLI::ValidationError("--gap expects LO:HI, got '" + gap_spec + "'");
  cfg.gap = tni::GapConfig{std::stod(gap_spec.substr(0, colon)), std::stod(gap_spec.substr(colon + 1))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"thermal-noise conductivity imaging toolkit"};
  app.require_subcommand(1);

  tni::ExperimentConfig cfg;
  std::string gap_spec;
  std::string config_path;
  CommonFlags extra;

  auto* fwd = app.add_subcommand("forward", "solve the conductivity equation and export u, H");
  add_common_flags(fwd, cfg);
  add_grid_flags(fwd, cfg);
  add_conductivity_flags(fwd, cfg);
  add_boundary_flags(fwd, cfg, gap_spec);
  fwd->add_option("--dump-operator", extra.dump_operators,
                  "also dump a sparse operator (D1, D2, D, N1, N2, E1, E2, E12) as triplet CSV");

  auto* mea = app.add_subcommand("measure", "synthesize internal-functional data");
  add_common_flags(mea, cfg);
  add_grid_flags(mea, cfg);
  add_conductivity_flags(mea, cfg);
  add_boundary_flags(mea, cfg, gap_spec);
  mea->add_option("--model", cfg.measure_model, "det or stoch");
  mea->add_option("--T0", cfg.params.T0, "background temperature, K");
  mea->add_option("--a", cfg.a, "heating pattern width, cm^2");
  mea->add_option("--delta-omega", cfg.params.delta_omega, "bandwidth, rad/s");
  mea->add_option("--delta-z", cfg.params.delta_z, "plate thickness, cm");
  mea->add_option("--M", cfg.params.M, "realization count");
  mea->add_flag("--paper-normalized", cfg.paper_normalized,
                "sample currents without bandwidth/volume factors");

  auto* sym = app.add_subcommand("symbol-map", "condition map of the linearized problem's symbol");
  add_common_flags(sym, cfg);
  add_grid_flags(sym, cfg);
  add_conductivity_flags(sym, cfg);
  add_boundary_flags(sym, cfg, gap_spec);
  sym->add_option("--kind", cfg.symbol_kind, "real or complex");
  sym->add_option("--directions", cfg.directions, "unit directions sampled per node");

  auto* rec = app.add_subcommand("reconstruct", "Gauss-Newton conductivity reconstruction");
  add_common_flags(rec, cfg);
  add_grid_flags(rec, cfg);
  add_conductivity_flags(rec, cfg);
  add_boundary_flags(rec, cfg, gap_spec);
  rec->add_option("--data", cfg.data_dir, "measurement directory (H CSVs + metadata.json)");
  rec->add_option("--kind", cfg.reconstruct_kind, "real or complex");
  rec->add_option("--gamma", cfg.recon.gamma, "Tikhonov parameter");
  rec->add_option("--step-tol", cfg.recon.step_tol, "stop when the step 2-norm drops below");
  rec->add_option("--band", cfg.recon.boundary_band, "width where sigma is known, cm");
  rec->add_option("--sigma0-re", cfg.sigma0_re, "initial constant sigma'");
  rec->add_option("--sigma0-im", cfg.sigma0_im, "initial constant sigma''");
  rec->add_option("--max-iters", cfg.recon.max_iters, "iteration cap");

  auto* run = app.add_subcommand("run", "execute a declarative experiment config");
  run->add_option("--config", config_path, "experiment config JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      tni::run_pipeline(tni::load_config(config_path));
      return 0;
    }

    apply_gap(gap_spec, cfg);
    if (fwd->parsed()) {
      cfg.stages = {"forward"};
    } else if (mea->parsed()) {
      cfg.stages = {"measure"};
    } else if (sym->parsed()) {
      cfg.stages = {"symbol-map"};
    } else if (rec->parsed()) {
      cfg.stages = {"reconstruct"};
      if (!cfg.data_dir.empty()) {
        tni::MeasurementMetadata meta;
        tni::load_measurement_set(cfg.data_dir, &meta);
        if (meta.n != 0) cfg.grid.n = meta.n;
      }
    }
    cfg.validate();
    tni::run_pipeline(cfg);

    for (const auto& name : extra.dump_operators) {
      tni::OperatorRole role;
      if (name == "D1") role = tni::OperatorRole::D1;
      else if (name == "D2") role = tni::OperatorRole::D2;
      else if (name == "D") role = tni::OperatorRole::D;
      else if (name == "N1") role = tni::OperatorRole::N1;
      else if (name == "N2") role = tni::OperatorRole::N2;
      else if (name == "E1") role = tni::OperatorRole::E1;
      else if (name == "E2") role = tni::OperatorRole::E2;
      else if (name == "E12") role = tni::OperatorRole::E12;
      else throw std::runtime_error("unknown operator role: " + name);
      const tni::GridOps ops = tni::make_grid_ops(cfg.grid);
      tni::write_triplets_csv(cfg.out / "operators" / (name + ".csv"), ops.op(role));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
