#include "tni/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "tni/io.hpp"
#include "tni/parallel.hpp"
#include "tni/phantom.hpp"
#include "tni/rng.hpp"

namespace tni {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  j["seed"] = c.seed;
  j["out"] = c.out.string();
  j["threads"] = c.threads;
  j["grid"] = {{"n", c.grid.n}, {"extent", c.grid.extent}, {"fine_factor", c.grid.fine_factor}};
  if (!c.sigma_re_csv.empty()) {
    j["conductivity"] = {{"sigma_re", c.sigma_re_csv.string()}};
    if (!c.sigma_im_csv.empty()) j["conductivity"]["sigma_im"] = c.sigma_im_csv.string();
  } else {
    j["conductivity"] = {{"phantom", c.phantom_name}};
  }
  j["boundary"] = {{"set", c.bc_tokens}};
  if (c.gap) j["boundary"]["gap"] = {{"lo", c.gap->lo}, {"hi", c.gap->hi}};
  j["measure"] = {{"model", c.measure_model},
                  {"T0", c.params.T0},
                  {"a", c.a},
                  {"delta_omega", c.params.delta_omega},
                  {"delta_z", c.params.delta_z},
                  {"omega", c.params.omega},
                  {"M", c.params.M},
                  {"paper_normalized", c.paper_normalized}};
  j["symbol"] = {{"kind", c.symbol_kind}, {"directions", c.directions}};
  j["reconstruct"] = {{"kind", c.reconstruct_kind},
                      {"gamma", c.recon.gamma},
                      {"step_tol", c.recon.step_tol},
                      {"band", c.recon.boundary_band},
                      {"sigma0_re", c.sigma0_re},
                      {"sigma0_im", c.sigma0_im},
                      {"max_iters", c.recon.max_iters}};
  j["pipeline"] = c.stages;
  return j;
}

void atomic_write(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, path);
}

std::string content_key(const json& j) {
  const std::string text = j.dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
  return hex;
}

int stage_rank(const std::string& stage) {
  if (stage == "forward") return 0;
  if (stage == "measure") return 1;
  if (stage == "symbol-map") return 2;
  if (stage == "reconstruct") return 3;
  return -1;
}

}  // namespace

void ExperimentConfig::validate() const {
  grid.validate();
  params.validate();
  recon.validate();
  if (stages.empty()) throw std::invalid_argument("config: pipeline must list at least one stage");
  bool has_measure = false;
  for (const auto& s : stages) {
    if (stage_rank(s) < 0) throw std::invalid_argument("config: pipeline has unknown stage '" + s + "'");
    if (s == "measure") has_measure = true;
  }
  for (const auto& s : stages)
    if (s == "reconstruct" && !has_measure && data_dir.empty() &&
        !fs::exists(out / "measure" / "metadata.json"))
      throw std::invalid_argument(
          "config: pipeline.reconstruct requires the measure stage or a data directory");
  if (bc_tokens.empty()) throw std::invalid_argument("config: boundary.set must be non-empty");
  if (measure_model != "det" && measure_model != "stoch")
    throw std::invalid_argument("config: measure.model must be det or stoch");
  if (symbol_kind != "real" && symbol_kind != "complex")
    throw std::invalid_argument("config: symbol.kind must be real or complex");
  if (reconstruct_kind != "real" && reconstruct_kind != "complex")
    throw std::invalid_argument("config: reconstruct.kind must be real or complex");
  if (!(a > 0.0)) throw std::invalid_argument("config: measure.a must be positive");
  if (gap && !(gap->lo < gap->hi))
    throw std::invalid_argument("config: boundary.gap must satisfy lo < hi");
  if (!sigma_re_csv.empty() && !fs::exists(sigma_re_csv))
    throw std::invalid_argument("config: conductivity.sigma_re file not found: " + sigma_re_csv.string());
  if (!sigma_im_csv.empty() && !fs::exists(sigma_im_csv))
    throw std::invalid_argument("config: conductivity.sigma_im file not found: " + sigma_im_csv.string());
  if (directions < 4) throw std::invalid_argument("config: symbol.directions must be >= 4");
  if (!(sigma0_re > 0.0)) throw std::invalid_argument("config: reconstruct.sigma0_re must be positive");
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config parse error in " + path.string() + ": " + e.what());
  }

  ExperimentConfig c;
  c.name = j.value("name", c.name);
  c.seed = j.value("seed", c.seed);
  if (j.contains("out")) c.out = j["out"].get<std::string>();
  c.threads = j.value("threads", 0);

  if (j.contains("grid")) {
    const auto& g = j["grid"];
    c.grid.n = g.value("n", c.grid.n);
    c.grid.extent = g.value("extent", c.grid.extent);
    c.grid.fine_factor = g.value("fine_factor", c.grid.fine_factor);
  }
  if (j.contains("conductivity")) {
    const auto& s = j["conductivity"];
    if (s.contains("phantom")) c.phantom_name = s["phantom"].get<std::string>();
    if (s.contains("sigma_re")) c.sigma_re_csv = s["sigma_re"].get<std::string>();
    if (s.contains("sigma_im")) c.sigma_im_csv = s["sigma_im"].get<std::string>();
  }
  if (j.contains("boundary")) {
    const auto& b = j["boundary"];
    if (b.contains("set")) c.bc_tokens = b["set"].get<std::vector<std::string>>();
    if (b.contains("gap") && !b["gap"].is_null())
      c.gap = GapConfig{b["gap"].value("lo", 4.5), b["gap"].value("hi", 5.5)};
  }
  if (j.contains("measure")) {
    const auto& m = j["measure"];
    c.measure_model = m.value("model", c.measure_model);
    c.params.T0 = m.value("T0", c.params.T0);
    c.a = m.value("a", c.a);
    c.params.delta_omega = m.value("delta_omega", c.params.delta_omega);
    c.params.delta_z = m.value("delta_z", c.params.delta_z);
    c.params.omega = m.value("omega", c.params.omega);
    c.params.M = m.value("M", c.params.M);
    c.paper_normalized = m.value("paper_normalized", c.paper_normalized);
  }
  if (j.contains("symbol")) {
    c.symbol_kind = j["symbol"].value("kind", c.symbol_kind);
    c.directions = j["symbol"].value("directions", c.directions);
  }
  if (j.contains("reconstruct")) {
    const auto& r = j["reconstruct"];
    c.reconstruct_kind = r.value("kind", c.reconstruct_kind);
    c.recon.gamma = r.value("gamma", c.recon.gamma);
    c.recon.step_tol = r.value("step_tol", c.recon.step_tol);
    c.recon.boundary_band = r.value("band", c.recon.boundary_band);
    c.recon.max_iters = r.value("max_iters", c.recon.max_iters);
    c.sigma0_re = r.value("sigma0_re", c.sigma0_re);
    c.sigma0_im = r.value("sigma0_im", c.sigma0_im);
  }
  if (j.contains("pipeline")) c.stages = j["pipeline"].get<std::vector<std::string>>();

  // CI override hooks
  if (const char* env = std::getenv("TNI_SEED")) c.seed = std::stoull(env);
  if (const char* env = std::getenv("TNI_OUT")) c.out = env;
  if (const char* env = std::getenv("TNI_THREADS")) c.threads = std::stoi(env);

  c.validate();
  return c;
}

std::string resolved_config_json(const ExperimentConfig& config) {
  return config_to_json(config).dump(2);
}

std::vector<BoundarySpec> build_boundary(const std::vector<std::string>& tokens,
                                         const std::optional<GapConfig>& gap, const GridOps& ops) {
  std::vector<BoundarySpec> bcs;
  if (gap) {
    const BoundaryPartition part =
        classify_boundary(ops.grid, symmetric_gap(gap->lo, gap->hi));
    for (const auto& tok : tokens)
      bcs.push_back(make_mixed(part, electrode_token_values(tok, ops.grid, part.electrode)));
  } else {
    for (const auto& tok : tokens)
      bcs.push_back(
          make_full_dirichlet(ops, electrode_token_values(tok, ops.grid, ops.boundary)));
  }
  return bcs;
}

ConductivityField load_conductivity(const ExperimentConfig& config, const GridSpec& grid) {
  if (!config.sigma_re_csv.empty()) {
    ConductivityField f;
    GridCsvHeader h;
    f.re = read_grid_csv(config.sigma_re_csv, &h);
    if (h.n != grid.n)
      throw std::runtime_error("conductivity CSV grid size " + std::to_string(h.n) +
                               " does not match requested n=" + std::to_string(grid.n));
    f.im = config.sigma_im_csv.empty() ? Vec::Zero(f.re.size())
                                       : read_grid_csv(config.sigma_im_csv);
    f.validate();
    return f;
  }
  return phantom(config.phantom_name, grid);
}

void save_measurement_set(const fs::path& dir, const MeasurementSet& set, const GridSpec& coarse,
                          const std::vector<std::string>& bc_tokens,
                          const std::optional<GapConfig>& gap) {
  fs::create_directories(dir);
  json meta;
  meta["model"] = set.model == MeasureModel::Deterministic ? "det" : "stoch";
  meta["T0"] = set.params.T0;
  meta["a"] = set.a;
  meta["delta_omega"] = set.params.delta_omega;
  meta["delta_z"] = set.params.delta_z;
  meta["omega"] = set.params.omega;
  meta["M"] = set.params.M;
  meta["seed"] = set.seed;
  meta["n"] = coarse.n;
  meta["extent"] = coarse.extent;
  meta["experiments"] = static_cast<int>(set.H.size());
  meta["boundary"] = {{"set", bc_tokens}};
  if (gap) meta["boundary"]["gap"] = {{"lo", gap->lo}, {"hi", gap->hi}};
  atomic_write(dir / "metadata.json", meta.dump(2) + "\n");
  for (size_t i = 0; i < set.H.size(); ++i) {
    GridCsvHeader h{coarse.n, coarse.extent, "H_" + std::to_string(i), "cm^-3.kOhm^-1"};
    write_grid_csv(dir / ("H_exp" + std::to_string(i) + ".csv"), h, set.H[i]);
  }
}

MeasurementSet load_measurement_set(const fs::path& dir, MeasurementMetadata* out_meta) {
  std::ifstream in(dir / "metadata.json");
  if (!in) throw std::runtime_error("missing measurement metadata: " + (dir / "metadata.json").string());
  json meta;
  in >> meta;

  MeasurementSet set;
  set.model = meta.value("model", "det") == std::string("det") ? MeasureModel::Deterministic
                                                               : MeasureModel::Stochastic;
  set.params.T0 = meta.value("T0", 300.0);
  set.a = meta.value("a", 0.01);
  set.params.delta_omega = meta.value("delta_omega", 62831.853071795);
  set.params.delta_z = meta.value("delta_z", 0.1);
  set.params.omega = meta.value("omega", 62831.853071795);
  set.params.M = meta.value("M", 1000);
  set.seed = meta.value("seed", 0);
  const int nexp = meta.value("experiments", 0);
  for (int i = 0; i < nexp; ++i)
    set.H.push_back(read_grid_csv(dir / ("H_exp" + std::to_string(i) + ".csv")));
  if (out_meta) {
    out_meta->n = meta.value("n", 0);
    out_meta->extent = meta.value("extent", 10.0);
    out_meta->bc_tokens.clear();
    out_meta->gap.reset();
    if (meta.contains("boundary")) {
      const auto& b = meta["boundary"];
      if (b.contains("set")) out_meta->bc_tokens = b["set"].get<std::vector<std::string>>();
      if (b.contains("gap") && !b["gap"].is_null())
        out_meta->gap = GapConfig{b["gap"].value("lo", 4.5), b["gap"].value("hi", 5.5)};
    }
  }
  return set;
}

void run_pipeline(const ExperimentConfig& config) {
  config.validate();
  set_thread_cap(config.threads);

  std::vector<std::string> stages = config.stages;
  std::sort(stages.begin(), stages.end(),
            [](const std::string& a, const std::string& b) { return stage_rank(a) < stage_rank(b); });
  stages.erase(std::unique(stages.begin(), stages.end()), stages.end());

  const GridSpec coarse = config.grid;
  const GridSpec fine = coarse.fine();
  const fs::path out = config.out;
  fs::create_directories(out);

  json manifest;
  manifest["name"] = config.name;
  manifest["tool_version"] = kToolVersion;
  manifest["seed"] = config.seed;
  manifest["config"] = config_to_json(config);
  json timings = json::object();
  std::vector<fs::path> outputs;

  // lazily built shared state
  GridOps coarse_ops, fine_ops;
  bool have_coarse_ops = false, have_fine_ops = false;
  auto get_coarse_ops = [&]() -> GridOps& {
    if (!have_coarse_ops) {
      coarse_ops = make_grid_ops(coarse);
      have_coarse_ops = true;
    }
    return coarse_ops;
  };
  auto get_fine_ops = [&]() -> GridOps& {
    if (!have_fine_ops) {
      fine_ops = make_grid_ops(fine);
      have_fine_ops = true;
    }
    return fine_ops;
  };

  std::vector<PotentialField> u_fine;
  auto get_u_fine = [&]() -> std::vector<PotentialField>& {
    if (u_fine.empty()) {
      const ConductivityField sigma_fine = load_conductivity(config, fine);
      const auto bcs = build_boundary(config.bc_tokens, config.gap, get_fine_ops());
      for (const auto& bc : bcs) u_fine.push_back(solve(sigma_fine, bc, get_fine_ops()));
    }
    return u_fine;
  };

  MeasurementSet data;
  bool have_data = false;

  for (const auto& stage : stages) {
    const auto t0 = std::chrono::steady_clock::now();

    if (stage == "forward") {
      const ConductivityField sigma_fine = load_conductivity(config, fine);
      const auto& us = get_u_fine();
      for (size_t i = 0; i < us.size(); ++i) {
        const std::string tag = std::to_string(i);
        write_grid_csv(out / "forward" / ("u_exp" + tag + "_re.csv"),
                       {fine.n, fine.extent, "u_re_" + tag, "1"}, us[i].u.real());
        write_grid_csv(out / "forward" / ("u_exp" + tag + "_im.csv"),
                       {fine.n, fine.extent, "u_im_" + tag, "1"}, us[i].u.imag());
        write_grid_csv(out / "forward" / ("H_exp" + tag + ".csv"),
                       {fine.n, fine.extent, "H_" + tag, "cm^-3.kOhm^-1"},
                       internal_functional(sigma_fine, us[i], get_fine_ops()));
        outputs.push_back(out / "forward" / ("u_exp" + tag + "_re.csv"));
        outputs.push_back(out / "forward" / ("u_exp" + tag + "_im.csv"));
        outputs.push_back(out / "forward" / ("H_exp" + tag + ".csv"));
      }
    } else if (stage == "measure") {
      json key_source = config_to_json(config);
      key_source.erase("pipeline");
      key_source.erase("reconstruct");
      key_source.erase("symbol");
      key_source.erase("threads");
      key_source.erase("name");
      const std::string key = content_key(key_source);
      const fs::path key_file = out / "measure" / ".key";

      bool cached = false;
      if (fs::exists(key_file)) {
        std::ifstream kf(key_file);
        std::string stored;
        kf >> stored;
        if (stored == key) {
          try {
            data = load_measurement_set(out / "measure");
            cached = static_cast<int>(data.H.size()) == static_cast<int>(config.bc_tokens.size());
          } catch (const std::exception&) {
            cached = false;
          }
        }
      }
      if (!cached) {
        const ConductivityField sigma_fine = load_conductivity(config, fine);
        if (config.measure_model == "det") {
          data = deterministic_measure(sigma_fine, get_u_fine(), get_fine_ops(), coarse,
                                       config.params, config.a);
        } else {
          StochasticOptions opts;
          opts.seed = config.seed;
          opts.paper_normalized = config.paper_normalized;
          data = stochastic_measure(sigma_fine, get_u_fine(), get_fine_ops(), coarse,
                                    config.params, config.a, opts);
        }
        save_measurement_set(out / "measure", data, coarse, config.bc_tokens, config.gap);
        atomic_write(key_file, key + "\n");
      }
      have_data = true;
      for (size_t i = 0; i < data.H.size(); ++i)
        outputs.push_back(out / "measure" / ("H_exp" + std::to_string(i) + ".csv"));
      outputs.push_back(out / "measure" / "metadata.json");
    } else if (stage == "symbol-map") {
      const ConductivityField sigma_coarse = load_conductivity(config, coarse);
      const auto bcs = build_boundary(config.bc_tokens, config.gap, get_coarse_ops());
      std::vector<PotentialField> us;
      for (const auto& bc : bcs) us.push_back(solve(sigma_coarse, bc, get_coarse_ops()));
      const auto fields = field_gradients(us, get_coarse_ops());
      const SymbolKind kind =
          config.symbol_kind == "real" ? SymbolKind::Real : SymbolKind::Complex;
      const ConditionMap map = condition_map(fields, sigma_coarse, kind, config.directions);
      const Vec log_map = map.values.array().log10().matrix();
      write_grid_csv(out / "symbol" / "condition_log10.csv",
                     {coarse.n, coarse.extent, "log10_condition", "1"}, log_map);
      write_pgm(out / "symbol" / "condition_log10.pgm", log_map, coarse.n);
      outputs.push_back(out / "symbol" / "condition_log10.csv");
      outputs.push_back(out / "symbol" / "condition_log10.pgm");
    } else if (stage == "reconstruct") {
      std::vector<std::string> bc_tokens = config.bc_tokens;
      std::optional<GapConfig> gap = config.gap;
      if (!have_data) {
        const fs::path mdir = config.data_dir.empty() ? out / "measure" : config.data_dir;
        MeasurementMetadata meta;
        data = load_measurement_set(mdir, &meta);
        have_data = true;
        if (meta.n != 0 && meta.n != coarse.n)
          throw std::runtime_error("reconstruct: data grid n=" + std::to_string(meta.n) +
                                   " does not match configured n=" + std::to_string(coarse.n));
        if (!meta.bc_tokens.empty()) {
          bc_tokens = meta.bc_tokens;  // the data defines the experiments
          gap = meta.gap;
        }
      }
      InverseProblem problem;
      problem.ops = &get_coarse_ops();
      problem.bcs = build_boundary(bc_tokens, gap, get_coarse_ops());
      problem.data = data;
      problem.kind =
          config.reconstruct_kind == "real" ? InverseKind::Real : InverseKind::Complex;
      problem.s_free = free_sigma_mask(coarse, config.recon.boundary_band);

      const ConductivityField sigma_fine = load_conductivity(config, fine);
      const Vec known_re = restrict_to_coarse(sigma_fine.re, fine, coarse);
      const Vec known_im = restrict_to_coarse(sigma_fine.im, fine, coarse);

      ReconstructionState state =
          initial_guess(problem, config.sigma0_re, config.sigma0_im, known_re, known_im);
      state = gauss_newton(problem, config.recon, std::move(state));

      write_grid_csv(out / "reconstruct" / "sigma_re.csv",
                     {coarse.n, coarse.extent, "sigma_re", "cm^-1.kOhm^-1"}, state.s_re);
      outputs.push_back(out / "reconstruct" / "sigma_re.csv");
      if (problem.kind == InverseKind::Complex) {
        write_grid_csv(out / "reconstruct" / "sigma_im.csv",
                       {coarse.n, coarse.extent, "sigma_im", "cm^-1.kOhm^-1"}, state.s_im);
        outputs.push_back(out / "reconstruct" / "sigma_im.csv");
      }
      write_iteration_log(out / "reconstruct" / "iterations.csv", state.log);
      outputs.push_back(out / "reconstruct" / "iterations.csv");

      json summary;
      summary["converged"] = state.converged;
      summary["iterations"] = static_cast<int>(state.log.size());
      double num = 0.0, den = 0.0;
      for (int p = 0; p < coarse.node_count(); ++p)
        if (problem.s_free[p]) {
          num += (state.s_re(p) - known_re(p)) * (state.s_re(p) - known_re(p));
          den += known_re(p) * known_re(p);
        }
      summary["interior_rel_l2_sigma_re"] = std::sqrt(num / den);
      atomic_write(out / "reconstruct" / "summary.json", summary.dump(2) + "\n");
      outputs.push_back(out / "reconstruct" / "summary.json");
    }

    const auto t1 = std::chrono::steady_clock::now();
    timings[stage] = std::chrono::duration<double>(t1 - t0).count();
  }

  manifest["timings_s"] = timings;
  json out_list = json::array();
  for (const auto& p : outputs)
    out_list.push_back({{"path", fs::relative(p, out).string()}, {"checksum", file_checksum(p)}});
  manifest["outputs"] = out_list;
  atomic_write(out / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace tni
