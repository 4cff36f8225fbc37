#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tni/inverse.hpp"
#include "tni/symbol.hpp"

namespace tni {

inline constexpr const char* kToolVersion = "tni 0.1.0";

struct GapConfig {
  double lo = 4.5;
  double hi = 5.5;
};

/// A declarative experiment: grid sizes, conductivity source, boundary set,
/// measurement and reconstruction parameters, and the stages to run.
struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 1;
  std::filesystem::path out = "runs/experiment";
  int threads = 0;

  GridSpec grid{60, 10.0, 2};

  std::string phantom_name = "two-bumps";
  std::filesystem::path sigma_re_csv;  // overrides phantom when set
  std::filesystem::path sigma_im_csv;

  std::vector<std::string> bc_tokens{"e1", "e2"};
  std::optional<GapConfig> gap;

  std::string measure_model = "det";  // det | stoch
  ExperimentParams params;
  double a = 0.01;
  bool paper_normalized = false;

  std::string symbol_kind = "real";  // real | complex
  int directions = 100;

  std::string reconstruct_kind = "real";  // real | complex
  ReconstructionConfig recon;
  double sigma0_re = 1.0;
  double sigma0_im = 0.5;

  std::vector<std::string> stages{"measure", "reconstruct"};

  /// When set, the reconstruct stage reads its MeasurementSet here instead
  /// of out/measure; the set's metadata then defines the boundary setup.
  std::filesystem::path data_dir;

  void validate() const;  // reports offending field paths
};

struct MeasurementMetadata {
  int n = 0;
  double extent = 10.0;
  std::vector<std::string> bc_tokens;
  std::optional<GapConfig> gap;
};

ExperimentConfig load_config(const std::filesystem::path& path);

/// Serialized resolved configuration (defaults filled in), as stored in the
/// run manifest.
std::string resolved_config_json(const ExperimentConfig& config);

/// Executes the declared stages in dependency order, writes their outputs
/// under config.out, and finishes with an atomically written manifest
/// recording the resolved config, seed, timings, and output checksums.
/// Measurement synthesis is cached by a content key and skipped when a
/// previous run with the same key left its outputs behind.
void run_pipeline(const ExperimentConfig& config);

/// Helpers shared with the CLI subcommands.
std::vector<BoundarySpec> build_boundary(const std::vector<std::string>& tokens,
                                         const std::optional<GapConfig>& gap, const GridOps& ops);
ConductivityField load_conductivity(const ExperimentConfig& config, const GridSpec& grid);

/// Reads a MeasurementSet written by the measure stage (metadata.json plus
/// one H CSV per experiment).
MeasurementSet load_measurement_set(const std::filesystem::path& dir,
                                    MeasurementMetadata* meta = nullptr);
void save_measurement_set(const std::filesystem::path& dir, const MeasurementSet& set,
                          const GridSpec& coarse, const std::vector<std::string>& bc_tokens,
                          const std::optional<GapConfig>& gap);

}  // namespace tni
