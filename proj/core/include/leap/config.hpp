#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "leap/escape.hpp"
#include "leap/flatness.hpp"
#include "leap/landscapes.hpp"
#include "leap/models.hpp"
#include "leap/optimizers.hpp"
#include "leap/perturbation.hpp"
#include "leap/schedules.hpp"

namespace leap {

struct DataConfig {
  std::string kind = "blobs";  ///< "mnist" or "blobs"
  /// Directory holding the four MNIST IDX files (optionally .gz). When empty
  /// the LEAP_MNIST_DIR environment variable is consulted.
  std::string path;
  std::uint64_t split_seed = 0;
  std::size_t batch_size = 128;
  std::size_t train_n = 50000;
  std::size_t val_n = 10000;
  bool standardize = false;

  // blobs only; train/val are split from the training pool, test is drawn separately
  std::size_t n_per_class = 600;
  std::size_t test_per_class = 200;
  int num_classes = 10;
  int dim = 64;
  double separation = 6.0;
  std::uint64_t blobs_seed = 0;
};

struct LandscapeConfig {
  std::string kind = "quartic";  ///< "quartic", "curvature_family" or "quadratic_bowl"
  QuarticParams quartic;
  double k_flat = 2.0;
  double k_sharp = 8.0;
  double delta_L = 1.0;
  std::optional<double> saddle_curvature;
  std::vector<double> diag{1.0, 4.0};
};

struct EscapeConfig {
  std::string mode = "trials";  ///< "trials", "theorem1" or "selection"
  std::string minimum;          ///< catalog label; empty picks the first entry
  GradientNoise noise = GradientNoise::Fisher;
  double eta = 0.05;
  double sigma = 1.0;
  std::vector<GridPoint> grid;  ///< theorem1 mode
  std::size_t trials = 300;
  std::int64_t max_steps = 200000;
  std::size_t selection_runs = 500;
  std::int64_t selection_steps = 2000;
};

struct FlatnessConfig {
  FlatnessOptions options;
  /// Training examples (first rows of the training split) the curvature is
  /// measured on; 0 means all of them.
  std::size_t examples = 2000;
  /// Experiment directories holding <seed>/checkpoint.bin. Arms without a
  /// directory are trained first.
  std::string vanilla_run;
  std::string leap_run;
};

struct SweepConfig {
  std::vector<double> sigmas = default_sigma_grid();
};

/// Parsed experiment file. Sections a subcommand does not use may be absent.
struct ExperimentConfig {
  std::string name = "experiment";
  std::string output_dir = "runs";
  int epochs = 1;
  std::vector<std::uint64_t> seeds{0};
  double max_wall_time_s = 0.0;  ///< per run; 0 disables the limit

  std::optional<MlpSpec> model;
  std::string model_preset;  ///< echo of model.preset when used
  DataConfig data;
  ScheduleSpec schedule;
  OptimizerConfig optimizer;
  LeapConfig leap;

  std::optional<SweepConfig> sweep;
  std::optional<LandscapeConfig> landscape;
  std::optional<EscapeConfig> escape;
  std::optional<FlatnessConfig> flatness;

  std::string source;  ///< file path or "<string>"; not part of the resolved config
};

/// Parses TOML text. Unknown keys, wrong types and out-of-range values raise
/// ConfigError naming the dotted key.
ExperimentConfig parse_config(std::string_view text, const std::string& source = "<string>");

/// A missing or unreadable file raises ConfigError naming the path.
ExperimentConfig load_config(const std::string& path);

/// Cross-section checks for the training subcommands (model, data, schedule,
/// optimizer, leap, epochs, seeds).
void validate_training(const ExperimentConfig& cfg);

/// Checks for the escape subcommand (landscape and escape sections).
void validate_escape(const ExperimentConfig& cfg);

/// Resolved configuration as canonical JSON text (sorted keys).
std::string resolved_config_json(const ExperimentConfig& cfg);

CatalogedLandscape build_landscape(const LandscapeConfig& cfg);

}  // namespace leap
