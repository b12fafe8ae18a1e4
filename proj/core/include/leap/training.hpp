#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "leap/config.hpp"
#include "leap/data.hpp"

namespace leap {

/// Train / validation / test splits for one experiment.
struct DataBundle {
  Dataset train;
  Dataset val;
  Dataset test;
  bool standardized = false;
};

/// MNIST: the training files are split into train/val with data.split_seed
/// and the official test files are the test set. The directory is
/// data.path, else $LEAP_MNIST_DIR. Blobs: a training pool of
/// n_per_class * num_classes points is split the same way and a separate
/// test set of test_per_class points per class is drawn.
DataBundle load_data(const DataConfig& cfg);

/// True when all four MNIST files can be found (plain or .gz).
bool mnist_available(const std::string& dir);

struct EpochRecord {
  int epoch = 0;
  double eta = 0.0;         ///< base rate the schedule gave this epoch
  double train_loss = 0.0;  ///< mean minibatch loss over the epoch
  double val_error = 0.0;
};

enum class RunStatus { Ok, Diverged, TimedOut };
std::string_view to_string(RunStatus status) noexcept;

struct RunReport {
  std::string experiment;
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::Ok;
  std::string failure;      ///< empty when status is Ok
  int failed_epoch = 0;     ///< 1-indexed; 0 when status is Ok
  std::size_t failed_batch = 0;
  double final_test_error = 0.0;  ///< NaN unless status is Ok
  double final_val_error = 0.0;   ///< NaN unless status is Ok
  std::vector<EpochRecord> per_epoch;
  std::size_t batches_per_epoch = 0;
  std::size_t h_samples = 0;  ///< one per optimizer update
  std::size_t param_count = 0;
  std::string data_checksum;
  double wall_time_s = 0.0;
  ParamVector final_theta;

  bool ok() const noexcept { return status == RunStatus::Ok; }
};

/// Called after every update with the 1-indexed epoch, the batch index, the
/// batch loss (before the update) and the new parameters.
using BatchObserver = std::function<void(int epoch, std::size_t batch, double loss, std::span<const double> theta)>;

/// The LEAP training loop. For each epoch the schedule gives eta_e; for each
/// batch one h is drawn and one optimizer step applied. Validation error is
/// measured after each epoch and test error once at the end.
///
/// Per seed: initial parameters come from stream derive_seed(seed, 1), the
/// batch order of epoch e from derive_seed(derive_seed(seed, 2), e) and h from
/// stream derive_seed(seed, 3). Vanilla and LEAP runs with the same seed thus
/// share initialization and batch order.
///
/// A non-finite loss stops the run with status Diverged; a run that exceeds
/// cfg.max_wall_time_s stops with TimedOut. Either way the report holds the
/// epochs completed so far.
RunReport run_training(const ExperimentConfig& cfg, std::uint64_t seed, const DataBundle& data,
                       const BatchObserver& observer = {});

struct SweepCell {
  std::string label;  ///< "sigma_<value>" or "disabled"
  LeapConfig leap;
  std::vector<RunReport> runs;
  std::size_t n_ok = 0;
  double mean_val_error = 0.0;
  double std_val_error = 0.0;
  double mean_test_error = 0.0;
  double std_test_error = 0.0;
  bool best = false;
};

struct SweepReport {
  std::string experiment;
  std::vector<SweepCell> cells;
  int best_index = -1;  ///< among the sigma cells, by mean validation error
};

/// Cell label used for sweep directories and tables.
std::string sweep_cell_label(const LeapConfig& leap);

/// Runs every sigma in cfg.sweep (LEAP enabled) plus a disabled cell, each
/// over all cfg.seeds. Failed runs are kept and excluded from the cell
/// statistics. The best sigma is chosen by mean validation error only.
/// `on_run` is called after each run finishes.
SweepReport run_sweep(const ExperimentConfig& cfg, const DataBundle& data,
                      const std::function<void(const SweepCell&, const RunReport&)>& on_run = {});

/// Recomputes cell statistics and the best-sigma flag from the runs.
void summarize_sweep(SweepReport& sweep);

}  // namespace leap
