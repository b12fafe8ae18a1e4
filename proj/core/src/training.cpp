#include "leap/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <sstream>

#include "leap/error.hpp"
#include "leap/stats.hpp"

namespace leap {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kBatchStream = 2;
constexpr std::uint64_t kLeapStream = 3;

std::string resolve_mnist_dir(const std::string& configured) {
  if (!configured.empty()) return configured;
  if (const char* env = std::getenv("LEAP_MNIST_DIR")) return env;
  return {};
}

// Returns the plain or gzipped variant of an IDX file, or "" if neither exists.
std::string find_idx(const fs::path& dir, const std::string& stem) {
  for (const auto& candidate : {dir / stem, dir / (stem + ".gz")})
    if (fs::is_regular_file(candidate)) return candidate.string();
  return {};
}

const char* const kMnistFiles[] = {"train-images-idx3-ubyte", "train-labels-idx1-ubyte", "t10k-images-idx3-ubyte",
                                   "t10k-labels-idx1-ubyte"};

}  // namespace

std::string_view to_string(RunStatus status) noexcept {
  switch (status) {
    case RunStatus::Ok: return "ok";
    case RunStatus::Diverged: return "diverged";
    case RunStatus::TimedOut: return "timed_out";
  }
  return "unknown";
}

bool mnist_available(const std::string& dir) {
  const auto resolved = resolve_mnist_dir(dir);
  if (resolved.empty()) return false;
  for (const char* f : kMnistFiles)
    if (find_idx(resolved, f).empty()) return false;
  return true;
}

DataBundle load_data(const DataConfig& cfg) {
  DataBundle out;
  const SplitSpec split{cfg.train_n, cfg.val_n, cfg.split_seed};
  if (cfg.kind == "mnist") {
    const auto dir = resolve_mnist_dir(cfg.path);
    if (dir.empty()) throw ConfigError("data.path", "no MNIST directory given and LEAP_MNIST_DIR is unset");
    std::string paths[4];
    for (int i = 0; i < 4; ++i) {
      paths[i] = find_idx(dir, kMnistFiles[i]);
      if (paths[i].empty()) throw IoError(std::string("missing ") + kMnistFiles[i] + " in '" + dir + "'");
    }
    const Dataset pool = load_mnist_idx(paths[0], paths[1]);
    std::tie(out.train, out.val) = split_train_val(pool, split);
    out.test = load_mnist_idx(paths[2], paths[3]);
    out.test.name = "mnist/test";
  } else if (cfg.kind == "blobs") {
    const Dataset pool = synth_blobs(cfg.n_per_class, cfg.num_classes, cfg.dim, cfg.separation, cfg.blobs_seed);
    std::tie(out.train, out.val) = split_train_val(pool, split);
    out.test = synth_blobs(cfg.test_per_class, cfg.num_classes, cfg.dim, cfg.separation, derive_seed(cfg.blobs_seed, 1));
    out.test.name = "blobs/test";
  } else {
    throw ConfigError("data.kind", "expected mnist or blobs; got '" + cfg.kind + "'");
  }
  validate(out.train);
  validate(out.test);
  if (cfg.standardize) {
    const auto s = Standardizer::fit(out.train);
    s.apply(out.train);
    if (out.val.size() > 0) s.apply(out.val);
    s.apply(out.test);
    out.standardized = true;
  }
  return out;
}

RunReport run_training(const ExperimentConfig& cfg, std::uint64_t seed, const DataBundle& data,
                       const BatchObserver& observer) {
  validate_training(cfg);
  const MlpSpec& spec = *cfg.model;
  const auto start = std::chrono::steady_clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };

  RunReport rep;
  rep.experiment = cfg.name;
  rep.seed = seed;
  rep.data_checksum = data.train.checksum;
  rep.param_count = param_count(spec);

  RngStream init_rng(derive_seed(seed, kInitStream), 0);
  ParamVector theta = init_params(spec, init_rng);
  RngStream leap_rng(derive_seed(seed, kLeapStream), 0);
  const std::uint64_t batch_master = derive_seed(seed, kBatchStream);

  OptimizerState state = OptimizerState::zeros(theta.size());
  LeapScratch scratch;
  const std::size_t n = data.train.size();
  rep.batches_per_epoch = (n + cfg.data.batch_size - 1) / cfg.data.batch_size;

  const auto fail = [&](RunStatus status, int epoch, std::size_t batch, std::string why) {
    rep.status = status;
    rep.failed_epoch = epoch;
    rep.failed_batch = batch;
    rep.failure = std::move(why);
    rep.final_test_error = std::numeric_limits<double>::quiet_NaN();
    rep.final_val_error = std::numeric_limits<double>::quiet_NaN();
  };

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double eta = eval_schedule(cfg.schedule, epoch);
    const auto batches = batch_indices(n, cfg.data.batch_size, derive_seed(batch_master, static_cast<std::uint64_t>(epoch)));
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const Batch batch = gather(data.train, batches[b]);
      LossGrad lg;
      try {
        lg = loss_and_gradient(spec, theta, batch.inputs, batch.labels);
        if (!std::isfinite(lg.loss)) throw NumericFault("loss", b);
        leap_step(theta, lg.grad, eta, cfg.leap, state, cfg.optimizer, leap_rng, scratch);
      } catch (const NumericFault& e) {
        fail(RunStatus::Diverged, epoch, b, e.what());
        rep.final_theta = theta;
        rep.wall_time_s = elapsed();
        return rep;
      }
      ++rep.h_samples;
      loss_sum += lg.loss;
      if (observer) observer(epoch, b, lg.loss, theta);
      if (cfg.max_wall_time_s > 0.0 && elapsed() > cfg.max_wall_time_s) {
        std::ostringstream why;
        why << "wall time limit of " << cfg.max_wall_time_s << " s exceeded";
        fail(RunStatus::TimedOut, epoch, b, why.str());
        rep.final_theta = theta;
        rep.wall_time_s = elapsed();
        return rep;
      }
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.eta = eta;
    rec.train_loss = loss_sum / static_cast<double>(batches.size());
    rec.val_error = data.val.size() > 0
                        ? predict_error_rate(spec, theta, data.val.inputs, data.val.labels)
                        : std::numeric_limits<double>::quiet_NaN();
    rep.per_epoch.push_back(rec);
  }

  rep.final_val_error = rep.per_epoch.back().val_error;
  rep.final_test_error = predict_error_rate(spec, theta, data.test.inputs, data.test.labels);
  rep.final_theta = std::move(theta);
  rep.wall_time_s = elapsed();
  return rep;
}

std::string sweep_cell_label(const LeapConfig& leap) {
  if (!leap.enabled) return "disabled";
  std::ostringstream s;
  s << "sigma_" << leap.sigma;
  return s.str();
}

void summarize_sweep(SweepReport& sweep) {
  sweep.best_index = -1;
  double best_val = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sweep.cells.size(); ++i) {
    auto& cell = sweep.cells[i];
    std::vector<double> val;
    std::vector<double> test;
    for (const auto& r : cell.runs) {
      if (!r.ok()) continue;
      val.push_back(r.final_val_error);
      test.push_back(r.final_test_error);
    }
    cell.n_ok = val.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    cell.mean_val_error = val.empty() ? nan : stats::mean(val);
    cell.std_val_error = val.empty() ? nan : std::sqrt(stats::sample_variance(val));
    cell.mean_test_error = test.empty() ? nan : stats::mean(test);
    cell.std_test_error = test.empty() ? nan : std::sqrt(stats::sample_variance(test));
    cell.best = false;
    // Test error never enters the selection.
    if (cell.leap.enabled && cell.n_ok > 0 && cell.mean_val_error < best_val) {
      best_val = cell.mean_val_error;
      sweep.best_index = static_cast<int>(i);
    }
  }
  if (sweep.best_index >= 0) sweep.cells[static_cast<std::size_t>(sweep.best_index)].best = true;
}

SweepReport run_sweep(const ExperimentConfig& cfg, const DataBundle& data,
                      const std::function<void(const SweepCell&, const RunReport&)>& on_run) {
  if (!cfg.sweep || cfg.sweep->sigmas.empty()) throw ConfigError("sweep.sigmas", "sweep needs a non-empty sigma grid");
  validate_training(cfg);
  SweepReport sweep;
  sweep.experiment = cfg.name;
  std::vector<LeapConfig> arms;
  for (double s : cfg.sweep->sigmas) arms.push_back(LeapConfig{s, true});
  arms.push_back(LeapConfig{0.0, false});

  for (const auto& leap : arms) {
    SweepCell cell;
    cell.leap = leap;
    cell.label = sweep_cell_label(leap);
    ExperimentConfig run_cfg = cfg;
    run_cfg.leap = leap;
    for (auto seed : cfg.seeds) {
      cell.runs.push_back(run_training(run_cfg, seed, data));
      if (on_run) on_run(cell, cell.runs.back());
    }
    sweep.cells.push_back(std::move(cell));
  }
  summarize_sweep(sweep);
  return sweep;
}

}  // namespace leap
