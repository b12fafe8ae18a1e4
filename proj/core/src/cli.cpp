#include "leap/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include "leap/config.hpp"
#include "leap/error.hpp"
#include "leap/report.hpp"
#include "leap/training.hpp"
#include "leap/version.hpp"

namespace leap {

namespace {

namespace fs = std::filesystem;

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string output;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "experiment config (TOML)")->required();
  cmd->add_option("--seed", args.seed, "run this single master seed instead of the config's seeds");
  cmd->add_option("--output", args.output, "output root (overrides LEAP_OUTPUT_ROOT and output_dir)");
}

ExperimentConfig prepare(const CommonArgs& args) {
  ExperimentConfig cfg = load_config(args.config);
  if (args.seed) cfg.seeds = {*args.seed};
  if (!args.output.empty()) cfg.output_dir = args.output;
  else if (const char* env = std::getenv("LEAP_OUTPUT_ROOT"); env && *env) cfg.output_dir = env;
  return cfg;
}

fs::path experiment_dir(const ExperimentConfig& cfg) { return fs::path(cfg.output_dir) / cfg.name; }

std::string seed_dir(std::uint64_t seed) { return std::to_string(seed); }

int cmd_train(const CommonArgs& args, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = prepare(args);
  validate_training(cfg);
  const fs::path root = experiment_dir(cfg);
  ensure_writable_dir(root);
  const DataBundle data = load_data(cfg.data);
  std::vector<RunReport> runs;
  bool all_ok = true;
  for (auto seed : cfg.seeds) {
    RunReport rep = run_training(cfg, seed, data);
    write_run(root / seed_dir(seed), rep, cfg, data.standardized);
    out << "seed " << seed << ": " << to_string(rep.status) << " test_error=" << format_double(rep.final_test_error)
        << "\n";
    if (!rep.ok()) {
      err << "run failed at epoch " << rep.failed_epoch << " batch " << rep.failed_batch << ": " << rep.failure << "\n";
      all_ok = false;
    }
    rep.final_theta.clear();
    runs.push_back(std::move(rep));
  }
  write_file_atomic(root / "summary.csv", summary_csv(runs));
  write_file_atomic(root / "summary.json", summary_json(runs, cfg));
  return all_ok ? kExitOk : kExitRuntime;
}

int cmd_sweep(const CommonArgs& args, std::ostream& out, std::ostream&) {
  ExperimentConfig cfg = prepare(args);
  if (!cfg.sweep) throw ConfigError("sweep", "missing [sweep] table");
  validate_training(cfg);
  const fs::path root = experiment_dir(cfg);
  ensure_writable_dir(root);
  const DataBundle data = load_data(cfg.data);
  ExperimentConfig cell_cfg = cfg;
  SweepReport sweep = run_sweep(cfg, data, [&](const SweepCell& cell, const RunReport& rep) {
    cell_cfg.leap = cell.leap;
    write_run(root / cell.label / seed_dir(rep.seed), rep, cell_cfg, data.standardized);
    out << cell.label << " seed " << rep.seed << ": " << to_string(rep.status)
        << " val_error=" << format_double(rep.final_val_error) << "\n";
  });
  write_file_atomic(root / "sweep.csv", sweep_csv(sweep));
  write_file_atomic(root / "sweep.json", sweep_json(sweep, cfg));
  if (sweep.best_index >= 0) out << "best: " << sweep.cells[static_cast<std::size_t>(sweep.best_index)].label << "\n";
  return kExitOk;
}

const MinimaCatalogEntry& pick_minimum(const CatalogedLandscape& land, const std::string& label) {
  if (land.catalog.empty()) throw ConfigError("landscape.kind", "landscape has no catalog");
  if (label.empty()) return land.catalog.front();
  for (const auto& e : land.catalog)
    if (e.label == label) return e;
  throw ConfigError("escape.minimum", "no catalog entry named '" + label + "'");
}

int cmd_escape(const CommonArgs& args, std::ostream& out, std::ostream&) {
  ExperimentConfig cfg = prepare(args);
  validate_escape(cfg);
  const auto& e = *cfg.escape;
  const CatalogedLandscape land = build_landscape(*cfg.landscape);
  const fs::path root = experiment_dir(cfg);
  ensure_writable_dir(root);
  for (auto seed : cfg.seeds) {
    const fs::path dir = root / seed_dir(seed);
    if (e.mode == "selection") {
      if (land.catalog.size() < 2) throw ConfigError("landscape.kind", "selection needs two catalog entries");
      // curvature_family lists [flat, sharp]; for the quartic both basins are
      // equally curved and the first entry plays the "flat" role.
      const EscapeDynamics dyn{e.eta, LeapConfig{e.sigma, true}, e.noise};
      const auto res = minima_selection_experiment(*land.landscape, land.catalog[0], land.catalog[1], dyn,
                                                   e.selection_runs, e.selection_steps, seed);
      write_file_atomic(dir / "selection.json", selection_json(res, cfg, seed));
      out << "seed " << seed << ": flat_fraction=" << format_double(res.flat_fraction)
          << " p=" << format_double(res.p_value) << "\n";
      continue;
    }
    const MinimaCatalogEntry& entry = pick_minimum(land, e.minimum);
    if (e.mode == "trials") {
      const EscapeDynamics dyn{e.eta, LeapConfig{e.sigma, true}, e.noise};
      const auto records = run_escape_trials(*land.landscape, entry, dyn, e.max_steps, seed, e.trials);
      const auto est = estimate_escape_time(records);
      write_file_atomic(dir / "escape_records.csv", escape_records_csv(records));
      write_file_atomic(dir / "escape_estimate.json", escape_estimate_json(est, cfg, seed, entry.label));
      out << "seed " << seed << ": mean_steps=" << format_double(est.mean_steps) << " escaped=" << est.n_escaped << "/"
          << est.n_trials << (est.valid ? "" : " (invalid)") << "\n";
      continue;
    }
    // theorem1: same seed derivation as theorem1_sweep, keeping the records.
    std::vector<SweepPoint> points;
    for (std::size_t i = 0; i < e.grid.size(); ++i) {
      const EscapeDynamics dyn{e.grid[i].eta, LeapConfig{e.grid[i].sigma, true}, e.noise};
      const std::uint64_t point_seed = derive_seed(seed, i);
      const auto records = run_escape_trials(*land.landscape, entry, dyn, e.max_steps, point_seed, e.trials);
      points.push_back({e.grid[i], point_seed, estimate_escape_time(records)});
      write_file_atomic(dir / ("escape_records_" + std::to_string(i) + ".csv"), escape_records_csv(records));
    }
    std::optional<Theorem1Fit> fit;
    std::string fit_error;
    try {
      fit = fit_theorem1(points, entry);
    } catch (const FitError& ex) {
      fit_error = ex.what();
    }
    write_file_atomic(dir / "theorem1_points.csv", theorem1_points_csv(points));
    write_file_atomic(dir / "theorem1_fit.json", theorem1_json(points, fit ? &*fit : nullptr, fit_error, cfg, seed, entry.label));
    if (fit)
      out << "seed " << seed << ": slope=" << format_double(fit->slope) << " r2=" << format_double(fit->r_squared) << "\n";
    else
      out << "seed " << seed << ": " << fit_error << "\n";
  }
  return kExitOk;
}

int cmd_flatness(const CommonArgs& args, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg = prepare(args);
  validate_training(cfg);
  const FlatnessConfig fc = cfg.flatness.value_or(FlatnessConfig{});
  if (!cfg.leap.enabled || cfg.leap.sigma == 0.0)
    throw ConfigError("leap.sigma", "flatness compares against a LEAP arm; enable leap with sigma > 0");
  const fs::path root = experiment_dir(cfg);
  ensure_writable_dir(root);
  const DataBundle data = load_data(cfg.data);

  const auto arm = [&](const std::string& name, const std::string& run_dir, const LeapConfig& leap) {
    FlatnessArm a;
    a.name = name;
    a.spec = *cfg.model;
    ExperimentConfig arm_cfg = cfg;
    arm_cfg.leap = leap;
    for (auto seed : cfg.seeds) {
      if (!run_dir.empty()) {
        a.thetas.push_back(read_checkpoint(fs::path(run_dir) / seed_dir(seed) / "checkpoint.bin"));
      } else {
        RunReport rep = run_training(arm_cfg, seed, data);
        if (!rep.ok()) throw NumericFault(name + " arm training (seed " + std::to_string(seed) + ")", rep.failed_batch);
        write_run(root / name / seed_dir(seed), rep, arm_cfg, data.standardized);
        err << name << " seed " << seed << " trained\n";
        a.thetas.push_back(std::move(rep.final_theta));
      }
      if (a.thetas.back().size() != param_count(a.spec))
        throw UsageError("checkpoint for seed " + std::to_string(seed) + " does not match the model");
      a.seeds.push_back(seed);
    }
    return a;
  };
  const FlatnessArm vanilla = arm("vanilla", fc.vanilla_run, LeapConfig{0.0, false});
  const FlatnessArm leap_arm = arm("leap", fc.leap_run, cfg.leap);

  const Eigen::Index rows = fc.examples == 0 ? static_cast<Eigen::Index>(data.train.size())
                                             : std::min<Eigen::Index>(static_cast<Eigen::Index>(fc.examples),
                                                                      static_cast<Eigen::Index>(data.train.size()));
  const std::span<const int> labels(data.train.labels.data(), static_cast<std::size_t>(rows));
  const auto cmp = compare_flatness(vanilla, leap_arm, data.train.inputs.topRows(rows), labels, fc.options,
                                    derive_seed(cfg.seeds.front(), 0xf1a7));
  write_file_atomic(root / "flatness.csv", flatness_csv(cmp));
  write_file_atomic(root / "flatness.json", flatness_json(cmp, cfg));
  out << "median top eigenvalue: vanilla=" << format_double(cmp.median_top_vanilla)
      << " leap=" << format_double(cmp.median_top_leap) << " p=" << format_double(cmp.top_test.p_value) << "\n";
  return kExitOk;
}

int cmd_report(const CommonArgs& args, std::ostream& out, std::ostream&) {
  ExperimentConfig cfg = prepare(args);
  const fs::path root = experiment_dir(cfg);
  if (!fs::is_directory(root)) throw IoError("no artifacts under '" + root.string() + "'");
  ensure_writable_dir(root);
  if (cfg.sweep) {
    SweepReport sweep;
    sweep.experiment = cfg.name;
    std::vector<LeapConfig> arms;
    for (double s : cfg.sweep->sigmas) arms.push_back(LeapConfig{s, true});
    arms.push_back(LeapConfig{0.0, false});
    for (const auto& leap : arms) {
      SweepCell cell;
      cell.leap = leap;
      cell.label = sweep_cell_label(leap);
      for (auto seed : cfg.seeds) {
        const fs::path p = root / cell.label / seed_dir(seed) / "report.json";
        if (fs::exists(p)) cell.runs.push_back(read_run_report(p));
      }
      sweep.cells.push_back(std::move(cell));
    }
    summarize_sweep(sweep);
    write_file_atomic(root / "sweep.csv", sweep_csv(sweep));
    write_file_atomic(root / "sweep.json", sweep_json(sweep, cfg));
    out << "wrote " << (root / "sweep.csv").string() << "\n";
    return kExitOk;
  }
  std::vector<RunReport> runs;
  for (auto seed : cfg.seeds) {
    const fs::path p = root / seed_dir(seed) / "report.json";
    if (!fs::exists(p)) throw IoError("missing run report '" + p.string() + "'");
    runs.push_back(read_run_report(p));
  }
  write_file_atomic(root / "summary.csv", summary_csv(runs));
  write_file_atomic(root / "summary.json", summary_json(runs, cfg));
  out << "wrote " << (root / "summary.csv").string() << "\n";
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"LEAP learning-rate perturbation lab", "leaplab"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough(false);

  CommonArgs args;
  CLI::App* train = app.add_subcommand("train", "train an MLP for every configured seed");
  CLI::App* sweep = app.add_subcommand("sweep", "sigma grid plus a disabled baseline over all seeds");
  CLI::App* escape = app.add_subcommand("escape", "escape-time trials, exponential-law sweeps or minima selection");
  CLI::App* flatness = app.add_subcommand("flatness", "curvature of vanilla vs LEAP checkpoints");
  CLI::App* report = app.add_subcommand("report", "rebuild summary tables from run directories");
  for (CLI::App* cmd : {train, sweep, escape, flatness, report}) add_common(cmd, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (train->parsed()) return cmd_train(args, out, err);
    if (sweep->parsed()) return cmd_sweep(args, out, err);
    if (escape->parsed()) return cmd_escape(args, out, err);
    if (flatness->parsed()) return cmd_flatness(args, out, err);
    if (report->parsed()) return cmd_report(args, out, err);
  } catch (const ConfigError& e) {
    err << e.what() << "\n";
    return kExitValidation;
  } catch (const UsageError& e) {
    err << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

int cli_main(int argc, const char* const* argv) { return cli_main(argc, argv, std::cout, std::cerr); }

}  // namespace leap
