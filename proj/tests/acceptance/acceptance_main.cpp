// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "leap/cli.hpp"
#include "leap/config.hpp"
#include "leap/error.hpp"
#include "leap/escape.hpp"
#include "leap/flatness.hpp"
#include "leap/landscapes.hpp"
#include "leap/models.hpp"
#include "leap/optimizers.hpp"
#include "leap/perturbation.hpp"
#include "leap/report.hpp"
#include "leap/stats.hpp"
#include "leap/training.hpp"

using namespace leap;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << x;
  return s.str();
}

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------- 1 ------

Outcome sampler_correctness() {
  const double eta = 0.1, sigma = 0.05;
  const std::size_t dim = 4, n = 250000;  // 10^6 draws
  RngStream rng(20240601, 0);
  std::vector<std::vector<double>> cols(dim, std::vector<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    const auto h = sample_lr_vector(eta, {sigma, true}, dim, rng);
    for (std::size_t i = 0; i < dim; ++i) cols[i][k] = h.values[i];
  }
  std::vector<double> all;
  all.reserve(dim * n);
  for (const auto& c : cols) all.insert(all.end(), c.begin(), c.end());
  const double mean = stats::mean(all);
  const double var = stats::sample_variance(all);
  const double se = eta * sigma / std::sqrt(static_cast<double>(all.size()));
  const double target_var = std::pow(eta * sigma, 2);
  double max_r = 0.0;
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = i + 1; j < dim; ++j) {
      const double mi = stats::mean(cols[i]), mj = stats::mean(cols[j]);
      double sxy = 0, sxx = 0, syy = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const double a = cols[i][k] - mi, b = cols[j][k] - mj;
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
      }
      max_r = std::max(max_r, std::abs(sxy / std::sqrt(sxx * syy)));
    }
  const double z = (mean - eta) / se;
  const double var_rel = std::abs(var - target_var) / target_var;
  return {std::abs(z) <= 3.0 && var_rel <= 0.05 && max_r < 0.01,
          "mean z=" + fmt(z) + " var rel err=" + fmt(var_rel) + " max|r|=" + fmt(max_r)};
}

// ---------------------------------------------------------------- 2 ------

ExperimentConfig blobs_mlp3_config(int epochs) {
  auto cfg = load_config(LEAP_CONFIG_DIR "/mlp3_blobs.toml");
  cfg.epochs = epochs;
  return cfg;
}

Outcome sigma_zero_equivalence() {
  auto cfg = blobs_mlp3_config(5);
  const auto data = load_data(cfg.data);
  std::size_t identical = 0, total = 0;
  for (std::uint64_t seed : {0ull, 1ull}) {
    cfg.leap = {0.0, true};
    const auto a = run_training(cfg, seed, data);
    cfg.leap = {0.05, false};
    const auto b = run_training(cfg, seed, data);
    ++total;
    if (a.ok() && b.ok() && a.final_theta == b.final_theta) ++identical;
  }
  return {identical == total, std::to_string(identical) + "/" + std::to_string(total) + " seeds bit-identical"};
}

// ---------------------------------------------------------------- 3 ------

// Signs of every hidden pre-activation; the loss is smooth wherever this is fixed.
std::vector<bool> relu_pattern(const MlpSpec& spec, std::span<const double> theta, const RowMatrix& x) {
  const auto layers = unflatten(spec, theta);
  std::vector<bool> out;
  RowMatrix a = x;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    RowMatrix z = a * layers[l].weights.transpose();
    z.rowwise() += layers[l].bias.transpose();
    for (Eigen::Index i = 0; i < z.size(); ++i) out.push_back(z.data()[i] > 0.0);
    a = z.cwiseMax(0.0);
  }
  return out;
}

Outcome gradient_exactness() {
  double worst = 0.0;
  std::string where;
  for (const auto& name : mlp_preset_names()) {
    const auto spec = mlp_preset(name);
    RngStream rng(derive_seed(7, std::hash<std::string>{}(name)), 0);
    auto theta = init_params(spec, rng);
    RowMatrix x(8, spec.input_dim());
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform();
    std::vector<int> y(8);
    for (auto& v : y) v = static_cast<int>(rng.engine()() % static_cast<std::uint64_t>(spec.num_classes()));
    const auto g = loss_and_gradient(spec, theta, x, y).grad;
    std::uniform_int_distribution<std::size_t> pick(0, theta.size() - 1);
    for (int k = 0; k < 20; ++k) {
      const std::size_t i = pick(rng.engine());
      // Fourth-order central stencil at its rounding-optimal step eps^(1/5),
      // shrunk until the stencil stays inside one ReLU activation region.
      const double t0 = theta[i];
      const auto pattern_at = [&](double offset) {
        theta[i] = t0 + offset;
        auto p = relu_pattern(spec, theta, x);
        theta[i] = t0;
        return p;
      };
      const auto here = pattern_at(0.0);
      double h = 7.4e-4 * std::max(1.0, std::abs(t0));
      while (h > 1e-9 && (pattern_at(2 * h) != here || pattern_at(-2 * h) != here)) h *= 0.5;
      const auto loss_at = [&](double offset) {
        theta[i] = t0 + offset;
        const double l = forward_loss(spec, theta, x, y).loss;
        theta[i] = t0;
        return l;
      };
      // differences first, so equal losses cancel exactly
      const double fd = (8 * (loss_at(h) - loss_at(-h)) - (loss_at(2 * h) - loss_at(-2 * h))) / (12 * h);
      const double scale = std::max(std::abs(fd), std::abs(g[i]));
      const double rel = scale == 0.0 ? 0.0 : std::abs(fd - g[i]) / scale;
      if (rel > worst) {
        worst = rel;
        where = name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return {worst < 1e-5, "max rel err=" + fmt(worst) + (where.empty() ? "" : " at " + where)};
}

// ---------------------------------------------------------------- 4 ------

Outcome convergence_contraction() {
  const std::vector<double> d{1.0, 4.0};
  const int reps = 1000, steps = 50;
  OptimizerConfig opt;
  opt.momentum_beta = 0.0;
  std::vector<double> mean_dist(steps + 1, 0.0);
  for (int r = 0; r < reps; ++r) {
    RngStream rng(99, static_cast<std::uint64_t>(r));
    std::vector<double> theta{1.0, 1.0}, g(2);
    auto state = OptimizerState::zeros(2);
    LeapScratch scratch;
    mean_dist[0] += std::hypot(theta[0], theta[1]);
    for (int t = 1; t <= steps; ++t) {
      for (int i = 0; i < 2; ++i) g[i] = d[i] * theta[i];
      leap_step(theta, g, 0.2, {0.01, true}, state, opt, rng, scratch);
      mean_dist[t] += std::hypot(theta[0], theta[1]);
    }
  }
  int violations = 0;
  double worst = -1e300;
  for (int t = 0; t < steps; ++t) {
    const double inc = (mean_dist[t + 1] - mean_dist[t]) / reps;
    worst = std::max(worst, inc);
    if (inc > 1e-12) ++violations;
  }
  return {violations == 0, "violations=" + std::to_string(violations) + " max step change=" + fmt(worst) +
                               " final mean dist=" + fmt(mean_dist[steps] / reps)};
}

// ---------------------------------------------------------------- 5, 6 ---

const std::vector<double> kQuarticSigmas{1.2, 1.0, 0.9, 0.8, 0.7, 0.65, 0.6};
constexpr double kEscapeEta = 0.05;
constexpr std::size_t kQuarticTrials = 400;
constexpr std::int64_t kQuarticMaxSteps = 8000000;
constexpr std::uint64_t kQuarticSeed = 5150;

std::vector<GridPoint> quartic_grid() {
  std::vector<GridPoint> g;
  for (double s : kQuarticSigmas) g.push_back({kEscapeEta, s});
  return g;
}

struct QuarticSweep {
  Theorem1Sweep sweep;
  std::size_t valid_points = 0;
  std::size_t min_escaped = 0;
  bool fit_ok = false;
  std::string error;
};

QuarticSweep run_quartic(double barrier_scale) {
  QuarticSweep out;
  const auto q = quartic_double_well({std::nullopt, 0.0, barrier_scale});
  try {
    out.sweep = theorem1_sweep(*q.landscape, q.catalog[0], quartic_grid(), GradientNoise::Fisher, kQuarticTrials,
                               kQuarticMaxSteps, kQuarticSeed);
    out.fit_ok = true;
  } catch (const FitError& e) {
    out.error = e.what();
  }
  out.min_escaped = static_cast<std::size_t>(-1);
  for (const auto& p : out.sweep.points) {
    out.valid_points += p.estimate.valid && p.estimate.n_escaped >= 300;
    out.min_escaped = std::min(out.min_escaped, p.estimate.n_escaped);
  }
  return out;
}

std::string sweep_table(const QuarticSweep& s) {
  std::string t;
  for (const auto& p : s.sweep.points)
    t += " sigma=" + fmt(p.grid.sigma) + ":" + fmt(p.estimate.mean_steps, 6) + (p.estimate.valid ? "" : "(invalid)");
  return t;
}

// ---------------------------------------------------------------- 7 ------

Outcome flat_sharp_ordering() {
  const auto cf = curvature_family(2.0, 8.0, 1.0);
  const std::vector<double> sigmas{3.0, 2.5, 2.2, 2.0, 1.8, 1.6};
  std::vector<EscapeEstimate> flat, sharp;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    const EscapeDynamics dyn{kEscapeEta, {sigmas[i], true}, GradientNoise::Fisher};
    const std::uint64_t seed = derive_seed(7007, i);
    flat.push_back(estimate_escape_time(run_escape_trials(*cf.landscape, cf.catalog[0], dyn, 5000000, seed, 300)));
    sharp.push_back(estimate_escape_time(run_escape_trials(*cf.landscape, cf.catalog[1], dyn, 5000000, seed, 300)));
  }
  bool ordered = true, valid = true;
  std::string diffs;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    valid = valid && flat[i].valid && sharp[i].valid;
    ordered = ordered && flat[i].mean_steps > sharp[i].mean_steps;
    diffs += " " + fmt(std::log(flat[i].mean_steps / sharp[i].mean_steps), 3);
  }
  // the two largest 1/(eta sigma^2) are the last two sigmas
  bool separated = true;
  for (std::size_t i = sigmas.size() - 2; i < sigmas.size(); ++i)
    separated = separated &&
                flat[i].mean_steps - flat[i].ci_halfwidth_95 > sharp[i].mean_steps + sharp[i].ci_halfwidth_95;
  return {valid && ordered && separated, std::string("all valid=") + (valid ? "yes" : "no") +
                                             " flat>sharp everywhere=" + (ordered ? "yes" : "no") +
                                             " CIs disjoint at top two=" + (separated ? "yes" : "no") +
                                             " log(flat/sharp) by sigma" + diffs};
}

// ---------------------------------------------------------------- 8 ------

Outcome minima_selection() {
  const EscapeDynamics dyn{kEscapeEta, {1.0, true}, GradientNoise::Fisher};
  const auto cf = curvature_family(2.0, 8.0, 1.0);
  const auto res = minima_selection_experiment(*cf.landscape, cf.catalog[0], cf.catalog[1], dyn, 1000, 2000, 808);
  const auto sym = curvature_family(4.0, 4.0, 1.0);
  const auto ctl = minima_selection_experiment(*sym.landscape, sym.catalog[0], sym.catalog[1], dyn, 1000, 2000, 808);
  const bool main_ok = res.valid && res.flat_fraction > 0.5 && res.p_value < 0.01;
  const bool ctl_ok = ctl.valid && std::abs(ctl.flat_fraction - 0.5) <= ctl.ci_halfwidth_95;
  return {main_ok && ctl_ok, "flat fraction=" + fmt(res.flat_fraction) + " p=" + fmt(res.p_value) +
                                 " outside=" + std::to_string(res.n_outside) + "; symmetric control=" +
                                 fmt(ctl.flat_fraction) + " +/- " + fmt(ctl.ci_halfwidth_95) +
                                 " outside=" + std::to_string(ctl.n_outside)};
}

// ---------------------------------------------------------------- 9, 10 --

struct TableRow {
  ExperimentConfig cfg;
  DataBundle data;
  SweepReport sweep;
  bool mnist = false;
};

TableRow run_table_row() {
  TableRow row;
  const char* dir = std::getenv("LEAP_MNIST_DIR");
  row.mnist = dir != nullptr && mnist_available(dir);
  row.cfg = row.mnist ? load_config(LEAP_CONFIG_DIR "/mlp3_mnist.toml") : blobs_mlp3_config(20);
  row.data = load_data(row.cfg.data);
  row.sweep = run_sweep(row.cfg, row.data);
  return row;
}

Outcome table_row(const TableRow& row, double seconds) {
  const auto& cells = row.sweep.cells;
  const SweepCell& vanilla = cells.back();
  if (row.sweep.best_index < 0) return {false, "no valid sigma cell"};
  const SweepCell& best = cells[static_cast<std::size_t>(row.sweep.best_index)];
  const double ceiling = row.mnist ? 0.03 : 0.02;
  const bool ok = vanilla.n_ok == vanilla.runs.size() && vanilla.mean_test_error <= ceiling &&
                  best.mean_test_error <= vanilla.mean_test_error && seconds <= 1800.0;
  return {ok, std::string(row.mnist ? "MNIST" : "blobs fallback (MNIST files not found)") +
                  ": vanilla test err=" + fmt(vanilla.mean_test_error) + " (ceiling " + fmt(ceiling) +
                  "), best " + best.label + " test err=" + fmt(best.mean_test_error) + " val err=" +
                  fmt(best.mean_val_error) + ", " + fmt(seconds, 3) + " s"};
}

Outcome flatness_direction(const TableRow& row) {
  const auto& cells = row.sweep.cells;
  if (row.sweep.best_index < 0) return {false, "no LEAP arm"};
  const SweepCell& best = cells[static_cast<std::size_t>(row.sweep.best_index)];
  const SweepCell& vanilla = cells.back();
  FlatnessArm va{"vanilla", *row.cfg.model, {}, {}}, la{"leap", *row.cfg.model, {}, {}};
  for (const auto& r : vanilla.runs) {
    va.thetas.push_back(r.final_theta);
    va.seeds.push_back(r.seed);
  }
  for (const auto& r : best.runs) {
    la.thetas.push_back(r.final_theta);
    la.seeds.push_back(r.seed);
  }
  const std::size_t rows = std::min<std::size_t>(2000, row.data.train.size());
  const auto inputs = row.data.train.inputs.topRows(static_cast<Eigen::Index>(rows));
  const std::span<const int> labels(row.data.train.labels.data(), rows);
  FlatnessOptions opt;
  opt.max_iters = 1000;
  opt.tol = 1e-6;
  opt.fd_epsilon = 1e-6;
  const auto cmp = compare_flatness(va, la, inputs, labels, opt, 1010);

  // Oracle: restrict the loss to 40 coordinates of a trained vanilla theta and
  // compare power iteration with a dense eigen-decomposition there.
  const MlpSpec& spec = *row.cfg.model;
  const ParamVector base = va.thetas.front();
  std::vector<std::size_t> coords;
  const std::size_t m = base.size();
  for (std::size_t i = 0; i < 10; ++i) coords.push_back(m - 10 + i);  // output biases
  RngStream pick(1011, 0);
  while (coords.size() < 40) {
    const std::size_t c = static_cast<std::size_t>(pick.engine()() % (m - 10));
    if (std::find(coords.begin(), coords.end(), c) == coords.end()) coords.push_back(c);
  }
  const GradientFn sub_grad = [&](std::span<const double> phi) {
    ParamVector th = base;
    for (std::size_t k = 0; k < coords.size(); ++k) th[coords[k]] = phi[k];
    const auto g = full_loss_and_gradient(spec, th, inputs, labels).grad;
    ParamVector out(coords.size());
    for (std::size_t k = 0; k < coords.size(); ++k) out[k] = g[coords[k]];
    return out;
  };
  ParamVector phi(coords.size());
  for (std::size_t k = 0; k < coords.size(); ++k) phi[k] = base[coords[k]];
  Eigen::MatrixXd dense(40, 40);
  const double eps = 1e-6;
  for (std::size_t j = 0; j < 40; ++j) {
    auto p = phi, q = phi;
    p[j] += eps;
    q[j] -= eps;
    const auto gp = sub_grad(p), gm = sub_grad(q);
    for (std::size_t i = 0; i < 40; ++i)
      dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (gp[i] - gm[i]) / (2 * eps);
  }
  const Eigen::MatrixXd sym = 0.5 * (dense + dense.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  const auto& ev = solver.eigenvalues();
  const double dominant = std::abs(ev(0)) > std::abs(ev(ev.size() - 1)) ? ev(0) : ev(ev.size() - 1);
  RngStream rng(1012, 0);
  const auto rep = flatness_report(sub_grad, phi, {2000, 1e-10, 1e-6, 0}, rng);
  const double oracle_rel = std::abs(rep.top_eigenvalue - dominant) / std::abs(dominant);

  const bool ok = cmp.all_converged && rep.converged && oracle_rel <= 1e-3;
  return {ok, "converged=" + std::string(cmp.all_converged ? "yes" : "no") + " oracle rel err=" + fmt(oracle_rel) +
                  " | median top eig vanilla=" + fmt(cmp.median_top_vanilla) + " leap(" + best.label +
                  ")=" + fmt(cmp.median_top_leap) + " p=" + fmt(cmp.top_test.p_value) +
                  " direction " + (cmp.direction_holds ? "holds" : "does not hold") + " (informational)"};
}

// ---------------------------------------------------------------- 11 -----

const char* kDetTrain = R"(
name = "det"
epochs = 2
seeds = [0, 1, 2, 3, 4]
[model]
layer_dims = [8, 12, 4]
[data]
kind = "blobs"
n_per_class = 40
test_per_class = 20
num_classes = 4
dim = 8
separation = 4.0
train_n = 120
val_n = 40
batch_size = 32
[schedule]
kind = "cosine_warm_restart"
eta0 = 0.05
eta_min = 0.001
t0 = 1
t_mult = 2
[optimizer]
kind = "adam"
[leap]
enabled = true
sigma = 0.1
[sweep]
sigmas = [0.1, 0.01]
[flatness]
max_iters = 100
tol = 1e-5
probe_points = 16
examples = 100
)";

std::string escape_toml(const std::string& mode) {
  std::string t = "name = \"det_" + mode + "\"\nseeds = [3]\n";
  if (mode == "selection")
    t += "[landscape]\nkind = \"curvature_family\"\n[escape]\nmode = \"selection\"\nsigma = 1.0\n"
         "selection_runs = 500\nselection_steps = 300\n";
  else if (mode == "theorem1")
    t += "[landscape]\nkind = \"quartic\"\n[escape]\nmode = \"theorem1\"\ntrials = 100\n"
         "grid = [{eta = 0.05, sigma = 2.0}, {eta = 0.05, sigma = 1.8}, {eta = 0.05, sigma = 1.6}, "
         "{eta = 0.05, sigma = 1.4}]\n";
  else
    t += "[landscape]\nkind = \"quartic\"\n[escape]\nmode = \"trials\"\nsigma = 1.5\ntrials = 150\n";
  return t;
}

std::map<std::string, std::string> payloads(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension();
    if ((ext != ".csv" && ext != ".json") || e.path().filename() == "timing.json") continue;
    out[fs::relative(e.path(), root).string()] = read_file(e.path());
  }
  return out;
}

int invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "leaplab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
}

Outcome determinism_suite() {
  const fs::path dir = fs::temp_directory_path() / "leap_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "train.toml") << kDetTrain;
  for (const char* m : {"trials", "theorem1", "selection"}) std::ofstream(dir / (std::string(m) + ".toml")) << escape_toml(m);

  const std::vector<std::vector<std::string>> commands{
      {"train", "--config", (dir / "train.toml").string()},
      {"report", "--config", (dir / "train.toml").string()},
      {"sweep", "--config", (dir / "train.toml").string(), "--seed", "1"},
      {"flatness", "--config", (dir / "train.toml").string()},
      {"escape", "--config", (dir / "trials.toml").string()},
      {"escape", "--config", (dir / "theorem1.toml").string()},
      {"escape", "--config", (dir / "selection.toml").string()},
  };
  std::size_t files = 0;
  std::vector<std::string> problems;
  for (const auto& cmd : commands) {
    std::vector<std::map<std::string, std::string>> runs;
    for (const char* rep : {"a", "b"}) {
      // a fresh root per command keeps the comparison to that command's files
      const fs::path root = dir / "out" / (cmd[0] + std::to_string(runs.size()) + rep);
      auto args = cmd;
      args.push_back("--output");
      args.push_back(root.string());
      if (cmd[0] == "report") {
        // report rebuilds the summary tables from the per-seed report.json files
        if (invoke({"train", "--config", cmd[2], "--output", root.string()}) != 0)
          problems.push_back("report setup failed");
        fs::remove(root / "det" / "summary.csv");
        fs::remove(root / "det" / "summary.json");
      }
      const int code = invoke(args);
      if (code != 0) problems.push_back(cmd[0] + " exited " + std::to_string(code));
      runs.push_back(payloads(root));
    }
    if (runs[0].empty()) problems.push_back(cmd[0] + " wrote nothing");
    if (runs[0] != runs[1]) problems.push_back(cmd[0] + " payloads differ");
    files += runs[0].size();
  }
  fs::remove_all(dir);
  std::string detail = std::to_string(commands.size()) + " invocations, " + std::to_string(files) + " files compared";
  for (const auto& p : problems) detail += "; " + p;
  return {problems.empty(), detail};
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](int id, const std::string& name, const std::function<Outcome()>& fn, double limit_s) {
    Clock clock;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = clock.seconds();
    if (limit_s > 0 && s > limit_s) {
      o.pass = false;
      o.detail += " (runtime over " + fmt(limit_s) + " s)";
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << id << ". " << name << ": " << o.detail << " [" << fmt(s, 3)
              << " s]" << std::endl;
  };

  report(1, "sampler correctness", sampler_correctness, 10);
  report(2, "sigma=0 equivalence", sigma_zero_equivalence, 60);
  report(3, "gradient exactness", gradient_exactness, 60);
  report(4, "convergence contraction", convergence_contraction, 30);

  QuarticSweep base, doubled;
  Clock escape_clock;
  report(5, "exponential escape law",
         [&] {
           base = run_quartic(1.0);
           const auto& f = base.sweep.fit;
           return Outcome{base.fit_ok && base.valid_points >= 6 && f.slope > 0 && f.r_squared >= 0.95,
                          std::to_string(base.valid_points) + " valid points (min escaped " +
                              std::to_string(base.min_escaped) + "), slope=" + fmt(f.slope) +
                              " R2=" + fmt(f.r_squared) + " |" + sweep_table(base) + base.error};
         },
         600);
  report(6, "barrier proportionality",
         [&] {
           doubled = run_quartic(2.0);
           if (!base.fit_ok || !doubled.fit_ok) return Outcome{false, "fit failed: " + base.error + doubled.error};
           const double ratio = doubled.sweep.fit.slope / base.sweep.fit.slope;
           const bool ok = ratio >= 1.6 && ratio <= 2.4 && doubled.valid_points >= 6 && escape_clock.seconds() <= 1200;
           return Outcome{ok, "slope ratio=" + fmt(ratio) + " (dL=2 slope " + fmt(doubled.sweep.fit.slope) +
                                  ", R2=" + fmt(doubled.sweep.fit.r_squared) + ", " +
                                  std::to_string(doubled.valid_points) + " valid points) |" + sweep_table(doubled)};
         },
         0);
  report(7, "flat vs sharp escape ordering", flat_sharp_ordering, 600);
  report(8, "minima selection", minima_selection, 600);

  TableRow row;
  double row_seconds = 0;
  bool row_ok = false;
  report(9, "MLP-3 table row",
         [&] {
           Clock c;
           row = run_table_row();
           row_ok = true;
           row_seconds = c.seconds();
           return table_row(row, row_seconds);
         },
         0);
  report(10, "flatness direction",
         [&] { return row_ok ? flatness_direction(row) : Outcome{false, "needs the criterion 9 runs"}; }, 0);
  report(11, "determinism suite", determinism_suite, 300);

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + (failures == 1 ? " criterion failed" : " criteria failed")) << std::endl;
  return failures == 0 ? 0 : 1;
}
