#include "leap/report.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include "config_json.hpp"
#include "leap/error.hpp"
#include "leap/stats.hpp"
#include "leap/version.hpp"

namespace leap {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kCheckpointMagic[8] = {'L', 'E', 'A', 'P', 'C', 'K', 'P', 'T'};

std::string csv_preamble(const char* table, const char* columns) {
  return "# leap-csv schema_version=" + std::to_string(kCsvSchemaVersion) + " table=" + table + "\n" + columns + "\n";
}

json metadata(const ExperimentConfig& cfg) {
  return {{"config", detail::config_to_json(cfg)}, {"code_version", kVersion}};
}

// NaN and infinities have no JSON literal; they become null.
json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double number_or_nan(const json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

template <class T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

template <class T>
T get_le(const std::string& in, std::size_t offset) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  return v;
}

json estimate_json(const EscapeEstimate& e) {
  return {{"mean_steps", number(e.mean_steps)},
          {"sd_steps", number(e.sd_steps)},
          {"ci_halfwidth_95", number(e.ci_halfwidth_95)},
          {"n_trials", e.n_trials},
          {"n_escaped", e.n_escaped},
          {"n_diverged", e.n_diverged},
          {"censored_fraction", number(e.censored_fraction)},
          {"valid", e.valid}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void ensure_writable_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
  const fs::path probe = dir / ".leap_write_probe";
  {
    std::ofstream out(probe, std::ios::binary);
    if (!out || !(out << "probe") || !out.flush()) throw IoError("output directory '" + dir.string() + "' is not writable");
  }
  fs::remove(probe, ec);
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out.flush()) throw IoError("short write to '" + tmp.string() + "'");
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string encode_checkpoint(std::span<const double> theta) {
  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, theta.size());
  for (double v : theta) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

ParamVector decode_checkpoint(const std::string& bytes) {
  constexpr std::size_t header = 8 + 4 + 8;
  if (bytes.size() < header) throw ParseError("truncated checkpoint header", bytes.size());
  if (std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) throw ParseError("bad checkpoint magic", 0);
  const auto version = get_le<std::uint32_t>(bytes, 8);
  if (version != kCheckpointVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version), 8);
  const auto count = get_le<std::uint64_t>(bytes, 12);
  if ((bytes.size() - header) / 8 != count || (bytes.size() - header) % 8 != 0)
    throw ParseError("checkpoint payload does not match count " + std::to_string(count), header);
  ParamVector theta(count);
  for (std::size_t i = 0; i < count; ++i) theta[i] = std::bit_cast<double>(get_le<std::uint64_t>(bytes, header + 8 * i));
  return theta;
}

void write_checkpoint(const fs::path& path, std::span<const double> theta) { write_file_atomic(path, encode_checkpoint(theta)); }

ParamVector read_checkpoint(const fs::path& path) { return decode_checkpoint(read_file(path)); }

std::string epochs_csv(const RunReport& rep) {
  std::string out = csv_preamble("epochs", "epoch,eta,train_loss,val_error");
  for (const auto& e : rep.per_epoch)
    out += std::to_string(e.epoch) + "," + format_double(e.eta) + "," + format_double(e.train_loss) + "," +
           format_double(e.val_error) + "\n";
  return out;
}

std::string run_report_json(const RunReport& rep, const ExperimentConfig& cfg, bool standardized) {
  json epochs = json::array();
  for (const auto& e : rep.per_epoch)
    epochs.push_back({{"epoch", e.epoch}, {"eta", number(e.eta)}, {"train_loss", number(e.train_loss)},
                      {"val_error", number(e.val_error)}});
  json j = {{"schema_version", kJsonSchemaVersion},
            {"experiment", rep.experiment},
            {"seed", rep.seed},
            {"status", std::string(to_string(rep.status))},
            {"failure", rep.failure},
            {"failed_epoch", rep.failed_epoch},
            {"failed_batch", rep.failed_batch},
            {"final_test_error", number(rep.final_test_error)},
            {"final_val_error", number(rep.final_val_error)},
            {"per_epoch", epochs},
            {"batches_per_epoch", rep.batches_per_epoch},
            {"h_samples", rep.h_samples},
            {"param_count", rep.param_count},
            {"data", {{"checksum", rep.data_checksum}, {"standardized", standardized}}},
            {"metadata", metadata(cfg)}};
  return dump(j);
}

std::string timing_json(double wall_time_s) { return dump({{"wall_time_s", wall_time_s}}); }

void write_run(const fs::path& dir, const RunReport& rep, const ExperimentConfig& cfg, bool standardized) {
  write_checkpoint(dir / "checkpoint.bin", rep.final_theta);
  write_file_atomic(dir / "epochs.csv", epochs_csv(rep));
  write_file_atomic(dir / "timing.json", timing_json(rep.wall_time_s));
  write_file_atomic(dir / "report.json", run_report_json(rep, cfg, standardized));
}

RunReport read_run_report(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), e.byte);
  }
  try {
    RunReport rep;
    rep.experiment = j.at("experiment").get<std::string>();
    rep.seed = j.at("seed").get<std::uint64_t>();
    const auto status = j.at("status").get<std::string>();
    rep.status = status == "ok" ? RunStatus::Ok : status == "diverged" ? RunStatus::Diverged : RunStatus::TimedOut;
    rep.failure = j.at("failure").get<std::string>();
    rep.failed_epoch = j.at("failed_epoch").get<int>();
    rep.failed_batch = j.at("failed_batch").get<std::size_t>();
    rep.final_test_error = number_or_nan(j.at("final_test_error"));
    rep.final_val_error = number_or_nan(j.at("final_val_error"));
    for (const auto& e : j.at("per_epoch"))
      rep.per_epoch.push_back({e.at("epoch").get<int>(), number_or_nan(e.at("eta")), number_or_nan(e.at("train_loss")),
                               number_or_nan(e.at("val_error"))});
    rep.batches_per_epoch = j.at("batches_per_epoch").get<std::size_t>();
    rep.h_samples = j.at("h_samples").get<std::size_t>();
    rep.param_count = j.at("param_count").get<std::size_t>();
    rep.data_checksum = j.at("data").at("checksum").get<std::string>();
    return rep;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

std::string sweep_csv(const SweepReport& sweep) {
  std::string out = csv_preamble(
      "sweep", "cell,leap_enabled,sigma,n_runs,n_ok,mean_val_error,std_val_error,mean_test_error,std_test_error,best");
  for (const auto& c : sweep.cells)
    out += c.label + "," + (c.leap.enabled ? "true" : "false") + "," + format_double(c.leap.sigma) + "," +
           std::to_string(c.runs.size()) + "," + std::to_string(c.n_ok) + "," + format_double(c.mean_val_error) + "," +
           format_double(c.std_val_error) + "," + format_double(c.mean_test_error) + "," +
           format_double(c.std_test_error) + "," + (c.best ? "true" : "false") + "\n";
  return out;
}

std::string sweep_json(const SweepReport& sweep, const ExperimentConfig& cfg) {
  json cells = json::array();
  for (const auto& c : sweep.cells) {
    json runs = json::array();
    for (const auto& r : c.runs)
      runs.push_back({{"seed", r.seed},
                      {"status", std::string(to_string(r.status))},
                      {"final_val_error", number(r.final_val_error)},
                      {"final_test_error", number(r.final_test_error)}});
    cells.push_back({{"cell", c.label},
                     {"leap_enabled", c.leap.enabled},
                     {"sigma", c.leap.sigma},
                     {"n_ok", c.n_ok},
                     {"mean_val_error", number(c.mean_val_error)},
                     {"std_val_error", number(c.std_val_error)},
                     {"mean_test_error", number(c.mean_test_error)},
                     {"std_test_error", number(c.std_test_error)},
                     {"best", c.best},
                     {"runs", runs}});
  }
  json best = sweep.best_index >= 0 ? json(sweep.cells[static_cast<std::size_t>(sweep.best_index)].label) : json(nullptr);
  return dump({{"schema_version", kJsonSchemaVersion},
               {"experiment", sweep.experiment},
               {"selection_metric", "mean_val_error"},
               {"best_cell", best},
               {"cells", cells},
               {"metadata", metadata(cfg)}});
}

std::string escape_records_csv(const std::vector<EscapeTrialRecord>& records) {
  std::string out = csv_preamble("escape_trials", "trial_id,seed,escaped,escape_step,censored");
  for (const auto& r : records)
    out += std::to_string(r.trial_id) + "," + std::to_string(r.seed) + "," + (r.escaped ? "1" : "0") + "," +
           (r.escaped ? std::to_string(r.escape_step) : std::string()) + "," + (r.censored() ? "1" : "0") + "\n";
  return out;
}

std::string escape_estimate_json(const EscapeEstimate& est, const ExperimentConfig& cfg, std::uint64_t seed,
                                 const std::string& minimum) {
  return dump({{"schema_version", kJsonSchemaVersion},
               {"seed", seed},
               {"minimum", minimum},
               {"estimate", estimate_json(est)},
               {"metadata", metadata(cfg)}});
}

std::string theorem1_points_csv(const std::vector<SweepPoint>& points) {
  std::string out = csv_preamble(
      "theorem1_points", "point,eta,sigma,inverse_eta_sigma_sq,seed,mean_steps,ci_halfwidth_95,n_escaped,censored_fraction,valid");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    out += std::to_string(i) + "," + format_double(p.grid.eta) + "," + format_double(p.grid.sigma) + "," +
           format_double(p.grid.inverse_eta_sigma_sq()) + "," + std::to_string(p.seed) + "," +
           format_double(p.estimate.mean_steps) + "," + format_double(p.estimate.ci_halfwidth_95) + "," +
           std::to_string(p.estimate.n_escaped) + "," + format_double(p.estimate.censored_fraction) + "," +
           (p.estimate.valid ? "true" : "false") + "\n";
  }
  return out;
}

std::string theorem1_json(const std::vector<SweepPoint>& points, const Theorem1Fit* fit, const std::string& fit_error,
                          const ExperimentConfig& cfg, std::uint64_t seed, const std::string& minimum) {
  json pts = json::array();
  for (const auto& p : points)
    pts.push_back({{"eta", p.grid.eta}, {"sigma", p.grid.sigma}, {"seed", p.seed}, {"estimate", estimate_json(p.estimate)}});
  json f = nullptr;
  if (fit)
    f = {{"slope", number(fit->slope)},
         {"intercept", number(fit->intercept)},
         {"r_squared", number(fit->r_squared)},
         {"span_decades", number(fit->span_decades)},
         {"implied_s", number(fit->implied_s)},
         {"n_points", fit->points.size()}};
  return dump({{"schema_version", kJsonSchemaVersion},
               {"seed", seed},
               {"minimum", minimum},
               {"points", pts},
               {"fit", f},
               {"fit_error", fit_error},
               {"metadata", metadata(cfg)}});
}

std::string selection_json(const SelectionResult& res, const ExperimentConfig& cfg, std::uint64_t seed) {
  return dump({{"schema_version", kJsonSchemaVersion},
               {"seed", seed},
               {"flat_fraction", number(res.flat_fraction)},
               {"ci_halfwidth_95", number(res.ci_halfwidth_95)},
               {"p_value", number(res.p_value)},
               {"n_runs", res.n_runs},
               {"n_flat", res.n_flat},
               {"n_sharp", res.n_sharp},
               {"n_outside", res.n_outside},
               {"valid", res.valid},
               {"metadata", metadata(cfg)}});
}

std::string flatness_csv(const FlatnessComparison& cmp) {
  std::string out = csv_preamble(
      "flatness", "arm,seed,top_eigenvalue,converged,iterations,diag_mean,diag_max,diag_p95,probe_points");
  for (const auto& r : cmp.rows)
    out += r.arm + "," + std::to_string(r.seed) + "," + format_double(r.report.top_eigenvalue) + "," +
           (r.report.converged ? "true" : "false") + "," + std::to_string(r.report.iterations) + "," +
           format_double(r.report.hessian_diag_summary.mean) + "," + format_double(r.report.hessian_diag_summary.max) +
           "," + format_double(r.report.hessian_diag_summary.p95) + "," + std::to_string(r.report.probe_points) + "\n";
  return out;
}

std::string flatness_json(const FlatnessComparison& cmp, const ExperimentConfig& cfg) {
  const auto test = [](const stats::RankTest& t) {
    return json{{"u_statistic", t.u_statistic}, {"p_value", number(t.p_value)}, {"exact", t.exact}};
  };
  return dump({{"schema_version", kJsonSchemaVersion},
               {"median_top_vanilla", number(cmp.median_top_vanilla)},
               {"median_top_leap", number(cmp.median_top_leap)},
               {"median_diag_max_vanilla", number(cmp.median_diag_max_vanilla)},
               {"median_diag_max_leap", number(cmp.median_diag_max_leap)},
               {"top_test", test(cmp.top_test)},
               {"diag_test", test(cmp.diag_test)},
               {"all_converged", cmp.all_converged},
               {"direction_holds", cmp.direction_holds},
               {"examples_used", cmp.examples_used},
               {"metadata", metadata(cfg)}});
}

std::string summary_csv(const std::vector<RunReport>& runs) {
  std::string out = csv_preamble("summary", "seed,status,epochs_completed,final_val_error,final_test_error,h_samples");
  for (const auto& r : runs)
    out += std::to_string(r.seed) + "," + std::string(to_string(r.status)) + "," + std::to_string(r.per_epoch.size()) +
           "," + format_double(r.final_val_error) + "," + format_double(r.final_test_error) + "," +
           std::to_string(r.h_samples) + "\n";
  return out;
}

std::string summary_json(const std::vector<RunReport>& runs, const ExperimentConfig& cfg) {
  std::vector<double> test;
  std::vector<double> val;
  for (const auto& r : runs)
    if (r.ok()) {
      test.push_back(r.final_test_error);
      val.push_back(r.final_val_error);
    }
  const double nan = std::nan("");
  return dump({{"schema_version", kJsonSchemaVersion},
               {"experiment", cfg.name},
               {"n_runs", runs.size()},
               {"n_ok", test.size()},
               {"mean_test_error", number(test.empty() ? nan : stats::mean(test))},
               {"std_test_error", number(test.empty() ? nan : std::sqrt(stats::sample_variance(test)))},
               {"mean_val_error", number(val.empty() ? nan : stats::mean(val))},
               {"metadata", metadata(cfg)}});
}

}  // namespace leap
