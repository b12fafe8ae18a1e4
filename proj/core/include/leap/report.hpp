#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "leap/config.hpp"
#include "leap/escape.hpp"
#include "leap/flatness.hpp"
#include "leap/training.hpp"

namespace leap {

/// Every CSV starts with "# leap-csv schema_version=<v> table=<name>" and
/// then a column header line. Layouts are described in docs/formats.md.
inline constexpr int kCsvSchemaVersion = 1;
inline constexpr int kJsonSchemaVersion = 1;
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Shortest decimal that round-trips; "nan", "inf" and "-inf" otherwise.
std::string format_double(double x);

/// Creates `dir` if needed and proves it is writable; IoError otherwise.
void ensure_writable_dir(const std::filesystem::path& dir);

/// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// Checkpoint layout: 8 bytes "LEAPCKPT", u32 version, u64 count, then
/// count f64 values. All integers and floats little-endian.
std::string encode_checkpoint(std::span<const double> theta);
ParamVector decode_checkpoint(const std::string& bytes);
void write_checkpoint(const std::filesystem::path& path, std::span<const double> theta);
ParamVector read_checkpoint(const std::filesystem::path& path);

std::string epochs_csv(const RunReport& rep);
/// Run summary plus the resolved config; wall time is kept out of it.
std::string run_report_json(const RunReport& rep, const ExperimentConfig& cfg, bool standardized);
std::string timing_json(double wall_time_s);

/// report.json, timing.json, epochs.csv and checkpoint.bin under `dir`.
void write_run(const std::filesystem::path& dir, const RunReport& rep, const ExperimentConfig& cfg, bool standardized);

/// Fields read back from a report.json (final_theta is not restored).
RunReport read_run_report(const std::filesystem::path& path);

std::string sweep_csv(const SweepReport& sweep);
std::string sweep_json(const SweepReport& sweep, const ExperimentConfig& cfg);

std::string escape_records_csv(const std::vector<EscapeTrialRecord>& records);
std::string escape_estimate_json(const EscapeEstimate& est, const ExperimentConfig& cfg, std::uint64_t seed,
                                 const std::string& minimum);
std::string theorem1_points_csv(const std::vector<SweepPoint>& points);
std::string theorem1_json(const std::vector<SweepPoint>& points, const Theorem1Fit* fit, const std::string& fit_error,
                          const ExperimentConfig& cfg, std::uint64_t seed, const std::string& minimum);
std::string selection_json(const SelectionResult& res, const ExperimentConfig& cfg, std::uint64_t seed);

std::string flatness_csv(const FlatnessComparison& cmp);
std::string flatness_json(const FlatnessComparison& cmp, const ExperimentConfig& cfg);

/// Per-seed rows of a train experiment's report.json files.
std::string summary_csv(const std::vector<RunReport>& runs);
std::string summary_json(const std::vector<RunReport>& runs, const ExperimentConfig& cfg);

}  // namespace leap
