#pragma once

#include <iosfwd>

namespace leap {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point of the leaplab tool. Subcommands: train, sweep, escape,
/// flatness, report. Returns 0 on success, 1 for usage or configuration
/// errors and 2 for failures during a run.
///
/// The output root is --output if given, else $LEAP_OUTPUT_ROOT, else the
/// config's output_dir.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int cli_main(int argc, const char* const* argv);

}  // namespace leap
