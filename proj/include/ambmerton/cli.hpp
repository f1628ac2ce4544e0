#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ambmerton::cli {

/// Version of the JSON record and CSV layouts written by the tool.
inline constexpr int kSchemaVersion = 1;

/// Process exit codes shared by every subcommand.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,     // unexpected internal error
    kExitConfig = 2,      // bad command line, configuration, validation or parse failure
    kExitNumeric = 3,     // overflow, non-convergence or another numerical failure
    kExitIo = 4,          // unreadable input or unwritable output
};

/// Built-in defaults (the benchmark parameter set), pretty-printed JSON. The shipped
/// config/default.json holds the same document.
std::string default_config_json();

/// Names accepted by --preset.
std::vector<std::string> preset_names();

/// Runs one command line (argv[0] is the program name). Records go to `out` (or the --out
/// file), diagnostics to `err`. Never throws; returns an ExitCode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Convenience overload for tests: args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ambmerton::cli
