#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "perplab_cli/config.hpp"

namespace perplab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  ///< computation or I/O error
inline constexpr int kExitConfig = 2;   ///< bad flags or configuration

struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool quiet = false;
};

/// Runs one subcommand. Writes CSVs, summary.txt and summary.json to the
/// output directory and prints the summary unless quiet. Returns an exit
/// code; errors are reported on `err`.
int run_command(Command command, const CliOptions& options, std::ostream& out, std::ostream& err);

/// Same as run_command on an already parsed configuration.
int run_config(RunConfig config, bool quiet, std::ostream& out, std::ostream& err);

/// Full command line: `perplab <subcommand> --config <path> [--seed N]
/// [--out DIR] [--quiet]`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace perplab::cli
