#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "seedbank/config.hpp"

namespace seedbank::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

inline const std::vector<std::string> kCommands{
    "forward", "sve", "wf", "dual", "coalescent", "duality-check", "scaling-check"};

/// Runs one subcommand and writes its CSV/JSON artifacts into `out_dir`.
/// Returns the process exit code (statistical checks that fail return 1).
/// Throws Error for invalid input.
int run(const std::string& command, const RunConfig& cfg, const std::filesystem::path& out_dir,
        std::ostream& log);

/// Full command line entry point: parses flags, loads the config, maps
/// errors to exit code 2.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

/// printf("%.17g"), the precision used for every CSV number.
std::string format_double(double v);

}  // namespace seedbank::app
