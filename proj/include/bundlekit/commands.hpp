#pragma once

// Command dispatch for the CLI. Every error kind has its own exit code.

#include "bundlekit/report.hpp"
#include "bundlekit/scenario.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bundlekit::commands {

inline constexpr int kExitOk = 0;
inline constexpr int kExitChecksFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitWitness = 10;
inline constexpr int kExitOrbitOverflow = 15;
inline constexpr int kExitInternal = 70;

int exit_code(ErrorKind kind);
/// "code  meaning" lines, for --help and the docs.
std::string exit_code_table();
const std::vector<std::string>& command_names();

struct Flags {
  std::optional<int> steps;  // per unit parameter length
  std::optional<int> samples;
  std::optional<std::uint64_t> seed;
  std::string plot_data;  // path of a TSV trace, if set
};

struct Outcome {
  int exit_code = 0;
  std::string report;
};

/// Loads the scenario and runs one command. Never throws; failures become an
/// error record and the matching exit code.
Outcome run(const std::string& command, const std::string& scenario_path, const Flags& flags = {});
/// Same, from scenario text already in memory.
Outcome run_text(const std::string& command, const std::string& text, const std::string& name, const Flags& flags = {});

}  // namespace bundlekit::commands
