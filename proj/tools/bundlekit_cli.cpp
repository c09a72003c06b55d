// bundlekit <command> <scenario.scn> [flags]

#include "bundlekit/commands.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

namespace bc = bundlekit::commands;

int main(int argc, char** argv) {
  std::string commands;
  for (const auto& c : bc::command_names()) commands += "  " + c + "\n";
  CLI::App app{"Parallel transport, germ coverings and bundle isomorphisms on chart atlases."};
  app.footer("Commands:\n" + commands + "\nExit codes:\n" + bc::exit_code_table());

  std::string command, scenario, out;
  bc::Flags flags;
  int steps = 0, samples = 0;
  std::uint64_t seed = 0;
  bool timing = false;
  app.add_option("command", command, "what to run")->required();
  app.add_option("scenario", scenario, "scenario file")->required();
  auto* steps_opt = app.add_option("--steps", steps, "RK4 steps per unit path parameter");
  auto* samples_opt = app.add_option("--samples", samples, "sample count for overlap and invariant checks");
  auto* seed_opt = app.add_option("--seed", seed, "sampling seed");
  app.add_option("--out", out, "write the report here instead of stdout");
  app.add_option("--plot-data", flags.plot_data, "write per-step (t, value) rows of each transport as TSV");
  app.add_flag("--timing", timing, "print wall time to stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : bc::kExitUsage;
  }
  if (*steps_opt) flags.steps = steps;
  if (*samples_opt) flags.samples = samples;
  if (*seed_opt) flags.seed = seed;

  const auto t0 = std::chrono::steady_clock::now();
  const auto outcome = bc::run(command, scenario, flags);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (out.empty()) {
    std::cout << outcome.report << std::flush;
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!f || !(f << outcome.report)) {
      std::cerr << "cannot write " << out << "\n";
      return bc::exit_code(bundlekit::ErrorKind::IoError);
    }
  }
  if (timing) std::fprintf(stderr, "wall_time_s=%.6f\n", wall);
  return outcome.exit_code;
}
