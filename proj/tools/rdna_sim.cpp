// SPDX-License-Identifier: Apache-2.0
//
// rdna_sim: run residue-routed fabric scenarios.
//
//   rdna_sim run --scenario <path> --out <dir> [--seed <int>] [--duration <s>]
//   rdna_sim validate --scenario <path>
//   rdna_sim builtin <fig_b_migration|fig_cd_isolation> --out <dir> [--rate-mbps <v>]
//
// Exit status: 0 success, 1 invalid scenario, 2 runtime failure.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rdna/scenario.hpp"

namespace {

constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

std::optional<rdna::Scenario> load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << path << ": cannot open\n";
    return std::nullopt;
  }
  std::ostringstream text;
  text << in.rdbuf();
  auto parsed = rdna::parse_scenario(text.str());
  for (const auto& d : parsed.errors) std::cerr << path << ':' << d.line << ": " << d.message << '\n';
  return std::move(parsed.scenario);
}

void summarize(const rdna::ExperimentResult& r, const std::string& out) {
  std::cout << "generated=" << r.counters.generated << " delivered=" << r.counters.delivered
            << " droptail=" << r.counters.dropped[0] << " unmatched=" << r.counters.dropped[1]
            << " misroute=" << r.counters.dropped[2] << " in_flight=" << r.in_flight << '\n';
  for (const auto& m : r.migrations) {
    std::cout << "migration t=" << rdna::format_seconds(m.action.decided_at) << ' ' << r.flow_names[m.action.flow]
              << ' ' << m.action.old_route.value() << " -> " << m.action.new_route.value()
              << " dropped_during_window=" << m.dropped_during_window << '\n';
  }
  std::cout << "wrote " << out << "/{throughput,rtt,loss,migrations}.csv\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residue-routed data-center fabric simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  auto* run = app.add_subcommand("run", "Run a scenario file");
  run->add_option("--scenario", scenario_path, "Scenario file")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--duration", duration, "Override the run duration in seconds")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "Parse and validate a scenario file");
  validate->add_option("--scenario", scenario_path, "Scenario file")->required();

  std::string builtin_name;
  double rate_mbps = 400;
  bool print_only = false;
  auto* builtin = app.add_subcommand("builtin", "Run a built-in experiment");
  builtin->add_option("name", builtin_name, "fig_b_migration or fig_cd_isolation")
      ->required()
      ->check(CLI::IsMember({"fig_b_migration", "fig_cd_isolation"}));
  builtin->add_option("--out", out_dir, "Output directory");
  builtin->add_option("--rate-mbps", rate_mbps, "Elephant rate for fig_b_migration")->check(CLI::PositiveNumber);
  builtin->add_flag("--print", print_only, "Print the scenario file instead of running it");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInvalid;
  }

  try {
    if (*validate) {
      auto s = load(scenario_path);
      if (!s) return kInvalid;
      std::cout << scenario_path << ": ok (" << s->topology.nodes().size() << " nodes, " << s->flows.size()
                << " flows)\n";
      return 0;
    }
    if (*run) {
      auto s = load(scenario_path);
      if (!s) return kInvalid;
      if (seed) s->run.seed = *seed;
      if (duration) s->run.duration_s = *duration;
      summarize(rdna::run_experiment(*s, out_dir), out_dir);
      return 0;
    }
    auto s = rdna::builtin_scenario(builtin_name, rate_mbps);
    if (print_only) {
      std::cout << rdna::serialize_scenario(*s);
      return 0;
    }
    if (out_dir.empty()) {
      std::cerr << "builtin: --out is required unless --print is given\n";
      return kInvalid;
    }
    summarize(rdna::run_experiment(*s, out_dir), out_dir);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
}
