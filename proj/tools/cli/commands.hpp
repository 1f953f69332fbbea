#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tsim/network.hpp"

namespace tsim::cli {

namespace fs = std::filesystem;

/// What a command did, for the manifest and the console summary.
struct CommandResult {
  std::uint64_t steps = 0;
  std::uint64_t vehicle_updates = 0;
  std::vector<std::string> warnings;
};

struct BuildMapOptions {
  fs::path input;
  fs::path output;
  BuildOptions build;
};
CommandResult build_map(const BuildMapOptions& o);

struct GenGridOptions {
  int rows = 4;
  int cols = 4;
  double block = 200.0;
  int lanes = 1;
  double speed = 16.67;
  int zone_block = 2;
  fs::path output;
};
CommandResult gen_grid(const GenGridOptions& o);

struct GenOdOptions {
  fs::path net;
  std::optional<fs::path> zones;  // default: zones from the network's zone hint
  std::string model = "gravity";
  double total = 100000.0;
  double gamma = 2.0;
  fs::path output;
};
CommandResult gen_od(const GenOdOptions& o);

struct GenDemandOptions {
  fs::path od;
  fs::path net;
  std::string profile = "uniform";
  std::string window = "0:3600";
  std::optional<std::string> peak;  // "mean:stddev", peaked profile only
  std::uint64_t seed = 42;
  double mode_share = 1.0;
  fs::path output;
};
CommandResult gen_demand(const GenDemandOptions& o);

struct SimulateOptions {
  fs::path net;
  fs::path trips;
  std::uint64_t steps = 3600;
  double dt = 1.0;
  std::string controller = "fixed";
  std::uint64_t seed = 42;
  fs::path record;
  fs::path roads;
  int threads = 0;  // 0: hardware parallelism
  double stats_window = 300.0;
};
CommandResult simulate(const SimulateOptions& o, std::ostream& log);

struct AnalyzeOptions {
  fs::path record;
  fs::path roads;
  fs::path trips;
  std::optional<fs::path> compare_speeds;
  std::optional<fs::path> compare_od;
  fs::path report;
};
CommandResult analyze(const AnalyzeOptions& o, std::ostream& log);

struct BenchScenario {
  int rows = 0;
  int cols = 0;
  std::size_t trips = 0;
};

/// Parses "RxC:TRIPS", e.g. "8x8:5000".
BenchScenario parse_scenario(const std::string& text);

struct BenchOptions {
  std::vector<BenchScenario> scenarios;
  int repeats = 3;
  int threads = 0;
  std::uint64_t steps = 3600;
  double dt = 1.0;
  double block = 200.0;
  int lanes = 1;
  double speed = 16.67;
  std::string window = "0:1800";  // departure window of the generated trips
  std::uint64_t seed = 42;
  std::optional<fs::path> output;
};

struct BenchRow {
  BenchScenario scenario;
  int repeats = 0;
  std::vector<double> wall_seconds;  // one per repeat
  double mean_wall_seconds = 0.0;
  double mean_step_ms = 0.0;
  std::uint64_t vehicle_updates = 0;  // per run
  double vehicle_updates_per_second = 0.0;
  std::string record_hash;  // identical across repeats and thread counts
  bool hashes_agree = true;
  double ratio_to_previous = 0.0;  // mean wall time relative to the previous row; 0 for the first
};

/// Runs every scenario `repeats` times; rows come back sorted by trip count.
std::vector<BenchRow> run_bench(const BenchOptions& o);
std::string bench_table_text(const std::vector<BenchRow>& rows);
std::string serialize_bench(const std::vector<BenchRow>& rows, const BenchOptions& o);
CommandResult bench(const BenchOptions& o, std::ostream& log);

/// Parses "start:end" in seconds.
std::pair<double, double> parse_window(const std::string& text);

}  // namespace tsim::cli
