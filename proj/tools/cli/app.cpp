#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cli/cli.hpp"
#include "cli/commands.hpp"
#include "tsim/error.hpp"
#include "tsim/io.hpp"

namespace tsim::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

// Options that steer the run itself and stay out of the manifest's options.
const std::set<std::string> kMetaOptions = {"help", "config", "manifest"};

struct Command {
  CLI::App* app = nullptr;
  std::vector<std::string> inputs;   // option names holding input files
  std::vector<std::string> outputs;  // option names holding deterministic outputs
  std::string primary;               // output the manifest path derives from
  std::function<CommandResult(std::ostream&)> exec;
  const std::uint64_t* seed = nullptr;
};

struct Options {
  BuildMapOptions build_map;
  GenGridOptions gen_grid;
  GenOdOptions gen_od;
  GenDemandOptions gen_demand;
  SimulateOptions simulate;
  AnalyzeOptions analyze;
  BenchOptions bench;
  std::vector<std::string> scenarios;
  std::string bench_output = "bench.json";
  std::string config;
  std::string manifest;
};

std::string option_key(const CLI::Option* opt) { return opt->get_single_name(); }

CLI::Option* find_option(CLI::App* app, std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return app->get_option_no_throw("--" + key);
}

void add_meta(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config,
                  "JSON file supplying flags (or a run manifest to replay); command-line flags win");
  sub->add_option("--manifest", o.manifest,
                  "Where to write the run manifest (default: <primary output>.manifest.json)");
}

std::map<std::string, Command> register_commands(CLI::App& app, Options& o) {
  std::map<std::string, Command> cmds;

  {
    auto& b = o.build_map;
    CLI::App* s = app.add_subcommand("build-map", "Compile a raw feature collection into a lane network");
    s->add_option("--input", b.input, "Raw network (GeoJSON feature collection)")->required();
    s->add_option("--output", b.output, "Compiled network")->required();
    s->add_option("--lane-width", b.build.lane_width, "Lane width, m");
    s->add_option("--snap-radius", b.build.snap_radius, "Endpoint snapping radius, m");
    s->add_flag("--allow-boundaries", b.build.allow_boundaries,
                "Treat unsnapped road ends as network sources and sinks");
    add_meta(s, o);
    cmds["build-map"] = {s, {"input"}, {"output"}, "output", [&b](std::ostream&) { return build_map(b); }};
  }
  {
    auto& g = o.gen_grid;
    CLI::App* s = app.add_subcommand("gen-grid", "Generate a Manhattan grid network");
    s->add_option("--rows", g.rows, "Junction rows (>= 2)")->required();
    s->add_option("--cols", g.cols, "Junction columns (>= 2)")->required();
    s->add_option("--block", g.block, "Block length, m");
    s->add_option("--lanes", g.lanes, "Lanes per direction");
    s->add_option("--speed", g.speed, "Speed limit, m/s");
    s->add_option("--zone-block", g.zone_block, "Junction cells per zone side for the zone hint");
    s->add_option("--output", g.output, "Compiled network")->required();
    add_meta(s, o);
    cmds["gen-grid"] = {s, {}, {"output"}, "output", [&g](std::ostream&) { return gen_grid(g); }};
  }
  {
    auto& g = o.gen_od;
    CLI::App* s = app.add_subcommand("gen-od", "Generate an OD matrix with a gravity or radiation model");
    s->add_option("--net", g.net, "Compiled network")->required();
    s->add_option("--zones", g.zones, "Zones file (default: zones from the network's zone hint)");
    s->add_option("--model", g.model, "gravity | radiation")
        ->check(CLI::IsMember({"gravity", "radiation"}));
    s->add_option("--total", g.total, "Total trips");
    s->add_option("--gamma", g.gamma, "Gravity distance exponent");
    s->add_option("--output", g.output, "OD matrix")->required();
    add_meta(s, o);
    cmds["gen-od"] = {s, {"net", "zones"}, {"output"}, "output", [&g](std::ostream&) { return gen_od(g); }};
  }
  {
    auto& g = o.gen_demand;
    CLI::App* s = app.add_subcommand("gen-demand", "Convert an OD matrix into timed trips");
    s->add_option("--od", g.od, "OD matrix")->required();
    s->add_option("--net", g.net, "Compiled network")->required();
    s->add_option("--profile", g.profile, "uniform | peaked")
        ->check(CLI::IsMember({"uniform", "peaked"}));
    s->add_option("--window", g.window, "Departure window start:end, s");
    s->add_option("--peak", g.peak, "Peak mean:stddev, s (peaked profile)");
    s->add_option("--seed", g.seed, "Random seed");
    s->add_option("--mode-share", g.mode_share, "Fraction of OD flow travelling by car");
    s->add_option("--output", g.output, "Trips file")->required();
    add_meta(s, o);
    cmds["gen-demand"] = {s, {"od", "net"}, {"output"}, "output",
                          [&g](std::ostream&) { return gen_demand(g); }, &g.seed};
  }
  {
    auto& m = o.simulate;
    CLI::App* s = app.add_subcommand("simulate", "Run the simulation and record vehicles and road speeds");
    s->add_option("--net", m.net, "Compiled network")->required();
    s->add_option("--trips", m.trips, "Trips file")->required();
    s->add_option("--steps", m.steps, "Number of steps");
    s->add_option("--dt", m.dt, "Step length, s");
    s->add_option("--controller", m.controller, "fixed | maxpressure")
        ->check(CLI::IsMember({"fixed", "maxpressure"}));
    s->add_option("--seed", m.seed, "Random seed");
    s->add_option("--record", m.record, "Vehicle record stream (JSON lines)")->required();
    s->add_option("--roads", m.roads, "Per-road windowed mean speeds")->required();
    s->add_option("--threads", m.threads, "Worker threads (0: hardware parallelism)");
    s->add_option("--stats-window", m.stats_window, "Road speed window, s");
    add_meta(s, o);
    cmds["simulate"] = {s, {"net", "trips"}, {"record", "roads"}, "record",
                        [&m](std::ostream& log) { return simulate(m, log); }, &m.seed};
  }
  {
    auto& a = o.analyze;
    CLI::App* s = app.add_subcommand("analyze", "Compute travel times, road speeds and comparisons");
    s->add_option("--record", a.record, "Vehicle record stream")->required();
    s->add_option("--roads", a.roads, "Per-road windowed mean speeds")->required();
    s->add_option("--trips", a.trips, "Trips file")->required();
    s->add_option("--compare-speeds", a.compare_speeds, "Reference road speeds");
    s->add_option("--compare-od", a.compare_od, "Reference OD matrix");
    s->add_option("--report", a.report, "Report")->required();
    add_meta(s, o);
    cmds["analyze"] = {s, {"record", "roads", "trips", "compare-speeds", "compare-od"}, {"report"},
                       "report", [&a](std::ostream& log) { return analyze(a, log); }};
  }
  {
    auto& b = o.bench;
    CLI::App* s = app.add_subcommand("bench", "Time repeated runs on generated grid scenarios");
    s->add_option("--scenario", o.scenarios, "RxC:TRIPS, repeatable")
        ->required()
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    s->add_option("--repeats", b.repeats, "Runs per scenario");
    s->add_option("--threads", b.threads, "Worker threads (0: hardware parallelism)");
    s->add_option("--steps", b.steps, "Steps per run");
    s->add_option("--dt", b.dt, "Step length, s");
    s->add_option("--block", b.block, "Block length, m");
    s->add_option("--lanes", b.lanes, "Lanes per direction");
    s->add_option("--speed", b.speed, "Speed limit, m/s");
    s->add_option("--window", b.window, "Departure window start:end, s");
    s->add_option("--seed", b.seed, "Random seed");
    s->add_option("--output", o.bench_output, "Benchmark table");
    add_meta(s, o);
    cmds["bench"] = {s, {}, {}, "output",
                     [&o](std::ostream& log) {
                       o.bench.scenarios.clear();
                       for (const std::string& sc : o.scenarios)
                         o.bench.scenarios.push_back(parse_scenario(sc));
                       o.bench.output = o.bench_output;
                       return bench(o.bench, log);
                     },
                     &b.seed};
  }
  return cmds;
}

// Turns a config document into flag tokens for `cmd`. Keys that name an
// option of some other subcommand are skipped; anything else is an error.
std::vector<std::string> config_tokens(const std::string& path, const std::string& cmd,
                                       CLI::App& app, CLI::App* sub,
                                       const std::set<std::string>& given) {
  const json doc = json::parse(read_text_file(path), nullptr, false);
  if (doc.is_discarded() || !doc.is_object())
    throw ValidationError("config " + path + ": expected a JSON object");

  std::vector<std::pair<std::string, json>> items;
  const auto header = doc.find("header");
  if (header != doc.end() && header->is_object() &&
      header->value("schema", "") == schema::run_manifest) {
    if (doc.value("command", "") != cmd)
      throw ValidationError("manifest " + path + " records command '" + doc.value("command", "") +
                            "', not '" + cmd + "'");
    const auto opts = doc.find("options");
    if (opts == doc.end() || !opts->is_object())
      throw ValidationError("manifest " + path + ": missing options");
    for (const auto& [k, v] : opts->items()) items.emplace_back(k, v);
  } else {
    for (const auto& [k, v] : doc.items())
      if (!v.is_object()) items.emplace_back(k, v);
    if (const auto scoped = doc.find(cmd); scoped != doc.end() && scoped->is_object())
      for (const auto& [k, v] : scoped->items()) items.emplace_back(k, v);
  }

  std::vector<std::string> tokens;
  for (const auto& [key, value] : items) {
    if (kMetaOptions.contains(key)) continue;
    CLI::Option* opt = find_option(sub, key);
    if (!opt) {
      bool elsewhere = false;
      for (CLI::App* other : app.get_subcommands({}))
        if (other != sub && find_option(other, key)) elsewhere = true;
      if (elsewhere) continue;
      throw ValidationError("config " + path + ": unknown option '" + key + "'");
    }
    const std::string name = "--" + option_key(opt);
    // Repeatable options from the command line replace the configured list.
    if (opt->get_expected_max() > 1 && given.contains(option_key(opt))) continue;
    auto scalar = [&](const json& v) -> std::string {
      if (v.is_string()) return v.get<std::string>();
      if (v.is_number() || v.is_boolean()) return v.dump();
      throw ValidationError("config " + path + ": option '" + key + "' has an unsupported value");
    };
    if (opt->get_type_size() == 0) {
      if (!value.is_boolean())
        throw ValidationError("config " + path + ": flag '" + key + "' needs true or false");
      if (value.get<bool>()) tokens.push_back(name);
    } else if (value.is_array()) {
      for (const json& v : value) {
        tokens.push_back(name);
        tokens.push_back(scalar(v));
      }
    } else if (!value.is_null()) {
      tokens.push_back(name);
      tokens.push_back(scalar(value));
    }
  }
  return tokens;
}

ordered_json effective_options(CLI::App* sub) {
  ordered_json out = ordered_json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string key = option_key(opt);
    if (key.empty() || kMetaOptions.contains(key)) continue;
    if (opt->get_type_size() == 0) {
      out[key] = opt->count() > 0;
    } else if (opt->get_expected_max() > 1) {
      out[key] = opt->results();
    } else if (opt->count() > 0) {
      out[key] = opt->results().back();
    } else if (!opt->get_default_str().empty()) {
      out[key] = opt->get_default_str();
    } else {
      out[key] = nullptr;
    }
  }
  return out;
}

std::string file_hash(const std::string& path) {
  Fnv1a h;
  h.update(read_text_file(path));
  return h.hex();
}

std::string throughput(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Microscopic traffic simulation toolchain", "tsim"};
  app.require_subcommand(1, 1);
  app.option_defaults()->always_capture_default()->multi_option_policy(
      CLI::MultiOptionPolicy::TakeLast);
  Options o;
  std::map<std::string, Command> cmds = register_commands(app, o);

  try {
    std::vector<std::string> argv = args;
    if (!argv.empty()) {
      const auto it = cmds.find(argv.front());
      // Expand --config in place: configured flags first, so explicit ones win.
      const auto cfg = std::find_if(argv.begin(), argv.end(), [](const std::string& a) {
        return a == "--config" || a.rfind("--config=", 0) == 0;
      });
      if (it != cmds.end() && cfg != argv.end()) {
        std::string path;
        if (*cfg == "--config") {
          if (cfg + 1 == argv.end()) throw CLI::ArgumentMismatch("--config needs a file");
          path = *(cfg + 1);
        } else {
          path = cfg->substr(std::string("--config=").size());
        }
        std::set<std::string> given;
        for (const std::string& a : argv)
          if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') - 2));
        const auto tokens = config_tokens(path, it->first, app, it->second.app, given);
        argv.insert(argv.begin() + 1, tokens.begin(), tokens.end());
      }
    }
    std::vector<std::string> reversed(argv.rbegin(), argv.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "tsim: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    err << "tsim: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "tsim: " << e.what() << "\n";
    return kExitRuntime;
  }

  CLI::App* sub = app.get_subcommands().front();
  Command& cmd = cmds.at(sub->get_name());
  try {
    const auto start = std::chrono::steady_clock::now();
    const CommandResult result = cmd.exec(out);
    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
    for (const std::string& w : result.warnings) err << "warning: " << w << "\n";

    ordered_json m;
    const DocumentHeader h = current_header(schema::run_manifest);
    m["header"] = {{"schema", h.schema}, {"version", h.version}, {"producer", h.producer}};
    m["command"] = sub->get_name();
    m["argv"] = args;
    const ordered_json options = effective_options(sub);
    m["options"] = options;
    Fnv1a config_hash;
    config_hash.update(options.dump());
    m["config_hash"] = config_hash.hex();
    m["seed"] = cmd.seed ? ordered_json(*cmd.seed) : ordered_json(nullptr);
    ordered_json versions = ordered_json::object();
    for (std::string_view s :
         {schema::raw_network, schema::network, schema::zones, schema::od_matrix, schema::trips,
          schema::vehicle_records, schema::road_speeds, schema::report, schema::run_manifest,
          schema::bench})
      versions[std::string(s)] = schema_version(s);
    m["schema_versions"] = std::move(versions);
    auto hashes = [&](const std::vector<std::string>& names) {
      ordered_json j = ordered_json::object();
      for (const std::string& n : names) {
        const CLI::Option* opt = sub->get_option_no_throw("--" + n);
        if (opt && opt->count() > 0) j[n] = file_hash(opt->results().back());
      }
      return j;
    };
    m["inputs"] = hashes(cmd.inputs);
    m["outputs"] = hashes(cmd.outputs);
    m["warnings"] = result.warnings;
    m["duration_s"] = wall.count();
    const double secs = wall.count() > 0.0 ? wall.count() : 0.0;
    m["throughput"] = {
        {"steps_per_s", secs > 0.0 ? std::stod(throughput(result.steps / secs)) : 0.0},
        {"vehicle_updates_per_s",
         secs > 0.0 ? std::stod(throughput(result.vehicle_updates / secs)) : 0.0}};

    std::string manifest_path = o.manifest;
    if (manifest_path.empty()) {
      const CLI::Option* primary = sub->get_option_no_throw("--" + cmd.primary);
      manifest_path = (primary && !primary->results().empty() ? primary->results().back()
                                                              : primary->get_default_str()) +
                      ".manifest.json";
    }
    write_text_file(manifest_path, m.dump(2) + "\n");
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "tsim " << sub->get_name() << ": " << e.what() << "\n";
    return kExitValidation;
  } catch (const LookupError& e) {
    err << "tsim " << sub->get_name() << ": " << e.what() << "\n";
    return kExitValidation;
  } catch (const MetricError& e) {
    err << "tsim " << sub->get_name() << ": " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "tsim " << sub->get_name() << ": " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace tsim::cli
