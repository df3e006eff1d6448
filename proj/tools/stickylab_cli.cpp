// Command-line front end. Builds a JSON configuration from the config file,
// preset and flags (flags win), then hands it to the C API.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "stickylab/stickylab.h"

using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 4;

struct Flags {
  std::string config_file;
  std::optional<std::string> process, map, price, strategy, event, characterization, out;
  std::optional<double> hurst, sigma, cap, barrier, horizon, T, delta, confidence;
  std::optional<std::size_t> steps, paths, threads, qv_grid_steps;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> tau;
  std::vector<double> epsilon, k, ladder;
  bool control = false;
  bool print_config = false;
  std::string plot_x, plot_y, plot_out;
  std::string preset;
};

struct CliFailure {
  int code;
  std::string message;
};

json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliFailure{kExitIo, "cannot read config file '" + path + "'"};
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos)
    throw CliFailure{kExitConfig, "config file '" + path + "' is empty"};
  try {
    json j = json::parse(text);
    if (!j.is_object()) throw CliFailure{kExitConfig, "config file must hold a JSON object"};
    return j;
  } catch (const json::parse_error& e) {
    throw CliFailure{kExitConfig, std::string("config file is not valid JSON: ") + e.what()};
  }
}

std::string take(char* s) {
  std::string out = s ? s : "";
  sl_string_free(s);
  return out;
}

void check(sl_status status) {
  if (status != SL_OK) throw CliFailure{sl_exit_code(status), sl_last_error()};
}

json flag_patch(const Flags& f, const std::string& kind) {
  json patch = json::object();
  json& proc = patch["process"] = json::object();
  if (f.process) proc["name"] = *f.process;
  if (f.hurst) proc["hurst"] = *f.hurst;
  if (f.sigma) proc["sigma"] = *f.sigma;
  if (f.cap) proc["cap"] = *f.cap;
  if (f.barrier) proc["barrier"] = *f.barrier;
  if (f.map) proc["map"] = *f.map;
  if (proc.empty()) patch.erase("process");

  json grid = json::object();
  if (f.horizon) grid["horizon"] = *f.horizon;
  if (f.steps) grid["steps"] = *f.steps;
  if (!grid.empty()) patch["grid"] = grid;

  json exp = json::object();
  if (!kind.empty()) exp["kind"] = kind;
  if (!f.tau.empty()) exp["tau"] = f.tau;
  if (f.event) exp["event"] = *f.event;
  if (!f.epsilon.empty()) exp["epsilon"] = f.epsilon;
  if (f.T) exp["T"] = *f.T;
  if (f.delta) exp["delta"] = *f.delta;
  if (!f.ladder.empty()) exp["ladder"] = f.ladder;
  if (f.characterization) exp["characterization"] = *f.characterization;
  if (f.confidence) exp["confidence"] = *f.confidence;
  if (f.strategy) exp["strategy"] = *f.strategy;
  if (!f.k.empty()) exp["k"] = f.k;
  if (f.price) exp["price"] = *f.price;
  if (f.control) exp["control"] = true;
  if (f.qv_grid_steps) exp["qv_grid_steps"] = *f.qv_grid_steps;
  if (!exp.empty()) patch["experiment"] = exp;

  if (f.seed) patch["seed"] = *f.seed;
  if (f.paths) patch["paths"] = *f.paths;
  if (f.out) patch["output"] = *f.out;
  if (f.threads) patch["threads"] = *f.threads;
  return patch;
}

int run(const Flags& f, const std::string& kind) {
  json doc = json::object();
  if (!kind.empty() || !f.preset.empty()) {
    if (!f.preset.empty()) {
      char* preset_json = nullptr;
      check(sl_preset_config_json(f.preset.c_str(), &preset_json));
      doc = json::parse(take(preset_json));
    }
  }
  if (!f.config_file.empty()) doc.merge_patch(read_config_file(f.config_file));
  doc.merge_patch(flag_patch(f, kind));

  char* normalized = nullptr;
  check(sl_normalize_config_json(doc.dump().c_str(), &normalized));
  const json config = json::parse(take(normalized));
  if (f.print_config) {
    std::cout << config.dump(2) << '\n';
    return 0;
  }

  sl_table* raw = nullptr;
  check(sl_run_config_json(config.dump().c_str(), &raw));
  const std::unique_ptr<sl_table, void (*)(sl_table*)> table(raw, sl_table_destroy);
  check(sl_table_write_csv(table.get(), config.value("output", "-").c_str()));
  if (!f.plot_x.empty() || !f.plot_y.empty()) {
    if (f.plot_x.empty() || f.plot_y.empty())
      throw CliFailure{kExitConfig, "--plot-x and --plot-y go together"};
    check(sl_table_write_plot(table.get(), f.plot_x.c_str(), f.plot_y.c_str(),
                              f.plot_out.empty() ? "-" : f.plot_out.c_str()));
  }
  return 0;
}

void add_shared_options(CLI::App& app, Flags& f) {
  app.add_option("--config", f.config_file, "JSON configuration file");
  app.add_option("--process", f.process,
                 "bm, fbm, nonsticky-martingale, abs-cuberoot, cos-drift, timechange-cap, "
                 "qv-drift, mapped, passage-ramp");
  app.add_option("--hurst", f.hurst, "Hurst parameter for fbm");
  app.add_option("--sigma", f.sigma, "volatility for bm");
  app.add_option("--cap", f.cap, "time-change cap for timechange-cap");
  app.add_option("--barrier", f.barrier, "exit barrier for nonsticky-martingale");
  app.add_option("--map", f.map, "scalar map for mapped / qv-drift (e.g. affine:2:1)");
  app.add_option("--horizon", f.horizon, "grid horizon");
  app.add_option("--steps", f.steps, "grid steps");
  app.add_option("--paths", f.paths, "number of paths");
  app.add_option("--seed", f.seed, "master seed");
  app.add_option("--threads", f.threads, "worker threads (default STICKYLAB_THREADS)");
  app.add_option("--tau", f.tau, "stopping rule(s): det:<t>, hit:<d>[@rule], pass:<s>, absexceed:<l>");
  app.add_option("--event", f.event, "event: all, stoprange:<lo>:<hi>, before:<T>, joined with &");
  app.add_option("--epsilon", f.epsilon, "tube half-width(s)");
  app.add_option("--T", f.T, "stickiness / portfolio horizon");
  app.add_option("--delta", f.delta, "tube half-width for ladders and propc");
  app.add_option("--ladder", f.ladder, "horizon ladder");
  app.add_option("--characterization", f.characterization, "defa, propb, propc or all");
  app.add_option("--confidence", f.confidence, "confidence level");
  app.add_option("--k", f.k, "proportional cost rate(s)");
  app.add_option("--strategy", f.strategy, "momentum:<threshold>:<unit> or buyhold:<unit>");
  app.add_option("--price", f.price, "exp or raw");
  app.add_flag("--control", f.control, "add a shuffled-increment control row");
  app.add_option("--qv-grid-steps", f.qv_grid_steps, "QV clock steps for dds");
  app.add_option("--out", f.out, "output CSV ('-' for stdout)");
  app.add_option("--plot-x", f.plot_x, "x column for a plot series");
  app.add_option("--plot-y", f.plot_y, "y column for a plot series");
  app.add_option("--plot-out", f.plot_out, "plot series destination");
  app.add_flag("--print-config", f.print_config, "print the resolved configuration and exit");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo stickiness lab"};
  app.require_subcommand(1);
  Flags flags;

  std::string kind;
  std::vector<std::pair<CLI::App*, std::string>> subs = {
      {app.add_subcommand("generate", "dump sampled paths as CSV"), "generate"},
      {app.add_subcommand("stickiness", "estimate stickiness probabilities"), "stickiness"},
      {app.add_subcommand("ladder", "tube survival fractions over a horizon ladder"), "ladder"},
      {app.add_subcommand("portfolio", "transaction-cost ledger statistics"), "portfolio"},
      {app.add_subcommand("dds", "quadratic-variation clock check"), "dds"},
      {app.add_subcommand("run", "run a configuration file"), ""},
  };
  for (auto& [sub, _] : subs) add_shared_options(*sub, flags);
  CLI::App* experiment = app.add_subcommand("experiment", "run a named preset");
  experiment->add_option("preset", flags.preset, "preset name")->required();
  add_shared_options(*experiment, flags);
  CLI::App* presets = app.add_subcommand("presets", "list preset names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*presets) {
      char* list = nullptr;
      check(sl_preset_list(&list));
      std::cout << take(list);
      return 0;
    }
    if (*experiment) return run(flags, "");
    for (auto& [sub, name] : subs) {
      if (*sub) {
        if (name.empty() && flags.config_file.empty())
          throw CliFailure{kExitConfig, "run needs --config"};
        return run(flags, name);
      }
    }
  } catch (const CliFailure& e) {
    std::cerr << "stickylab: " << e.message << '\n';
    return e.code;
  }
  return 0;
}
