#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "stickylab/pathgen.hpp"

namespace stickylab {

inline constexpr const char* kVersion = "0.1.0";

// Named process with its parameters. Derived processes (timechange-cap,
// qv-drift, mapped, abs-cuberoot) take their driver from `base`.
//
//   bm (sigma), fbm (hurst), nonsticky-martingale (barrier),
//   abs-cuberoot (base), cos-drift (hit_level), timechange-cap (base, cap),
//   qv-drift (base, map), mapped (base, map),
//   passage-ramp (source_horizon, source_steps, rate)
struct ProcessConfig {
  std::string name = "bm";
  double sigma = 1.0;
  double hurst = 0.5;
  double barrier = 2.0;
  double hit_level = 1.0;
  double cap = 0.5;
  std::string map = "identity";
  double source_horizon = 16.0;
  std::size_t source_steps = 16384;
  double rate = 1.0;
  std::vector<ProcessConfig> base;  // zero or one element

  // Hurst parameter of the fBm driving this process, if any.
  std::optional<double> hurst_parameter() const;
};

struct GridConfig {
  double horizon = 1.0;
  std::size_t steps = 1024;
};

enum class ExperimentKind { Generate, Stickiness, Ladder, Portfolio, Dds };

const char* to_string(ExperimentKind kind) noexcept;

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::Stickiness;
  // stickiness / ladder
  std::vector<std::string> tau = {"det:0"};
  std::string event = "all";
  std::vector<double> epsilon = {0.5};
  double T = 1.0;
  std::string characterization = "defa";  // defa, propb, propc, or all (cross-check)
  double confidence = 0.95;
  double delta = 0.0;
  std::vector<double> ladder;
  // portfolio
  std::string strategy = "momentum:0.1:1";  // or buyhold:<unit>
  std::vector<double> k = {0.0};
  std::string price = "exp";  // exp or raw
  bool control = false;       // add a shuffled-increment control row
  double admissibility_floor = 1.0;
  double tol = 1e-9;
  // dds
  std::size_t qv_grid_steps = 256;
};

struct ExperimentConfig {
  std::string name = "custom";
  ProcessConfig process;
  GridConfig grid;
  ExperimentSpec experiment;
  std::uint64_t seed = 42;
  std::size_t paths = 10000;
  std::string output = "-";
  std::optional<std::size_t> threads;
};

// JSON document with top-level keys process, grid, experiment, seed, paths,
// output (and optional threads, name). `experiment` may also be a preset
// name, whose settings the remaining keys then override. Unknown keys and
// names are configuration errors.
ExperimentConfig parse_config(std::string_view json_text);
ProcessConfig parse_process(std::string_view json_text);
std::string to_json(const ExperimentConfig& config);

std::vector<std::string> preset_names();
ExperimentConfig preset_config(std::string_view name);

ProcessSpec build_process(const ProcessConfig& config);

using Cell = std::variant<std::string, double, std::uint64_t>;

std::string cell_text(const Cell& cell);

struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  // Emitted as `# key=value` lines ahead of the header.
  std::vector<std::pair<std::string, std::string>> provenance;

  std::size_t column_index(std::string_view name) const;  // ConfigError if absent
};

// FNV-1a over the canonical JSON of the result-relevant fields (output
// destination and worker count excluded).
std::string config_hash(const ExperimentConfig& config);

ResultTable run_experiment(const ExperimentConfig& config);

// Provenance comments, header, rows; numbers with 17 significant digits.
// The generated= timestamp line is the only part that varies between runs.
void write_csv(std::ostream& out, const ResultTable& table);
// "-" is stdout; files are written to a temporary sibling and renamed.
void emit_csv(const ResultTable& table, const std::string& destination);
// Integers, then doubles, then strings; comment lines become provenance.
ResultTable read_csv(std::istream& in);

// Two-column (x, y) series sorted by x.
ResultTable plot_table(const ResultTable& table, std::string_view x_column,
                       std::string_view y_column);
void emit_plot_data(const ResultTable& table, std::string_view x_column,
                    std::string_view y_column, const std::string& destination);

}  // namespace stickylab
