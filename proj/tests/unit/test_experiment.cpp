#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "stickylab/experiment.hpp"
#include "support.hpp"

using namespace stickylab;

namespace {

std::string body_of(const ResultTable& t) {
  std::stringstream out;
  write_csv(out, t);
  std::string line, body;
  while (std::getline(out, line))
    if (line.rfind("#", 0) != 0) body += line + "\n";
  return body;
}

std::string cell(const ResultTable& t, std::size_t row, const char* column) {
  return cell_text(t.rows.at(row).at(t.column_index(column)));
}

std::filesystem::path temp_dir() {
  auto p = std::filesystem::temp_directory_path() / ("stickylab-test-" + std::to_string(::getpid()));
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("configuration errors") {
  CHECK(error_code_of([] { parse_config(""); }) == ErrorCode::ConfigError);
  CHECK(error_code_of([] { parse_config("  \n"); }) == ErrorCode::ConfigError);
  CHECK(error_code_of([] { parse_config("{"); }) == ErrorCode::ConfigError);
  CHECK(error_code_of([] { parse_config("[]"); }) == ErrorCode::ConfigError);
  CHECK(error_code_of([] { parse_config(R"({"bogus": 1})"); }) == ErrorCode::ConfigError);
  CHECK(error_code_of([] { parse_config(R"({"process": {"name": "levy"}})"); }) ==
        ErrorCode::ConfigError);
  CHECK(error_code_of([] { parse_config(R"({"experiment": {"tau": "later:1"}})"); }) ==
        ErrorCode::ConfigError);
  CHECK(error_code_of([] { parse_config(R"({"experiment": {"kind": "fly"}})"); }) ==
        ErrorCode::ConfigError);
  CHECK(error_code_of([] { parse_config(R"({"experiment": "no-such-preset"})"); }) ==
        ErrorCode::ConfigError);
  CHECK(error_code_of([] { parse_config(R"({"paths": 0})"); }) == ErrorCode::ConfigError);
  CHECK(error_code_of([] { parse_config(R"({"process": {"name": "fbm", "hurst": 1.5}})"); }) ==
        ErrorCode::ConfigError);
  CHECK(error_code_of([] { parse_config(R"({"process": {"name": "mapped", "map": "sqrt"}})"); }) ==
        ErrorCode::ConfigError);
}

TEST_CASE("configuration defaults, presets and overrides") {
  const auto c = parse_config(R"({"seed": 7, "paths": 12, "grid": {"steps": 64}})");
  CHECK(c.seed == 7);
  CHECK(c.paths == 12);
  CHECK(c.grid.steps == 64);
  CHECK(c.grid.horizon == 1.0);
  CHECK(c.process.name == "bm");

  CHECK(preset_names().size() == 8);
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    const auto p = preset_config(name);
    CHECK(p.name == name);
    const auto again = parse_config(to_json(p));
    CHECK(config_hash(again) == config_hash(p));
  }
  const auto o = parse_config(R"({"experiment": "fbm-sticky", "paths": 100, "process": {"hurst": 0.6}})");
  CHECK(o.name == "fbm-sticky");
  CHECK(o.paths == 100);
  CHECK(o.process.name == "fbm");
  CHECK(o.process.hurst == 0.6);
  CHECK(config_hash(o) != config_hash(preset_config("fbm-sticky")));

  auto t = preset_config("fbm-sticky");
  const auto h = config_hash(t);
  t.threads = 3;
  t.output = "elsewhere.csv";
  CHECK(config_hash(t) == h);
}

TEST_CASE("paper-nonsticky preset has no successes") {
  const auto t = run_experiment(preset_config("paper-nonsticky"));
  REQUIRE(t.rows.size() == 1);
  CHECK(cell(t, 0, "successes") == "0");
  CHECK(cell(t, 0, "n") == "10000");
  CHECK(cell(t, 0, "verdict") == "ZERO");
  CHECK(cell(t, 0, "H") == "NA");
}

TEST_CASE("fbm-sticky preset is positive") {
  const auto t = run_experiment(preset_config("fbm-sticky"));
  CHECK(t.columns == std::vector<std::string>{"process", "H", "tau_rule", "event", "epsilon", "T",
                                              "n", "successes", "p_hat", "ci_low", "ci_high",
                                              "seed", "steps", "verdict"});
  REQUIRE(t.rows.size() == 2);
  for (std::size_t r = 0; r < 2; ++r) {
    CHECK(std::get<double>(t.rows[r][t.column_index("ci_low")]) > 0.0);
    CHECK(cell(t, r, "H") == "0.75");
    CHECK(cell(t, r, "seed") == "42");
    CHECK(cell(t, r, "steps") == "1024");
  }
  bool has_convention = false;
  for (const auto& [k, v] : t.provenance) has_convention |= k == "verdict_convention";
  CHECK(has_convention);
}

TEST_CASE("every experiment kind runs at small scale") {
  auto c = preset_config("fbm-sticky");
  c.paths = 200;
  c.grid.steps = 128;

  c.experiment.characterization = "all";
  const auto cross = run_experiment(c);
  CHECK(cross.rows.size() == 6);
  CHECK(cross.columns.back() == "agree");

  c.experiment.kind = ExperimentKind::Ladder;
  c.experiment.delta = 0.5;
  c.experiment.ladder = {0.25, 0.5, 1.0};
  const auto ladder = run_experiment(c);
  CHECK(ladder.columns == std::vector<std::string>{"process", "tau_rule", "delta", "horizon",
                                                   "fraction", "n", "seed", "steps"});
  CHECK(ladder.rows.size() == 6);

  c.experiment.kind = ExperimentKind::Portfolio;
  c.experiment.k = {0.0, 0.01};
  c.experiment.control = true;
  const auto port = run_experiment(c);
  CHECK(port.columns == std::vector<std::string>{"strategy", "k", "n", "frac_nonneg", "frac_pos",
                                                 "mean_VT", "std_VT", "min_VT", "flag", "seed"});
  CHECK(port.rows.size() == 3);
  CHECK(std::get<double>(port.rows[0][5]) >= std::get<double>(port.rows[1][5]));

  c.experiment.kind = ExperimentKind::Generate;
  c.paths = 3;
  const auto gen = run_experiment(c);
  CHECK(gen.columns == std::vector<std::string>{"t", "x_0", "x_1", "x_2"});
  CHECK(gen.rows.size() == 129);

  auto d = preset_config("dds-check");
  d.paths = 50;
  const auto dds = run_experiment(d);
  CHECK(dds.rows.size() == 1);
  CHECK(std::get<double>(dds.rows[0][dds.column_index("rel_error")]) < 0.1);
}

TEST_CASE("tables do not depend on the worker count") {
  auto c = preset_config("cos-drift");
  c.paths = 500;
  c.threads = 1;
  const auto one = body_of(run_experiment(c));
  c.threads = 4;
  CHECK(body_of(run_experiment(c)) == one);
  c.threads = 8;
  CHECK(body_of(run_experiment(c)) == one);
}

TEST_CASE("csv emission") {
  ResultTable empty;
  empty.columns = {"a", "b"};
  std::stringstream s;
  write_csv(s, empty);
  CHECK(s.str() == "a,b\n");

  ResultTable one;
  one.columns = {"name", "x", "n"};
  one.rows = {{std::string("fbm, odd \"name\""), 0.1 + 0.2, std::uint64_t{18446744073709551615ULL}}};
  one.provenance = {{"seed", "42"}};
  std::stringstream buf;
  write_csv(buf, one);
  CHECK(buf.str().rfind("# seed=42\nname,x,n\n", 0) == 0);
  const auto back = read_csv(buf);
  CHECK(back.columns == one.columns);
  CHECK(back.provenance == one.provenance);
  REQUIRE(back.rows.size() == 1);
  CHECK(back.rows[0] == one.rows[0]);

  const auto dir = temp_dir();
  const auto file = (dir / "out.csv").string();
  emit_csv(one, file);
  std::ifstream in(file);
  CHECK(read_csv(in).rows == one.rows);
  for (const auto& e : std::filesystem::directory_iterator(dir))
    CHECK(e.path().filename() == "out.csv");
  CHECK(error_code_of([&] { emit_csv(one, (dir / "missing" / "x.csv").string()); }) ==
        ErrorCode::IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("plot data") {
  ResultTable t;
  t.columns = {"horizon", "fraction", "label"};
  t.rows = {{4.0, 0.1, std::string("a")}, {1.0, 0.9, std::string("b")}, {2.0, 0.5, std::string("c")}};
  const auto p = plot_table(t, "horizon", "fraction");
  CHECK(p.columns == std::vector<std::string>{"horizon", "fraction"});
  CHECK(std::get<double>(p.rows[0][0]) == 1.0);
  CHECK(std::get<double>(p.rows[2][1]) == 0.1);

  ResultTable single;
  single.columns = {"x", "y"};
  single.rows = {{1.0, 2.0}};
  CHECK(plot_table(single, "x", "y").rows.size() == 1);

  CHECK(error_code_of([&] { plot_table(t, "horizon", "nope"); }) == ErrorCode::ConfigError);
  CHECK(error_code_of([&] { plot_table(t, "label", "fraction"); }) == ErrorCode::ConfigError);
}
