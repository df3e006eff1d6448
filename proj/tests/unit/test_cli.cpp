#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("sl-cli-" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string file(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args, const std::string& stdout_file = "/dev/null") {
  const std::string cmd =
      std::string(STICKYLAB_CLI_PATH) + " " + args + " > " + stdout_file + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

std::string body(const std::string& csv) {
  std::stringstream in(csv);
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind("#", 0) != 0) out += line + "\n";
  return out;
}

}  // namespace

TEST_CASE("success writes a csv with provenance") {
  Scratch s;
  const auto out = s.file("fbm.csv");
  CHECK(run("stickiness --process fbm --hurst 0.75 --epsilon 0.5 --paths 200 --steps 128 --out " +
            out) == 0);
  const std::string csv = slurp(out);
  CHECK(csv.find("# config_hash=") != std::string::npos);
  CHECK(csv.find("# seed=42") != std::string::npos);
  CHECK(csv.find("process,H,tau_rule,event,epsilon,T,n,successes,p_hat,ci_low,ci_high,seed,steps,"
                 "verdict\n") != std::string::npos);
  CHECK(csv.find("fbm,0.75,det:0,all,0.5,1,200,") != std::string::npos);
}

TEST_CASE("flags override the configuration file") {
  Scratch s;
  const auto cfg = s.file("c.json");
  write(cfg, R"({"process": {"name": "bm"}, "paths": 50, "grid": {"steps": 64}, "seed": 3})");
  const auto out = s.file("o.csv");
  CHECK(run("stickiness --config " + cfg + " --seed 9 --out " + out) == 0);
  const std::string csv = slurp(out);
  CHECK(csv.find("# seed=9") != std::string::npos);
  CHECK(csv.find(",50,") != std::string::npos);
}

TEST_CASE("exit codes") {
  Scratch s;
  const auto empty = s.file("empty.json");
  write(empty, "");
  CHECK(run("run --config " + empty) == 2);
  CHECK(run("stickiness --config " + s.file("absent.json")) == 4);
  CHECK(run("stickiness --process levy --paths 10") == 2);
  CHECK(run("stickiness --tau later:3 --paths 10") == 2);
  CHECK(run("stickiness --epsilon -1 --paths 10") == 2);
  CHECK(run("experiment no-such-preset") == 2);
  CHECK(run("--no-such-flag") == 2);
  CHECK(run("stickiness --paths 10 --steps 16 --out /nonexistent-dir/x.csv") == 4);
  CHECK(run("ladder --paths 10 --steps 16 --plot-x horizon --plot-y missing --out " +
            s.file("l.csv")) == 2);
  // zero quadratic variation is a numerical failure
  CHECK(run("dds --process mapped --map affine:0:0 --paths 4 --steps 16") == 3);
}

TEST_CASE("experiment presets and plot series") {
  Scratch s;
  const auto out = s.file("l.csv"), plot = s.file("p.csv");
  CHECK(run("ladder --process bm --tau det:0 --delta 1 --ladder 0.25 0.5 1 --paths 100 --steps 64 "
            "--out " + out + " --plot-x horizon --plot-y fraction --plot-out " + plot) == 0);
  const std::string series = body(slurp(plot));
  CHECK(series.rfind("horizon,fraction\n0.25,", 0) == 0);

  CHECK(run("presets", s.file("names.txt")) == 0);
  CHECK(slurp(s.file("names.txt")).find("passage-counterexample") != std::string::npos);
  CHECK(run("experiment fbm-sticky --paths 100 --print-config", s.file("cfg.json")) == 0);
  CHECK(slurp(s.file("cfg.json")).find("\"paths\": 100") != std::string::npos);
}

TEST_CASE("thread count never changes the output") {
  Scratch s;
  const auto a = s.file("a.csv"), b = s.file("b.csv");
  CHECK(run("experiment abs-cuberoot --paths 300 --threads 1 --out " + a) == 0);
  CHECK(std::system(("STICKYLAB_THREADS=5 " + std::string(STICKYLAB_CLI_PATH) +
                     " experiment abs-cuberoot --paths 300 --out " + b + " > /dev/null").c_str()) == 0);
  CHECK(body(slurp(a)) == body(slurp(b)));
}
