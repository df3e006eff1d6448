#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "stickylab/stickylab.h"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  sl_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("version and status helpers") {
  CHECK(std::strlen(sl_version()) > 0);
  CHECK(sl_exit_code(SL_OK) == 0);
  CHECK(sl_exit_code(SL_CONFIG) == 2);
  CHECK(sl_exit_code(SL_INVALID_ARGUMENT) == 2);
  CHECK(sl_exit_code(SL_INVALID_RULE) == 2);
  CHECK(sl_exit_code(SL_NUMERICAL) == 3);
  CHECK(sl_exit_code(SL_DEGENERATE) == 3);
  CHECK(sl_exit_code(SL_IO) == 4);
  CHECK(std::string(sl_status_name(SL_IO)) == "I/O failure");
}

TEST_CASE("null handles and arguments are rejected") {
  sl_table* t = nullptr;
  CHECK(sl_run_config_json(nullptr, &t) == SL_INVALID_ARGUMENT);
  CHECK(std::string(sl_last_error()).find("NULL") != std::string::npos);
  CHECK(sl_table_rows(nullptr) == 0);
  CHECK(sl_table_write_csv(nullptr, "-") == SL_INVALID_ARGUMENT);
  sl_table_destroy(nullptr);
  sl_ensemble_destroy(nullptr);
}

TEST_CASE("configuration errors map to status codes") {
  sl_table* t = nullptr;
  CHECK(sl_run_config_json("", &t) == SL_CONFIG);
  CHECK(t == nullptr);
  CHECK(sl_run_config_json(R"({"process": {"name": "nope"}})", &t) == SL_CONFIG);
  CHECK(std::string(sl_last_error()).find("nope") != std::string::npos);
  char* s = nullptr;
  CHECK(sl_preset_config_json("nope", &s) == SL_CONFIG);
  CHECK(s == nullptr);
}

TEST_CASE("presets and runs through the C interface") {
  char* list = nullptr;
  REQUIRE(sl_preset_list(&list) == SL_OK);
  const std::string names = take(list);
  CHECK(names.find("costs-fbm-momentum\n") != std::string::npos);

  char* json = nullptr;
  REQUIRE(sl_preset_config_json("fbm-sticky", &json) == SL_OK);
  CHECK(take(json).find("\"hurst\": 0.75") != std::string::npos);

  sl_table* t = nullptr;
  REQUIRE(sl_run_config_json(R"({"experiment": "fbm-sticky", "paths": 300})", &t) == SL_OK);
  CHECK(sl_table_rows(t) == 2);
  CHECK(sl_table_columns(t) == 14);
  char* name = nullptr;
  REQUIRE(sl_table_column_name(t, 8, &name) == SL_OK);
  CHECK(take(name) == "p_hat");
  double v = -1;
  CHECK(sl_table_cell_double(t, 0, 6, &v) == SL_OK);
  CHECK(v == 300.0);
  CHECK(sl_table_cell_double(t, 0, 0, &v) == SL_INVALID_ARGUMENT);
  char* text = nullptr;
  CHECK(sl_table_cell_text(t, 0, 13, &text) == SL_OK);
  const std::string verdict = take(text);
  CHECK((verdict == "POSITIVE" || verdict == "ZERO"));
  CHECK(sl_table_cell_text(t, 5, 0, &text) == SL_RANGE);
  CHECK(sl_table_write_plot(t, "epsilon", "missing", "-") == SL_CONFIG);
  CHECK(sl_table_write_csv(t, "/nonexistent-dir/x.csv") == SL_IO);
  sl_table_destroy(t);
}

TEST_CASE("ensembles through the C interface") {
  sl_ensemble* e = nullptr;
  REQUIRE(sl_ensemble_sample(R"({"name": "bm", "sigma": 1})", 1.0, 256, 42, 2000, &e) == SL_OK);
  CHECK(sl_ensemble_size(e) == 2000);
  CHECK(sl_ensemble_steps(e) == 256);
  std::vector<double> times(257), values(257);
  CHECK(sl_ensemble_times(e, times.data(), times.size()) == SL_OK);
  CHECK(times.back() == 1.0);
  CHECK(sl_ensemble_values(e, 3, values.data(), values.size()) == SL_OK);
  CHECK(values[0] == 0.0);
  CHECK(sl_ensemble_values(e, 3, values.data(), 10) == SL_RANGE);
  CHECK(sl_ensemble_values(e, 5000, values.data(), values.size()) == SL_RANGE);

  sl_stickiness_query q{"det:0", "all", nullptr, 0.5, 1.0, 0.0};
  sl_stickiness_result r{};
  REQUIRE(sl_stickiness(e, &q, &r) == SL_OK);
  CHECK(r.n == 2000);
  CHECK(r.ci_low <= r.p_hat);
  CHECK(r.p_hat <= r.ci_high);
  sl_stickiness_query bad{"det:0", "all", nullptr, 0.5, 2.0, 0.0};
  CHECK(sl_stickiness(e, &bad, &r) == SL_INVALID_ARGUMENT);
  sl_stickiness_query rule{"hit:-1", "all", nullptr, 0.5, 1.0, 0.0};
  CHECK(sl_stickiness(e, &rule, &r) == SL_INVALID_RULE);

  const auto dir = std::filesystem::temp_directory_path() / ("sl-capi-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const std::string file = (dir / "ens.csv").string();
  REQUIRE(sl_ensemble_write_csv(e, file.c_str()) == SL_OK);
  sl_ensemble* back = nullptr;
  REQUIRE(sl_ensemble_read_csv(file.c_str(), &back) == SL_OK);
  std::vector<double> again(257);
  CHECK(sl_ensemble_values(back, 3, again.data(), again.size()) == SL_OK);
  CHECK(again == values);
  sl_ensemble_destroy(back);
  CHECK(sl_ensemble_read_csv((dir / "none.csv").string().c_str(), &back) == SL_IO);
  std::filesystem::remove_all(dir);
  sl_ensemble_destroy(e);

  CHECK(sl_ensemble_sample(R"({"name": "fbm", "hurst": 0})", 1.0, 8, 1, 1, &e) == SL_CONFIG);
}

TEST_CASE("wilson interval through the C interface") {
  double lo = -1, hi = -1;
  CHECK(sl_wilson_ci(0, 10, 0.95, &lo, &hi) == SL_OK);
  CHECK(lo == 0.0);
  CHECK(sl_wilson_ci(11, 10, 0.95, &lo, &hi) == SL_INVALID_ARGUMENT);
}

TEST_CASE("worker count") {
  CHECK(sl_set_threads(3) == SL_OK);
  CHECK(sl_get_threads() == 3);
  CHECK(sl_set_threads(0) == SL_OK);
  CHECK(sl_get_threads() >= 1);
}
