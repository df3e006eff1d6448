#include "stickylab/stickylab.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <string>

#include "stickylab/error.hpp"
#include "stickylab/experiment.hpp"
#include "stickylab/parallel.hpp"
#include "stickylab/pathgen.hpp"
#include "stickylab/stickiness.hpp"

struct sl_table {
  stickylab::ResultTable table;
};

struct sl_ensemble {
  stickylab::Ensemble ensemble;
};

namespace {

thread_local std::string last_error;

sl_status status_for(stickylab::ErrorCode code) {
  using stickylab::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return SL_INVALID_ARGUMENT;
    case ErrorCode::UnsupportedGrid: return SL_GRID;
    case ErrorCode::NumericalFailure: return SL_NUMERICAL;
    case ErrorCode::GridMismatch: return SL_GRID;
    case ErrorCode::DomainViolation: return SL_DOMAIN;
    case ErrorCode::RangeError: return SL_RANGE;
    case ErrorCode::DegenerateInput: return SL_DEGENERATE;
    case ErrorCode::ContractViolation: return SL_CONTRACT;
    case ErrorCode::InvalidRule: return SL_INVALID_RULE;
    case ErrorCode::AlignmentError: return SL_GRID;
    case ErrorCode::ConfigError: return SL_CONFIG;
    case ErrorCode::IoError: return SL_IO;
  }
  return SL_INTERNAL;
}

template <class F>
sl_status guarded(F&& fn) {
  last_error.clear();
  try {
    fn();
    return SL_OK;
  } catch (const stickylab::Error& e) {
    last_error = e.what();
    return status_for(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return SL_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return SL_INTERNAL;
  }
}

sl_status null_argument(const char* what) {
  last_error = std::string(what) + " must not be NULL";
  return SL_INVALID_ARGUMENT;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* sl_version(void) { return stickylab::kVersion; }

const char* sl_last_error(void) { return last_error.c_str(); }

const char* sl_status_name(sl_status status) {
  switch (status) {
    case SL_OK: return "ok";
    case SL_INVALID_ARGUMENT: return "invalid argument";
    case SL_CONFIG: return "configuration error";
    case SL_NUMERICAL: return "numerical failure";
    case SL_IO: return "I/O failure";
    case SL_DOMAIN: return "domain violation";
    case SL_RANGE: return "range error";
    case SL_GRID: return "grid error";
    case SL_CONTRACT: return "contract violation";
    case SL_INVALID_RULE: return "invalid rule";
    case SL_DEGENERATE: return "degenerate input";
    case SL_INTERNAL: return "internal error";
  }
  return "unknown status";
}

int sl_exit_code(sl_status status) {
  switch (status) {
    case SL_OK: return 0;
    case SL_INVALID_ARGUMENT:
    case SL_CONFIG:
    case SL_INVALID_RULE: return 2;
    case SL_IO: return 4;
    default: return 3;
  }
}

sl_status sl_set_threads(size_t n) {
  return guarded([&] { stickylab::set_worker_count(n); });
}

size_t sl_get_threads(void) { return stickylab::worker_count(); }

sl_status sl_run_config_json(const char* json, sl_table** out) {
  if (!json) return null_argument("json");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    const auto config = stickylab::parse_config(json);
    *out = new sl_table{stickylab::run_experiment(config)};
  });
}

sl_status sl_preset_config_json(const char* name, char** out_json) {
  if (!name) return null_argument("name");
  if (!out_json) return null_argument("out_json");
  *out_json = nullptr;
  return guarded([&] { *out_json = dup_string(stickylab::to_json(stickylab::preset_config(name))); });
}

sl_status sl_preset_list(char** out) {
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    std::string s;
    for (const auto& n : stickylab::preset_names()) s += n + "\n";
    *out = dup_string(s);
  });
}

sl_status sl_normalize_config_json(const char* json, char** out_json) {
  if (!json) return null_argument("json");
  if (!out_json) return null_argument("out_json");
  *out_json = nullptr;
  return guarded([&] { *out_json = dup_string(stickylab::to_json(stickylab::parse_config(json))); });
}

void sl_string_free(char* s) { std::free(s); }

size_t sl_table_rows(const sl_table* table) { return table ? table->table.rows.size() : 0; }

size_t sl_table_columns(const sl_table* table) { return table ? table->table.columns.size() : 0; }

sl_status sl_table_column_name(const sl_table* table, size_t column, char** out) {
  if (!table) return null_argument("table");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    if (column >= table->table.columns.size())
      stickylab::fail(stickylab::ErrorCode::RangeError, "column index out of range");
    *out = dup_string(table->table.columns[column]);
  });
}

sl_status sl_table_cell_text(const sl_table* table, size_t row, size_t column, char** out) {
  if (!table) return null_argument("table");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    if (row >= table->table.rows.size() || column >= table->table.columns.size())
      stickylab::fail(stickylab::ErrorCode::RangeError, "cell index out of range");
    *out = dup_string(stickylab::cell_text(table->table.rows[row][column]));
  });
}

sl_status sl_table_cell_double(const sl_table* table, size_t row, size_t column, double* out) {
  if (!table) return null_argument("table");
  if (!out) return null_argument("out");
  return guarded([&] {
    if (row >= table->table.rows.size() || column >= table->table.columns.size())
      stickylab::fail(stickylab::ErrorCode::RangeError, "cell index out of range");
    const auto& cell = table->table.rows[row][column];
    if (const auto* d = std::get_if<double>(&cell)) {
      *out = *d;
    } else if (const auto* u = std::get_if<std::uint64_t>(&cell)) {
      *out = static_cast<double>(*u);
    } else {
      stickylab::fail(stickylab::ErrorCode::InvalidArgument, "cell is not numeric");
    }
  });
}

sl_status sl_table_write_csv(const sl_table* table, const char* destination) {
  if (!table) return null_argument("table");
  if (!destination) return null_argument("destination");
  return guarded([&] { stickylab::emit_csv(table->table, destination); });
}

sl_status sl_table_write_plot(const sl_table* table, const char* x_column, const char* y_column,
                              const char* destination) {
  if (!table) return null_argument("table");
  if (!x_column || !y_column) return null_argument("column name");
  if (!destination) return null_argument("destination");
  return guarded(
      [&] { stickylab::emit_plot_data(table->table, x_column, y_column, destination); });
}

void sl_table_destroy(sl_table* table) { delete table; }

sl_status sl_ensemble_sample(const char* process_json, double horizon, size_t steps,
                             uint64_t seed, size_t n_paths, sl_ensemble** out) {
  if (!process_json) return null_argument("process_json");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    const auto spec = stickylab::build_process(stickylab::parse_process(process_json));
    const auto grid = stickylab::make_uniform_grid(horizon, steps);
    *out = new sl_ensemble{stickylab::Ensemble::sample(spec, grid, seed, n_paths)};
  });
}

sl_status sl_ensemble_read_csv(const char* path, sl_ensemble** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    std::ifstream in(path);
    if (!in) stickylab::fail(stickylab::ErrorCode::IoError, std::string("cannot open '") + path + "'");
    *out = new sl_ensemble{stickylab::read_ensemble_csv(in)};
  });
}

sl_status sl_ensemble_write_csv(const sl_ensemble* ensemble, const char* path) {
  if (!ensemble) return null_argument("ensemble");
  if (!path) return null_argument("path");
  return guarded([&] {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) stickylab::fail(stickylab::ErrorCode::IoError, std::string("cannot open '") + path + "'");
    stickylab::write_ensemble_csv(out, ensemble->ensemble);
    out.flush();
    if (!out) stickylab::fail(stickylab::ErrorCode::IoError, std::string("failed writing '") + path + "'");
  });
}

size_t sl_ensemble_size(const sl_ensemble* ensemble) {
  return ensemble ? ensemble->ensemble.size() : 0;
}

size_t sl_ensemble_steps(const sl_ensemble* ensemble) {
  return ensemble ? ensemble->ensemble.grid().steps() : 0;
}

sl_status sl_ensemble_times(const sl_ensemble* ensemble, double* out, size_t len) {
  if (!ensemble) return null_argument("ensemble");
  if (!out) return null_argument("out");
  return guarded([&] {
    const auto t = ensemble->ensemble.grid().times();
    if (len < t.size()) stickylab::fail(stickylab::ErrorCode::RangeError, "output buffer too small");
    std::copy(t.begin(), t.end(), out);
  });
}

sl_status sl_ensemble_values(const sl_ensemble* ensemble, size_t path, double* out, size_t len) {
  if (!ensemble) return null_argument("ensemble");
  if (!out) return null_argument("out");
  return guarded([&] {
    if (path >= ensemble->ensemble.size())
      stickylab::fail(stickylab::ErrorCode::RangeError, "path index out of range");
    const auto p = ensemble->ensemble.path(path);
    if (len < p.size()) stickylab::fail(stickylab::ErrorCode::RangeError, "output buffer too small");
    std::copy(p.values().begin(), p.values().end(), out);
  });
}

void sl_ensemble_destroy(sl_ensemble* ensemble) { delete ensemble; }

sl_status sl_stickiness(const sl_ensemble* ensemble, const sl_stickiness_query* query,
                        sl_stickiness_result* out) {
  if (!ensemble) return null_argument("ensemble");
  if (!query) return null_argument("query");
  if (!out) return null_argument("out");
  return guarded([&] {
    stickylab::StickinessQuery q;
    q.tau = stickylab::StoppingRule::parse(query->tau ? query->tau : "det:0");
    q.event = stickylab::EventDescriptor::parse(query->event ? query->event : "all");
    q.characterization = stickylab::parse_characterization(
        query->characterization ? query->characterization : "defa");
    q.epsilon = query->epsilon;
    q.horizon = query->horizon;
    q.confidence = query->confidence == 0.0 ? 0.95 : query->confidence;
    const auto e = stickylab::estimate_stickiness(ensemble->ensemble, q);
    *out = sl_stickiness_result{e.successes, e.n,          e.p_hat, e.ci.lower, e.ci.upper,
                                e.upper_bound_one_sided, e.verdict == stickylab::Verdict::Positive};
  });
}

sl_status sl_wilson_ci(uint64_t successes, uint64_t n, double level, double* low, double* high) {
  if (!low || !high) return null_argument("output");
  return guarded([&] {
    const auto ci = stickylab::wilson_ci(successes, n, level);
    *low = ci.lower;
    *high = ci.upper;
  });
}

}  // extern "C"
