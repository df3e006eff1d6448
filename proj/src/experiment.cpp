#include "stickylab/experiment.hpp"

#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "stickylab/error.hpp"
#include "stickylab/format.hpp"
#include "stickylab/market.hpp"
#include "stickylab/parallel.hpp"
#include "stickylab/stickiness.hpp"
#include "stickylab/stopping.hpp"
#include "stickylab/transforms.hpp"

namespace stickylab {

using nlohmann::json;

namespace {

const std::set<std::string> kProcessNames = {
    "bm",        "fbm",       "nonsticky-martingale", "abs-cuberoot", "cos-drift",
    "timechange-cap", "qv-drift", "mapped",          "passage-ramp"};

[[noreturn]] void config_error(const std::string& what) { fail(ErrorCode::ConfigError, what); }

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  if (!obj.is_object()) config_error(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) config_error("unknown key '" + key + "' in " + where);
  }
}

double get_number(const json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) config_error(where + "." + key + " must be a number");
  return v.get<double>();
}

std::size_t get_count(const json& obj, const char* key, std::size_t fallback,
                      const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() <= 0)
    config_error(where + "." + key + " must be a positive integer");
  return v.get<std::size_t>();
}

std::string get_string(const json& obj, const char* key, const std::string& fallback,
                       const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) config_error(where + "." + key + " must be a string");
  return v.get<std::string>();
}

// A scalar or an array of numbers.
std::vector<double> get_numbers(const json& obj, const char* key, std::vector<double> fallback,
                                const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) config_error(where + "." + key + " must be a number or list");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) config_error(where + "." + key + " must contain numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<std::string> get_strings(const json& obj, const char* key,
                                     std::vector<std::string> fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array() || v.empty()) config_error(where + "." + key + " must be a string or list");
  std::vector<std::string> out;
  for (const auto& x : v) {
    if (!x.is_string()) config_error(where + "." + key + " must contain strings");
    out.push_back(x.get<std::string>());
  }
  return out;
}

ProcessConfig process_from_json(const json& j, const std::string& where) {
  reject_unknown_keys(j, {"name", "sigma", "hurst", "barrier", "hit_level", "cap", "map",
                          "source_horizon", "source_steps", "rate", "base"},
                      where);
  ProcessConfig p;
  p.name = get_string(j, "name", p.name, where);
  if (!kProcessNames.count(p.name)) config_error("unknown process '" + p.name + "'");
  p.sigma = get_number(j, "sigma", p.sigma, where);
  p.hurst = get_number(j, "hurst", p.hurst, where);
  p.barrier = get_number(j, "barrier", p.barrier, where);
  p.hit_level = get_number(j, "hit_level", p.hit_level, where);
  p.cap = get_number(j, "cap", p.cap, where);
  p.map = get_string(j, "map", p.map, where);
  p.source_horizon = get_number(j, "source_horizon", p.source_horizon, where);
  p.source_steps = get_count(j, "source_steps", p.source_steps, where);
  p.rate = get_number(j, "rate", p.rate, where);
  if (j.contains("base") && !j.at("base").is_null())
    p.base.push_back(process_from_json(j.at("base"), where + ".base"));
  return p;
}

json process_to_json(const ProcessConfig& p) {
  json j = {{"name", p.name},           {"sigma", p.sigma},
            {"hurst", p.hurst},         {"barrier", p.barrier},
            {"hit_level", p.hit_level}, {"cap", p.cap},
            {"map", p.map},             {"source_horizon", p.source_horizon},
            {"source_steps", p.source_steps}, {"rate", p.rate}};
  j["base"] = p.base.empty() ? json(nullptr) : process_to_json(p.base.front());
  return j;
}

ExperimentKind parse_kind(const std::string& text) {
  if (text == "generate") return ExperimentKind::Generate;
  if (text == "stickiness") return ExperimentKind::Stickiness;
  if (text == "ladder") return ExperimentKind::Ladder;
  if (text == "portfolio") return ExperimentKind::Portfolio;
  if (text == "dds") return ExperimentKind::Dds;
  config_error("unknown experiment kind '" + text + "'");
}

ExperimentSpec experiment_from_json(const json& j) {
  const std::string where = "experiment";
  reject_unknown_keys(j, {"kind", "tau", "event", "epsilon", "T", "characterization",
                          "confidence", "delta", "ladder", "strategy", "k", "price", "control",
                          "admissibility_floor", "tol", "qv_grid_steps"},
                      where);
  ExperimentSpec e;
  e.kind = parse_kind(get_string(j, "kind", to_string(e.kind), where));
  e.tau = get_strings(j, "tau", e.tau, where);
  e.event = get_string(j, "event", e.event, where);
  e.epsilon = get_numbers(j, "epsilon", e.epsilon, where);
  e.T = get_number(j, "T", e.T, where);
  e.characterization = get_string(j, "characterization", e.characterization, where);
  e.confidence = get_number(j, "confidence", e.confidence, where);
  e.delta = get_number(j, "delta", e.delta, where);
  e.ladder = get_numbers(j, "ladder", e.ladder, where);
  e.strategy = get_string(j, "strategy", e.strategy, where);
  e.k = get_numbers(j, "k", e.k, where);
  e.price = get_string(j, "price", e.price, where);
  if (j.contains("control")) {
    if (!j.at("control").is_boolean()) config_error("experiment.control must be a boolean");
    e.control = j.at("control").get<bool>();
  }
  e.admissibility_floor = get_number(j, "admissibility_floor", e.admissibility_floor, where);
  e.tol = get_number(j, "tol", e.tol, where);
  e.qv_grid_steps = get_count(j, "qv_grid_steps", e.qv_grid_steps, where);
  return e;
}

json experiment_to_json(const ExperimentSpec& e) {
  return json{{"kind", to_string(e.kind)},
              {"tau", e.tau},
              {"event", e.event},
              {"epsilon", e.epsilon},
              {"T", e.T},
              {"characterization", e.characterization},
              {"confidence", e.confidence},
              {"delta", e.delta},
              {"ladder", e.ladder},
              {"strategy", e.strategy},
              {"k", e.k},
              {"price", e.price},
              {"control", e.control},
              {"admissibility_floor", e.admissibility_floor},
              {"tol", e.tol},
              {"qv_grid_steps", e.qv_grid_steps}};
}

json config_to_json(const ExperimentConfig& c, bool with_runtime) {
  json j = {{"name", c.name},
            {"process", process_to_json(c.process)},
            {"grid", {{"horizon", c.grid.horizon}, {"steps", c.grid.steps}}},
            {"experiment", experiment_to_json(c.experiment)},
            {"seed", c.seed},
            {"paths", c.paths}};
  if (with_runtime) {
    j["output"] = c.output;
    if (c.threads) j["threads"] = *c.threads;
  }
  return j;
}

struct MomentumSpec {
  bool momentum = true;
  double threshold = 0.1;
  double unit = 1.0;
};

MomentumSpec parse_strategy(const std::string& text) {
  MomentumSpec s;
  const auto fields = [&] {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ':')) out.push_back(part);
    return out;
  }();
  try {
    if (fields.size() == 3 && fields[0] == "momentum") {
      s.threshold = parse_double(fields[1], "momentum threshold");
      s.unit = parse_double(fields[2], "momentum unit");
      if (!(s.threshold > 0.0) || !(s.unit > 0.0)) config_error("momentum needs positive parameters");
      return s;
    }
    if (fields.size() == 2 && fields[0] == "buyhold") {
      s.momentum = false;
      s.unit = parse_double(fields[1], "buy-and-hold unit");
      return s;
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    config_error(e.what());
  }
  config_error("unknown strategy '" + text + "' (momentum:<threshold>:<unit> or buyhold:<unit>)");
}

std::vector<StoppingRule> parse_rules(const std::vector<std::string>& texts) {
  std::vector<StoppingRule> out;
  for (const auto& t : texts) out.push_back(StoppingRule::parse(t));
  return out;
}

// Checks every name and syntax the run will need so that misconfiguration
// surfaces as a configuration error before any sampling.
void validate_config(const ExperimentConfig& c) {
  try {
    build_process(c.process);
    const ExperimentSpec& e = c.experiment;
    parse_rules(e.tau);
    EventDescriptor::parse(e.event);
    if (e.characterization != "all") parse_characterization(e.characterization);
    parse_strategy(e.strategy);
    if (e.price != "exp" && e.price != "raw") config_error("price must be exp or raw");
  } catch (const Error& err) {
    if (err.code() == ErrorCode::ConfigError) throw;
    config_error(err.what());
  }
  if (!(c.grid.horizon > 0.0) || !std::isfinite(c.grid.horizon))
    config_error("grid.horizon must be positive");
  if (c.grid.steps == 0) config_error("grid.steps must be positive");
  if (c.paths == 0) config_error("paths must be positive");
  if (c.experiment.epsilon.empty()) config_error("experiment.epsilon must not be empty");
  if (c.experiment.k.empty()) config_error("experiment.k must not be empty");
  if (c.threads && *c.threads == 0) config_error("threads must be positive");
}

ExperimentConfig config_from_json(const json& j) {
  reject_unknown_keys(j, {"name", "process", "grid", "experiment", "seed", "paths", "output",
                          "threads"},
                      "config");
  ExperimentConfig c;
  c.name = get_string(j, "name", c.name, "config");
  if (j.contains("process")) c.process = process_from_json(j.at("process"), "process");
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    reject_unknown_keys(g, {"horizon", "steps"}, "grid");
    c.grid.horizon = get_number(g, "horizon", c.grid.horizon, "grid");
    c.grid.steps = get_count(g, "steps", c.grid.steps, "grid");
  }
  if (j.contains("experiment")) c.experiment = experiment_from_json(j.at("experiment"));
  if (j.contains("seed")) {
    const json& s = j.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
      config_error("seed must be a nonnegative integer");
    c.seed = s.get<std::uint64_t>();
  }
  c.paths = get_count(j, "paths", c.paths, "config");
  c.output = get_string(j, "output", c.output, "config");
  if (j.contains("threads")) c.threads = get_count(j, "threads", 1, "config");
  validate_config(c);
  return c;
}

json parse_json_text(std::string_view text) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos)
    config_error("configuration is empty");
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    config_error(std::string("configuration is not valid JSON: ") + e.what());
  }
}

std::string hurst_text(const ProcessConfig& p) {
  const auto h = p.hurst_parameter();
  return h ? format_short(*h) : std::string("NA");
}

class WorkerScope {
 public:
  explicit WorkerScope(std::optional<std::size_t> n) : active_(n.has_value()) {
    if (active_) set_worker_count(*n);
  }
  ~WorkerScope() {
    if (active_) set_worker_count(0);
  }
  WorkerScope(const WorkerScope&) = delete;
  WorkerScope& operator=(const WorkerScope&) = delete;

 private:
  bool active_;
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::uint64_t u64(std::size_t v) { return static_cast<std::uint64_t>(v); }

StickinessQuery make_query(const ExperimentSpec& e, const StoppingRule& tau, double eps,
                           Characterization c) {
  StickinessQuery q;
  q.tau = tau;
  q.horizon = e.T;
  q.epsilon = eps;
  q.event = EventDescriptor::parse(e.event);
  q.characterization = c;
  q.delta = e.delta > 0.0 ? e.delta : eps;
  q.ladder = e.ladder.empty() ? std::vector<double>{e.T} : e.ladder;
  q.confidence = e.confidence;
  return q;
}

void run_stickiness(const ExperimentConfig& c, const Ensemble& ens, ResultTable& table) {
  const ExperimentSpec& e = c.experiment;
  const bool cross = e.characterization == "all";
  const std::vector<Characterization> forms =
      cross ? std::vector<Characterization>{Characterization::DefA, Characterization::PropB,
                                            Characterization::PropC}
            : std::vector<Characterization>{parse_characterization(e.characterization)};
  std::vector<StickinessQuery> queries;
  for (const auto& tau : parse_rules(e.tau))
    for (double eps : e.epsilon)
      for (auto form : forms) queries.push_back(make_query(e, tau, eps, form));
  for (const auto& q : queries) validate_query(q, ens.grid());

  const auto hits = ens.map<std::vector<char>>([&](const Path& p, std::size_t) {
    std::vector<char> h(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) h[i] = stickiness_success(p, queries[i]);
    return h;
  });
  std::vector<std::size_t> counts(queries.size(), 0);
  for (const auto& h : hits)
    for (std::size_t i = 0; i < h.size(); ++i) counts[i] += static_cast<std::size_t>(h[i]);

  table.columns = {"process", "H",  "tau_rule", "event", "epsilon", "T",    "n",
                   "successes", "p_hat", "ci_low", "ci_high", "seed", "steps", "verdict"};
  if (cross) {
    table.columns.push_back("characterization");
    table.columns.push_back("agree");
  }
  const std::string h = hurst_text(c.process);
  for (std::size_t cell = 0; cell < queries.size(); cell += forms.size()) {
    std::vector<StickinessEstimate> est;
    for (std::size_t f = 0; f < forms.size(); ++f)
      est.push_back(summarise_successes(counts[cell + f], ens.size(), queries[cell + f]));
    bool agree = true;
    for (const auto& x : est) agree = agree && x.verdict == est.front().verdict;
    for (const auto& x : est) {
      std::vector<Cell> row = {ens.label(),
                               h,
                               x.query.tau.to_string(),
                               x.query.event.to_string(),
                               x.query.epsilon,
                               x.query.horizon,
                               u64(x.n),
                               u64(x.successes),
                               x.p_hat,
                               x.ci.lower,
                               x.ci.upper,
                               c.seed,
                               u64(ens.grid().steps()),
                               std::string(to_string(x.verdict))};
      if (cross) {
        row.emplace_back(std::string(to_string(x.query.characterization)));
        row.emplace_back(std::string(agree ? "yes" : "no"));
      }
      table.rows.push_back(std::move(row));
    }
  }
  table.provenance.emplace_back("verdict_convention", kVerdictConvention);
}

void run_ladder(const ExperimentConfig& c, const Ensemble& ens, ResultTable& table) {
  const ExperimentSpec& e = c.experiment;
  const double delta = e.delta > 0.0 ? e.delta : e.epsilon.front();
  const std::vector<double> horizons = e.ladder.empty() ? std::vector<double>{e.T} : e.ladder;
  table.columns = {"process", "tau_rule", "delta", "horizon", "fraction", "n", "seed", "steps"};
  for (const auto& tau : parse_rules(e.tau)) {
    const auto fractions = survival_ladder(ens, tau, delta, horizons);
    for (std::size_t i = 0; i < horizons.size(); ++i) {
      table.rows.push_back({ens.label(), tau.to_string(), delta, horizons[i], fractions[i],
                            u64(ens.size()), c.seed, u64(ens.grid().steps())});
    }
  }
}

void run_portfolio(const ExperimentConfig& c, const Ensemble& ens, ResultTable& table) {
  const ExperimentSpec& e = c.experiment;
  const MomentumSpec strat = parse_strategy(e.strategy);
  const PriceMode mode = e.price == "raw" ? PriceMode::Raw : PriceMode::Exp;
  for (double k : e.k) validate(CostModel{k, e.admissibility_floor});
  if (e.T < 0.0 || e.T > ens.grid().horizon() * (1.0 + 1e-12))
    fail(ErrorCode::InvalidArgument, "portfolio horizon T outside the grid span");
  const std::size_t iT = ens.grid().index_at_or_before(e.T);

  const auto terminal_values = [&](const Ensemble& source, const std::vector<double>& ks) {
    const auto per_path = source.map<std::vector<double>>([&](const Path& p, std::size_t) {
      const Path price = asset_price(p, mode);
      const Strategy theta = strat.momentum
                                 ? momentum_strategy(price, strat.threshold, strat.unit)
                                 : buy_and_hold(strat.unit);
      std::vector<double> v;
      for (double k : ks)
        v.push_back(liquidation_value(theta, price, CostModel{k, e.admissibility_floor}).value[iT]);
      return v;
    });
    std::vector<std::vector<double>> by_k(ks.size(), std::vector<double>(per_path.size()));
    for (std::size_t i = 0; i < per_path.size(); ++i)
      for (std::size_t j = 0; j < ks.size(); ++j) by_k[j][i] = per_path[i][j];
    return by_k;
  };

  table.columns = {"strategy", "k",      "n",      "frac_nonneg", "frac_pos",
                   "mean_VT",  "std_VT", "min_VT", "flag",        "seed"};
  const auto add_row = [&](const std::string& label, double k, const std::vector<double>& v) {
    const ArbitrageStats s = arbitrage_stats_from_values(v, e.tol);
    table.rows.push_back({label, k, u64(s.n), s.frac_nonnegative, s.frac_strictly_positive,
                          s.mean_terminal, s.std_terminal, s.min_terminal,
                          std::string(s.empirical_arbitrage ? "arbitrage" : "none"), c.seed});
  };
  const auto values = terminal_values(ens, e.k);
  for (std::size_t j = 0; j < e.k.size(); ++j) add_row(e.strategy, e.k[j], values[j]);
  if (e.control) {
    const Ensemble shuffled = shuffle_increments_across_paths(ens, c.seed ^ 0x9e3779b97f4a7c15ULL);
    const auto control = terminal_values(shuffled, {e.k.front()});
    add_row(e.strategy + "/shuffled-control", e.k.front(), control.front());
  }
  table.provenance.emplace_back("arbitrage_flag",
                                "finite-sample surrogate: all V_T >= -tol and some V_T > tol");
}

void run_dds(const ExperimentConfig& c, const Ensemble& ens, ResultTable& table) {
  const std::size_t m = c.experiment.qv_grid_steps;
  struct PathStats {
    double du, var, ratio, qv_unit;
  };
  const auto stats = ens.map<PathStats>([&](const Path& p, std::size_t) {
    const Path out = dds_brownianize(p, m);
    const double du = out.time(1);
    if (out.grid().horizon() < 1.0)
      fail(ErrorCode::RangeError, "quadratic-variation clock does not reach 1");
    const std::size_t nu = out.size() - 1;
    double mean = 0.0;
    for (std::size_t j = 0; j < nu; ++j) mean += out[j + 1] - out[j];
    mean /= static_cast<double>(nu);
    double ss = 0.0, qv = 0.0;
    const std::size_t i_unit = out.grid().index_at_or_before(1.0);
    for (std::size_t j = 0; j < nu; ++j) {
      const double d = out[j + 1] - out[j];
      ss += (d - mean) * (d - mean);
      if (j + 1 <= i_unit) qv += d * d;
    }
    const double var = ss / static_cast<double>(nu - 1);
    return PathStats{du, var, var / du, qv};
  });
  double du = 0.0, var = 0.0, ratio = 0.0, qv = 0.0;
  for (const auto& s : stats) {
    du += s.du;
    var += s.var;
    ratio += s.ratio;
    qv += s.qv_unit;
  }
  const double n = static_cast<double>(stats.size());
  table.columns = {"process", "sigma",           "n",         "steps",        "qv_grid_steps",
                   "du",      "mean_increment_var", "rel_error", "mean_qv_unit", "seed"};
  table.rows.push_back({ens.label(), c.process.sigma, u64(ens.size()), u64(ens.grid().steps()),
                        u64(m), du / n, var / n, std::abs(ratio / n - 1.0), qv / n, c.seed});
  table.provenance.emplace_back(
      "dds_columns", "du and mean_increment_var are ensemble means; rel_error = |mean(var/du) - 1|");
}

void run_generate(const ExperimentConfig&, const Ensemble& ens, ResultTable& table) {
  const auto values = ens.map<std::vector<double>>([](const Path& p, std::size_t) {
    return std::vector<double>(p.values().begin(), p.values().end());
  });
  table.columns = {"t"};
  for (std::size_t i = 0; i < ens.size(); ++i) table.columns.push_back("x_" + std::to_string(i));
  for (std::size_t k = 0; k < ens.grid().size(); ++k) {
    std::vector<Cell> row = {ens.grid()[k]};
    for (const auto& v : values) row.emplace_back(v[k]);
    table.rows.push_back(std::move(row));
  }
}

bool needs_quoting(const std::string& s) {
  return s.find_first_of(",\"\n\r") != std::string::npos;
}

std::string quote(const std::string& s) {
  if (!needs_quoting(s)) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

Cell parse_cell(const std::string& text) {
  if (!text.empty() && std::all_of(text.begin(), text.end(), [](char ch) {
        return ch >= '0' && ch <= '9';
      })) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec == std::errc() && ptr == text.data() + text.size()) return v;
  }
  double d = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), d);
  if (!text.empty() && ec == std::errc() && ptr == text.data() + text.size()) return d;
  return text;
}

double numeric(const Cell& cell, std::string_view column) {
  if (const auto* d = std::get_if<double>(&cell)) return *d;
  if (const auto* u = std::get_if<std::uint64_t>(&cell)) return static_cast<double>(*u);
  config_error("column '" + std::string(column) + "' is not numeric");
}

template <class Writer>
void write_destination(const std::string& destination, Writer&& writer) {
  if (destination == "-") {
    writer(std::cout);
    std::cout.flush();
    if (!std::cout) fail(ErrorCode::IoError, "failed writing to stdout");
    return;
  }
  namespace fs = std::filesystem;
  const fs::path target(destination);
  const fs::path tmp = target.string() + ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot open '" + tmp.string() + "' for writing");
    writer(out);
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      fail(ErrorCode::IoError, "failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    std::error_code ignore;
    fs::remove(tmp, ignore);
    fail(ErrorCode::IoError, "cannot move output into place at '" + destination + "': " +
                                 ec.message());
  }
}

}  // namespace

std::optional<double> ProcessConfig::hurst_parameter() const {
  if (name == "fbm") return hurst;
  if (!base.empty()) return base.front().hurst_parameter();
  return std::nullopt;
}

const char* to_string(ExperimentKind kind) noexcept {
  switch (kind) {
    case ExperimentKind::Generate: return "generate";
    case ExperimentKind::Stickiness: return "stickiness";
    case ExperimentKind::Ladder: return "ladder";
    case ExperimentKind::Portfolio: return "portfolio";
    case ExperimentKind::Dds: return "dds";
  }
  return "?";
}

ExperimentConfig parse_config(std::string_view json_text) {
  json j = parse_json_text(json_text);
  if (!j.is_object()) config_error("configuration must be a JSON object");
  if (j.contains("experiment") && j.at("experiment").is_string()) {
    const std::string preset = j.at("experiment").get<std::string>();
    json base = config_to_json(preset_config(preset), false);
    j.erase("experiment");
    base.merge_patch(j);
    return config_from_json(base);
  }
  return config_from_json(j);
}

ProcessConfig parse_process(std::string_view json_text) {
  const json j = parse_json_text(json_text);
  ProcessConfig p = process_from_json(j, "process");
  try {
    build_process(p);
  } catch (const Error& err) {
    if (err.code() == ErrorCode::ConfigError) throw;
    config_error(err.what());
  }
  return p;
}

std::string to_json(const ExperimentConfig& config) {
  return config_to_json(config, true).dump(2);
}

std::vector<std::string> preset_names() {
  return {"paper-nonsticky", "fbm-sticky",  "timechange-cap", "passage-counterexample",
          "dds-check",       "cos-drift",   "abs-cuberoot",   "costs-fbm-momentum"};
}

ExperimentConfig preset_config(std::string_view name) {
  ExperimentConfig c;
  c.name = std::string(name);
  c.seed = 42;
  c.paths = 10000;
  c.grid = GridConfig{1.0, 1024};
  ExperimentSpec& e = c.experiment;
  if (name == "paper-nonsticky") {
    c.process.name = "nonsticky-martingale";
    e.tau = {"det:0"};
    e.epsilon = {1.0};
    e.T = 1.0;
  } else if (name == "fbm-sticky") {
    c.process.name = "fbm";
    c.process.hurst = 0.75;
    e.tau = {"det:0", "hit:0.1"};
    e.epsilon = {0.5};
  } else if (name == "timechange-cap") {
    c.process.name = "timechange-cap";
    c.process.cap = 0.5;
    ProcessConfig base;
    base.name = "fbm";
    base.hurst = 0.75;
    c.process.base = {base};
    e.tau = {"det:0", "hit:0.1"};
    e.epsilon = {0.25, 0.5};
  } else if (name == "passage-counterexample") {
    c.process.name = "passage-ramp";
    e.tau = {"det:0"};
    e.epsilon = {0.25};
    e.T = 0.5;
  } else if (name == "dds-check") {
    c.process.name = "bm";
    c.process.sigma = 2.0;
    c.paths = 1000;
    c.grid.steps = 16384;
    e.kind = ExperimentKind::Dds;
    e.qv_grid_steps = 256;
  } else if (name == "cos-drift") {
    c.process.name = "cos-drift";
    e.tau = {"det:0", "hit:0.1"};
    e.epsilon = {0.5};
  } else if (name == "abs-cuberoot") {
    c.process.name = "abs-cuberoot";
    c.process.base = {ProcessConfig{}};
    e.tau = {"det:0.5"};
    e.epsilon = {0.5};
  } else if (name == "costs-fbm-momentum") {
    c.process.name = "fbm";
    c.process.hurst = 0.75;
    e.kind = ExperimentKind::Portfolio;
    e.strategy = "momentum:0.1:1";
    e.k = {0.0, 0.01};
    e.price = "exp";
    e.control = true;
  } else {
    config_error("unknown preset '" + std::string(name) + "'");
  }
  validate_config(c);
  return c;
}

ProcessSpec build_process(const ProcessConfig& p) {
  const auto base = [&]() -> ProcessSpec {
    return p.base.empty() ? ProcessSpec(BrownianMotion{1.0}) : build_process(p.base.front());
  };
  const auto base_label = [&] {
    return p.base.empty() ? std::string("bm") : process_label(build_process(p.base.front()));
  };
  if (p.name == "bm") {
    if (!(p.sigma > 0.0)) fail(ErrorCode::InvalidArgument, "sigma must be positive");
    return BrownianMotion{p.sigma};
  }
  if (p.name == "fbm") {
    if (!(p.hurst > 0.0 && p.hurst < 1.0))
      fail(ErrorCode::InvalidArgument, "hurst must lie in (0, 1)");
    return FractionalBrownianMotion{p.hurst};
  }
  if (p.name == "nonsticky-martingale") return example_process(NonStickyMartingale{p.barrier});
  if (p.name == "abs-cuberoot") return example_process(AbsCubeRootOfMartingale{base()});
  if (p.name == "cos-drift") return example_process(CosDriftExample{p.hit_level});
  if (p.name == "timechange-cap")
    return time_changed_process(base(), p.cap,
                                "timechange-cap(" + base_label() + "," + format_short(p.cap) + ")");
  if (p.name == "qv-drift") {
    const ScalarMap f = ScalarMap::parse(p.map);
    return qv_drifted_process(base(), f, "qv-drift(" + base_label() + "," + f.to_string() + ")");
  }
  if (p.name == "mapped") {
    const ScalarMap f = ScalarMap::parse(p.map);
    return mapped_process(base(), f, "mapped(" + base_label() + "," + f.to_string() + ")");
  }
  if (p.name == "passage-ramp") {
    if (!(p.source_horizon > 0.0))
      fail(ErrorCode::InvalidArgument, "source_horizon must be positive");
    return passage_ramp_process(p.source_horizon, p.source_steps, p.rate);
  }
  config_error("unknown process '" + p.name + "'");
}

std::string cell_text(const Cell& cell) {
  if (const auto* s = std::get_if<std::string>(&cell)) return *s;
  if (const auto* d = std::get_if<double>(&cell)) return format_17g(*d);
  return std::to_string(std::get<std::uint64_t>(cell));
}

std::size_t ResultTable::column_index(std::string_view name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) config_error("no column named '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = config_to_json(config, false).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ResultTable run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  WorkerScope workers(config.threads);
  const TimeGrid grid = make_uniform_grid(config.grid.horizon, config.grid.steps);
  const Ensemble ens =
      Ensemble::lazy(build_process(config.process), grid, config.seed, config.paths);

  ResultTable table;
  table.provenance = {{"experiment", config.name},
                      {"kind", to_string(config.experiment.kind)},
                      {"config_hash", config_hash(config)},
                      {"seed", std::to_string(config.seed)},
                      {"version", kVersion}};
  switch (config.experiment.kind) {
    case ExperimentKind::Generate: run_generate(config, ens, table); break;
    case ExperimentKind::Stickiness: run_stickiness(config, ens, table); break;
    case ExperimentKind::Ladder: run_ladder(config, ens, table); break;
    case ExperimentKind::Portfolio: run_portfolio(config, ens, table); break;
    case ExperimentKind::Dds: run_dds(config, ens, table); break;
  }
  table.provenance.emplace_back("generated", utc_timestamp());
  return table;
}

void write_csv(std::ostream& out, const ResultTable& table) {
  for (const auto& [key, value] : table.provenance) out << "# " << key << '=' << value << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i)
    out << (i ? "," : "") << quote(table.columns[i]);
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << quote(cell_text(row[i]));
    out << '\n';
  }
}

void emit_csv(const ResultTable& table, const std::string& destination) {
  write_destination(destination, [&](std::ostream& out) { write_csv(out, table); });
}

ResultTable read_csv(std::istream& in) {
  ResultTable table;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header && line.rfind("#", 0) == 0) {
      std::string body = line.substr(1);
      if (!body.empty() && body.front() == ' ') body.erase(0, 1);
      const auto eq = body.find('=');
      table.provenance.emplace_back(body.substr(0, eq),
                                    eq == std::string::npos ? "" : body.substr(eq + 1));
      continue;
    }
    if (!header) {
      table.columns = split_csv_line(line);
      header = true;
      continue;
    }
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != table.columns.size())
      fail(ErrorCode::IoError, "CSV row has " + std::to_string(fields.size()) + " fields, header has " +
                                   std::to_string(table.columns.size()));
    std::vector<Cell> row;
    for (const auto& f : fields) row.push_back(parse_cell(f));
    table.rows.push_back(std::move(row));
  }
  if (!header) fail(ErrorCode::IoError, "CSV input has no header");
  return table;
}

ResultTable plot_table(const ResultTable& table, std::string_view x_column,
                       std::string_view y_column) {
  const std::size_t xi = table.column_index(x_column);
  const std::size_t yi = table.column_index(y_column);
  std::vector<std::pair<double, double>> points;
  for (const auto& row : table.rows)
    points.emplace_back(numeric(row[xi], x_column), numeric(row[yi], y_column));
  std::stable_sort(points.begin(), points.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  ResultTable out;
  out.columns = {std::string(x_column), std::string(y_column)};
  out.provenance = table.provenance;
  for (const auto& [x, y] : points) out.rows.push_back({x, y});
  return out;
}

void emit_plot_data(const ResultTable& table, std::string_view x_column,
                    std::string_view y_column, const std::string& destination) {
  const ResultTable series = plot_table(table, x_column, y_column);
  emit_csv(series, destination);
}

}  // namespace stickylab
