#include "stickylab/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "stickylab/error.hpp"
#include "stickylab/format.hpp"
#include "stickylab/stopping.hpp"

namespace stickylab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_integer(double p) { return std::isfinite(p) && std::floor(p) == p; }

// Applies one non-composite stage; domain checking happens in the caller.
struct Evaluate {
  double x;
  double operator()(const ScalarMap::Identity&) const { return x; }
  double operator()(const ScalarMap::Abs&) const { return std::abs(x); }
  double operator()(const ScalarMap::Power& m) const { return std::pow(x, m.p); }
  double operator()(const ScalarMap::Exp&) const { return std::exp(x); }
  double operator()(const ScalarMap::SignedPower& m) const {
    return std::copysign(std::pow(std::abs(x), m.p), x);
  }
  double operator()(const ScalarMap::CosPiOverX&) const {
    return x == 0.0 ? 0.0 : x * std::cos(std::numbers::pi / x);
  }
  double operator()(const ScalarMap::Affine& m) const { return m.a * x + m.b; }
  double operator()(const ScalarMap::Composition& c) const {
    double y = x;
    for (const auto& s : c.stages) y = s(y);
    return y;
  }
};

std::vector<double> apply_stage(std::span<const double> in, const ScalarMap& f,
                                const std::string& stage_name) {
  if (const auto* c = std::get_if<ScalarMap::Composition>(&f.variant())) {
    std::vector<double> cur(in.begin(), in.end());
    for (std::size_t s = 0; s < c->stages.size(); ++s)
      cur = apply_stage(cur, c->stages[s], stage_name + " stage " + std::to_string(s));
    return cur;
  }
  const Domain dom = f.domain();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (!dom.contains(in[i]))
      fail(ErrorCode::DomainViolation, "value " + format_short(in[i]) + " at index " +
                                           std::to_string(i) + " lies outside the domain " +
                                           dom.to_string() + " of " + f.to_string() + " (" +
                                           stage_name + ")");
    out[i] = std::visit(Evaluate{in[i]}, f.variant());
  }
  return out;
}

}  // namespace

bool Domain::contains(double x) const noexcept {
  if (std::isnan(x)) return false;
  const bool above = lo_closed ? x >= lo : x > lo;
  const bool below = hi_closed ? x <= hi : x < hi;
  return above && below;
}

std::string Domain::to_string() const {
  return std::string(lo_closed ? "[" : "(") + format_short(lo) + ", " + format_short(hi) +
         (hi_closed ? "]" : ")");
}

ScalarMap ScalarMap::power(double p) {
  if (!std::isfinite(p)) fail(ErrorCode::InvalidArgument, "power exponent must be finite");
  return ScalarMap(Power{p});
}

ScalarMap ScalarMap::signed_power(double p) {
  if (!std::isfinite(p) || !(p > 0.0))
    fail(ErrorCode::InvalidArgument, "signed power needs a positive exponent");
  return ScalarMap(SignedPower{p});
}

ScalarMap ScalarMap::compose(std::vector<ScalarMap> stages) {
  if (stages.empty()) fail(ErrorCode::InvalidArgument, "empty map composition");
  return ScalarMap(Composition{std::move(stages)});
}

ScalarMap ScalarMap::parse(const std::string& text) {
  if (text.find('|') != std::string::npos) {
    std::vector<ScalarMap> stages;
    std::size_t begin = 0;
    for (;;) {
      const auto bar = text.find('|', begin);
      stages.push_back(parse(text.substr(begin, bar == std::string::npos ? std::string::npos
                                                                         : bar - begin)));
      if (bar == std::string::npos) break;
      begin = bar + 1;
    }
    return compose(std::move(stages));
  }
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (head == "identity") return identity();
  if (head == "abs") return abs();
  if (head == "exp") return exp();
  if (head == "cospioverx") return cos_pi_over_x();
  if (head == "power") return power(parse_double(rest, "power exponent"));
  if (head == "signedpower") return signed_power(parse_double(rest, "signed power exponent"));
  if (head == "affine") {
    const auto sep = rest.find(':');
    if (sep == std::string::npos) fail(ErrorCode::InvalidArgument, "affine needs affine:<a>:<b>");
    return affine(parse_double(rest.substr(0, sep), "affine slope"),
                  parse_double(rest.substr(sep + 1), "affine offset"));
  }
  fail(ErrorCode::InvalidArgument, "unknown map '" + text + "'");
}

std::string ScalarMap::to_string() const {
  struct {
    std::string operator()(const Identity&) const { return "identity"; }
    std::string operator()(const Abs&) const { return "abs"; }
    std::string operator()(const Power& m) const { return "power:" + format_short(m.p); }
    std::string operator()(const Exp&) const { return "exp"; }
    std::string operator()(const SignedPower& m) const {
      return "signedpower:" + format_short(m.p);
    }
    std::string operator()(const CosPiOverX&) const { return "cospioverx"; }
    std::string operator()(const Affine& m) const {
      return "affine:" + format_short(m.a) + ":" + format_short(m.b);
    }
    std::string operator()(const Composition& c) const {
      std::string s;
      for (std::size_t i = 0; i < c.stages.size(); ++i) {
        if (i) s += '|';
        s += c.stages[i].to_string();
      }
      return s;
    }
  } visitor;
  return std::visit(visitor, v_);
}

double ScalarMap::operator()(double x) const { return std::visit(Evaluate{x}, v_); }

Domain ScalarMap::domain() const {
  if (const auto* p = std::get_if<Power>(&v_)) {
    if (is_integer(p->p) && p->p >= 0.0) return Domain{};
    if (p->p > 0.0) return Domain{0.0, kInf, true, false};
    return Domain{0.0, kInf, false, false};
  }
  if (const auto* c = std::get_if<Composition>(&v_)) return c->stages.front().domain();
  return Domain{};
}

Path apply_map(const Path& path, const ScalarMap& f) {
  return Path(path.grid(), apply_stage(path.values(), f, "map"));
}

QVPath::QVPath(TimeGrid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    fail(ErrorCode::GridMismatch, "QV path length does not match its grid");
  if (values_[0] != 0.0) fail(ErrorCode::InvalidArgument, "QV path must start at 0");
  for (std::size_t i = 1; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]) || values_[i] < values_[i - 1])
      fail(ErrorCode::InvalidArgument, "QV path must be finite and nondecreasing");
  }
}

QVPath quadratic_variation(const Path& path) {
  std::vector<double> qv(path.size());
  qv[0] = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const double d = path[i + 1] - path[i];
    acc += d * d;
    qv[i + 1] = acc;
  }
  return QVPath(path.grid(), std::move(qv));
}

std::optional<double> qv_inverse(const QVPath& qv, double level) {
  if (!(level >= 0.0)) fail(ErrorCode::InvalidArgument, "QV level must be nonnegative");
  const auto v = qv.values();
  const auto it = std::upper_bound(v.begin(), v.end(), level);
  if (it == v.end()) return std::nullopt;
  const std::size_t j = static_cast<std::size_t>(it - v.begin());
  // v[0] = 0 <= level, so j >= 1 and v[j-1] <= level < v[j].
  const double t0 = qv.grid()[j - 1];
  const double t1 = qv.grid()[j];
  const double w = (level - v[j - 1]) / (v[j] - v[j - 1]);
  return t0 + w * (t1 - t0);
}

TimeChange TimeChange::identity_cap(double cap) {
  if (!std::isfinite(cap) || !(cap > 0.0))
    fail(ErrorCode::InvalidArgument, "time-change cap must be positive");
  return TimeChange(IdentityCap{cap});
}

TimeChange TimeChange::table(std::vector<double> times, std::vector<double> values) {
  if (times.size() != values.size() || times.size() < 2)
    fail(ErrorCode::InvalidArgument, "time-change table needs matching times/values, length >= 2");
  if (times[0] != 0.0 || values[0] != 0.0)
    fail(ErrorCode::InvalidArgument, "time-change table must map 0 to 0");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1]) || !(values[i] >= values[i - 1]) || !std::isfinite(values[i]))
      fail(ErrorCode::InvalidArgument, "time-change table must be increasing in time and "
                                       "nondecreasing in value");
  }
  return TimeChange(DeterministicTable{std::move(times), std::move(values)});
}

TimeChange TimeChange::qv_inverse(QVPath qv) { return TimeChange(QVInverse{std::move(qv)}); }

TimeChange TimeChange::passage_times(TimeGrid output_grid, std::vector<double> levels) {
  if (levels.size() != output_grid.size())
    fail(ErrorCode::InvalidArgument, "one passage level per output grid point is required");
  return TimeChange(PassageTimes{std::move(output_grid), std::move(levels)});
}

TimeChange TimeChange::passage_ramp(TimeGrid output_grid, double rate) {
  if (!std::isfinite(rate) || !(rate > 0.0))
    fail(ErrorCode::InvalidArgument, "passage ramp rate must be positive");
  std::vector<double> levels(output_grid.size());
  for (std::size_t k = 0; k < levels.size(); ++k) levels[k] = rate * output_grid[k];
  return passage_times(std::move(output_grid), std::move(levels));
}

TimeChangedPath time_change(const Path& path, const TimeChange& nu,
                            const std::optional<TimeGrid>& output_grid) {
  if (const auto* pt = std::get_if<TimeChange::PassageTimes>(&nu.variant())) {
    std::vector<double> out(pt->levels.size());
    for (std::size_t k = 0; k < out.size(); ++k) {
      const StopResult st = passage_time(path, pt->levels[k]);
      if (!st.stopped())
        fail(ErrorCode::RangeError, "passage to level " + format_short(pt->levels[k]) +
                                        " not attained within the grid span");
      out[k] = path[st.index()];
    }
    return {Path(pt->output_grid, std::move(out)), true};
  }

  const TimeGrid& grid = output_grid ? *output_grid : path.grid();
  auto clock = [&](double t) -> double {
    struct {
      double t;
      double operator()(const TimeChange::IdentityCap& c) const { return std::min(t, c.cap); }
      double operator()(const TimeChange::DeterministicTable& tab) const {
        if (t > tab.times.back())
          fail(ErrorCode::RangeError, "time " + format_short(t) + " beyond the time-change table");
        const auto it = std::upper_bound(tab.times.begin(), tab.times.end(), t);
        if (it == tab.times.end()) return tab.values.back();
        const std::size_t hi = static_cast<std::size_t>(it - tab.times.begin());
        const double w = (t - tab.times[hi - 1]) / (tab.times[hi] - tab.times[hi - 1]);
        return tab.values[hi - 1] + w * (tab.values[hi] - tab.values[hi - 1]);
      }
      double operator()(const TimeChange::QVInverse& q) const {
        const auto s = stickylab::qv_inverse(q.qv, t);
        if (!s)
          fail(ErrorCode::RangeError,
               "quadratic variation never exceeds " + format_short(t) + " on this path");
        return *s;
      }
      double operator()(const TimeChange::PassageTimes&) const { return 0.0; }
    } visitor{t};
    return std::visit(visitor, nu.variant());
  };

  std::vector<double> out(grid.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double s = clock(grid[k]);
    if (s > path.grid().horizon() * (1.0 + 1e-12))
      fail(ErrorCode::RangeError, "time change reaches " + format_short(s) +
                                      " beyond the path horizon " +
                                      format_short(path.grid().horizon()));
    out[k] = path.value_at(std::min(s, path.grid().horizon()));
  }
  return {Path(grid, std::move(out)), false};
}

Path dds_brownianize(const Path& path, std::size_t qv_grid_steps) {
  if (qv_grid_steps < 2) fail(ErrorCode::InvalidArgument, "QV clock needs at least two steps");
  QVPath qv = quadratic_variation(path);
  const double total = qv.terminal();
  if (!(total > 0.0)) fail(ErrorCode::DegenerateInput, "path has zero quadratic variation");
  const double du = total / static_cast<double>(qv_grid_steps);
  std::vector<double> u(qv_grid_steps);
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = static_cast<double>(k) * du;
  return time_change(path, TimeChange::qv_inverse(std::move(qv)), TimeGrid(std::move(u))).path;
}

Path drift_by_qv(const Path& path, const ScalarMap& f) {
  if (!f.domain().contains(0.0) || std::abs(f(0.0)) > 1e-12)
    fail(ErrorCode::ContractViolation, "drift map " + f.to_string() + " must vanish at 0");
  const QVPath qv = quadratic_variation(path);
  const Path drift = apply_map(Path(path.grid(), {qv.values().begin(), qv.values().end()}), f);
  std::vector<double> out(path.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = path[k] - drift[k];
  return Path(path.grid(), std::move(out));
}

namespace {

// X_t = W_{t/(1-t)} until |X| first exceeds the barrier, then unit-volatility
// Brownian increments. W runs on the quadratic-variation clock of
// int 1/(1-s) dB_s, which explodes at t = 1, so the exit is certain by then.
Path build_nonsticky(const NonStickyMartingale& spec, const TimeGrid& grid, SeedSpec seed) {
  if (!(spec.barrier > 0.0)) fail(ErrorCode::InvalidArgument, "barrier must be positive");
  if (grid.horizon() < 1.0 - 1e-12)
    fail(ErrorCode::InvalidArgument, "non-sticky martingale needs a grid horizon of at least 1");

  NormalStream clock_noise(seed, 0);
  NormalStream tail_noise(seed, 1);
  std::vector<double> x(grid.size(), 0.0);
  double clock_prev = 0.0;
  bool exited = false;
  for (std::size_t k = 1; k < x.size(); ++k) {
    const double t = grid[k];
    if (exited) {
      x[k] = x[k - 1] + std::sqrt(t - grid[k - 1]) * tail_noise.next();
      continue;
    }
    if (t < 1.0) {
      const double clock = t / (1.0 - t);
      x[k] = x[k - 1] + std::sqrt(clock - clock_prev) * clock_noise.next();
      clock_prev = clock;
      exited = std::abs(x[k]) > spec.barrier;
      continue;
    }
    // The clock is infinite at t = 1: W leaves (-b, b) from its last value w,
    // through +b with probability (w + b) / 2b.
    const double w = x[k - 1];
    const double p_up = std::clamp((w + spec.barrier) / (2.0 * spec.barrier), 0.0, 1.0);
    const double exit_value = clock_noise.uniform() < p_up ? spec.barrier : -spec.barrier;
    x[k] = exit_value + std::sqrt(t - 1.0) * tail_noise.next();
    exited = true;
  }
  return Path(grid, std::move(x));
}

Path build_cos_drift(const CosDriftExample& spec, const TimeGrid& grid, SeedSpec seed) {
  if (!(spec.hit_level > 0.0)) fail(ErrorCode::InvalidArgument, "hit level must be positive");
  const Path b = sample_brownian(grid, seed);
  const StopResult tau = evaluate_rule(StoppingRule::first_abs_exceed(spec.hit_level), b);
  const std::size_t stop = tau.stopped() ? tau.index() : b.size() - 1;

  std::vector<double> stopped(b.size());
  for (std::size_t j = 0; j < stopped.size(); ++j) stopped[j] = b[std::min(j, stop)];
  const Path integrand(grid, stopped);
  const Path ito = integrate_ito(integrand, b);

  // Trapezoidal int_0^t B_{s^tau}^2 ds.
  std::vector<double> area(b.size(), 0.0);
  for (std::size_t j = 0; j + 1 < area.size(); ++j) {
    const double dt = grid[j + 1] - grid[j];
    area[j + 1] = area[j] + 0.5 * dt * (stopped[j] * stopped[j] + stopped[j + 1] * stopped[j + 1]);
  }
  const ScalarMap h = ScalarMap::cos_pi_over_x();
  std::vector<double> x(b.size());
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = ito[j] - h(area[j]);
  return Path(grid, std::move(x));
}

}  // namespace

Path build_example(const ExampleSpec& spec, const TimeGrid& grid, SeedSpec seed) {
  struct {
    const TimeGrid& grid;
    SeedSpec seed;
    Path operator()(const NonStickyMartingale& s) const { return build_nonsticky(s, grid, seed); }
    Path operator()(const AbsCubeRootOfMartingale& s) const {
      const Path base = sample_path(s.base, grid, seed);
      return apply_map(base,
                       ScalarMap::compose({ScalarMap::abs(), ScalarMap::signed_power(1.0 / 3.0)}));
    }
    Path operator()(const CosDriftExample& s) const { return build_cos_drift(s, grid, seed); }
  } visitor{grid, seed};
  return std::visit(visitor, spec);
}

ProcessSpec example_process(ExampleSpec spec) {
  struct {
    std::string operator()(const NonStickyMartingale&) const { return "nonsticky-martingale"; }
    std::string operator()(const AbsCubeRootOfMartingale&) const { return "abs-cuberoot"; }
    std::string operator()(const CosDriftExample&) const { return "cos-drift"; }
  } namer;
  std::string label = std::visit(namer, spec);
  return DerivedProcess{std::move(label), [spec = std::move(spec)](const TimeGrid& g, SeedSpec s) {
                          return build_example(spec, g, s);
                        }};
}

ProcessSpec mapped_process(ProcessSpec base, ScalarMap f, std::string label) {
  return DerivedProcess{std::move(label), [base = std::move(base), f = std::move(f)](
                                              const TimeGrid& g, SeedSpec s) {
                          return apply_map(sample_path(base, g, s), f);
                        }};
}

ProcessSpec time_changed_process(ProcessSpec base, double cap, std::string label) {
  TimeChange nu = TimeChange::identity_cap(cap);
  return DerivedProcess{std::move(label), [base = std::move(base), nu = std::move(nu)](
                                              const TimeGrid& g, SeedSpec s) {
                          return time_change(sample_path(base, g, s), nu).path;
                        }};
}

ProcessSpec qv_drifted_process(ProcessSpec base, ScalarMap f, std::string label) {
  if (!f.domain().contains(0.0) || std::abs(f(0.0)) > 1e-12)
    fail(ErrorCode::ContractViolation, "drift map " + f.to_string() + " must vanish at 0");
  return DerivedProcess{std::move(label), [base = std::move(base), f = std::move(f)](
                                              const TimeGrid& g, SeedSpec s) {
                          return drift_by_qv(sample_path(base, g, s), f);
                        }};
}

ProcessSpec passage_ramp_process(double source_horizon, std::size_t source_steps, double rate,
                                 std::size_t max_redraws) {
  if (!(rate > 0.0)) fail(ErrorCode::InvalidArgument, "passage ramp rate must be positive");
  const TimeGrid source = make_uniform_grid(source_horizon, source_steps);
  return DerivedProcess{
      "passage-ramp", [source, rate, max_redraws](const TimeGrid& g, SeedSpec s) {
        const TimeChange nu = TimeChange::passage_ramp(g, rate);
        const double top = rate * g.horizon();
        for (std::size_t r = 0; r <= max_redraws; ++r) {
          const Path b = sample_brownian(source, s, 1.0, static_cast<std::uint32_t>(r));
          const auto v = b.values();
          if (*std::max_element(v.begin(), v.end()) < top) continue;
          return time_change(b, nu).path;
        }
        fail(ErrorCode::NumericalFailure,
             "Brownian source never reached level " + format_short(top) + " after redraws");
      }};
}

}  // namespace stickylab
