#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "stickylab/pathgen.hpp"

namespace stickylab {

// Interval of the real line; bounds may be infinite.
struct Domain {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool lo_closed = false;
  bool hi_closed = false;

  bool contains(double x) const noexcept;
  std::string to_string() const;
};

// Continuous maps that can be pushed through a path pointwise.
class ScalarMap {
 public:
  struct Identity {};
  struct Abs {};
  struct Power { double p; };
  struct Exp {};
  struct SignedPower { double p; };  // sign(x) |x|^p, p > 0
  struct CosPiOverX {};              // x cos(pi / x), 0 at 0
  struct Affine { double a; double b; };
  struct Composition { std::vector<ScalarMap> stages; };  // applied left to right

  using Variant =
      std::variant<Identity, Abs, Power, Exp, SignedPower, CosPiOverX, Affine, Composition>;

  static ScalarMap identity() { return ScalarMap(Identity{}); }
  static ScalarMap abs() { return ScalarMap(Abs{}); }
  static ScalarMap power(double p);
  static ScalarMap exp() { return ScalarMap(Exp{}); }
  static ScalarMap signed_power(double p);
  static ScalarMap cos_pi_over_x() { return ScalarMap(CosPiOverX{}); }
  static ScalarMap affine(double a, double b) { return ScalarMap(Affine{a, b}); }
  static ScalarMap compose(std::vector<ScalarMap> stages);

  // identity, abs, exp, cospioverx, power:<p>, signedpower:<p>, affine:<a>:<b>;
  // stages of a composition joined with '|'.
  static ScalarMap parse(const std::string& text);
  std::string to_string() const;

  double operator()(double x) const;
  // Domain of the (first stage of the) map.
  Domain domain() const;
  const Variant& variant() const noexcept { return v_; }

 private:
  explicit ScalarMap(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

Path apply_map(const Path& path, const ScalarMap& f);

// Discrete quadratic variation: nondecreasing, starts at 0.
class QVPath {
 public:
  QVPath(TimeGrid grid, std::vector<double> values);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  double terminal() const noexcept { return values_.back(); }

 private:
  TimeGrid grid_;
  std::vector<double> values_;
};

QVPath quadratic_variation(const Path& path);

// inf{s : qv(s) > level} on the piecewise-linear interpolant of qv, or
// nullopt when the terminal value does not exceed level.
std::optional<double> qv_inverse(const QVPath& qv, double level);

class TimeChange {
 public:
  struct IdentityCap { double cap; };
  // Monotone table (times, values) interpolated linearly, values[0] = 0 at time 0.
  struct DeterministicTable { std::vector<double> times; std::vector<double> values; };
  struct QVInverse { QVPath qv; };
  // Passage times of the source path to levels[k], reported on output_grid.
  struct PassageTimes { TimeGrid output_grid; std::vector<double> levels; };

  using Variant = std::variant<IdentityCap, DeterministicTable, QVInverse, PassageTimes>;

  static TimeChange identity_cap(double cap);
  static TimeChange table(std::vector<double> times, std::vector<double> values);
  static TimeChange qv_inverse(QVPath qv);
  static TimeChange passage_times(TimeGrid output_grid, std::vector<double> levels);
  // Levels rate * t on the output grid: the ramp B_{T_s} = s.
  static TimeChange passage_ramp(TimeGrid output_grid, double rate);

  // Passage times are unbounded stopping times; all other variants are bounded.
  bool unbounded() const noexcept { return std::holds_alternative<PassageTimes>(v_); }
  const Variant& variant() const noexcept { return v_; }

 private:
  explicit TimeChange(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

struct TimeChangedPath {
  Path path;
  bool unbounded_time_change = false;
};

// result[k] = X(nu(t_k)) with X linearly interpolated off-grid. Output lives
// on output_grid when given (and on the schedule grid for passage times),
// otherwise on the input grid.
TimeChangedPath time_change(const Path& path, const TimeChange& nu,
                            const std::optional<TimeGrid>& output_grid = std::nullopt);

// X sampled on its own quadratic-variation clock: output[k] = X(T_{u_k}) on
// the uniform grid u_k = k Q / steps, k < steps, Q the terminal QV.
Path dds_brownianize(const Path& path, std::size_t qv_grid_steps);

// x[k] - f(qv[k]); f(0) must vanish.
Path drift_by_qv(const Path& path, const ScalarMap& f);

struct NonStickyMartingale {
  double barrier = 2.0;
};
struct AbsCubeRootOfMartingale {
  ProcessSpec base = BrownianMotion{1.0};
};
struct CosDriftExample {
  double hit_level = 1.0;
};

using ExampleSpec = std::variant<NonStickyMartingale, AbsCubeRootOfMartingale, CosDriftExample>;

Path build_example(const ExampleSpec& spec, const TimeGrid& grid, SeedSpec seed);

// ProcessSpec adapters so transformed processes can feed Ensemble::sample.
ProcessSpec example_process(ExampleSpec spec);
ProcessSpec mapped_process(ProcessSpec base, ScalarMap f, std::string label);
ProcessSpec time_changed_process(ProcessSpec base, double cap, std::string label);
ProcessSpec qv_drifted_process(ProcessSpec base, ScalarMap f, std::string label);

// B_{T_s} for levels s = rate * t on the ensemble grid. The driving Brownian
// motion lives on [0, source_horizon] with source_steps steps; paths that do
// not reach the top level within that window are redrawn from the next
// substream, up to max_redraws times.
ProcessSpec passage_ramp_process(double source_horizon, std::size_t source_steps,
                                 double rate = 1.0, std::size_t max_redraws = 1000);

}  // namespace stickylab
