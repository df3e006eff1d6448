#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "stickylab/pathgen.hpp"

namespace stickylab {

// Declarative stopping times evaluated pathwise on the grid.
//
//   Deterministic(t0)        smallest grid time >= t0
//   HittingFrom(start, d)    first t >= start with |X_t - X_start| > d (strict)
//   PassageToLevel(s)        first grid point at or past a crossing of s
//   FirstAbsExceed(level)    first t with |X_t| >= level (non-strict)
class StoppingRule {
 public:
  enum class Kind { Deterministic, HittingFrom, PassageToLevel, FirstAbsExceed };

  static StoppingRule deterministic(double t0);
  static StoppingRule hitting_from(StoppingRule start, double delta);
  static StoppingRule passage_to_level(double level);
  static StoppingRule first_abs_exceed(double level);

  // Text syntax: det:<t>, hit:<delta>[@<start-rule>], pass:<level>,
  // absexceed:<level>. A bare hit:<delta> starts from det:0.
  static StoppingRule parse(std::string_view text);
  std::string to_string() const;

  Kind kind() const noexcept { return kind_; }
  double parameter() const noexcept { return param_; }
  const StoppingRule& start() const;
  std::size_t depth() const noexcept;

 private:
  StoppingRule(Kind kind, double param, std::shared_ptr<const StoppingRule> start)
      : kind_(kind), param_(param), start_(std::move(start)) {}

  Kind kind_;
  double param_;
  std::shared_ptr<const StoppingRule> start_;
};

class StopResult {
 public:
  static StopResult at(const TimeGrid& grid, std::size_t index) {
    return StopResult(true, grid[index], index);
  }
  static StopResult not_stopped() { return StopResult(false, 0.0, 0); }

  bool stopped() const noexcept { return stopped_; }
  double time() const noexcept { return time_; }
  std::size_t index() const noexcept { return index_; }

  friend bool operator==(const StopResult&, const StopResult&) = default;

 private:
  StopResult(bool stopped, double time, std::size_t index)
      : stopped_(stopped), time_(time), index_(index) {}

  bool stopped_;
  double time_;
  std::size_t index_;
};

// Maximum nesting of HittingFrom start rules.
inline constexpr std::size_t kMaxRuleDepth = 64;

StopResult evaluate_rule(const StoppingRule& rule, const Path& path);
StopResult passage_time(const Path& path, double level);

// Events standing in for A in F_tau: functionals of the path stopped at tau.
class EventDescriptor {
 public:
  enum class Kind { WholeSpace, ValueAtStopInRange, StoppedBeforeHorizon, Conjunction };

  static EventDescriptor whole_space();
  static EventDescriptor value_at_stop_in_range(double lo, double hi);
  static EventDescriptor stopped_before(double horizon);
  static EventDescriptor conjunction(std::vector<EventDescriptor> parts);

  // all, stoprange:<lo>:<hi>, before:<T>; conjunctions joined with '&'.
  static EventDescriptor parse(std::string_view text);
  std::string to_string() const;

  Kind kind() const noexcept { return kind_; }
  double lo() const noexcept { return a_; }
  double hi() const noexcept { return b_; }
  double horizon() const noexcept { return a_; }
  const std::vector<EventDescriptor>& parts() const noexcept { return parts_; }

 private:
  EventDescriptor(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}

  Kind kind_;
  double a_;
  double b_;
  std::vector<EventDescriptor> parts_;
};

bool evaluate_event(const EventDescriptor& event, const Path& path, const StopResult& stop);

}  // namespace stickylab
