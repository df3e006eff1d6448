#include <cmath>
#include <vector>

#include "doctest.h"
#include "stickylab/stopping.hpp"
#include "support.hpp"

using namespace stickylab;

namespace {

Path path_of(std::vector<double> v) {
  const std::size_t steps = v.size() - 1;
  return Path(make_uniform_grid(static_cast<double>(steps) / 4.0, steps), std::move(v));
}

}  // namespace

TEST_CASE("deterministic rule snaps to the next grid time") {
  const Path p = path_of({0, 1, 2, 3, 4});
  CHECK(evaluate_rule(StoppingRule::deterministic(0.5), p) == StopResult::at(p.grid(), 2));
  CHECK(evaluate_rule(StoppingRule::deterministic(0.3), p) == StopResult::at(p.grid(), 2));
  CHECK(evaluate_rule(StoppingRule::deterministic(0.0), p) == StopResult::at(p.grid(), 0));
  CHECK(error_code_of([&] { evaluate_rule(StoppingRule::deterministic(1.5), p); }) ==
        ErrorCode::InvalidRule);
  // independent of the path values
  const Path q = path_of({5, -3, 2, 8, 1});
  CHECK(evaluate_rule(StoppingRule::deterministic(0.6), q) ==
        evaluate_rule(StoppingRule::deterministic(0.6), p));
}

TEST_CASE("hitting rule uses a strict inequality") {
  const Path p = path_of({0, 0.5, 1.2, 0.3, 2.0});
  const auto hit1 = StoppingRule::hitting_from(StoppingRule::deterministic(0), 1.0);
  CHECK(evaluate_rule(hit1, p) == StopResult::at(p.grid(), 2));
  const Path exact = path_of({0, 1.0, 1.0, 1.5});
  CHECK(evaluate_rule(hit1, exact).index() == 3u);
  const auto hit10 = StoppingRule::hitting_from(StoppingRule::deterministic(0), 10.0);
  CHECK_FALSE(evaluate_rule(hit10, p).stopped());
  // nested start rule: exit of the 0.5-tube around X at the first 1-exit
  const auto nested = StoppingRule::hitting_from(hit1, 0.5);
  CHECK(evaluate_rule(nested, p) == StopResult::at(p.grid(), 3));
}

TEST_CASE("hitting time is monotone in delta and never precedes its start") {
  const auto g = make_uniform_grid(1.0, 512);
  for (std::uint64_t i = 0; i < 200; ++i) {
    const Path p = sample_brownian(g, SeedSpec{17, i});
    const auto start = StoppingRule::hitting_from(StoppingRule::deterministic(0.1), 0.2);
    const StopResult s = evaluate_rule(start, p);
    double prev = 0.0;
    for (double d : {0.05, 0.1, 0.2, 0.4, 0.8}) {
      const StopResult r = evaluate_rule(StoppingRule::hitting_from(start, d), p);
      const double t = r.stopped() ? r.time() : INFINITY;
      CHECK(t >= prev);
      prev = t;
      if (s.stopped() && r.stopped()) CHECK(r.index() >= s.index());
      if (!s.stopped()) CHECK_FALSE(r.stopped());
    }
  }
}

TEST_CASE("passage times") {
  const Path p = path_of({0, 1, 2});
  CHECK(passage_time(p, 0.0) == StopResult::at(p.grid(), 0));
  CHECK(passage_time(p, 1.5) == StopResult::at(p.grid(), 2));
  CHECK(passage_time(p, 1.0) == StopResult::at(p.grid(), 1));
  CHECK_FALSE(passage_time(p, 3.0).stopped());
  const Path down = path_of({0, -1, -2});
  CHECK(passage_time(down, -1.5).index() == 2u);
  CHECK(evaluate_rule(StoppingRule::passage_to_level(1.5), p).index() == 2u);
}

TEST_CASE("passage-time ramp reproduces the levels pathwise") {
  const auto g = make_uniform_grid(16.0, 1 << 16);
  std::size_t checked = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const Path b = sample_brownian(g, SeedSpec{3, i});
    for (int k = 1; k <= 9; ++k) {
      const double s = 0.1 * k;
      const StopResult r = passage_time(b, s);
      if (!r.stopped()) continue;
      ++checked;
      // the first grid point past the crossing overshoots by at most one increment
      const double step = std::abs(b[r.index()] - b[r.index() - 1]);
      CHECK(std::abs(b[r.index()] - s) <= step);
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("first absolute exceedance is non-strict") {
  const Path p = path_of({0, 0.5, -1.0, 2.0});
  CHECK(evaluate_rule(StoppingRule::first_abs_exceed(1.0), p).index() == 2u);
  CHECK_FALSE(evaluate_rule(StoppingRule::first_abs_exceed(3.0), p).stopped());
}

TEST_CASE("rule syntax round-trips") {
  for (const char* text : {"det:0.5", "hit:0.1@det:0", "pass:1.5", "absexceed:1",
                           "hit:0.5@hit:0.1@det:0.25"}) {
    CAPTURE(text);
    CHECK(StoppingRule::parse(StoppingRule::parse(text).to_string()).to_string() ==
          StoppingRule::parse(text).to_string());
  }
  CHECK(StoppingRule::parse("hit:0.1").to_string() == StoppingRule::parse("hit:0.1@det:0").to_string());
  for (const char* bad : {"", "det", "det:x", "hit:-1", "hit:0", "absexceed:0", "foo:1",
                          "hit:0.1@", "det:-1"}) {
    CAPTURE(bad);
    CHECK(error_code_of([&] { StoppingRule::parse(bad); }) == ErrorCode::InvalidRule);
  }
  std::string deep = "det:0";
  for (std::size_t i = 0; i < kMaxRuleDepth + 1; ++i) deep = "hit:1@" + deep;
  CHECK(error_code_of([&] { StoppingRule::parse(deep); }) == ErrorCode::InvalidRule);
}

TEST_CASE("events") {
  const auto g = make_uniform_grid(1.0, 4);
  const Path p(g, {0, 0.3, -0.2, 0.5, 1.0});
  const StopResult at0 = StopResult::at(g, 0);
  const StopResult at2 = StopResult::at(g, 2);
  const StopResult none = StopResult::not_stopped();
  CHECK(evaluate_event(EventDescriptor::whole_space(), p, none));
  CHECK(evaluate_event(EventDescriptor::value_at_stop_in_range(-0.1, 0.1), p, at0));
  CHECK_FALSE(evaluate_event(EventDescriptor::value_at_stop_in_range(-0.1, 0.1), p, at2));
  CHECK_FALSE(evaluate_event(EventDescriptor::value_at_stop_in_range(-10, 10), p, none));
  CHECK(evaluate_event(EventDescriptor::stopped_before(1.0), p, at2));
  CHECK_FALSE(evaluate_event(EventDescriptor::stopped_before(0.5), p, at2));
  CHECK_FALSE(evaluate_event(EventDescriptor::stopped_before(1.0), p, none));
  const auto both = EventDescriptor::parse("stoprange:-1:0&before:1");
  CHECK(evaluate_event(both, p, at2));
  CHECK_FALSE(evaluate_event(both, p, StopResult::at(g, 1)));
  CHECK(EventDescriptor::parse(both.to_string()).to_string() == both.to_string());
  for (const char* bad : {"", "stoprange:1", "stoprange:2:1", "before:x", "any"}) {
    CAPTURE(bad);
    CHECK(error_code_of([&] { EventDescriptor::parse(bad); }).has_value());
  }
}
