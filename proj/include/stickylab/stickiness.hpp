#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "stickylab/pathgen.hpp"
#include "stickylab/stopping.hpp"

namespace stickylab {

enum class Characterization {
  DefA,   // P(sup_[tau,T] |X_t - X_tau| < eps, tau < T, A)
  PropB,  // same with tau replaced by the bounded tau ^ T
  PropC,  // tau_1 = first exit of the delta-tube around X_{tau ^ T} beyond the ladder
};

const char* to_string(Characterization c) noexcept;
Characterization parse_characterization(const std::string& text);

struct StickinessQuery {
  StoppingRule tau = StoppingRule::deterministic(0.0);
  double horizon = 1.0;  // T
  double epsilon = 0.5;
  EventDescriptor event = EventDescriptor::whole_space();
  Characterization characterization = Characterization::DefA;
  double delta = 0.0;                // PropC tube half-width; 0 means epsilon
  std::vector<double> ladder;        // PropC horizons; empty means {T}
  double confidence = 0.95;
};

enum class Verdict { Positive, Zero };
const char* to_string(Verdict v) noexcept;

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 1.0;
};

struct StickinessEstimate {
  double p_hat = 0.0;
  std::size_t successes = 0;
  std::size_t n = 0;
  ConfidenceInterval ci;
  // One-sided upper bound on p at the query's confidence; informative when
  // successes == 0 (exact: 1 - (1 - level)^(1/n)).
  double upper_bound_one_sided = 1.0;
  Verdict verdict = Verdict::Zero;
  StickinessQuery query;
};

// Positive iff at least one success and the Wilson lower bound is > 0;
// Zero otherwise, reported together with the one-sided upper bound.
inline constexpr const char* kVerdictConvention =
    "POSITIVE iff successes >= 1 and Wilson lower bound > 0; ZERO iff successes = 0 "
    "(one-sided upper bound reported)";

ConfidenceInterval wilson_ci(std::size_t successes, std::size_t n, double level);
double zero_success_upper_bound(std::size_t n, double level);

// Estimate, interval and verdict for a success count.
StickinessEstimate summarise_successes(std::size_t successes, std::size_t n,
                                       const StickinessQuery& query);

void validate_query(const StickinessQuery& query, const TimeGrid& grid);

// Per-path success indicator for a validated query.
bool stickiness_success(const Path& path, const StickinessQuery& query);

StickinessEstimate estimate_stickiness(const Ensemble& ensemble, const StickinessQuery& query);

// Fraction of paths whose hitting time HittingFrom(tau0, delta) exceeds each
// horizon. Paths where tau0 never fires count as surviving.
std::vector<double> survival_ladder(const Ensemble& ensemble, const StoppingRule& tau0,
                                    double delta, const std::vector<double>& horizons);

struct CrossCheckReport {
  StickinessEstimate def_a;
  StickinessEstimate prop_b;
  StickinessEstimate prop_c;
  bool agree = false;
  std::string summary;
};

// Runs the three characterisations on one ensemble and reports whether their
// positivity verdicts agree. Disagreement is reported, never reconciled.
CrossCheckReport cross_check_characterizations(const Ensemble& ensemble,
                                               const StickinessQuery& query);

}  // namespace stickylab
