#include "stickylab/stickiness.hpp"

#include <array>
#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "stickylab/error.hpp"
#include "stickylab/format.hpp"

namespace stickylab {

namespace {

double time_tol(const TimeGrid& grid) { return 1e-9 * std::max(1.0, grid.horizon()); }

double sup_deviation(const Path& path, std::size_t from, std::size_t to) {
  const double anchor = path[from];
  double sup = 0.0;
  for (std::size_t j = from; j <= to; ++j) sup = std::max(sup, std::abs(path[j] - anchor));
  return sup;
}

StopResult bounded_stop(const StopResult& stop, std::size_t horizon_index, const TimeGrid& grid) {
  if (stop.stopped() && stop.index() <= horizon_index) return stop;
  return StopResult::at(grid, horizon_index);
}

bool success_for(const Path& path, const StickinessQuery& q, Characterization c,
                 const StopResult& stop) {
  const TimeGrid& grid = path.grid();
  const std::size_t iT = grid.index_at_or_before(q.horizon);
  switch (c) {
    case Characterization::DefA: {
      if (!stop.stopped() || !(stop.time() < q.horizon - time_tol(grid))) return false;
      if (!evaluate_event(q.event, path, stop)) return false;
      return sup_deviation(path, stop.index(), iT) < q.epsilon;
    }
    case Characterization::PropB: {
      const StopResult b = bounded_stop(stop, iT, grid);
      if (!evaluate_event(q.event, path, b)) return false;
      return sup_deviation(path, b.index(), iT) < q.epsilon;
    }
    case Characterization::PropC: {
      const StopResult b = bounded_stop(stop, iT, grid);
      if (!evaluate_event(q.event, path, b)) return false;
      const double delta = q.delta > 0.0 ? q.delta : q.epsilon;
      const double last = q.ladder.empty() ? q.horizon : q.ladder.back();
      const std::size_t ih = grid.index_at_or_before(last);
      if (b.index() >= ih) return true;
      // tau_1 > last  <=>  no strict exit of the delta-tube on (tau_0, last].
      return sup_deviation(path, b.index(), ih) <= delta;
    }
  }
  return false;
}

}  // namespace

StickinessEstimate summarise_successes(std::size_t successes, std::size_t n,
                                       const StickinessQuery& q) {
  StickinessEstimate e;
  e.successes = successes;
  e.n = n;
  e.p_hat = static_cast<double>(successes) / static_cast<double>(n);
  e.ci = wilson_ci(successes, n, q.confidence);
  e.upper_bound_one_sided =
      successes == 0 ? zero_success_upper_bound(n, q.confidence) : e.ci.upper;
  e.verdict = (successes >= 1 && e.ci.lower > 0.0) ? Verdict::Positive : Verdict::Zero;
  e.query = q;
  return e;
}

const char* to_string(Characterization c) noexcept {
  switch (c) {
    case Characterization::DefA: return "defa";
    case Characterization::PropB: return "propb";
    case Characterization::PropC: return "propc";
  }
  return "?";
}

Characterization parse_characterization(const std::string& text) {
  if (text == "defa") return Characterization::DefA;
  if (text == "propb") return Characterization::PropB;
  if (text == "propc") return Characterization::PropC;
  fail(ErrorCode::InvalidArgument, "unknown characterization '" + text + "'");
}

const char* to_string(Verdict v) noexcept {
  return v == Verdict::Positive ? "POSITIVE" : "ZERO";
}

ConfidenceInterval wilson_ci(std::size_t successes, std::size_t n, double level) {
  if (n == 0 || successes > n)
    fail(ErrorCode::InvalidArgument, "Wilson interval needs 0 <= successes <= n, n >= 1");
  if (!(level > 0.0 && level < 1.0))
    fail(ErrorCode::InvalidArgument, "confidence level must lie in (0, 1)");
  const double z = boost::math::quantile(boost::math::normal(), 1.0 - 0.5 * (1.0 - level));
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  ConfidenceInterval ci{std::max(0.0, center - half), std::min(1.0, center + half)};
  // The formula is exactly 0 (resp. 1) at the ends; pin them against rounding.
  if (successes == 0) ci.lower = 0.0;
  if (successes == n) ci.upper = 1.0;
  return ci;
}

double zero_success_upper_bound(std::size_t n, double level) {
  if (n == 0) fail(ErrorCode::InvalidArgument, "upper bound needs n >= 1");
  if (!(level > 0.0 && level < 1.0))
    fail(ErrorCode::InvalidArgument, "confidence level must lie in (0, 1)");
  return -std::expm1(std::log1p(-level) / static_cast<double>(n));
}

void validate_query(const StickinessQuery& q, const TimeGrid& grid) {
  if (!std::isfinite(q.epsilon) || !(q.epsilon > 0.0))
    fail(ErrorCode::InvalidArgument, "epsilon must be positive");
  if (!std::isfinite(q.horizon) || q.horizon < 0.0)
    fail(ErrorCode::InvalidArgument, "horizon T must be nonnegative");
  if (q.horizon > grid.horizon() + time_tol(grid))
    fail(ErrorCode::InvalidArgument, "horizon T = " + format_short(q.horizon) +
                                         " lies beyond the grid horizon " +
                                         format_short(grid.horizon()));
  if (!(q.confidence > 0.0 && q.confidence < 1.0))
    fail(ErrorCode::InvalidArgument, "confidence level must lie in (0, 1)");
  if (q.characterization == Characterization::PropC) {
    if (!(q.delta >= 0.0)) fail(ErrorCode::InvalidArgument, "delta must be positive");
    for (std::size_t i = 0; i < q.ladder.size(); ++i) {
      if (i > 0 && !(q.ladder[i] > q.ladder[i - 1]))
        fail(ErrorCode::InvalidArgument, "horizon ladder must be strictly increasing");
      if (q.ladder[i] < 0.0 || q.ladder[i] > grid.horizon() + time_tol(grid))
        fail(ErrorCode::InvalidArgument, "ladder horizon outside the grid span");
    }
  }
}

bool stickiness_success(const Path& path, const StickinessQuery& query) {
  return success_for(path, query, query.characterization, evaluate_rule(query.tau, path));
}

StickinessEstimate estimate_stickiness(const Ensemble& ensemble, const StickinessQuery& query) {
  validate_query(query, ensemble.grid());
  const auto hits = ensemble.map<char>(
      [&](const Path& p, std::size_t) { return stickiness_success(p, query) ? 1 : 0; });
  std::size_t successes = 0;
  for (char h : hits) successes += static_cast<std::size_t>(h);
  return summarise_successes(successes, ensemble.size(), query);
}

std::vector<double> survival_ladder(const Ensemble& ensemble, const StoppingRule& tau0,
                                    double delta, const std::vector<double>& horizons) {
  if (horizons.empty()) fail(ErrorCode::InvalidArgument, "empty horizon ladder");
  const TimeGrid& grid = ensemble.grid();
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (i > 0 && !(horizons[i] > horizons[i - 1]))
      fail(ErrorCode::InvalidArgument, "horizon ladder must be strictly increasing");
    if (horizons[i] < 0.0 || horizons[i] > grid.horizon() + time_tol(grid))
      fail(ErrorCode::InvalidArgument, "ladder horizon outside the grid span");
  }
  const StoppingRule exit_rule = StoppingRule::hitting_from(tau0, delta);
  const auto exit_times = ensemble.map<double>([&](const Path& p, std::size_t) {
    const StopResult r = evaluate_rule(exit_rule, p);
    return r.stopped() ? r.time() : std::numeric_limits<double>::infinity();
  });
  const double tol = time_tol(grid);
  std::vector<double> fractions(horizons.size());
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    std::size_t alive = 0;
    for (double t : exit_times) alive += (t > horizons[h] + tol) ? 1 : 0;
    fractions[h] = static_cast<double>(alive) / static_cast<double>(ensemble.size());
  }
  return fractions;
}

CrossCheckReport cross_check_characterizations(const Ensemble& ensemble,
                                               const StickinessQuery& query) {
  StickinessQuery qa = query, qb = query, qc = query;
  qa.characterization = Characterization::DefA;
  qb.characterization = Characterization::PropB;
  qc.characterization = Characterization::PropC;
  if (!(qc.delta > 0.0)) qc.delta = query.epsilon;
  if (qc.ladder.empty()) qc.ladder = {query.horizon};
  validate_query(qa, ensemble.grid());
  validate_query(qc, ensemble.grid());

  // DefA with the padded stopping time tau^A (tau on A, T off A) counts the
  // same paths as DefA with event A, so one pass serves all three forms.
  const auto hits = ensemble.map<std::array<char, 3>>([&](const Path& p, std::size_t) {
    const StopResult stop = evaluate_rule(query.tau, p);
    return std::array<char, 3>{
        static_cast<char>(success_for(p, qa, Characterization::DefA, stop)),
        static_cast<char>(success_for(p, qb, Characterization::PropB, stop)),
        static_cast<char>(success_for(p, qc, Characterization::PropC, stop))};
  });
  std::array<std::size_t, 3> counts{};
  for (const auto& h : hits)
    for (std::size_t i = 0; i < 3; ++i) counts[i] += static_cast<std::size_t>(h[i]);

  CrossCheckReport r;
  r.def_a = summarise_successes(counts[0], ensemble.size(), qa);
  r.prop_b = summarise_successes(counts[1], ensemble.size(), qb);
  r.prop_c = summarise_successes(counts[2], ensemble.size(), qc);
  r.agree = r.def_a.verdict == r.prop_b.verdict && r.prop_b.verdict == r.prop_c.verdict;
  r.summary = std::string("defa=") + to_string(r.def_a.verdict) +
              " propb=" + to_string(r.prop_b.verdict) +
              " propc=" + to_string(r.prop_c.verdict) + (r.agree ? " (agree)" : " (DISAGREE)") +
              "; convention: " + kVerdictConvention;
  return r;
}

}  // namespace stickylab
