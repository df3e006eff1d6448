#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stickylab/pathgen.hpp"

namespace stickylab {

// Piecewise-constant, left-continuous holdings with theta_0 = 0: the holding
// is 0 on [0, b_0], holdings[i] on (b_i, b_{i+1}], and holdings.back() after
// the last breakpoint. A trade at b executes at the price X_b.
class Strategy {
 public:
  Strategy() = default;
  Strategy(std::vector<double> breakpoints, std::vector<double> holdings);

  std::span<const double> breakpoints() const noexcept { return breakpoints_; }
  std::span<const double> holdings() const noexcept { return holdings_; }
  bool empty() const noexcept { return breakpoints_.empty(); }

  // theta_t (left-continuous value).
  double holding_at(double t) const noexcept;

 private:
  std::vector<double> breakpoints_;
  std::vector<double> holdings_;
};

struct CostModel {
  double k = 0.0;                  // proportional cost rate, 0 <= k < 1
  double admissibility_floor = 1.0;  // M > 0
};

void validate(const CostModel& cost);

// V = gains - cost_flow - liquidation_penalty at every grid point.
struct LedgerPath {
  TimeGrid grid;
  std::vector<double> gains;
  std::vector<double> cost_flow;
  std::vector<double> liquidation_penalty;
  std::vector<double> value;
};

// Sum of |jump| over breakpoints at or before up_to, including the first
// jump away from theta_0 = 0.
double total_variation(const Strategy& theta, double up_to);

// Liquidation value V_t = int theta dX - k int X d|D theta| - k X_t |theta_t|:
// left-point gains, costs k X_b |jump| for trades strictly before t, and the
// liquidation charge on the current holding.
LedgerPath liquidation_value(const Strategy& theta, const Path& price, const CostModel& cost);

struct AdmissibilityResult {
  bool admissible = true;
  std::optional<double> first_violation_time;
  std::optional<std::size_t> first_violation_index;
};

AdmissibilityResult admissibility_check(const LedgerPath& ledger, const CostModel& cost);

struct ArbitrageStats {
  std::size_t n = 0;
  double frac_nonnegative = 0.0;
  double frac_strictly_positive = 0.0;
  double mean_terminal = 0.0;
  double std_terminal = 0.0;
  double min_terminal = 0.0;
  double tol = 1e-9;
  // frac_nonnegative == 1 and frac_strictly_positive > 0. A finite-sample
  // surrogate only: it neither proves nor refutes arbitrage.
  bool empirical_arbitrage = false;

  double t_statistic() const noexcept;
};

inline constexpr double kDefaultArbitrageTol = 1e-9;

ArbitrageStats arbitrage_stats(std::span<const LedgerPath> ledgers, double horizon,
                               double tol = kDefaultArbitrageTol);
ArbitrageStats arbitrage_stats_from_values(std::span<const double> terminal_values,
                                           double tol = kDefaultArbitrageTol);

// At each grid time t_j before the horizon, target +unit if X_{t_j} - X_0 >
// threshold, -unit if < -threshold, else 0; a breakpoint is recorded when the
// target changes. The new holding applies just after t_j.
Strategy momentum_strategy(const Path& price, double threshold, double unit);

// Buy `unit` at time 0 and hold.
Strategy buy_and_hold(double unit = 1.0);

enum class PriceMode { Exp, Raw };

// Asset price from a log-price path: exp(X) (strictly positive) or X itself.
Path asset_price(const Path& log_price, PriceMode mode);

// Control ensemble: each increment column is permuted across paths, which
// keeps the per-step increment law and destroys temporal dependence.
Ensemble shuffle_increments_across_paths(const Ensemble& ensemble, std::uint64_t seed);

}  // namespace stickylab
