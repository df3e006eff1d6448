#include "stickylab/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "stickylab/error.hpp"
#include "stickylab/format.hpp"
#include "stickylab/parallel.hpp"
#include "stickylab/random.hpp"

namespace stickylab {

Strategy::Strategy(std::vector<double> breakpoints, std::vector<double> holdings)
    : breakpoints_(std::move(breakpoints)), holdings_(std::move(holdings)) {
  if (breakpoints_.size() != holdings_.size())
    fail(ErrorCode::InvalidArgument, "strategy needs one holding per breakpoint");
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    if (!std::isfinite(breakpoints_[i]) || breakpoints_[i] < 0.0)
      fail(ErrorCode::InvalidArgument, "strategy breakpoints must be finite and >= 0");
    if (i > 0 && !(breakpoints_[i] > breakpoints_[i - 1]))
      fail(ErrorCode::InvalidArgument, "strategy breakpoints must be strictly increasing");
    if (!std::isfinite(holdings_[i]))
      fail(ErrorCode::InvalidArgument, "strategy holdings must be finite");
  }
}

double Strategy::holding_at(double t) const noexcept {
  const auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t);
  const std::size_t before = static_cast<std::size_t>(it - breakpoints_.begin());
  return before == 0 ? 0.0 : holdings_[before - 1];
}

void validate(const CostModel& cost) {
  if (!(cost.k >= 0.0 && cost.k < 1.0))
    fail(ErrorCode::InvalidArgument, "cost rate k must lie in [0, 1)");
  if (!(cost.admissibility_floor > 0.0) || !std::isfinite(cost.admissibility_floor))
    fail(ErrorCode::InvalidArgument, "admissibility floor M must be positive");
}

double total_variation(const Strategy& theta, double up_to) {
  const auto bps = theta.breakpoints();
  const auto hs = theta.holdings();
  const double tol = 1e-9 * std::max(1.0, std::abs(up_to));
  double tv = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < bps.size() && bps[i] <= up_to + tol; ++i) {
    tv += std::abs(hs[i] - prev);
    prev = hs[i];
  }
  return tv;
}

LedgerPath liquidation_value(const Strategy& theta, const Path& price, const CostModel& cost) {
  validate(cost);
  const TimeGrid& grid = price.grid();
  const auto bps = theta.breakpoints();
  const auto hs = theta.holdings();
  std::vector<std::size_t> trade_index(bps.size());
  for (std::size_t i = 0; i < bps.size(); ++i) {
    const auto idx = grid.find(bps[i]);
    if (!idx)
      fail(ErrorCode::AlignmentError,
           "strategy breakpoint " + format_short(bps[i]) + " is not a grid time");
    trade_index[i] = *idx;
  }

  const std::size_t n = grid.size();
  LedgerPath ledger{grid, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                    std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  double holding = 0.0;
  double gains = 0.0;
  double costs = 0.0;
  std::size_t next_trade = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    while (next_trade < bps.size() && trade_index[next_trade] == i) {
      costs += cost.k * price[i] * std::abs(hs[next_trade] - holding);
      holding = hs[next_trade];
      ++next_trade;
    }
    gains += holding * (price[i + 1] - price[i]);
    ledger.gains[i + 1] = gains;
    ledger.cost_flow[i + 1] = costs;
    ledger.liquidation_penalty[i + 1] = cost.k * price[i + 1] * std::abs(holding);
  }
  for (std::size_t i = 0; i < n; ++i)
    ledger.value[i] = ledger.gains[i] - ledger.cost_flow[i] - ledger.liquidation_penalty[i];
  return ledger;
}

AdmissibilityResult admissibility_check(const LedgerPath& ledger, const CostModel& cost) {
  validate(cost);
  for (std::size_t i = 0; i < ledger.value.size(); ++i) {
    if (ledger.value[i] < -cost.admissibility_floor)
      return AdmissibilityResult{false, ledger.grid[i], i};
  }
  return AdmissibilityResult{};
}

double ArbitrageStats::t_statistic() const noexcept {
  if (n < 2) return 0.0;
  if (std_terminal == 0.0) {
    if (mean_terminal == 0.0) return 0.0;
    return std::copysign(std::numeric_limits<double>::infinity(), mean_terminal);
  }
  return mean_terminal / (std_terminal / std::sqrt(static_cast<double>(n)));
}

ArbitrageStats arbitrage_stats_from_values(std::span<const double> values, double tol) {
  if (values.empty()) fail(ErrorCode::InvalidArgument, "arbitrage statistics need ledgers");
  if (!(tol >= 0.0)) fail(ErrorCode::InvalidArgument, "tolerance must be nonnegative");
  ArbitrageStats s;
  s.n = values.size();
  s.tol = tol;
  std::size_t nonneg = 0, pos = 0;
  double sum = 0.0;
  s.min_terminal = std::numeric_limits<double>::infinity();
  for (double v : values) {
    nonneg += (v >= -tol) ? 1 : 0;
    pos += (v > tol) ? 1 : 0;
    sum += v;
    s.min_terminal = std::min(s.min_terminal, v);
  }
  const double nn = static_cast<double>(s.n);
  s.mean_terminal = sum / nn;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean_terminal) * (v - s.mean_terminal);
  s.std_terminal = s.n > 1 ? std::sqrt(ss / (nn - 1.0)) : 0.0;
  s.frac_nonnegative = static_cast<double>(nonneg) / nn;
  s.frac_strictly_positive = static_cast<double>(pos) / nn;
  s.empirical_arbitrage = nonneg == s.n && pos > 0;
  return s;
}

ArbitrageStats arbitrage_stats(std::span<const LedgerPath> ledgers, double horizon, double tol) {
  if (ledgers.empty()) fail(ErrorCode::InvalidArgument, "arbitrage statistics need ledgers");
  const TimeGrid& grid = ledgers.front().grid;
  if (horizon < 0.0 || horizon > grid.horizon() * (1.0 + 1e-12))
    fail(ErrorCode::InvalidArgument, "horizon outside the ledger grid");
  const std::size_t idx = grid.index_at_or_before(horizon);
  std::vector<double> terminal;
  terminal.reserve(ledgers.size());
  for (const auto& l : ledgers) {
    if (!l.grid.same_as(grid)) fail(ErrorCode::GridMismatch, "ledgers must share one grid");
    terminal.push_back(l.value[idx]);
  }
  return arbitrage_stats_from_values(terminal, tol);
}

Strategy momentum_strategy(const Path& price, double threshold, double unit) {
  if (!(threshold > 0.0) || !(unit > 0.0))
    fail(ErrorCode::InvalidArgument, "momentum threshold and unit must be positive");
  std::vector<double> bps, hs;
  double current = 0.0;
  for (std::size_t j = 0; j + 1 < price.size(); ++j) {
    const double move = price[j] - price[0];
    const double target = move > threshold ? unit : (move < -threshold ? -unit : 0.0);
    if (target != current) {
      bps.push_back(price.time(j));
      hs.push_back(target);
      current = target;
    }
  }
  return Strategy(std::move(bps), std::move(hs));
}

Strategy buy_and_hold(double unit) { return Strategy({0.0}, {unit}); }

Path asset_price(const Path& log_price, PriceMode mode) {
  if (mode == PriceMode::Raw) return log_price;
  std::vector<double> p(log_price.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::exp(log_price[i]);
  return Path(log_price.grid(), std::move(p));
}

Ensemble shuffle_increments_across_paths(const Ensemble& ensemble, std::uint64_t seed) {
  const std::size_t n = ensemble.size();
  const std::size_t steps = ensemble.grid().steps();
  std::vector<std::vector<double>> values(n);
  parallel_for(n, [&](std::size_t i) {
    const Path p = ensemble.path(i);
    values[i].assign(p.values().begin(), p.values().end());
  });

  std::vector<std::vector<double>> out(n, std::vector<double>(steps + 1));
  for (std::size_t i = 0; i < n; ++i) out[i][0] = values[i][0];
  std::vector<std::size_t> perm(n);
  for (std::size_t j = 0; j < steps; ++j) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    NormalStream rng(SeedSpec{seed, j}, 0x5348u);
    for (std::size_t i = n; i > 1; --i) {
      const auto r = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
      std::swap(perm[i - 1], perm[std::min(r, i - 1)]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto& src = values[perm[i]];
      out[i][j + 1] = out[i][j] + (src[j + 1] - src[j]);
    }
  }
  std::vector<Path> paths;
  paths.reserve(n);
  for (auto& v : out) paths.emplace_back(ensemble.grid(), std::move(v));
  return Ensemble::from_paths(std::move(paths), ensemble.label() + "-shuffled",
                              ensemble.master_seed());
}

}  // namespace stickylab
