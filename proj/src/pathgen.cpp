#include "stickylab/pathgen.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "stickylab/error.hpp"
#include "stickylab/format.hpp"

namespace stickylab {

namespace {

double snap_tol(double horizon) { return 1e-9 * std::max(1.0, std::abs(horizon)); }

}  // namespace

TimeGrid::TimeGrid(std::vector<double> times) {
  if (times.size() < 2) fail(ErrorCode::InvalidArgument, "time grid needs at least two points");
  if (times.front() != 0.0) fail(ErrorCode::InvalidArgument, "time grid must start at 0");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i])) fail(ErrorCode::InvalidArgument, "time grid has a non-finite point");
    if (i > 0 && !(times[i] > times[i - 1]))
      fail(ErrorCode::InvalidArgument, "time grid must be strictly increasing");
  }
  times_ = std::make_shared<const std::vector<double>>(std::move(times));
}

bool TimeGrid::is_uniform(double rel_tol) const noexcept {
  const double h = horizon() / static_cast<double>(steps());
  for (std::size_t i = 1; i < size(); ++i) {
    if (std::abs(((*times_)[i] - (*times_)[i - 1]) - h) > rel_tol * h) return false;
  }
  return true;
}

std::optional<std::size_t> TimeGrid::index_at_or_after(double t) const noexcept {
  const double tol = snap_tol(horizon());
  const auto& ts = *times_;
  auto it = std::lower_bound(ts.begin(), ts.end(), t - tol);
  if (it == ts.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ts.begin());
}

std::size_t TimeGrid::index_at_or_before(double t) const noexcept {
  const double tol = snap_tol(horizon());
  const auto& ts = *times_;
  auto it = std::upper_bound(ts.begin(), ts.end(), t + tol);
  if (it == ts.begin()) return 0;
  return static_cast<std::size_t>(it - ts.begin()) - 1;
}

std::optional<std::size_t> TimeGrid::find(double t) const noexcept {
  auto i = index_at_or_after(t);
  if (i && std::abs((*times_)[*i] - t) <= snap_tol(horizon())) return i;
  return std::nullopt;
}

bool TimeGrid::same_as(const TimeGrid& other) const noexcept {
  return times_ == other.times_ || *times_ == *other.times_;
}

TimeGrid make_uniform_grid(double horizon, std::size_t steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    fail(ErrorCode::InvalidArgument, "grid horizon must be positive and finite");
  if (steps == 0) fail(ErrorCode::InvalidArgument, "grid needs at least one step");
  std::vector<double> times(steps + 1);
  const double h = horizon / static_cast<double>(steps);
  for (std::size_t i = 0; i < steps; ++i) times[i] = static_cast<double>(i) * h;
  times[steps] = horizon;
  return TimeGrid(std::move(times));
}

Path::Path(TimeGrid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size())
    fail(ErrorCode::GridMismatch, "path length " + std::to_string(values_.size()) +
                                      " does not match grid length " +
                                      std::to_string(grid_.size()));
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]))
      fail(ErrorCode::NumericalFailure, "non-finite path value at index " + std::to_string(i));
  }
}

double Path::value_at(double t) const {
  const double tol = snap_tol(grid_.horizon());
  if (t < -tol || t > grid_.horizon() + tol)
    fail(ErrorCode::RangeError, "time " + format_17g(t) + " outside the grid span");
  if (t <= 0.0) return values_.front();
  if (t >= grid_.horizon()) return values_.back();
  const auto ts = grid_.times();
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - ts.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - ts[lo]) / (ts[hi] - ts[lo]);
  return values_[lo] + w * (values_[hi] - values_[lo]);
}

std::string process_label(const ProcessSpec& spec) {
  struct {
    std::string operator()(const BrownianMotion&) const { return "bm"; }
    std::string operator()(const FractionalBrownianMotion&) const { return "fbm"; }
    std::string operator()(const DerivedProcess& d) const { return d.label; }
  } visitor;
  return std::visit(visitor, spec);
}

Path sample_path(const ProcessSpec& spec, const TimeGrid& grid, SeedSpec seed) {
  struct {
    const TimeGrid& grid;
    SeedSpec seed;
    Path operator()(const BrownianMotion& b) const { return sample_brownian(grid, seed, b.sigma); }
    Path operator()(const FractionalBrownianMotion& f) const {
      return sample_fbm(grid, seed, f.hurst);
    }
    Path operator()(const DerivedProcess& d) const {
      if (!d.generate) fail(ErrorCode::InvalidArgument, "derived process has no generator");
      return d.generate(grid, seed);
    }
  } visitor{grid, seed};
  return std::visit(visitor, spec);
}

Path sample_brownian(const TimeGrid& grid, SeedSpec seed, double sigma,
                     std::uint32_t substream) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    fail(ErrorCode::InvalidArgument, "volatility must be positive");
  NormalStream rng(seed, substream);
  std::vector<double> x(grid.size());
  x[0] = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    x[i] = x[i - 1] + sigma * std::sqrt(grid[i] - grid[i - 1]) * rng.next();
  }
  return Path(grid, std::move(x));
}

Path integrate_ito(const Path& integrand, const Path& integrator) {
  if (!integrand.grid().same_as(integrator.grid()))
    fail(ErrorCode::GridMismatch, "integrand and integrator live on different grids");
  std::vector<double> out(integrand.size());
  out[0] = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < out.size(); ++i) {
    acc += integrand[i] * (integrator[i + 1] - integrator[i]);
    out[i + 1] = acc;
  }
  return Path(integrand.grid(), std::move(out));
}

Ensemble Ensemble::sample(const ProcessSpec& spec, const TimeGrid& grid,
                          std::uint64_t master_seed, std::size_t n_paths) {
  if (n_paths == 0) fail(ErrorCode::InvalidArgument, "ensemble needs at least one path");
  Ensemble e(grid, master_seed, process_label(spec), n_paths);
  std::vector<std::optional<Path>> slots(n_paths);
  parallel_for(n_paths, [&](std::size_t i) {
    slots[i].emplace(sample_path(spec, grid, SeedSpec{master_seed, i}));
  });
  e.paths_.reserve(n_paths);
  for (auto& s : slots) e.paths_.push_back(std::move(*s));
  return e;
}

Ensemble Ensemble::lazy(ProcessSpec spec, const TimeGrid& grid, std::uint64_t master_seed,
                        std::size_t n_paths) {
  if (n_paths == 0) fail(ErrorCode::InvalidArgument, "ensemble needs at least one path");
  Ensemble e(grid, master_seed, process_label(spec), n_paths);
  e.spec_ = std::make_shared<const ProcessSpec>(std::move(spec));
  return e;
}

Ensemble Ensemble::from_paths(std::vector<Path> paths, std::string label,
                              std::uint64_t master_seed) {
  if (paths.empty()) fail(ErrorCode::InvalidArgument, "ensemble needs at least one path");
  for (const auto& p : paths) {
    if (!p.grid().same_as(paths.front().grid()))
      fail(ErrorCode::GridMismatch, "ensemble paths must share one grid");
  }
  Ensemble e(paths.front().grid(), master_seed, std::move(label), paths.size());
  e.paths_ = std::move(paths);
  return e;
}

Path Ensemble::path(std::size_t i) const {
  if (i >= n_paths_) fail(ErrorCode::InvalidArgument, "path index out of range");
  if (materialized()) return paths_[i];
  return sample_path(*spec_, grid_, SeedSpec{master_seed_, i});
}

Ensemble sample_ensemble(const ProcessSpec& spec, const TimeGrid& grid,
                         std::uint64_t master_seed, std::size_t n_paths) {
  return Ensemble::sample(spec, grid, master_seed, n_paths);
}

void write_path_csv(std::ostream& out, const Path& path) {
  out << "t,x\n";
  for (std::size_t i = 0; i < path.size(); ++i) {
    out << format_17g(path.time(i)) << ',' << format_17g(path[i]) << '\n';
  }
}

void write_ensemble_csv(std::ostream& out, const Ensemble& ensemble) {
  out << 't';
  for (std::size_t j = 0; j < ensemble.size(); ++j) out << ",x_" << j;
  out << '\n';
  std::vector<Path> paths;
  paths.reserve(ensemble.size());
  for (std::size_t j = 0; j < ensemble.size(); ++j) paths.push_back(ensemble.path(j));
  for (std::size_t i = 0; i < ensemble.grid().size(); ++i) {
    out << format_17g(ensemble.grid()[i]);
    for (const auto& p : paths) out << ',' << format_17g(p[i]);
    out << '\n';
  }
}

namespace {

std::vector<std::vector<double>> read_numeric_csv(std::istream& in, std::size_t& columns) {
  std::string line;
  // Skip comment lines, then require a header starting with `t`.
  do {
    if (!std::getline(in, line)) fail(ErrorCode::IoError, "path CSV is empty");
  } while (!line.empty() && line[0] == '#');
  if (line.empty() || line[0] != 't') fail(ErrorCode::IoError, "path CSV header must start with t");
  columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < 2) fail(ErrorCode::IoError, "path CSV needs at least one value column");

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    row.reserve(columns);
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        fail(ErrorCode::IoError, "unparseable number in path CSV: '" + cell + "'");
      }
    }
    if (row.size() != columns) fail(ErrorCode::IoError, "ragged row in path CSV");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Path read_path_csv(std::istream& in) {
  std::size_t columns = 0;
  auto rows = read_numeric_csv(in, columns);
  if (columns != 2) fail(ErrorCode::IoError, "single-path CSV must have columns t,x");
  std::vector<double> t, x;
  for (const auto& r : rows) {
    t.push_back(r[0]);
    x.push_back(r[1]);
  }
  return Path(TimeGrid(std::move(t)), std::move(x));
}

Ensemble read_ensemble_csv(std::istream& in, std::string label) {
  std::size_t columns = 0;
  auto rows = read_numeric_csv(in, columns);
  std::vector<double> t;
  for (const auto& r : rows) t.push_back(r[0]);
  TimeGrid grid(std::move(t));
  std::vector<Path> paths;
  for (std::size_t j = 1; j < columns; ++j) {
    std::vector<double> x;
    x.reserve(rows.size());
    for (const auto& r : rows) x.push_back(r[j]);
    paths.emplace_back(grid, std::move(x));
  }
  return Ensemble::from_paths(std::move(paths), std::move(label));
}

}  // namespace stickylab
