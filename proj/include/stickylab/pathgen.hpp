#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "stickylab/random.hpp"

namespace stickylab {

// Strictly increasing time points starting at 0. Copies share the same
// immutable storage, so paths can hold their grid by value.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> times);

  std::span<const double> times() const noexcept { return *times_; }
  std::size_t size() const noexcept { return times_->size(); }
  std::size_t steps() const noexcept { return times_->size() - 1; }
  double operator[](std::size_t i) const noexcept { return (*times_)[i]; }
  double horizon() const noexcept { return times_->back(); }

  bool is_uniform(double rel_tol = 1e-9) const noexcept;

  // Smallest index with times[i] >= t (up to a relative snap tolerance), or
  // nullopt when t lies beyond the horizon.
  std::optional<std::size_t> index_at_or_after(double t) const noexcept;
  // Largest index with times[i] <= t (same tolerance). t must be >= 0.
  std::size_t index_at_or_before(double t) const noexcept;
  // Index of a grid time equal to t within tolerance.
  std::optional<std::size_t> find(double t) const noexcept;

  bool same_as(const TimeGrid& other) const noexcept;

 private:
  std::shared_ptr<const std::vector<double>> times_;
};

TimeGrid make_uniform_grid(double horizon, std::size_t steps);

// One realisation: a value per grid point, all finite.
class Path {
 public:
  Path(TimeGrid grid, std::vector<double> values);

  const TimeGrid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double time(std::size_t i) const noexcept { return grid_[i]; }

  // Linear interpolation between grid points; t must lie in [0, horizon].
  double value_at(double t) const;

  std::vector<double> take_values() && { return std::move(values_); }

 private:
  TimeGrid grid_;
  std::vector<double> values_;
};

struct BrownianMotion {
  double sigma = 1.0;
};

struct FractionalBrownianMotion {
  double hurst = 0.5;
};

// A process built elsewhere (transforms, examples) from a per-path generator.
struct DerivedProcess {
  std::string label;
  std::function<Path(const TimeGrid&, SeedSpec)> generate;
};

using ProcessSpec = std::variant<BrownianMotion, FractionalBrownianMotion, DerivedProcess>;

std::string process_label(const ProcessSpec& spec);
Path sample_path(const ProcessSpec& spec, const TimeGrid& grid, SeedSpec seed);

// `substream` selects an independent stream for the same (seed, path) pair,
// used by constructions that need more than one driving noise.
Path sample_brownian(const TimeGrid& grid, SeedSpec seed, double sigma = 1.0,
                     std::uint32_t substream = 0);

enum class FbmMethod {
  Auto,        // circulant embedding, dense Cholesky if the embedding fails
  Circulant,   // circulant embedding only
  Dense,       // dense Cholesky only
};

Path sample_fbm(const TimeGrid& grid, SeedSpec seed, double hurst,
                FbmMethod method = FbmMethod::Auto);

// Smallest eigenvalue of the circulant embedding used for `steps` fractional
// Gaussian noise increments; exposed for diagnostics and tests.
double fbm_min_embedding_eigenvalue(std::size_t steps, double hurst);

double fbm_covariance(double s, double t, double hurst) noexcept;

// Left-point Riemann sums: result[k] = sum_{i<k} integrand[i] * dX_i.
Path integrate_ito(const Path& integrand, const Path& integrator);

// A seeded collection of paths on one grid. Either materialised, or lazy:
// lazy ensembles regenerate path i from (master_seed, i) on every access,
// which keeps memory flat for fine grids.
class Ensemble {
 public:
  static Ensemble sample(const ProcessSpec& spec, const TimeGrid& grid,
                         std::uint64_t master_seed, std::size_t n_paths);
  static Ensemble lazy(ProcessSpec spec, const TimeGrid& grid,
                       std::uint64_t master_seed, std::size_t n_paths);
  static Ensemble from_paths(std::vector<Path> paths, std::string label,
                             std::uint64_t master_seed = 0);

  std::size_t size() const noexcept { return n_paths_; }
  const TimeGrid& grid() const noexcept { return grid_; }
  std::uint64_t master_seed() const noexcept { return master_seed_; }
  const std::string& label() const noexcept { return label_; }
  bool materialized() const noexcept { return !paths_.empty(); }

  Path path(std::size_t i) const;

  // fn(path, index) evaluated for every path across the worker pool; the
  // output is ordered by path index.
  template <class R, class F>
  std::vector<R> map(F&& fn) const;

 private:
  Ensemble(TimeGrid grid, std::uint64_t seed, std::string label, std::size_t n)
      : grid_(std::move(grid)), master_seed_(seed), label_(std::move(label)), n_paths_(n) {}

  TimeGrid grid_;
  std::uint64_t master_seed_;
  std::string label_;
  std::size_t n_paths_;
  std::vector<Path> paths_;
  std::shared_ptr<const ProcessSpec> spec_;
};

Ensemble sample_ensemble(const ProcessSpec& spec, const TimeGrid& grid,
                         std::uint64_t master_seed, std::size_t n_paths);

// CSV dumps: `t,x` for one path, `t,x_0,...,x_{n-1}` for an ensemble.
void write_path_csv(std::ostream& out, const Path& path);
void write_ensemble_csv(std::ostream& out, const Ensemble& ensemble);
Path read_path_csv(std::istream& in);
Ensemble read_ensemble_csv(std::istream& in, std::string label = "external");

}  // namespace stickylab

#include "stickylab/parallel.hpp"

namespace stickylab {

template <class R, class F>
std::vector<R> Ensemble::map(F&& fn) const {
  return parallel_map<R>(n_paths_, [&](std::size_t i) {
    if (materialized()) return static_cast<R>(fn(paths_[i], i));
    const Path p = path(i);
    return static_cast<R>(fn(p, i));
  });
}

}  // namespace stickylab
