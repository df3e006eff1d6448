// Fractional Brownian motion on uniform grids.
//
// Primary route: circulant embedding of the fractional Gaussian noise
// autocovariance (Davies-Harte). The 2n-point circulant is diagonalised by
// the DFT; a complex Gaussian vector scaled by sqrt(eigenvalues) and pushed
// through one inverse real FFT yields n increments with exactly the target
// covariance. Eigenvalues below -1e-10 mean the embedding is not a valid
// covariance, in which case Auto falls back to a dense Cholesky factor.

#include <fftw3.h>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>
#include <utility>

#include "stickylab/error.hpp"
#include "stickylab/pathgen.hpp"

namespace stickylab {

namespace {

constexpr double kEigenTolerance = 1e-10;

// Autocovariance of unit-spacing fractional Gaussian noise at integer lag k.
double fgn_autocov(double k, double hurst) {
  const double two_h = 2.0 * hurst;
  return 0.5 * (std::pow(std::abs(k + 1.0), two_h) + std::pow(std::abs(k - 1.0), two_h) -
                2.0 * std::pow(std::abs(k), two_h));
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};
template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <class T>
FftwBuffer<T> fftw_buffer(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
  if (!p) fail(ErrorCode::NumericalFailure, "FFTW allocation failed");
  return FftwBuffer<T>(p);
}

// FFTW planning is not thread-safe; execution of an existing plan on fresh
// (fftw_malloc-aligned) arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct Embedding {
  std::size_t steps = 0;
  std::size_t size = 0;                 // circulant size M = 2 * steps
  std::vector<double> sqrt_weights;     // steps + 1 entries, see sample_circulant
  double min_eigenvalue = 0.0;
  fftw_plan inverse = nullptr;          // complex(M/2+1) -> real(M)
};

std::shared_ptr<const Embedding> build_embedding(std::size_t steps, double hurst) {
  auto emb = std::make_shared<Embedding>();
  emb->steps = steps;
  emb->size = 2 * steps;
  const std::size_t m = emb->size;

  auto row = fftw_buffer<double>(m);
  for (std::size_t j = 0; j <= steps; ++j) row[j] = fgn_autocov(static_cast<double>(j), hurst);
  for (std::size_t j = 1; j < steps; ++j) row[m - j] = row[j];
  auto spectrum = fftw_buffer<fftw_complex>(steps + 1);
  auto scratch = fftw_buffer<double>(m);

  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_plan forward = fftw_plan_dft_r2c_1d(static_cast<int>(m), row.get(), spectrum.get(),
                                             FFTW_ESTIMATE);
    fftw_execute(forward);
    fftw_destroy_plan(forward);
    emb->inverse = fftw_plan_dft_c2r_1d(static_cast<int>(m), spectrum.get(), scratch.get(),
                                        FFTW_ESTIMATE);
  }

  emb->sqrt_weights.resize(steps + 1);
  emb->min_eigenvalue = spectrum[0][0];
  for (std::size_t k = 0; k <= steps; ++k) {
    const double lambda = spectrum[k][0];
    emb->min_eigenvalue = std::min(emb->min_eigenvalue, lambda);
    const double clamped = std::max(lambda, 0.0);
    // Endpoints are real; interior modes split their variance between the
    // real and imaginary parts.
    const bool real_mode = (k == 0 || k == steps);
    emb->sqrt_weights[k] = std::sqrt(clamped / (real_mode ? m : 2.0 * m));
  }
  return emb;
}

std::shared_ptr<const Embedding> embedding_for(std::size_t steps, double hurst) {
  static std::mutex cache_mutex;
  static std::map<std::pair<std::size_t, double>, std::shared_ptr<const Embedding>> cache;
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto key = std::make_pair(steps, hurst);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto emb = build_embedding(steps, hurst);
  cache.emplace(key, emb);
  return emb;
}

std::vector<double> sample_circulant(const Embedding& emb, NormalStream& rng) {
  const std::size_t n = emb.steps;
  auto spectrum = fftw_buffer<fftw_complex>(n + 1);
  auto out = fftw_buffer<double>(emb.size);
  for (std::size_t k = 0; k <= n; ++k) {
    const bool real_mode = (k == 0 || k == n);
    const double re = rng.next();
    const double im = real_mode ? 0.0 : rng.next();
    spectrum[k][0] = emb.sqrt_weights[k] * re;
    spectrum[k][1] = emb.sqrt_weights[k] * im;
  }
  fftw_execute_dft_c2r(emb.inverse, spectrum.get(), out.get());
  return std::vector<double>(out.get(), out.get() + n);
}

using DenseFactor = Eigen::MatrixXd;

std::shared_ptr<const DenseFactor> dense_factor_for(std::size_t steps, double step, double hurst) {
  static std::mutex cache_mutex;
  static std::map<std::tuple<std::size_t, double, double>, std::shared_ptr<const DenseFactor>> cache;
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto key = std::make_tuple(steps, step, hurst);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  Eigen::MatrixXd cov(steps, steps);
  for (std::size_t i = 0; i < steps; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = fbm_covariance(static_cast<double>(i + 1) * step,
                                      static_cast<double>(j + 1) * step, hurst);
      cov(i, j) = v;
      cov(j, i) = v;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    fail(ErrorCode::NumericalFailure, "dense fBm covariance is not positive definite");
  auto factor = std::make_shared<const DenseFactor>(llt.matrixL());
  cache.emplace(key, factor);
  return factor;
}

}  // namespace

double fbm_covariance(double s, double t, double hurst) noexcept {
  const double two_h = 2.0 * hurst;
  return 0.5 * (std::pow(s, two_h) + std::pow(t, two_h) - std::pow(std::abs(t - s), two_h));
}

double fbm_min_embedding_eigenvalue(std::size_t steps, double hurst) {
  return embedding_for(steps, hurst)->min_eigenvalue;
}

Path sample_fbm(const TimeGrid& grid, SeedSpec seed, double hurst, FbmMethod method) {
  if (!(hurst > 0.0 && hurst < 1.0))
    fail(ErrorCode::InvalidArgument, "Hurst parameter must lie in (0, 1)");
  if (!grid.is_uniform())
    fail(ErrorCode::UnsupportedGrid, "fractional Brownian motion needs a uniform grid");

  const std::size_t n = grid.steps();
  const double step = grid.horizon() / static_cast<double>(n);
  NormalStream rng(seed);
  std::vector<double> x(n + 1, 0.0);

  bool use_dense = method == FbmMethod::Dense;
  if (!use_dense) {
    auto emb = embedding_for(n, hurst);
    if (emb->min_eigenvalue < -kEigenTolerance) {
      if (method == FbmMethod::Circulant)
        fail(ErrorCode::NumericalFailure, "circulant embedding has negative eigenvalues");
      use_dense = true;
    } else {
      const double scale = std::pow(step, hurst);
      const auto noise = sample_circulant(*emb, rng);
      for (std::size_t i = 0; i < n; ++i) x[i + 1] = x[i] + scale * noise[i];
    }
  }
  if (use_dense) {
    auto factor = dense_factor_for(n, step, hurst);
    Eigen::VectorXd z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = rng.next();
    const Eigen::VectorXd v = factor->triangularView<Eigen::Lower>() * z;
    for (std::size_t i = 0; i < n; ++i) x[i + 1] = v[i];
  }
  return Path(grid, std::move(x));
}

}  // namespace stickylab
