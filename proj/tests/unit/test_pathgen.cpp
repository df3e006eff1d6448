#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "oracles/ks.hpp"
#include "stickylab/pathgen.hpp"
#include "support.hpp"

using namespace stickylab;

TEST_CASE("uniform grids") {
  const auto g = make_uniform_grid(1.0, 4);
  CHECK(std::vector<double>(g.times().begin(), g.times().end()) ==
        std::vector<double>{0, 0.25, 0.5, 0.75, 1.0});
  const auto g2 = make_uniform_grid(2.0, 1);
  CHECK(g2.size() == 2);
  CHECK(g2[1] == 2.0);
  CHECK(error_code_of([] { make_uniform_grid(0.0, 4); }) == ErrorCode::InvalidArgument);
  CHECK(error_code_of([] { make_uniform_grid(1.0, 0); }) == ErrorCode::InvalidArgument);
  CHECK(error_code_of([] { TimeGrid({0.0, 0.5, 0.5}); }) == ErrorCode::InvalidArgument);
  CHECK(error_code_of([] { TimeGrid({0.1, 0.5}); }) == ErrorCode::InvalidArgument);
  CHECK(error_code_of([] { TimeGrid({0.0}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("grid lookups snap within tolerance") {
  const auto g = make_uniform_grid(1.0, 4);
  CHECK(g.index_at_or_after(0.5) == 2u);
  CHECK(g.index_at_or_after(0.5 + 1e-13) == 2u);
  CHECK(g.index_at_or_after(0.51) == 3u);
  CHECK_FALSE(g.index_at_or_after(1.2).has_value());
  CHECK(g.index_at_or_before(0.74) == 2u);
  CHECK(g.find(0.75) == 3u);
  CHECK_FALSE(g.find(0.7).has_value());
  CHECK(g.is_uniform());
  CHECK_FALSE(TimeGrid({0.0, 0.1, 0.5}).is_uniform());
}

TEST_CASE("paths reject non-finite values and mismatched lengths") {
  const auto g = make_uniform_grid(1.0, 2);
  CHECK(error_code_of([&] { Path(g, {0.0, NAN, 1.0}); }) == ErrorCode::NumericalFailure);
  CHECK(error_code_of([&] { Path(g, {0.0, 1.0}); }) == ErrorCode::GridMismatch);
  const Path p(g, {0.0, 1.0, 3.0});
  CHECK(p.value_at(0.75) == doctest::Approx(2.0));
  CHECK(error_code_of([&] { p.value_at(1.5); }) == ErrorCode::RangeError);
}

TEST_CASE("brownian paths start at zero and are reproducible") {
  const auto g = make_uniform_grid(1.0, 64);
  const Path a = sample_brownian(g, SeedSpec{5, 9});
  const Path b = sample_brownian(g, SeedSpec{5, 9});
  CHECK(a[0] == 0.0);
  CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
}

TEST_CASE("brownian increment moments over 1e5 paths") {
  const double sigma = 2.0;
  const auto g = make_uniform_grid(1.0, 4);
  const auto ens = Ensemble::sample(BrownianMotion{sigma}, g, 2024, 100000);
  const double n = static_cast<double>(ens.size());
  const double dt = 0.25;
  for (std::size_t j = 0; j < g.steps(); ++j) {
    const auto inc = ens.map<double>([&](const Path& p, std::size_t) { return p[j + 1] - p[j]; });
    double mean = 0, var = 0;
    for (double x : inc) mean += x;
    mean /= n;
    for (double x : inc) var += (x - mean) * (x - mean);
    var /= n - 1;
    CHECK(std::abs(mean) < 4 * sigma * std::sqrt(dt / n));
    CHECK(std::abs(var / (sigma * sigma * dt) - 1.0) < 0.05);
  }
  const auto term = ens.map<double>([](const Path& p, std::size_t) { return p[p.size() - 1]; });
  double m2 = 0;
  for (double x : term) m2 += x * x;
  CHECK(m2 / n == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("unit brownian terminal second moment") {
  const auto g = make_uniform_grid(1.0, 8);
  const auto ens = Ensemble::sample(BrownianMotion{1.0}, g, 77, 100000);
  const auto sq = ens.map<double>([](const Path& p, std::size_t) { return p[8] * p[8]; });
  double m = 0;
  for (double x : sq) m += x;
  CHECK(std::abs(m / 100000.0 - 1.0) < 0.02);
}

TEST_CASE("fbm covariance matches the closed form within 3 standard errors") {
  const auto g = make_uniform_grid(1.0, 16);
  const std::size_t pairs[5][2] = {{4, 8}, {8, 16}, {2, 15}, {16, 16}, {5, 6}};
  for (double H : {0.25, 0.5, 0.75}) {
    for (FbmMethod method : {FbmMethod::Circulant, FbmMethod::Dense}) {
      CAPTURE(H);
      CAPTURE(static_cast<int>(method));
      const std::size_t n = 100000;
      const auto ens = Ensemble::sample(
          DerivedProcess{"fbm", [H, method](const TimeGrid& grid, SeedSpec s) {
                           return sample_fbm(grid, s, H, method);
                         }},
          g, 31, n);
      CHECK(ens.path(0)[0] == 0.0);
      for (const auto& pr : pairs) {
        const double s = g[pr[0]], t = g[pr[1]];
        const auto prod = ens.map<double>(
            [&](const Path& p, std::size_t) { return p[pr[0]] * p[pr[1]]; });
        double m = 0;
        for (double x : prod) m += x;
        m /= static_cast<double>(n);
        const double c = fbm_covariance(s, t, H);
        const double se = std::sqrt((fbm_covariance(s, s, H) * fbm_covariance(t, t, H) + c * c) /
                                    static_cast<double>(n));
        CAPTURE(s);
        CAPTURE(t);
        CHECK(std::abs(m - c) < 3 * se);
      }
    }
  }
}

TEST_CASE("fbm covariance formula") {
  CHECK(fbm_covariance(0.5, 1.0, 0.5) == doctest::Approx(0.5));
  CHECK(fbm_covariance(0.5, 1.0, 0.75) ==
        doctest::Approx(0.5 * (std::pow(0.5, 1.5) + 1.0 - std::pow(0.5, 1.5))));
  CHECK(fbm_covariance(0.3, 0.3, 0.25) == doctest::Approx(std::pow(0.3, 0.5)));
}

TEST_CASE("circulant embedding is nonnegative for the hurst values in use") {
  for (double H : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    CAPTURE(H);
    CHECK(fbm_min_embedding_eigenvalue(1024, H) > -1e-10);
  }
}

TEST_CASE("fbm rejects bad input") {
  const TimeGrid irregular({0.0, 0.1, 0.5, 1.0});
  CHECK(error_code_of([&] { sample_fbm(irregular, SeedSpec{}, 0.7); }) ==
        ErrorCode::UnsupportedGrid);
  const auto g = make_uniform_grid(1.0, 8);
  CHECK(error_code_of([&] { sample_fbm(g, SeedSpec{}, 0.0); }) == ErrorCode::InvalidArgument);
  CHECK(error_code_of([&] { sample_fbm(g, SeedSpec{}, 1.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("fbm at H = 1/2 is indistinguishable from brownian motion") {
  const auto g = make_uniform_grid(1.0, 64);
  const std::size_t n = 10000;
  const auto fbm = Ensemble::sample(FractionalBrownianMotion{0.5}, g, 1, n);
  const auto bm = Ensemble::sample(BrownianMotion{1.0}, g, 2, n);
  const auto last = [](const Path& p, std::size_t) { return p[p.size() - 1]; };
  const double d = oracle::ks_statistic(fbm.map<double>(last), bm.map<double>(last));
  CHECK(d < oracle::ks_critical(0.01, n, n));
}

TEST_CASE("ensembles are reproducible and independent of worker count") {
  const auto g = make_uniform_grid(1.0, 128);
  auto draw = [&](std::size_t workers) {
    set_worker_count(workers);
    const auto e = Ensemble::sample(FractionalBrownianMotion{0.3}, g, 11, 50);
    std::vector<double> all;
    for (std::size_t i = 0; i < e.size(); ++i) {
      const auto p = e.path(i);
      all.insert(all.end(), p.values().begin(), p.values().end());
    }
    return all;
  };
  const auto one = draw(1);
  CHECK(draw(4) == one);
  CHECK(draw(8) == one);
  set_worker_count(0);

  const auto lazy = Ensemble::lazy(FractionalBrownianMotion{0.3}, g, 11, 50);
  CHECK_FALSE(lazy.materialized());
  const auto p7 = lazy.path(7);
  CHECK(std::equal(p7.values().begin(), p7.values().end(), one.begin() + 7 * 129));

  const auto single = Ensemble::sample(BrownianMotion{1.0}, g, 3, 1);
  const auto direct = sample_brownian(g, SeedSpec{3, 0});
  CHECK(std::equal(direct.values().begin(), direct.values().end(),
                   single.path(0).values().begin()));
}

TEST_CASE("ito integration by left-point sums") {
  const TimeGrid g({0.0, 1.0, 2.0});
  const Path integrator(g, {1.0, 1.5, 1.25});
  const Path h(g, {1.0, 2.0, 7.0});
  const Path r = integrate_ito(h, integrator);
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 0.5);
  CHECK(r[2] == 0.0);

  const auto g2 = make_uniform_grid(1.0, 100);
  const Path b = sample_brownian(g2, SeedSpec{4, 0});
  const Path one(g2, std::vector<double>(g2.size(), 1.0));
  const Path zero(g2, std::vector<double>(g2.size(), 0.0));
  const Path i1 = integrate_ito(one, b);
  for (std::size_t k = 0; k < g2.size(); ++k) CHECK(i1[k] == doctest::Approx(b[k] - b[0]));
  const Path i0 = integrate_ito(zero, b);
  for (double v : i0.values()) CHECK(v == 0.0);

  CHECK(error_code_of([&] { integrate_ito(one, h); }) == ErrorCode::GridMismatch);
}

TEST_CASE("ito integration is linear in the integrand") {
  const auto g = make_uniform_grid(1.0, 256);
  const Path b = sample_brownian(g, SeedSpec{8, 0});
  const Path h1 = sample_brownian(g, SeedSpec{8, 1});
  const Path h2 = sample_brownian(g, SeedSpec{8, 2});
  const double a = 0.5, c = -2.0;  // powers of two keep the scaling exact
  std::vector<double> mix(g.size());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * h1[i] + c * h2[i];
  const Path lhs = integrate_ito(Path(g, mix), b);
  const Path i1 = integrate_ito(h1, b), i2 = integrate_ito(h2, b);
  for (std::size_t k = 0; k < g.size(); ++k)
    CHECK(lhs[k] == doctest::Approx(a * i1[k] + c * i2[k]).epsilon(1e-12).scale(1.0));
}

TEST_CASE("csv dumps round-trip") {
  const auto g = make_uniform_grid(1.0, 10);
  const auto ens = Ensemble::sample(BrownianMotion{1.0}, g, 9, 3);
  std::stringstream buf;
  write_ensemble_csv(buf, ens);
  CHECK(buf.str().rfind("t,x_0,x_1,x_2\n", 0) == 0);
  const auto back = read_ensemble_csv(buf);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto a = ens.path(i), b = back.path(i);
    CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  }
  CHECK(std::equal(g.times().begin(), g.times().end(), back.grid().times().begin()));

  std::stringstream one;
  write_path_csv(one, ens.path(1));
  CHECK(one.str().rfind("t,x\n", 0) == 0);
  const Path p = read_path_csv(one);
  CHECK(p[5] == ens.path(1)[5]);

  std::stringstream bad("t,x\n0,1\n0.5,abc\n");
  CHECK(error_code_of([&] { read_path_csv(bad); }) == ErrorCode::IoError);
}
