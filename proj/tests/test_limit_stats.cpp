#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rcm/circle.hpp"
#include "rcm/limit_stats.hpp"

using namespace rcm;

namespace {

Ensemble doubling() { return Ensemble::finite({{1.0, MapSample::linear(2, 0.0)}}); }
Ensemble mix_a() {
  return Ensemble::finite({{0.9, MapSample::linear(2, 0.0)},
                           {0.1, MapSample::diffeo(0.5, 0.3)}});
}

}  // namespace

TEST_CASE("operator correlations of the doubling map are Fourier-exact") {
  const int n = 4096;
  const TransferContext ctx(doubling(), n);
  const DensityGrid phi = DensityGrid::constant(n);
  {
    const auto f = TrigPoly::cosine(1).sample(n);
    const auto c = correlation_operator(ctx, phi, f, f, 6);
    CHECK(c.values[0] == doctest::Approx(0.5).epsilon(1e-10));
    for (int k = 1; k <= 6; ++k) CHECK(std::fabs(c.values[k]) < 1e-10);
  }
  {
    TrigPoly p;
    p.cos_c = {1.0, 1.0};
    const auto f = p.sample(n);
    const auto c = correlation_operator(ctx, phi, f, f, 6);
    CHECK(c.values[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(c.values[1] == doctest::Approx(0.5).epsilon(1e-8));
    for (int k = 2; k <= 6; ++k) CHECK(std::fabs(c.values[k]) < 1e-8);
  }
  {
    const auto f = TrigPoly::cosine(1).sample(n);
    const std::vector<double> g(n, 0.75);
    const auto c = correlation_operator(ctx, phi, f, g, 4);
    for (double v : c.values) CHECK(std::fabs(v) < 1e-12);
  }
}

TEST_CASE("mc correlations agree with the operator estimator") {
  const int n = 2048;
  const TransferContext ctx(mix_a(), n);
  const auto st = compute_stationary(ctx, 1e-9, 500);
  const TrigPoly f = TrigPoly::cosine(1);
  const auto op = correlation_operator(ctx, st.phi, f.sample(n), f.sample(n), 6);
  const auto mc = correlation_mc(ctx, st.phi, f, f, 6, 200000, 71);
  for (int k = 0; k <= 6; ++k)
    CHECK(std::fabs(op.values[k] - mc.values[k]) <= 4.0 * mc.se[k] + 1e-12);
  // constant g: zero within noise
  TrigPoly cst;
  cst.c0 = 1.0;
  const auto mz = correlation_mc(ctx, st.phi, f, cst, 4, 50000, 72);
  for (int k = 0; k <= 4; ++k) CHECK(std::fabs(mz.values[k]) <= 4.0 * mz.se[k] + 1e-12);
}

TEST_CASE("covariance series: benchmark, coboundary, zero observable") {
  const int n = 4096;
  const TransferContext ctx(doubling(), n);
  const DensityGrid phi = DensityGrid::constant(n);
  {
    const Observable f = Observable::make({TrigPoly::cosine(1)}, 1.0, n);
    const auto est = covariance_series(ctx, phi, f);
    CHECK(est.at(0, 0) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(est.converged);
  }
  {
    TrigPoly p;
    p.cos_c = {1.0, -1.0};  // g - Qg with g = cos
    const Observable f = Observable::make({p}, 1.0, n);
    const auto est = covariance_series(ctx, phi, f);
    CHECK(std::fabs(est.at(0, 0)) < 1e-8);
  }
  {
    TrigPoly zero;
    const Observable f = Observable::make({zero}, 1.0, n);
    const auto est = covariance_series(ctx, phi, f);
    CHECK(est.at(0, 0) == 0.0);
  }
}

TEST_CASE("covariance scaling equivariance and matrix shape") {
  const int n = 2048;
  const TransferContext ctx(mix_a(), n);
  const auto st = compute_stationary(ctx, 1e-9, 500);
  TrigPoly a = TrigPoly::cosine(1);
  TrigPoly b;
  b.sin_c = {1.0};
  const Observable f = Observable::make({a, b}, 1.0, n);
  const auto est = covariance_series(ctx, st.phi, f);
  CHECK(est.dim == 2);
  CHECK(est.at(0, 1) == doctest::Approx(est.at(1, 0)).epsilon(1e-12));
  CHECK(est.min_eigenvalue >= -1e-6);

  TrigPoly a3 = a, b3 = b;
  for (double& c : a3.cos_c) c *= 3.0;
  for (double& c : b3.sin_c) c *= 3.0;
  const auto est9 = covariance_series(ctx, st.phi, Observable::make({a3, b3}, 1.0, n));
  for (int i = 0; i < 4; ++i)
    CHECK(est9.sigma2[i] == doctest::Approx(9.0 * est.sigma2[i]).epsilon(1e-12));
}

TEST_CASE("batch means matches the series estimator") {
  const int n = 1024;
  const TransferContext ctx(doubling(), n);
  const DensityGrid phi = DensityGrid::constant(n);
  const Observable f = Observable::make({TrigPoly::cosine(1)}, 1.0, n);
  const auto batch = covariance_batch_means(ctx, phi, f, 1024, 2048, 73);
  CHECK(std::fabs(batch.at(0, 0) - 0.5) <= 4.0 * batch.se[0]);

  // coboundary: E[S_n^2]/n <= 4 ||g||_inf^2 / n, tiny at n = 1024
  TrigPoly p;
  p.cos_c = {1.0, -1.0};
  const Observable fc = Observable::make({p}, 1.0, n);
  const auto cb = covariance_batch_means(ctx, phi, fc, 1024, 2048, 74);
  CHECK(cb.at(0, 0) <= 4.0 / 1024.0 + 4.0 * cb.se[0]);

  TrigPoly zero;
  const auto z = covariance_batch_means(ctx, phi, Observable::make({zero}, 1.0, n), 256, 512, 75);
  CHECK(z.at(0, 0) == 0.0);
}

TEST_CASE("variance growth: doubling benchmark has flat residuals") {
  const int n = 1024;
  const TransferContext ctx(doubling(), n);
  const DensityGrid phi = DensityGrid::constant(n);
  const Observable f = Observable::make({TrigPoly::cosine(1)}, 1.0, n);
  const std::vector<double> v{1.0};
  const std::vector<std::size_t> ns{64, 128, 256, 512, 1024};
  const auto rep = variance_growth_check(ctx, phi, f, v, ns, 4096, 76);
  CHECK(rep.sigma2_dir == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(rep.no_trend);
  for (std::size_t i = 0; i < ns.size(); ++i)
    CHECK(std::fabs(rep.residual[i]) <= 4.0 * rep.se[i]);
}

TEST_CASE("variance growth: coboundary residuals stay bounded") {
  const int n = 1024;
  const TransferContext ctx(doubling(), n);
  const DensityGrid phi = DensityGrid::constant(n);
  TrigPoly p;
  p.cos_c = {1.0, -1.0};
  const Observable f = Observable::make({p}, 1.0, n);
  const std::vector<double> v{1.0};
  const std::vector<std::size_t> ns{64, 128, 256, 512};
  const auto rep = variance_growth_check(ctx, phi, f, v, ns, 4096, 77);
  // sigma2 = 0: E[S_n^2] = ||g - g o Phi^n||^2 <= 4 ||g||^2 = 4 * 1/2
  for (double m : rep.mean_sq) CHECK(m <= 2.0 + 0.2);

  // zero observable: residuals identically zero
  TrigPoly zero;
  const auto rz = variance_growth_check(ctx, phi, Observable::make({zero}, 1.0, n), v,
                                        ns, 256, 78);
  for (double r : rz.residual) CHECK(r == 0.0);
  CHECK(rz.no_trend);
}

TEST_CASE("batch means matches the series estimator on mix-A") {
  const int n = 1024;
  const TransferContext ctx(mix_a(), n);
  const auto st = compute_stationary(ctx, 1e-9, 500);
  const Observable f = Observable::make({TrigPoly::cosine(1)}, 1.0, n);
  const auto series = covariance_series(ctx, st.phi, f);
  const auto batch = covariance_batch_means(ctx, st.phi, f, 1024, 2048, 79);
  CHECK(std::fabs(batch.at(0, 0) - series.at(0, 0)) <= 4.0 * batch.se[0]);
}

TEST_CASE("clt: doubling benchmark passes, guards fire") {
  const int n = 1024;
  const TransferContext ctx(doubling(), n);
  const DensityGrid phi = DensityGrid::constant(n);
  const Observable f = Observable::make({TrigPoly::cosine(1)}, 1.0, n);
  const std::vector<double> v{1.0};
  const auto rep = clt_test(ctx, phi, f, v, 2048, 4000, 78, 0.5);
  CHECK(rep.has_verdict);
  CHECK(rep.pass);
  CHECK(rep.ad_pass);

  // insufficient samples: power warning, no verdict
  const auto small = clt_test(ctx, phi, f, v, 256, 10, 79, 0.5);
  CHECK(small.power_warning);
  CHECK(!small.has_verdict);

  // degenerate direction routes to the coboundary detector
  TrigPoly p;
  p.cos_c = {1.0, -1.0};
  const Observable fc = Observable::make({p}, 1.0, n);
  CHECK_THROWS_AS(clt_test(ctx, phi, fc, v, 256, 1000, 80), DegenerateDirection);
}

TEST_CASE("coboundary detector on the doubling map") {
  const int n = 4096;
  const TransferContext ctx(doubling(), n);
  const DensityGrid phi = DensityGrid::constant(n);
  {
    TrigPoly p;
    p.cos_c = {1.0, -1.0};
    const auto res = coboundary_residual(ctx, phi, p.sample(n), 64);
    CHECK(res.residual < 1e-6);
    CHECK(res.residual_q < 1e-6);
    // g recovered up to a constant
    const double gm = grid_mean(res.g);
    double err = 0.0;
    for (int j = 0; j < n; ++j)
      err = std::max(err, std::fabs(res.g[j] - gm - std::cos(two_pi * j / double(n))));
    CHECK(err < 1e-6);
  }
  {
    // not a coboundary: residual bounded away from zero
    const auto res = coboundary_residual(ctx, phi, TrigPoly::cosine(1).sample(n), 64);
    CHECK(res.residual >= 0.5);
  }
  {
    const std::vector<double> zero(n, 0.0);
    const auto res = coboundary_residual(ctx, phi, zero, 16);
    CHECK(res.residual == 0.0);
    for (double g : res.g) CHECK(g == 0.0);
  }
}

TEST_CASE("constructed Q-coboundaries are recovered on single-map ensembles") {
  const int n = 2048;
  for (const Ensemble& e :
       {doubling(), Ensemble::finite({{1.0, MapSample::perturbed(2, 0.5, 0.2)}})}) {
    const TransferContext ctx(e, n);
    const auto st = compute_stationary(ctx, 1e-10, 600);
    TrigPoly g0;
    g0.cos_c = {0.7, 0.2};
    g0.sin_c = {0.0, 0.4};
    const auto g0g = g0.sample(n);
    const auto qg0 = ctx.koopman_apply(g0g);
    std::vector<double> fv(n);
    for (int j = 0; j < n; ++j) fv[j] = g0g[j] - qg0[j];
    const auto res = coboundary_residual(ctx, st.phi, fv, 128);
    CHECK(res.residual < 1e-4);
    const double gm = grid_mean(res.g);
    const double g0m = grid_mean(g0g);
    double err = 0.0;
    for (int j = 0; j < n; ++j)
      err = std::max(err, std::fabs((res.g[j] - gm) - (g0g[j] - g0m)));
    CHECK(err < 1e-4);
  }
  // doubling: f = g0 - Q g0 is a trig polynomial, so Sigma^2 is computable
  // and degenerate
  {
    const TransferContext ctx(doubling(), n);
    const DensityGrid phi = DensityGrid::constant(n);
    TrigPoly f;  // g0 = 0.7 cos1 + 0.2 cos2 + 0.4 sin2, Qg0 doubles frequencies
    f.cos_c = {0.7, 0.2 - 0.7, 0.0, -0.2};
    f.sin_c = {0.0, 0.4, 0.0, -0.4};
    const auto est = covariance_series(ctx, phi, Observable::make({f}, 1.0, n));
    CHECK(std::fabs(est.at(0, 0)) < 1e-3);
  }
}

TEST_CASE("multiple correlations: t = 0 exact, pair-correlation cross-check") {
  const int n = 2048;
  const TransferContext ctx(mix_a(), n);
  const auto st = compute_stationary(ctx, 1e-9, 500);
  {
    std::vector<TrigPoly> fs(3, TrigPoly::cosine(1));
    std::vector<double> ts(3, 0.0);
    const auto rep = multiple_correlation_check(ctx, st.phi, fs, ts, 1, 1, 10, 5000, 81);
    CHECK(rep.t_zero_case);
    CHECK(rep.t_zero_exact);
  }
  {
    // m = 0, k = 1 reduces to a pair correlation of unimodular observables:
    // F = e^{i t f(X_0)}, G_n = e^{i t f(X_{1+n})}. Cross-check against the
    // operator estimator applied to cos(t f) and sin(t f) grids.
    std::vector<TrigPoly> fs(2, TrigPoly::cosine(1));
    std::vector<double> ts(2, 0.2);
    const std::size_t n_max = 6;
    const auto rep =
        multiple_correlation_check(ctx, st.phi, fs, ts, 0, 1, n_max, 400000, 82);
    std::vector<double> cg(n), sg(n);
    for (int j = 0; j < n; ++j) {
      const double fx = std::cos(two_pi * j / double(n));
      cg[j] = std::cos(0.2 * fx);
      sg[j] = std::sin(0.2 * fx);
    }
    const auto ccc = correlation_operator(ctx, st.phi, cg, cg, n_max + 1);
    const auto css = correlation_operator(ctx, st.phi, sg, sg, n_max + 1);
    const auto ccs = correlation_operator(ctx, st.phi, cg, sg, n_max + 1);
    const auto csc = correlation_operator(ctx, st.phi, sg, cg, n_max + 1);
    for (std::size_t lag = 0; lag <= n_max; ++lag) {
      const std::size_t m = lag + 1;
      const std::complex<double> want(ccc.values[m] - css.values[m],
                                      ccs.values[m] + csc.values[m]);
      CHECK(std::abs(rep.diff[lag] - want) <= 5.0 * rep.se[lag] + 1e-4);
    }
  }
}
