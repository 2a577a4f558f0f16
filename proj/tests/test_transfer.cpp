#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rcm/branch.hpp"
#include "rcm/circle.hpp"
#include "rcm/coupling.hpp"
#include "rcm/transfer.hpp"

using namespace rcm;

namespace {

Ensemble doubling() { return Ensemble::finite({{1.0, MapSample::linear(2, 0.0)}}); }
Ensemble mix_a() {
  return Ensemble::finite({{0.9, MapSample::linear(2, 0.0)},
                           {0.1, MapSample::diffeo(0.5, 0.3)}});
}

std::vector<double> cos_grid(int n, int freq, double amp = 1.0, double base = 0.0) {
  std::vector<double> v(n);
  for (int j = 0; j < n; ++j) v[j] = base + amp * std::cos(two_pi * freq * j / double(n));
  return v;
}

}  // namespace

TEST_CASE("branch inversion: preimages are exact and distinct") {
  RngStream rng(1, 0);
  for (const MapSample& m : {MapSample::linear(2, 0.0), MapSample::linear(3, 0.7),
                             MapSample::perturbed(2, 0.9, 0.5), MapSample::diffeo(0.6, 0.2)}) {
    const BranchInverter inv(m);
    std::vector<double> ys(inv.n_branches()), ds(inv.n_branches());
    for (int i = 0; i < 200; ++i) {
      const double x = rng.uniform01();
      inv.preimages(x, ys.data(), ds.data());
      for (int b = 0; b < inv.n_branches(); ++b) {
        CHECK(circle_dist(m.eval(ys[b]), x) < 1e-12);
        CHECK(ds[b] == doctest::Approx(m.deriv(ys[b])));
        for (int c = 0; c < b; ++c)
          CHECK(std::fabs(ys[b] - ys[c]) > 1e-6);
      }
      const double v = rng.uniform(-3.0, 3.0);
      const double u = inv.lift_invert(v);
      CHECK(m.eval_lift(u) == doctest::Approx(v).epsilon(1e-12));
    }
  }
}

TEST_CASE("transfer on doubling: Lebesgue fixed, Fourier mode halving") {
  const int n = 1024;
  const TransferContext ctx(doubling(), n);
  {
    const auto out = ctx.annealed_apply(std::vector<double>(n, 1.0));
    for (double x : out) CHECK(x == doctest::Approx(1.0).epsilon(1e-14));
  }
  {
    const auto out = ctx.annealed_apply(cos_grid(n, 2, 1.0, 1.0));
    const auto expect = cos_grid(n, 1, 1.0, 1.0);
    double err = 0.0;
    for (int j = 0; j < n; ++j) err = std::max(err, std::fabs(out[j] - expect[j]));
    CHECK(err <= 1e-8);
  }
  {
    const auto out = ctx.annealed_apply(cos_grid(n, 1, 1.0, 1.0));
    for (double x : out) CHECK(x == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("transfer preserves mass and positivity") {
  const int n = 4096;
  const TransferContext ctx(mix_a(), n);
  RngStream rng(21, 0);
  for (int rep = 0; rep < 5; ++rep) {
    RngStream cr(21, rep + 1);
    const TrigPoly p = TrigPoly::random(cr, 3, 0.4);
    std::vector<double> v(n);
    for (int j = 0; j < n; ++j) v[j] = 1.0 + p.eval(j / double(n));
    const double mass_in = grid_mean(v);
    const auto out = ctx.annealed_apply(v);
    CHECK(std::fabs(grid_mean(out) - mass_in) < 1e-10);
    double mn = 1e300;
    for (double x : out) mn = std::min(mn, x);
    CHECK(mn > 0.0);
  }
}

TEST_CASE("quenched push: empty composition, mode shift, normalization") {
  const int n = 1024;
  const Ensemble e = doubling();
  const TransferContext ctx(e, n);
  const OmegaSequence omega = sample_sequence(e, 8, 2, 1);

  const DensityGrid psi(cos_grid(n, 4, 1.0, 1.0), true);
  const auto zero = quenched_push(ctx, omega, psi, 0);
  CHECK(l1_distance(zero.density, psi) == 0.0);

  const auto two = quenched_push(ctx, omega, psi, 2);
  const DensityGrid want(cos_grid(n, 1, 1.0, 1.0), true);
  CHECK(l1_distance(two.density, want) < 1e-8);

  const auto three = quenched_push(ctx, omega, psi, 3);
  CHECK(l1_distance(three.density, DensityGrid::constant(n)) < 1e-8);
  CHECK(three.max_step_drift < 1e-8);
  CHECK(three.density.integral() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("koopman operator: constants, doubling composition, duality") {
  const int n = 4096;
  {
    const TransferContext ctx(doubling(), n);
    const auto c = ctx.koopman_apply(std::vector<double>(n, 2.5));
    for (double x : c) CHECK(x == doctest::Approx(2.5).epsilon(1e-14));
    const auto q = ctx.koopman_apply(cos_grid(n, 1));
    const auto want = cos_grid(n, 2);
    for (int j = 0; j < n; j += 37)
      CHECK(q[j] == doctest::Approx(want[j]).epsilon(1e-12));
  }
  const TransferContext ctx(mix_a(), n);
  for (int rep = 0; rep < 50; ++rep) {
    RngStream rng(22, rep + 1);
    const auto f = TrigPoly::random(rng, 3, 1.0).sample(n);
    const auto g = TrigPoly::random(rng, 3, 1.0).sample(n);
    const auto qf = ctx.koopman_apply(f);
    const auto pg = ctx.annealed_apply(g);
    double lhs = 0.0, rhs = 0.0;
    for (int j = 0; j < n; ++j) {
      lhs += g[j] * qf[j];
      rhs += pg[j] * f[j];
    }
    CHECK(std::fabs(lhs - rhs) / n <= 1e-8);
  }
}

TEST_CASE("annealed mix: Lebesgue-preserving pair, MC one-step histogram") {
  const int n = 1024;
  {
    // equal mix of d=2 and d=3 linear maps keeps Lebesgue invariant
    const TransferContext ctx(
        Ensemble::finite({{0.5, MapSample::linear(2, 0.0)},
                          {0.5, MapSample::linear(3, 0.0)}}), n);
    const auto out = ctx.annealed_apply(std::vector<double>(n, 1.0));
    for (double x : out) CHECK(x == doctest::Approx(1.0).epsilon(1e-12));
  }
  {
    // mix-A pushes Lebesgue to a nonconstant density; a 1e6-sample one-step
    // Monte Carlo histogram agrees bin by bin within 3 SE
    const Ensemble e = mix_a();
    const TransferContext ctx(e, n);
    const auto p1 = ctx.annealed_apply(std::vector<double>(n, 1.0));
    CHECK(grid_mean(p1) == doctest::Approx(1.0).epsilon(1e-10));
    double spread = 0.0;
    for (double x : p1) spread = std::max(spread, std::fabs(x - 1.0));
    CHECK(spread > 0.01);

    const int bins = 64;
    const std::size_t samples = 1000000;
    std::vector<double> counts(bins, 0.0);
    RngStream rng(25, 1);
    for (std::size_t s = 0; s < samples; ++s) {
      const double x0 = rng.uniform01();
      const double x1 = e.atoms()[e.sample_atom_index(rng)].map.eval(x0);
      ++counts[std::min(bins - 1, static_cast<int>(x1 * bins))];
    }
    const int per_bin = n / bins;
    for (int b = 0; b < bins; ++b) {
      double expd = 0.0;
      for (int j = 0; j < per_bin; ++j) expd += p1[b * per_bin + j];
      expd /= n;  // bin probability
      const double emp = counts[b] / samples;
      const double se = std::sqrt(expd * (1.0 - expd) / samples);
      CHECK(std::fabs(emp - expd) <= 3.0 * se + 1e-6);
    }
  }
}

TEST_CASE("koopman sup-norm contraction") {
  const int n = 2048;
  const TransferContext ctx(mix_a(), n);
  RngStream rng(23, 0);
  const auto f = TrigPoly::random(rng, 4, 1.0).sample(n);
  double fmax = 0.0;
  for (double x : f) fmax = std::max(fmax, std::fabs(x));
  const auto qf = ctx.koopman_apply(f);
  for (double x : qf) CHECK(std::fabs(x) <= fmax + 1e-9);
}

TEST_CASE("stationary: doubling and d=3 are Lebesgue; mix-A converges") {
  {
    const TransferContext ctx(doubling(), 1024);
    const auto st = compute_stationary(ctx, 1e-12, 50);
    CHECK(st.residual < 1e-12);
    CHECK(st.iterations == 1);
    for (int j = 0; j < 1024; j += 13) CHECK(st.phi[j] == doctest::Approx(1.0).epsilon(1e-12));
  }
  {
    const TransferContext ctx(Ensemble::finite({{1.0, MapSample::linear(3, 0.0)}}), 1024);
    const auto st = compute_stationary(ctx, 1e-12, 50);
    CHECK(st.residual < 1e-12);
  }
  {
    const TransferContext ctx(mix_a(), 4096);
    const auto st = compute_stationary(ctx, 1e-8, 400);
    CHECK(st.residual < 1e-8);
    CHECK(st.inf_phi > 0.0);
    CHECK(st.inf_phi >= st.inf_lower_bound - 1e-3);
    CHECK(st.lip_phi > 0.0);
    // stationarity of mu against Q: int Q f dmu = int f dmu
    RngStream rng(24, 0);
    for (int rep = 0; rep < 10; ++rep) {
      RngStream cr(24, rep + 1);
      const auto f = TrigPoly::random(cr, 3, 1.0).sample(4096);
      const auto qf = ctx.koopman_apply(f);
      double a = 0.0, b = 0.0;
      for (int j = 0; j < 4096; ++j) {
        a += qf[j] * st.phi[j];
        b += f[j] * st.phi[j];
      }
      CHECK(std::fabs(a - b) / 4096.0 <= 1e-8);
    }
  }
}

TEST_CASE("stationary solve flags non-convergence") {
  const TransferContext ctx(mix_a(), 512);
  CHECK_THROWS_AS(compute_stationary(ctx, 1e-13, 2), NoConvergence);
}

TEST_CASE("normalized operator Phat: fixed point and sup contraction") {
  const int n = 2048;
  const TransferContext ctx(mix_a(), n);
  const auto st = compute_stationary(ctx, 1e-10, 600);
  const cvector one(n, 1.0);
  const auto p1 = normalized_transfer_apply(ctx, st.phi, one);
  for (int j = 0; j < n; j += 31)
    CHECK(std::abs(p1[j] - std::complex<double>(1.0, 0.0)) <= 1e-8);

  // unimodular tilt: |Phat_g h| <= ||h||_inf pointwise
  cvector g(n), h(n);
  for (int j = 0; j < n; ++j) {
    g[j] = std::polar(1.0, 0.1 * std::cos(two_pi * j / double(n)));
    h[j] = std::complex<double>(1.0, 0.0);
  }
  const auto ph = normalized_transfer_apply(ctx, st.phi, g, h);
  for (int j = 0; j < n; ++j) CHECK(std::abs(ph[j]) <= 1.0 + 1e-8);
  const auto qh = koopman_tilted_apply(ctx, g, h);
  for (int j = 0; j < n; ++j) CHECK(std::abs(qh[j]) <= 1.0 + 1e-8);

  CHECK_THROWS_AS(
      normalized_transfer_apply(ctx, DensityGrid(std::vector<double>(n, 0.0), false), one),
      NonpositiveDensity);
}

TEST_CASE("tilted push identity on doubling (Fourier-exact cases)") {
  const int n = 4096;
  const Ensemble e = doubling();
  const TransferContext ctx(e, n);
  const OmegaSequence omega = sample_sequence(e, 3, 7, 1);

  // n = 1 base case: both orders coincide by definition
  {
    std::vector<Tilt> tilts{{0.3, TrigPoly::cosine(1)}};
    const cvector h(n, 1.0);
    const auto res = tilted_quenched_push(ctx, omega, 1, tilts, h);
    CHECK(res.max_abs_diff <= 1e-10);
  }
  // n = 3 with t = 0.1
  {
    std::vector<Tilt> tilts(3);
    for (auto& t : tilts) { t.t = 0.1; t.f = TrigPoly::cosine(1); }
    const cvector h(n, 1.0);
    const auto res = tilted_quenched_push(ctx, omega, 3, tilts, h);
    CHECK(res.max_abs_diff <= 1e-6);
  }
  // all tilts zero reduces to the plain push
  {
    std::vector<Tilt> tilts(3);
    for (auto& t : tilts) { t.t = 0.0; t.f = TrigPoly::cosine(1); }
    const cvector h(n, 1.0);
    const auto res = tilted_quenched_push(ctx, omega, 3, tilts, h);
    const auto plain = quenched_push(ctx, omega, DensityGrid::constant(n), 3);
    for (int j = 0; j < n; j += 41) {
      CHECK(res.left[j].real() == doctest::Approx(plain.density[j]).epsilon(1e-12));
      CHECK(res.left[j].imag() == 0.0);
    }
  }
}

TEST_CASE("distortion bound on composed inverse branches") {
  // linear maps distort nothing
  {
    const Ensemble e = doubling();
    const TransferContext ctx(e, 256);
    const OmegaSequence omega = sample_sequence(e, 6, 9, 1);
    const auto rep = verify_distortion(ctx, omega, 6, 50, 101);
    CHECK(rep.ok);
    CHECK(rep.max_abs_log_ratio_zero_rn <= 1e-10);
  }
  // mix-A sequences: bound holds with slack
  {
    const Ensemble e = mix_a();
    const TransferContext ctx(e, 256);
    for (std::uint64_t s = 1; s <= 10; ++s) {
      const OmegaSequence omega = sample_sequence(e, 10, 10, s);
      const auto rep = verify_distortion(ctx, omega, 10, 100, 200 + s);
      CHECK(rep.ok);
      CHECK(rep.max_normalized_log_ratio <= 1.0 + 1e-6);
    }
  }
}

TEST_CASE("same-branch API rejects mismatched branch lists") {
  const Ensemble e = mix_a();
  const TransferContext ctx(e, 128);
  const OmegaSequence omega = sample_sequence(e, 2, 11, 1);
  std::vector<const BranchInverter*> maps{&ctx.inverter(omega.atom_index_at(0)),
                                          &ctx.inverter(omega.atom_index_at(1))};
  const std::vector<int> b1{0, 0}, b2{0, 1};
  CHECK_THROWS_AS(
      log_derivative_ratio_same_branch(maps, 0.2, 0.3, b1, b2), BranchMismatch);
}

TEST_CASE("Hoelder propagation along sequences") {
  const int n = 4096;
  // pure doubling, psi = 1: all bounds are 0 <= 0
  {
    const Ensemble e = doubling();
    const TransferContext ctx(e, n);
    const OmegaSequence omega = sample_sequence(e, 3, 12, 1);
    const auto rep = verify_holder_propagation(ctx, omega, 3, DensityGrid::constant(n), 0.5);
    CHECK(rep.all_ok);
    CHECK(rep.sup_checked);
    for (const auto& row : rep.rows) CHECK(row.bound == doctest::Approx(0.0));
  }
  // doubling, psi = 1 + cos/2 at n = 1: |log L psi|_a <= 2^-a |log psi|_a
  {
    const Ensemble e = doubling();
    const TransferContext ctx(e, n);
    const OmegaSequence omega = sample_sequence(e, 1, 13, 1);
    std::vector<double> v(n);
    for (int j = 0; j < n; ++j) v[j] = 1.0 + 0.5 * std::cos(two_pi * j / double(n));
    const DensityGrid psi(std::move(v), true);
    const double alpha = 0.5;
    const auto rep = verify_holder_propagation(ctx, omega, 1, psi, alpha);
    CHECK(rep.all_ok);
    std::vector<double> lg(psi.values().begin(), psi.values().end());
    for (double& x : lg) x = std::log(x);
    const double rhs = std::pow(0.5, alpha) * holder_estimate(lg, alpha);
    CHECK(rep.rows[0].bound == doctest::Approx(rhs).epsilon(1e-12));
    CHECK(rep.rows[0].lhs <= rhs + 1e-3);
  }
  // mix-A, psi = 1, several sequences
  {
    const Ensemble e = mix_a();
    const TransferContext ctx(e, n);
    for (std::uint64_t s = 1; s <= 5; ++s) {
      const OmegaSequence omega = sample_sequence(e, 5, 14, s);
      const auto rep = verify_holder_propagation(ctx, omega, 5, DensityGrid::constant(n), 0.5);
      CHECK(rep.all_ok);
    }
  }
}
