#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rcm/circle.hpp"
#include "rcm/ensemble.hpp"
#include "rcm/maps.hpp"
#include "rcm/rng.hpp"

using namespace rcm;

TEST_CASE("linear template: constant derivative summary") {
  const MapSample m = MapSample::linear(2, 0.0);
  CHECK(m.lambda == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m.delta == doctest::Approx(0.0));
  CHECK(m.degree == 2);
}

TEST_CASE("perturbed doubling a=1: lambda and the closed-form delta") {
  const MapSample m = MapSample::perturbed(2, 1.0);
  CHECK(m.lambda == doctest::Approx(1.0).epsilon(1e-10));
  // maximize 2 pi sin u / (2 + cos u)^2 at cos u = 1 - sqrt(3)
  const double cu = 1.0 - std::sqrt(3.0);
  const double su = std::sqrt(1.0 - cu * cu);
  const double delta_exact = two_pi * su / ((2.0 + cu) * (2.0 + cu));
  CHECK(m.delta == doctest::Approx(delta_exact).epsilon(1e-8));
  CHECK(m.delta == doctest::Approx(2.6626).epsilon(1e-4));
}

TEST_CASE("degree-1 diffeo: lambda = 1 - a") {
  const MapSample m = MapSample::diffeo(0.5, 0.3);
  CHECK(m.lambda == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(m.degree == 1);
}

TEST_CASE("map with a critical point is rejected") {
  MapSample m;
  m.kind = MapKind::diffeo;
  m.p1 = 1.0;  // a = 1 gives T' = 1 + cos, zero at x = 1/2
  m.p2 = 0.0;
  m.degree = 1;
  CHECK_THROWS_AS(compute_dilation_distortion(m), ZeroDerivative);
}

TEST_CASE("lift relation T(x+1) = T(x) + degree, derivatives consistent") {
  RngStream rng(5, 0);
  const std::vector<MapSample> maps{
      MapSample::linear(3, 0.4), MapSample::perturbed(2, 0.7, 0.3),
      MapSample::diffeo(-0.6, 0.1)};
  for (const auto& m : maps) {
    for (int i = 0; i < 50; ++i) {
      const double x = rng.uniform01() * 3.0 - 1.0;
      CHECK(m.eval_lift(x + 1.0) ==
            doctest::Approx(m.eval_lift(x) + m.degree).epsilon(1e-12));
      const double h = 1e-5;
      const double d_num = (m.eval_lift(x + h) - m.eval_lift(x - h)) / (2.0 * h);
      CHECK(d_num == doctest::Approx(m.deriv(x)).epsilon(1e-6));
      const double d2_num = (m.deriv(x + h) - m.deriv(x - h)) / (2.0 * h);
      CHECK(d2_num == doctest::Approx(m.deriv2(x)).epsilon(1e-6).scale(1.0 + std::fabs(m.deriv2(x))));
    }
  }
}

TEST_CASE("dilation/distortion stable under scan refinement") {
  const MapSample m = MapSample::perturbed(2, 0.9, 1.234);
  const auto d1 = compute_dilation_distortion(m, 4096);
  const auto d2 = compute_dilation_distortion(m, 8192);
  CHECK(std::fabs(d1.lambda - d2.lambda) < 1e-9);
  CHECK(std::fabs(d1.delta - d2.delta) < 1e-9);
}

static Ensemble mix_a() {
  return Ensemble::finite({{0.9, MapSample::linear(2, 0.0)},
                           {0.1, MapSample::diffeo(0.5, 0.3)}});
}

TEST_CASE("standing assumption on mix-A") {
  const auto rep = check_standing_assumption(mix_a(), 0.5);
  CHECK(rep.pass);
  CHECK(rep.jensen_ok);
  CHECK(rep.moments.inv_lambda2 == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(rep.moments.inv_lambda == doctest::Approx(0.65).epsilon(1e-12));
}

TEST_CASE("pure doubling moments") {
  const auto rep = check_standing_assumption(
      Ensemble::finite({{1.0, MapSample::linear(2, 0.0)}}), 1.0);
  CHECK(rep.pass);
  CHECK(rep.moments.inv_lambda2 == doctest::Approx(0.25));
  CHECK(rep.moments.delta2 == doctest::Approx(0.0));
}

TEST_CASE("contracting single atom violates the assumption") {
  const Ensemble e = Ensemble::finite({{1.0, MapSample::diffeo(0.5, 0.0)}});
  const auto rep = check_standing_assumption(e, 0.5);
  CHECK(!rep.pass);
  CHECK(rep.moments.inv_lambda2 == doctest::Approx(4.0).epsilon(1e-9));
  CHECK_THROWS_AS(require_standing_assumption(e, 0.5), AssumptionViolated);
}

TEST_CASE("finite moments equal brute-force weighted sums") {
  const Ensemble e = mix_a();
  const auto m = e.moments(0.5);
  double il = 0.0, il2 = 0.0, il2a = 0.0, d = 0.0, d2 = 0.0, ild = 0.0;
  for (const auto& a : e.atoms()) {
    il += a.weight / a.map.lambda;
    il2 += a.weight / (a.map.lambda * a.map.lambda);
    il2a += a.weight * std::pow(a.map.lambda, -1.0);  // 2 alpha = 1
    d += a.weight * a.map.delta;
    d2 += a.weight * a.map.delta * a.map.delta;
    ild += a.weight * a.map.delta / a.map.lambda;
  }
  CHECK(m.inv_lambda == doctest::Approx(il).epsilon(1e-15));
  CHECK(m.inv_lambda2 == doctest::Approx(il2).epsilon(1e-15));
  CHECK(m.inv_lambda_2alpha == doctest::Approx(il2a).epsilon(1e-15));
  CHECK(m.mean_delta == doctest::Approx(d).epsilon(1e-15));
  CHECK(m.delta2 == doctest::Approx(d2).epsilon(1e-15));
  CHECK(m.inv_lambda_delta == doctest::Approx(ild).epsilon(1e-15));
}

TEST_CASE("sample_sequence: empty, degenerate, frequency") {
  const Ensemble e = mix_a();
  const auto empty = sample_sequence(e, 0, 1, 0);
  CHECK(empty.size() == 0);

  const Ensemble single = Ensemble::finite({{1.0, MapSample::linear(2, 0.0)}});
  const auto five = sample_sequence(single, 5, 1, 0);
  CHECK(five.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(five.atom_index_at(i) == 0);

  const std::size_t n = 1000000;
  const auto big = sample_sequence(e, n, 99, 0);
  std::size_t count0 = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (big.atom_index_at(i) == 0) ++count0;
  const double freq = static_cast<double>(count0) / n;
  const double se = std::sqrt(0.9 * 0.1 / n);
  CHECK(std::fabs(freq - 0.9) <= 4.0 * se);
}

TEST_CASE("suffix drops exactly the first m entries") {
  const Ensemble e = mix_a();
  const auto omega = sample_sequence(e, 20, 3, 1);
  const auto tail = omega.suffix(7);
  CHECK(tail.size() == 13);
  for (std::size_t i = 0; i < tail.size(); ++i)
    CHECK(tail.atom_index_at(i) == omega.atom_index_at(i + 7));
}

TEST_CASE("two streams give independent sequences") {
  const Ensemble e = mix_a();
  const auto a = sample_sequence(e, 1000, 5, 1);
  const auto b = sample_sequence(e, 1000, 5, 2);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < 1000; ++i)
    if (a.atom_index_at(i) == b.atom_index_at(i)) ++agree;
  CHECK(agree < 1000);  // not identical
  // agreement probability for two independent draws is 0.81 + 0.01
  CHECK(std::fabs(agree / 1000.0 - 0.82) < 0.05);
}

TEST_CASE("ensemble json round trip") {
  const auto j = nlohmann::json::parse(R"({"atoms":[
      {"weight":0.9,"kind":"linear","d":2,"c":0.0},
      {"weight":0.1,"kind":"diffeo","a":0.5,"c":0.3}]})");
  const Ensemble e = Ensemble::from_json(j);
  CHECK(e.is_finite());
  CHECK(e.atoms().size() == 2);
  CHECK(e.atoms()[1].map.lambda == doctest::Approx(0.5).epsilon(1e-10));
  const Ensemble e2 = Ensemble::from_json(e.to_json());
  CHECK(e2.atoms()[0].weight == doctest::Approx(0.9));
}

TEST_CASE("continuous family: quadrature moments match dense MC") {
  const auto j = nlohmann::json::parse(
      R"({"family":{"kind":"perturbed","d":2,"a":{"uniform":[0.0,0.8]},"nodes":32}})");
  const Ensemble e = Ensemble::from_json(j);
  CHECK(!e.is_finite());
  const auto mq = e.moments(0.5);
  const auto mc = e.moments_mc(0.5, 20000, 77);
  CHECK(std::fabs(mq.inv_lambda2 - mc.inv_lambda2) <= 4.0 * mc.se_inv_lambda2 + 1e-4);
  // lambda(a) = 2 - a on [0, 0.8]: <lambda^-1> = ln(2/1.2)/0.8
  CHECK(mq.inv_lambda == doctest::Approx(std::log(2.0 / 1.2) / 0.8).epsilon(1e-6));
}

TEST_CASE("malformed ensembles are rejected") {
  CHECK_THROWS_AS(Ensemble::finite({{0.5, MapSample::linear(2, 0.0)}}), Error);
  CHECK_THROWS_AS(Ensemble::from_json(nlohmann::json::object()), Error);
  CHECK_THROWS(make_map(MapKind::diffeo, 1.5, 0.0));
  CHECK_THROWS(make_map(MapKind::perturbed, 2, 2.5));
}
