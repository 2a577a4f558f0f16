#include "rcm/maps.hpp"

#include <cmath>

#include "rcm/circle.hpp"

namespace rcm {

std::string to_string(MapKind k) {
  switch (k) {
    case MapKind::linear: return "linear";
    case MapKind::perturbed: return "perturbed";
    case MapKind::diffeo: return "diffeo";
  }
  return "?";
}

MapKind map_kind_from_string(const std::string& s) {
  if (s == "linear") return MapKind::linear;
  if (s == "perturbed") return MapKind::perturbed;
  if (s == "diffeo") return MapKind::diffeo;
  throw Error("unknown map kind: " + s);
}

double MapSample::eval_lift(double x) const {
  switch (kind) {
    case MapKind::linear:
      return p1 * x + p2;
    case MapKind::perturbed:
      return p1 * x + (p2 / two_pi) * std::sin(two_pi * x + p3);
    case MapKind::diffeo:
      return x + p2 + (p1 / two_pi) * std::sin(two_pi * x);
  }
  return 0.0;
}

double MapSample::eval(double x) const { return wrap01(eval_lift(x)); }

double MapSample::deriv(double x) const {
  switch (kind) {
    case MapKind::linear:
      return p1;
    case MapKind::perturbed:
      return p1 + p2 * std::cos(two_pi * x + p3);
    case MapKind::diffeo:
      return 1.0 + p1 * std::cos(two_pi * x);
  }
  return 0.0;
}

double MapSample::deriv2(double x) const {
  switch (kind) {
    case MapKind::linear:
      return 0.0;
    case MapKind::perturbed:
      return -two_pi * p2 * std::sin(two_pi * x + p3);
    case MapKind::diffeo:
      return -two_pi * p1 * std::sin(two_pi * x);
  }
  return 0.0;
}

namespace {

// Golden-section maximization of f on [a,b], relative tolerance on x.
template <typename F>
double golden_max(F f, double a, double b, double tol = 1e-12) {
  constexpr double inv_phi = 0.6180339887498949;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d; d = c; fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return std::max(fc, fd);
}

}  // namespace

DilationDistortion compute_dilation_distortion(const MapSample& map, int scan_points) {
  const int n = scan_points;
  const double h = 1.0 / n;
  double min_d = 0.0, max_r = 0.0;
  int arg_min = 0, arg_max = 0;
  for (int j = 0; j < n; ++j) {
    const double x = j * h;
    const double d = std::fabs(map.deriv(x));
    if (d < 1e-12)
      throw ZeroDerivative("map has |T'| < 1e-12 at x = " + std::to_string(x));
    const double r = std::fabs(map.deriv2(x)) / (d * d);
    if (j == 0 || d < min_d) { min_d = d; arg_min = j; }
    if (j == 0 || r > max_r) { max_r = r; arg_max = j; }
  }
  // refine within +-1 cell of the best scan point
  const auto neg_abs_deriv = [&](double x) { return -std::fabs(map.deriv(x)); };
  const auto ratio = [&](double x) {
    const double d = map.deriv(x);
    return std::fabs(map.deriv2(x)) / (d * d);
  };
  const double lam = -golden_max(neg_abs_deriv, (arg_min - 1) * h, (arg_min + 1) * h);
  const double del = golden_max(ratio, (arg_max - 1) * h, (arg_max + 1) * h);
  if (lam < 1e-12) throw ZeroDerivative("map dilation below 1e-12 after refinement");
  return {lam, del};
}

MapSample make_map(MapKind kind, double d_or_a, double c_or_a, double phase) {
  MapSample m;
  m.kind = kind;
  switch (kind) {
    case MapKind::linear: {
      const int d = static_cast<int>(std::lround(d_or_a));
      if (d < 1 || std::fabs(d_or_a - d) > 0.0)
        throw Error("linear template needs integer d >= 1");
      m.p1 = d; m.p2 = c_or_a; m.degree = d;
      break;
    }
    case MapKind::perturbed: {
      const int d = static_cast<int>(std::lround(d_or_a));
      if (d < 1 || std::fabs(d_or_a - d) > 0.0)
        throw Error("perturbed template needs integer d >= 1");
      if (std::fabs(c_or_a) >= d)
        throw Error("perturbed template needs |a| < d");
      m.p1 = d; m.p2 = c_or_a; m.p3 = phase; m.degree = d;
      break;
    }
    case MapKind::diffeo: {
      if (std::fabs(d_or_a) >= 1.0)
        throw Error("diffeo template needs |a| < 1");
      m.p1 = d_or_a; m.p2 = c_or_a; m.degree = 1;
      break;
    }
  }
  const auto dd = compute_dilation_distortion(m);
  m.lambda = dd.lambda;
  m.delta = dd.delta;
  return m;
}

MapSample MapSample::linear(int d, double c) { return make_map(MapKind::linear, d, c); }
MapSample MapSample::perturbed(int d, double a, double phase) {
  return make_map(MapKind::perturbed, d, a, phase);
}
MapSample MapSample::diffeo(double a, double c) { return make_map(MapKind::diffeo, a, c); }

}  // namespace rcm
