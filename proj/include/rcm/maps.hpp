#pragma once

#include <stdexcept>
#include <string>

namespace rcm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ZeroDerivative : Error { using Error::Error; };

enum class MapKind { linear, perturbed, diffeo };

std::string to_string(MapKind k);
MapKind map_kind_from_string(const std::string& s);

// One sampled circle map. The lift satisfies T(x+1) = T(x) + degree and is
// strictly increasing for every built-in template (T' > 0).
//
// Templates:
//   linear     T(x) = d x + c,                       d >= 1 integer
//   perturbed  T(x) = d x + (a/2pi) sin(2pi x + p),  |a| < d
//   diffeo     T(x) = x + c + (a/2pi) sin(2pi x),    |a| < 1
struct MapSample {
  MapKind kind = MapKind::linear;
  double p1 = 2.0;   // d for linear/perturbed, a for diffeo
  double p2 = 0.0;   // c for linear/diffeo,    a for perturbed
  double p3 = 0.0;   // phase for perturbed
  int degree = 2;
  double lambda = 0.0;  // inf |T'|
  double delta = 0.0;   // sup |T''| / T'^2

  double eval_lift(double x) const;    // lift value, defined for all real x
  double eval(double x) const;         // circle value in [0,1)
  double deriv(double x) const;
  double deriv2(double x) const;

  static MapSample linear(int d, double c);
  static MapSample perturbed(int d, double a, double phase = 0.0);
  static MapSample diffeo(double a, double c);
};

struct DilationDistortion {
  double lambda;
  double delta;
};

// Scans a grid (default 4096 points) for the extrema of |T'| and |T''|/T'^2,
// then golden-section refines around the best cell to relative tolerance 1e-10.
// Throws ZeroDerivative if |T'| < 1e-12 anywhere on the scan grid.
DilationDistortion compute_dilation_distortion(const MapSample& map, int scan_points = 4096);

// Builds the template, fills in degree and the (lambda, delta) summary.
MapSample make_map(MapKind kind, double d_or_a, double c_or_a, double phase = 0.0);

}  // namespace rcm
