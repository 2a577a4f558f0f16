#pragma once

#include <vector>

#include <json.hpp>

#include "rcm/maps.hpp"
#include "rcm/rng.hpp"

namespace rcm {

// Trigonometric polynomial c0 + sum_k cos_c[k-1] cos(2 pi k x) + sin_c[k-1] sin(2 pi k x).
struct TrigPoly {
  double c0 = 0.0;
  std::vector<double> cos_c;
  std::vector<double> sin_c;

  double eval(double x) const;
  double deriv(double x) const;
  int max_freq() const;

  std::vector<double> sample(int grid_n) const;

  static TrigPoly cosine(int k, double amp = 1.0);
  static TrigPoly random(RngStream& rng, int max_freq, double scale);

  nlohmann::json to_json() const;
  static TrigPoly from_json(const nlohmann::json& j);
};

// Vector-valued Hölder observable on the circle; holder_const holds the
// discrete pairwise grid estimate per component.
struct Observable {
  std::vector<TrigPoly> components;
  double alpha = 1.0;
  std::vector<double> holder_const;

  int dim() const { return static_cast<int>(components.size()); }

  static Observable make(std::vector<TrigPoly> comps, double alpha, int grid_n = 4096);
  static Observable from_json(const nlohmann::json& j, int grid_n = 4096);
  nlohmann::json to_json() const;
};

}  // namespace rcm
