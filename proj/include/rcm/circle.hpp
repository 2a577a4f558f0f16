#pragma once

#include <cmath>

namespace rcm {

// wrap into [0,1)
inline double wrap01(double x) {
  double y = x - std::floor(x);
  if (y >= 1.0) y -= 1.0;  // guards x = -1e-17 style roundoff
  return y;
}

// circle metric d(x,y) = min(|x-y|, 1-|x-y|)
inline double circle_dist(double x, double y) {
  double d = std::fabs(wrap01(x) - wrap01(y));
  return d <= 0.5 ? d : 1.0 - d;
}

inline constexpr double two_pi = 6.283185307179586476925286766559;

}  // namespace rcm
