#pragma once

#include <span>
#include <vector>

#include "rcm/maps.hpp"

namespace rcm {

struct InversionFailure : Error { using Error::Error; };
struct BranchMismatch : Error { using Error::Error; };

// Inverse-branch solver for one map. The lift is strictly increasing
// (all templates have T' > 0), so [0,1] splits into `degree` monotone
// stretches at the lift-preimages c_j of t0 + j; each branch solve is a
// Newton iteration with a bisection safeguard, tolerance 1e-13.
class BranchInverter {
public:
  explicit BranchInverter(const MapSample& m);

  const MapSample& map() const { return map_; }
  int n_branches() const { return deg_; }

  // u with T(u) = v on the lift, for any real v.
  double lift_invert(double v) const;

  // The degree circle preimages of x in [0,1), with T' at each.
  // ys and derivs must have room for n_branches() entries.
  void preimages(double x, double* ys, double* derivs) const;

private:
  double solve_in(double v, double lo, double hi) const;

  MapSample map_;
  double t0_;
  int deg_;
  std::vector<double> knots_;  // c_0 = 0 <= ... <= c_deg = 1, T(c_j) = t0 + j
};

// Preimages of the whole uniform grid under one map, cached so repeated
// transfer applications cost only interpolation.
struct PreimageTable {
  int grid_n = 0;
  int branches = 0;
  std::vector<double> y;       // [branch * grid_n + j]
  std::vector<double> inv_dt;  // 1 / T'(y)
};

PreimageTable build_preimage_table(const BranchInverter& inv, int grid_n);

// Same-branch preimage path of a lift point under a composed map
// T_{w_n} o ... o T_{w_1}: maps[i] is applied i-th (maps[0] first).
// branch[i] selects the circle branch at inversion step i (counted from the
// last map down). Returns the path points x_0 .. x_n with x_n = x_lift and
// T_{w_{k+1}}(x_k) = x_{k+1} on the lift.
std::vector<double> composed_preimage_path(std::span<const BranchInverter* const> maps,
                                           double x_lift, std::span<const int> branch);

// log of the composed-derivative ratio between the same-branch preimages of
// x and y_lift (pair within a common arc, |x - y_lift| <= 1/2). Throws
// BranchMismatch if the branch index lists differ or a preimage pair
// separates by a full period.
double log_derivative_ratio_same_branch(std::span<const BranchInverter* const> maps,
                                        double x, double y_lift,
                                        std::span<const int> branch_x,
                                        std::span<const int> branch_y);

}  // namespace rcm
