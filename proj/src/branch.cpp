#include "rcm/branch.hpp"

#include <cmath>

#include "rcm/circle.hpp"

namespace rcm {

BranchInverter::BranchInverter(const MapSample& m) : map_(m) {
  deg_ = m.degree;
  if (deg_ < 1) throw Error("branch inversion needs degree >= 1 (increasing lift)");
  if (m.deriv(0.0) <= 0.0) throw Error("branch inversion needs T' > 0");
  t0_ = map_.eval_lift(0.0);
  knots_.assign(deg_ + 1, 0.0);
  knots_[0] = 0.0;
  knots_[deg_] = 1.0;
  for (int j = 1; j < deg_; ++j)
    knots_[j] = solve_in(t0_ + j, knots_[j - 1], 1.0);
}

double BranchInverter::solve_in(double v, double lo, double hi) const {
  double u = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double fu = map_.eval_lift(u) - v;
    if (std::fabs(fu) < 1e-13) return u;
    if (fu > 0.0) hi = u; else lo = u;
    const double du = map_.deriv(u);
    double next = u - fu / du;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);  // bisection safeguard
    u = next;
  }
  throw InversionFailure("branch solve did not converge in 100 steps");
}

double BranchInverter::lift_invert(double v) const {
  const double m = std::floor((v - t0_) / deg_);
  double vr = v - m * deg_;  // in [t0, t0 + deg)
  int j = static_cast<int>(std::floor(vr - t0_));
  j = std::max(0, std::min(deg_ - 1, j));
  return solve_in(vr, knots_[j], knots_[j + 1]) + m;
}

void BranchInverter::preimages(double x, double* ys, double* derivs) const {
  const double k0 = std::ceil(t0_ - x);
  for (int i = 0; i < deg_; ++i) {
    const double v = x + k0 + i;
    int j = static_cast<int>(std::floor(v - t0_));
    j = std::max(0, std::min(deg_ - 1, j));
    const double u = solve_in(v, knots_[j], knots_[j + 1]);
    ys[i] = u < 1.0 ? u : 0.0;
    derivs[i] = map_.deriv(u);
  }
}

PreimageTable build_preimage_table(const BranchInverter& inv, int grid_n) {
  PreimageTable t;
  t.grid_n = grid_n;
  t.branches = inv.n_branches();
  t.y.resize(static_cast<std::size_t>(t.branches) * grid_n);
  t.inv_dt.resize(t.y.size());
  std::vector<double> ys(t.branches), ds(t.branches);
  for (int j = 0; j < grid_n; ++j) {
    inv.preimages(static_cast<double>(j) / grid_n, ys.data(), ds.data());
    for (int b = 0; b < t.branches; ++b) {
      t.y[static_cast<std::size_t>(b) * grid_n + j] = ys[b];
      t.inv_dt[static_cast<std::size_t>(b) * grid_n + j] = 1.0 / ds[b];
    }
  }
  return t;
}

std::vector<double> composed_preimage_path(std::span<const BranchInverter* const> maps,
                                           double x_lift, std::span<const int> branch) {
  const std::size_t n = maps.size();
  if (branch.size() != n) throw BranchMismatch("branch list length differs from map count");
  std::vector<double> path(n + 1);
  path[n] = x_lift;
  double p = x_lift;
  for (std::size_t step = 0; step < n; ++step) {
    const BranchInverter& inv = *maps[n - 1 - step];
    const int b = branch[step];
    if (b < 0 || b >= inv.n_branches())
      throw BranchMismatch("branch index out of range");
    // branch b of the circle preimage of frac(p), continued along the lift
    const double fp = wrap01(p);
    const double k0 = std::ceil(inv.map().eval_lift(0.0) - fp);
    const double v = p + (k0 + b);  // shifting the target picks the branch
    p = inv.lift_invert(v);
    path[n - 1 - step] = p;
  }
  return path;
}

double log_derivative_ratio_same_branch(std::span<const BranchInverter* const> maps,
                                        double x, double y_lift,
                                        std::span<const int> branch_x,
                                        std::span<const int> branch_y) {
  if (branch_x.size() != branch_y.size())
    throw BranchMismatch("branch lists differ in length");
  for (std::size_t i = 0; i < branch_x.size(); ++i)
    if (branch_x[i] != branch_y[i])
      throw BranchMismatch("preimages taken along different branches");
  const std::size_t n = maps.size();
  // lift continuation: invert x with the chosen branches, shift targets for y
  std::vector<double> px = composed_preimage_path(maps, x, branch_x);
  std::vector<double> py(n + 1);
  py[n] = y_lift;
  double q = y_lift;
  for (std::size_t step = 0; step < n; ++step) {
    const BranchInverter& inv = *maps[n - 1 - step];
    const double delta = q - px[n - step];
    const double vq = inv.map().eval_lift(px[n - 1 - step]) + delta;
    q = inv.lift_invert(vq);
    py[n - 1 - step] = q;
    if (std::fabs(q - px[n - 1 - step]) >= 1.0)
      throw BranchMismatch("preimage pair separated by a full period");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const MapSample& m = maps[i]->map();
    s += std::log(m.deriv(px[i])) - std::log(m.deriv(py[i]));
  }
  return s;
}

}  // namespace rcm
