#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rcm/maps.hpp"
#include "rcm/rng.hpp"

namespace rcm {

struct GridMismatch : Error { using Error::Error; };

// Periodic cubic (Catmull-Rom) interpolation of grid values at x in [0,1).
double interp_periodic(std::span<const double> v, double x);

// A probability density on the circle sampled at x_j = j/N. Immutable after
// construction; the rectangle rule is the quadrature throughout (it is the
// trapezoid rule on a periodic uniform grid, spectrally accurate for smooth
// integrands).
class DensityGrid {
public:
  DensityGrid() = default;
  // values >= 0 required; normalizes to rectangle-rule integral 1 when asked
  DensityGrid(std::vector<double> values, bool normalize);

  static DensityGrid constant(int n);

  int size() const { return static_cast<int>(v_.size()); }
  std::span<const double> values() const { return v_; }
  double operator[](int j) const { return v_[j]; }
  double x_at(int j) const { return static_cast<double>(j) / size(); }

  double integral() const;
  bool is_normalized() const { return normalized_; }
  double min_value() const;
  double max_value() const;
  double interp(double x) const { return interp_periodic(v_, x); }

private:
  std::vector<double> v_;
  bool normalized_ = false;
};

// Rectangle-rule integral of |a - b|.
double l1_distance(const DensityGrid& a, const DensityGrid& b);
double l1_distance(std::span<const double> a, std::span<const double> b);

// Rectangle-rule mean of a grid function.
double grid_mean(std::span<const double> v);

// Discrete Hölder constant: max over sampled pairs of |f(x)-f(y)| / d(x,y)^alpha
// with the circle metric. All pairs for N <= 1024; a nested strided family
// beyond that, chosen so the estimate is nondecreasing when N doubles. Always
// a lower bound of the true constant.
double holder_estimate(std::span<const double> f, double alpha);

// Discrete Lipschitz constant max_j |f_{j+1} - f_j| * N (periodic).
double lipschitz_estimate(std::span<const double> f);

// psi_h = (psi + h) / (1 + h) with h = |psi|_alpha + lip_phi, which places the
// result in the unit log-Hölder class H_1 whenever h > 0.
std::pair<DensityGrid, double> regularize(const DensityGrid& psi, double alpha,
                                          double lip_phi);

// Inverse-CDF sampler over the piecewise-linear CDF of phi; reusable across
// many streams (one binary search per draw).
class DensitySampler {
public:
  explicit DensitySampler(const DensityGrid& phi);
  double draw(RngStream& rng) const;

private:
  std::vector<double> cdf_;
};

// Inverse-CDF sampling from the piecewise-linear CDF of phi.
std::vector<double> sample_from_density(const DensityGrid& phi, std::size_t m,
                                        std::uint64_t seed, std::uint64_t stream = 0);

// Piecewise-linear CDF value at x (matches the sampler).
double density_cdf(const DensityGrid& phi, double x);

std::string density_to_csv(const DensityGrid& g);
nlohmann::json density_to_json(const DensityGrid& g);
DensityGrid density_from_json(const nlohmann::json& j);

}  // namespace rcm
