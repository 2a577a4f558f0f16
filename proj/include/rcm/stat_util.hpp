#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace rcm {

double normal_cdf(double x);

// One-sample Kolmogorov-Smirnov statistic against a standard normal.
// `values` need not be sorted.
double ks_statistic_normal(std::span<const double> values);

// Asymptotic KS p-value with the Stephens small-sample correction.
double ks_pvalue(double d, std::size_t n);

// Anderson-Darling A^2 against a standard normal (fully specified case).
double anderson_darling_normal(std::span<const double> values);

// 1% critical value for A^2, case of a fully specified distribution.
inline constexpr double ad_critical_1pct = 3.857;

// Chi-square upper tail via the Wilson-Hilferty cube-root normal approximation.
double chi2_pvalue(double statistic, std::size_t dof);

// Wilson score interval for a binomial proportion, z = quantile width.
struct WilsonInterval {
  double lo = 0.0;
  double hi = 1.0;
};
WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z);

inline constexpr double z_99 = 2.5758293035489004;  // two-sided 99%

// Least squares line fit y ~ a + b x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double se_slope = 0.0;
  double r2 = 0.0;
  std::size_t n = 0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

// Gauss-Legendre nodes and weights on [-1,1].
struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;
};
Quadrature gauss_legendre(std::size_t n);

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;   // unbiased
  std::size_t n = 0;
  double se() const;
};
MeanVar mean_var(std::span<const double> values);

// Eigenvalues of a symmetric d x d matrix (row-major) by Jacobi sweeps.
std::vector<double> sym_eigenvalues(std::span<const double> a, int d);

}  // namespace rcm
