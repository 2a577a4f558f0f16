#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "rcm/observable.hpp"
#include "rcm/stat_util.hpp"
#include "rcm/transfer.hpp"

namespace rcm {

struct TailNotConverged : Error { using Error::Error; };
struct SeriesDiverged : Error { using Error::Error; };
struct DegenerateDirection : Error { using Error::Error; };

// Pair correlations C_n = int f Q^n g dmu - int f dmu int g dmu.
struct CorrelationCurve {
  std::vector<double> values;  // index = lag
  std::vector<double> se;      // mc estimator only
  std::string estimator;       // "operator" | "mc"
};

CorrelationCurve correlation_operator(const TransferContext& ctx, const DensityGrid& phi,
                                      std::span<const double> f, std::span<const double> g,
                                      std::size_t n_max);

CorrelationCurve correlation_mc(const TransferContext& ctx, const DensityGrid& phi,
                                const TrigPoly& f, const TrigPoly& g, std::size_t n_max,
                                std::size_t samples, std::uint64_t seed);

// d x d limit covariance of Birkhoff sums.
struct CovarianceEstimate {
  int dim = 1;
  std::vector<double> sigma2;  // row-major
  std::vector<double> se;      // per entry, mc estimator only
  std::string method;
  std::size_t m_used = 0;      // series truncation
  std::size_t batches = 0;
  std::size_t n = 0;
  double min_eigenvalue = 0.0;
  bool converged = true;

  double at(int a, int b) const { return sigma2[a * dim + b]; }
  double direction(std::span<const double> v) const;
};

// Sigma^2 = int f (x) f dmu + sum_m int (f (x) Q^m f + Q^m f (x) f) dmu, the
// observable centered against phi first. Truncation stops once three
// consecutive term norms fall below tail_tol.
CovarianceEstimate covariance_series(const TransferContext& ctx, const DensityGrid& phi,
                                     const Observable& f, std::size_t m_max = 256,
                                     double tail_tol = 1e-9);

// Empirical covariance of BirkhoffSum / sqrt(n) over independent stationary
// starts.
CovarianceEstimate covariance_batch_means(const TransferContext& ctx,
                                          const DensityGrid& phi, const Observable& f,
                                          std::size_t n, std::size_t batches,
                                          std::uint64_t seed);

// E[BirkhoffSum_n^2] - n v' Sigma^2 v across n_list must show no trend.
struct VarianceGrowthReport {
  std::vector<std::size_t> n_list;
  std::vector<double> mean_sq;   // MC estimate of E[S_n^2]
  std::vector<double> se;
  std::vector<double> residual;  // mean_sq - n sigma2_dir
  double sigma2_dir = 0.0;
  LineFit residual_fit;
  bool no_trend = false;  // slope indistinguishable from 0 at 99%
};
VarianceGrowthReport variance_growth_check(const TransferContext& ctx,
                                           const DensityGrid& phi, const Observable& f,
                                           std::span<const double> v,
                                           std::span<const std::size_t> n_list,
                                           std::size_t samples, std::uint64_t seed);

// Kolmogorov-Smirnov and Anderson-Darling tests of v' BirkhoffSum_n /
// sqrt(n v' Sigma^2 v) against N(0,1).
struct CltReport {
  double ks_stat = 0.0;
  double ks_p = 0.0;
  double ad_stat = 0.0;
  bool ad_pass = false;
  bool pass = false;
  bool has_verdict = true;
  bool power_warning = false;
  std::size_t samples = 0;
  double sigma2_used = 0.0;
};
CltReport clt_test(const TransferContext& ctx, const DensityGrid& phi, const Observable& f,
                   std::span<const double> v, std::size_t n, std::size_t samples,
                   std::uint64_t seed,
                   std::optional<double> sigma2_override = std::nullopt);

// Truncated Neumann series g = sum_m Q^m f_v for the coboundary equation
// f_v = g - Qg (f_v centered against mu). residual takes the max over atoms
// and grid points of |f_v(x) - g(x) + g(T_omega x)| (the Lemma-3.5 pathwise
// quantity); residual_q is the eta-averaged |f_v - g + Qg| which the Neumann
// construction drives to zero for any ensemble.
struct CoboundaryResult {
  std::vector<double> g;
  double residual = 0.0;
  double residual_q = 0.0;
  std::size_t terms_used = 0;
  bool converged = false;
};
CoboundaryResult coboundary_residual(const TransferContext& ctx, const DensityGrid& phi,
                                     std::span<const double> f_v, std::size_t m_max = 128);

// Monte Carlo multiple-correlation difference E[F G_n] - E[F] E[G_n] for
// F = g_0(X_0)...g_m(X_m), G_n = g_{m+1}(X_{m+1+n})...g_{m+k}(X_{m+k+n}),
// g_j = exp(i t_j f_j), with a fitted log-modulus envelope. The estimator is
// Rao-Blackwellized: past and future are conditionally independent given the
// simulated X_m, so both products are closed by their conditional
// expectations (a tilted Phat-product for F, a tilted Q-chain for G_n); the
// raw per-path product estimator cannot resolve the envelope past the first
// lags at any fixed sample budget. All tilts zero short-circuits to the
// identically-zero difference.
struct MultiCorrReport {
  std::vector<std::complex<double>> diff;  // per lag 0..n_max
  std::vector<double> se;
  LineFit envelope;
  bool fit_ok = false;
  std::vector<char> used_in_fit;
  bool t_zero_case = false;   // all tilts zero
  bool t_zero_exact = false;  // and the difference vanished identically
};
MultiCorrReport multiple_correlation_check(const TransferContext& ctx,
                                           const DensityGrid& phi,
                                           std::span<const TrigPoly> f_list,
                                           std::span<const double> t_list, std::size_t m,
                                           std::size_t k, std::size_t n_max,
                                           std::size_t samples, std::uint64_t seed);

}  // namespace rcm
