#include "rcm/limit_stats.hpp"

#include <algorithm>
#include <cmath>

#include "rcm/density.hpp"
#include "rcm/trajectory.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rcm {

namespace {

// fixed block partition: results do not depend on thread count
constexpr std::size_t kBlocks = 64;

double mu_mean(std::span<const double> f, const DensityGrid& phi) {
  double s = 0.0;
  for (int j = 0; j < phi.size(); ++j) s += f[j] * phi[j];
  return s / phi.size();
}

double mu_mean2(std::span<const double> f, std::span<const double> g,
                const DensityGrid& phi) {
  double s = 0.0;
  for (int j = 0; j < phi.size(); ++j) s += f[j] * g[j] * phi[j];
  return s / phi.size();
}

struct BlockRange {
  std::size_t lo, hi;
};
BlockRange block_range(std::size_t block, std::size_t total) {
  return {block * total / kBlocks, (block + 1) * total / kBlocks};
}

}  // namespace

CorrelationCurve correlation_operator(const TransferContext& ctx, const DensityGrid& phi,
                                      std::span<const double> f, std::span<const double> g,
                                      std::size_t n_max) {
  if (static_cast<int>(f.size()) != ctx.grid_n() || f.size() != g.size())
    throw GridMismatch("correlation_operator: grid mismatch");
  CorrelationCurve c;
  c.estimator = "operator";
  const double mf = mu_mean(f, phi);
  const double mg = mu_mean(g, phi);
  std::vector<double> q(g.begin(), g.end());
  for (std::size_t n = 0; n <= n_max; ++n) {
    c.values.push_back(mu_mean2(f, q, phi) - mf * mg);
    if (n < n_max) q = ctx.koopman_apply(q);
  }
  return c;
}

CorrelationCurve correlation_mc(const TransferContext& ctx, const DensityGrid& phi,
                                const TrigPoly& f, const TrigPoly& g, std::size_t n_max,
                                std::size_t samples, std::uint64_t seed) {
  const DensitySampler sampler(phi);
  const Ensemble& e = ctx.ensemble();
  const std::size_t L = n_max + 1;
  std::vector<double> sum_f0(kBlocks, 0.0);
  std::vector<double> sum_g(kBlocks * L, 0.0);
  std::vector<double> sum_fg(kBlocks * L, 0.0);
  std::vector<double> sum_fg2(kBlocks * L, 0.0);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (std::size_t b = 0; b < kBlocks; ++b) {
    const auto [lo, hi] = block_range(b, samples);
    for (std::size_t s = lo; s < hi; ++s) {
      RngStream rng(seed, s + 1);
      double x = sampler.draw(rng);
      const double f0 = f.eval(x);
      sum_f0[b] += f0;
      for (std::size_t n = 0; n < L; ++n) {
        const double gn = g.eval(x);
        sum_g[b * L + n] += gn;
        sum_fg[b * L + n] += f0 * gn;
        sum_fg2[b * L + n] += f0 * gn * f0 * gn;
        if (n + 1 < L) x = trajectory_step(e, x, rng);
      }
    }
  }

  CorrelationCurve c;
  c.estimator = "mc";
  const double M = static_cast<double>(samples);
  double tf0 = 0.0;
  for (std::size_t b = 0; b < kBlocks; ++b) tf0 += sum_f0[b];
  for (std::size_t n = 0; n < L; ++n) {
    double tg = 0.0, tfg = 0.0, tfg2 = 0.0;
    for (std::size_t b = 0; b < kBlocks; ++b) {
      tg += sum_g[b * L + n];
      tfg += sum_fg[b * L + n];
      tfg2 += sum_fg2[b * L + n];
    }
    c.values.push_back(tfg / M - (tf0 / M) * (tg / M));
    const double var = std::max(0.0, tfg2 / M - (tfg / M) * (tfg / M));
    c.se.push_back(std::sqrt(var / M));
  }
  return c;
}

double CovarianceEstimate::direction(std::span<const double> v) const {
  double s = 0.0;
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) s += v[a] * at(a, b) * v[b];
  return s;
}

CovarianceEstimate covariance_series(const TransferContext& ctx, const DensityGrid& phi,
                                     const Observable& f, std::size_t m_max,
                                     double tail_tol) {
  const int d = f.dim();
  const int gn = ctx.grid_n();
  std::vector<std::vector<double>> fc(d);
  for (int a = 0; a < d; ++a) {
    fc[a] = f.components[a].sample(gn);
    const double mean = mu_mean(fc[a], phi);
    for (double& x : fc[a]) x -= mean;
  }
  CovarianceEstimate est;
  est.dim = d;
  est.method = "series";
  est.sigma2.assign(d * d, 0.0);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) est.sigma2[a * d + b] = mu_mean2(fc[a], fc[b], phi);

  // tolerance relative to the lag-0 term, so scaling f leaves the
  // truncation point unchanged (scaling equivariance of sigma2)
  double scale0 = 0.0;
  for (double x : est.sigma2) scale0 = std::max(scale0, std::fabs(x));
  if (scale0 == 0.0) scale0 = 1.0;
  const double thresh = tail_tol * scale0;

  std::vector<std::vector<double>> q(fc);
  std::vector<double> norms;
  bool stopped = false;
  for (std::size_t m = 1; m <= m_max; ++m) {
    for (int b = 0; b < d; ++b) q[b] = ctx.koopman_apply(q[b]);
    double norm = 0.0;
    for (int a = 0; a < d; ++a) {
      for (int b = 0; b < d; ++b) {
        const double cab = mu_mean2(fc[a], q[b], phi);
        est.sigma2[a * d + b] += cab;
        est.sigma2[b * d + a] += cab;
        norm = std::max(norm, std::fabs(cab));
      }
    }
    norms.push_back(norm);
    est.m_used = m;
    const std::size_t h = norms.size();
    if (h >= 3 && norms[h - 1] <= thresh && norms[h - 2] <= thresh &&
        norms[h - 3] <= thresh) {
      stopped = true;
      break;
    }
  }
  if (!stopped) {
    const std::size_t h = norms.size();
    bool nondecreasing = h >= 5;
    for (std::size_t i = h - 4; nondecreasing && i < h; ++i)
      if (norms[i] < norms[i - 1]) nondecreasing = false;
    if (nondecreasing)
      throw TailNotConverged("covariance series terms not decreasing over the last 5 lags");
    est.converged = false;
  }
  est.min_eigenvalue = sym_eigenvalues(est.sigma2, d).front();
  return est;
}

CovarianceEstimate covariance_batch_means(const TransferContext& ctx,
                                          const DensityGrid& phi, const Observable& f,
                                          std::size_t n, std::size_t batches,
                                          std::uint64_t seed) {
  const int d = f.dim();
  const int gn = ctx.grid_n();
  std::vector<double> means(d);
  for (int a = 0; a < d; ++a) means[a] = mu_mean(f.components[a].sample(gn), phi);
  const DensitySampler sampler(phi);
  const Ensemble& e = ctx.ensemble();

  std::vector<double> u(batches * d, 0.0);  // BirkhoffSum / sqrt(n) per batch
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (std::size_t blk = 0; blk < kBlocks; ++blk) {
    const auto [lo, hi] = block_range(blk, batches);
    for (std::size_t b = lo; b < hi; ++b) {
      RngStream rng(seed, b + 1);
      double x = sampler.draw(rng);
      std::vector<double> s(d, 0.0);
      for (std::size_t k = 0; k < n; ++k) {
        for (int a = 0; a < d; ++a) s[a] += f.components[a].eval(x) - means[a];
        if (k + 1 < n) x = trajectory_step(e, x, rng);
      }
      const double rn = std::sqrt(static_cast<double>(n));
      for (int a = 0; a < d; ++a) u[b * d + a] = s[a] / rn;
    }
  }

  std::vector<double> ubar(d, 0.0);
  for (std::size_t b = 0; b < batches; ++b)
    for (int a = 0; a < d; ++a) ubar[a] += u[b * d + a];
  for (int a = 0; a < d; ++a) ubar[a] /= batches;

  CovarianceEstimate est;
  est.dim = d;
  est.method = "batch_means";
  est.batches = batches;
  est.n = n;
  est.sigma2.assign(d * d, 0.0);
  est.se.assign(d * d, 0.0);
  for (int a = 0; a < d; ++a) {
    for (int c = 0; c < d; ++c) {
      double s1 = 0.0, s2 = 0.0;
      for (std::size_t b = 0; b < batches; ++b) {
        const double w = (u[b * d + a] - ubar[a]) * (u[b * d + c] - ubar[c]);
        s1 += w;
        s2 += w * w;
      }
      est.sigma2[a * d + c] = s1 / (batches - 1);
      const double var_w = std::max(0.0, s2 / batches - (s1 / batches) * (s1 / batches));
      est.se[a * d + c] = std::sqrt(var_w / batches);
    }
  }
  est.min_eigenvalue = sym_eigenvalues(est.sigma2, d).front();
  return est;
}

namespace {

// v' f centered against mu, as an analytic evaluator
struct ProjectedObservable {
  const Observable* f;
  std::vector<double> v;
  double mean = 0.0;
  double eval(double x) const {
    double s = 0.0;
    for (int a = 0; a < f->dim(); ++a) s += v[a] * f->components[a].eval(x);
    return s - mean;
  }
};

ProjectedObservable project(const TransferContext& ctx, const DensityGrid& phi,
                            const Observable& f, std::span<const double> v) {
  if (static_cast<int>(v.size()) != f.dim())
    throw Error("direction dimension differs from observable");
  ProjectedObservable p;
  p.f = &f;
  p.v.assign(v.begin(), v.end());
  double m = 0.0;
  for (int a = 0; a < f.dim(); ++a)
    m += v[a] * mu_mean(f.components[a].sample(ctx.grid_n()), phi);
  p.mean = m;
  return p;
}

}  // namespace

VarianceGrowthReport variance_growth_check(const TransferContext& ctx,
                                           const DensityGrid& phi, const Observable& f,
                                           std::span<const double> v,
                                           std::span<const std::size_t> n_list,
                                           std::size_t samples, std::uint64_t seed) {
  const ProjectedObservable fv = project(ctx, phi, f, v);
  const CovarianceEstimate series = covariance_series(ctx, phi, f);
  VarianceGrowthReport rep;
  rep.sigma2_dir = series.direction(v);
  rep.n_list.assign(n_list.begin(), n_list.end());
  const DensitySampler sampler(phi);
  const Ensemble& e = ctx.ensemble();

  for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
    const std::size_t n = n_list[ni];
    std::vector<double> sq(kBlocks, 0.0), sq2(kBlocks, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
    for (std::size_t b = 0; b < kBlocks; ++b) {
      const auto [lo, hi] = block_range(b, samples);
      for (std::size_t s = lo; s < hi; ++s) {
        RngStream rng(seed, ni * samples + s + 1);
        double x = sampler.draw(rng);
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          sum += fv.eval(x);
          if (k + 1 < n) x = trajectory_step(e, x, rng);
        }
        sq[b] += sum * sum;
        sq2[b] += sum * sum * sum * sum;
      }
    }
    double t1 = 0.0, t2 = 0.0;
    for (std::size_t b = 0; b < kBlocks; ++b) { t1 += sq[b]; t2 += sq2[b]; }
    const double M = static_cast<double>(samples);
    rep.mean_sq.push_back(t1 / M);
    rep.se.push_back(std::sqrt(std::max(0.0, t2 / M - (t1 / M) * (t1 / M)) / M));
    rep.residual.push_back(t1 / M - static_cast<double>(n) * rep.sigma2_dir);
  }

  std::vector<double> xs(rep.n_list.begin(), rep.n_list.end());
  rep.residual_fit = fit_line(xs, rep.residual);
  rep.no_trend = rep.residual_fit.se_slope > 0.0
                     ? std::fabs(rep.residual_fit.slope) <= z_99 * rep.residual_fit.se_slope
                     : rep.residual_fit.slope == 0.0;
  return rep;
}

CltReport clt_test(const TransferContext& ctx, const DensityGrid& phi, const Observable& f,
                   std::span<const double> v, std::size_t n, std::size_t samples,
                   std::uint64_t seed, std::optional<double> sigma2_override) {
  CltReport rep;
  rep.samples = samples;
  const double sigma2 =
      sigma2_override ? *sigma2_override : covariance_series(ctx, phi, f).direction(v);
  rep.sigma2_used = sigma2;
  if (sigma2 < 1e-6)
    throw DegenerateDirection("v' Sigma^2 v < 1e-6: use the coboundary detector");
  if (samples < 100) {
    rep.power_warning = true;
    rep.has_verdict = false;
    return rep;
  }
  const ProjectedObservable fv = project(ctx, phi, f, v);
  const DensitySampler sampler(phi);
  const Ensemble& e = ctx.ensemble();
  std::vector<double> z(samples);
  const double denom = std::sqrt(static_cast<double>(n) * sigma2);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (std::size_t b = 0; b < kBlocks; ++b) {
    const auto [lo, hi] = block_range(b, samples);
    for (std::size_t s = lo; s < hi; ++s) {
      RngStream rng(seed, s + 1);
      double x = sampler.draw(rng);
      double sum = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        sum += fv.eval(x);
        if (k + 1 < n) x = trajectory_step(e, x, rng);
      }
      z[s] = sum / denom;
    }
  }
  rep.ks_stat = ks_statistic_normal(z);
  rep.ks_p = ks_pvalue(rep.ks_stat, samples);
  rep.ad_stat = anderson_darling_normal(z);
  rep.ad_pass = rep.ad_stat < ad_critical_1pct;
  rep.pass = rep.ks_p > 0.01;
  return rep;
}

CoboundaryResult coboundary_residual(const TransferContext& ctx, const DensityGrid& phi,
                                     std::span<const double> f_v, std::size_t m_max) {
  const int gn = ctx.grid_n();
  if (static_cast<int>(f_v.size()) != gn)
    throw GridMismatch("coboundary_residual: grid mismatch");
  std::vector<double> work(f_v.begin(), f_v.end());
  const double mean = mu_mean(work, phi);
  for (double& x : work) x -= mean;

  CoboundaryResult res;
  res.g.assign(gn, 0.0);
  std::vector<double> term(work);
  std::vector<double> norms;
  for (std::size_t m = 0; m <= m_max; ++m) {
    for (int j = 0; j < gn; ++j) res.g[j] += term[j];
    double nrm = 0.0;
    for (double x : term) nrm = std::max(nrm, std::fabs(x));
    norms.push_back(nrm);
    res.terms_used = m + 1;
    const std::size_t h = norms.size();
    if (h >= 3 && norms[h - 1] < 1e-12 && norms[h - 2] < 1e-12 && norms[h - 3] < 1e-12) {
      res.converged = true;
      break;
    }
    if (h >= 5) {
      bool increasing = true;
      for (std::size_t i = h - 4; i < h; ++i)
        if (norms[i] <= norms[i - 1]) { increasing = false; break; }
      if (increasing)
        throw SeriesDiverged("coboundary Neumann terms grew over the last 5 lags");
    }
    if (m < m_max) term = ctx.koopman_apply(term);
  }

  // pathwise residual per atom, and the eta-averaged equation residual
  for (const auto& atom : ctx.ensemble().atoms()) {
    for (int j = 0; j < gn; ++j) {
      const double tx = atom.map.eval(static_cast<double>(j) / gn);
      const double r = work[j] - res.g[j] + interp_periodic(res.g, tx);
      res.residual = std::max(res.residual, std::fabs(r));
    }
  }
  const auto qg = ctx.koopman_apply(res.g);
  for (int j = 0; j < gn; ++j)
    res.residual_q = std::max(res.residual_q, std::fabs(work[j] - res.g[j] + qg[j]));
  return res;
}

MultiCorrReport multiple_correlation_check(const TransferContext& ctx,
                                           const DensityGrid& phi,
                                           std::span<const TrigPoly> f_list,
                                           std::span<const double> t_list, std::size_t m,
                                           std::size_t k, std::size_t n_max,
                                           std::size_t samples, std::uint64_t seed) {
  const std::size_t n_fns = m + k + 1;
  if (f_list.size() != n_fns || t_list.size() != n_fns)
    throw Error("multiple_correlation_check: need m+k+1 observables and tilts");
  const std::size_t L = n_max + 1;
  const int gn = ctx.grid_n();
  const DensitySampler sampler(phi);
  const Ensemble& e = ctx.ensemble();
  using cd = std::complex<double>;

  MultiCorrReport rep;
  double t_abs = 0.0;
  for (double t : t_list) t_abs += std::fabs(t);
  rep.t_zero_case = t_abs == 0.0;
  rep.diff.assign(L, cd(0.0, 0.0));
  rep.se.assign(L, 0.0);
  rep.used_in_fit.assign(L, 0);
  if (rep.t_zero_case) {
    // every g_j is identically 1, so F = G_n = 1 and the difference vanishes
    rep.t_zero_exact = true;
    return rep;
  }

  // Rao-Blackwellized Monte Carlo: by the Markov property, past and future
  // are independent given X_m, so
  //   E[F G_n] = E[ v(X_m) q_n(X_m) ],
  //   v = g_m Phat_{g_{m-1}} ... Phat_{g_0} 1   (conditional of F),
  //   q_n = Q^n Q_{g_{m+1}} ... Q_{g_{m+k}} 1   (conditional of G_n),
  // with X_m simulated along sampled paths. Closing both sides this way
  // makes the estimator noise decay with n alongside the signal; the raw
  // per-path product estimator drowns past the first lags at any fixed
  // sample budget (cross-checked against this one in the tests).
  std::vector<cvector> q(L);
  {
    cvector h(gn, 1.0);
    for (std::size_t j = k; j >= 1; --j) {
      cvector g(gn);
      for (int x = 0; x < gn; ++x)
        g[x] = std::polar(1.0, t_list[m + j] * f_list[m + j].eval(static_cast<double>(x) / gn));
      h = koopman_tilted_apply(ctx, g, h);
    }
    q[0] = std::move(h);
    for (std::size_t n = 1; n < L; ++n) q[n] = ctx.koopman_apply(q[n - 1]);
  }
  cvector v(gn, 1.0);
  {
    for (std::size_t j = 0; j < m; ++j) {
      cvector g(gn);
      for (int x = 0; x < gn; ++x)
        g[x] = std::polar(1.0, t_list[j] * f_list[j].eval(static_cast<double>(x) / gn));
      v = normalized_transfer_apply(ctx, phi, g, v);
    }
    for (int x = 0; x < gn; ++x)
      v[x] *= std::polar(1.0, t_list[m] * f_list[m].eval(static_cast<double>(x) / gn));
  }

  std::vector<cd> bV(kBlocks, 0.0);
  std::vector<double> bV2(kBlocks, 0.0);
  std::vector<cd> bZ(kBlocks * L, 0.0), bVZ(kBlocks * L, 0.0);
  std::vector<double> bZ2(kBlocks * L, 0.0);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
#endif
  for (std::size_t b = 0; b < kBlocks; ++b) {
    const auto [lo, hi] = block_range(b, samples);
    for (std::size_t s = lo; s < hi; ++s) {
      RngStream rng(seed, s + 1);
      double x = sampler.draw(rng);
      for (std::size_t j = 0; j < m; ++j) x = trajectory_step(e, x, rng);
      const cd vs = interp_periodic_c(v, x);
      bV[b] += vs;
      bV2[b] += std::norm(vs);
      for (std::size_t n = 0; n < L; ++n) {
        const cd z = interp_periodic_c(q[n], x);
        bZ[b * L + n] += z;
        bZ2[b * L + n] += std::norm(z);
        bVZ[b * L + n] += vs * z;
      }
    }
  }

  const double M = static_cast<double>(samples);
  cd tV = 0.0;
  double tV2 = 0.0;
  for (std::size_t b = 0; b < kBlocks; ++b) { tV += bV[b]; tV2 += bV2[b]; }
  const cd meanV = tV / M;
  const double varV = std::max(0.0, tV2 / M - std::norm(meanV));
  std::vector<double> xs, ys;
  for (std::size_t n = 0; n < L; ++n) {
    cd tZ = 0.0, tVZ = 0.0;
    double tZ2 = 0.0;
    for (std::size_t b = 0; b < kBlocks; ++b) {
      tZ += bZ[b * L + n];
      tVZ += bVZ[b * L + n];
      tZ2 += bZ2[b * L + n];
    }
    const cd meanZ = tZ / M;
    rep.diff[n] = tVZ / M - meanV * meanZ;
    const double varZ = std::max(0.0, tZ2 / M - std::norm(meanZ));
    // delta-method proxy for the sample-covariance standard error
    rep.se[n] = std::sqrt((varV * varZ + std::norm(rep.diff[n])) / M);
    const double mag = std::abs(rep.diff[n]);
    if (mag > 3.0 * rep.se[n] && mag > 0.0) {
      rep.used_in_fit[n] = 1;
      xs.push_back(static_cast<double>(n));
      ys.push_back(std::log(mag));
    }
  }
  if (xs.size() >= 4) {
    rep.envelope = fit_line(xs, ys);
    rep.fit_ok = true;
  }
  return rep;
}

}  // namespace rcm
