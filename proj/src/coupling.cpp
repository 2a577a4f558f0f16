#include "rcm/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rcm/io.hpp"

namespace rcm {

SRSequences sr_recursion(std::span<const double> lambdas, std::span<const double> deltas) {
  if (lambdas.size() != deltas.size())
    throw Error("sr_recursion: lambda/delta length mismatch");
  const std::size_t n = lambdas.size();
  SRSequences sr;
  sr.S.assign(n + 1, 1.0);
  sr.R.assign(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(lambdas[i] > 0.0)) throw Error("sr_recursion: lambdas must be positive");
    if (deltas[i] < 0.0) throw Error("sr_recursion: deltas must be nonnegative");
    const double a = 1.0 / lambdas[i];
    sr.S[i + 1] = a * sr.S[i];
    sr.R[i + 1] = a * sr.R[i] + deltas[i];
  }
  return sr;
}

double mean_R(const Moments& m, std::size_t n) {
  double s = 0.0, pow_il = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    s += pow_il;
    pow_il *= m.inv_lambda;
  }
  return m.mean_delta * s;
}

double exact_second_moment_R(const Moments& m, std::size_t n) {
  if (m.inv_lambda2 >= 1.0)
    throw InfiniteMoment("<lambda^-2> >= 1: E[R_n^2] has no uniform bound");
  // diagonal part
  double diag = 0.0;
  {
    double p = 1.0;  // <l^-2>^{n-i} for i = n down to 1
    for (std::size_t i = 0; i < n; ++i) {
      diag += p;
      p *= m.inv_lambda2;
    }
    diag *= m.delta2;
  }
  // off-diagonal part: sum over l of ( sum_{i<l} <l^-1>^{l-1-i} ) <l^-2>^{n-l}
  double off = 0.0;
  {
    double inner = 0.0;   // sum_{i=1}^{l-1} <l^-1>^{l-1-i}, built up in l
    double outer = 1.0;   // <l^-2>^{n-l} for l = n down to 2
    // iterate l = n, n-1, ..., 2 while inner depends on l; do it forward instead
    std::vector<double> pow2(n + 1, 1.0);
    for (std::size_t k = 1; k <= n; ++k) pow2[k] = pow2[k - 1] * m.inv_lambda2;
    inner = 0.0;
    for (std::size_t l = 2; l <= n; ++l) {
      inner = inner * m.inv_lambda + 1.0;  // sum_{i=1}^{l-1} <l^-1>^{l-1-i}
      off += inner * pow2[n - l];
    }
    (void)outer;
    off *= 2.0 * m.mean_delta * m.inv_lambda_delta;
  }
  return diag + off;
}

double exact_second_moment_R(const Ensemble& e, std::size_t n) {
  return exact_second_moment_R(e.moments(1.0), n);
}

double sup_second_moment_R(const Moments& m) {
  if (m.inv_lambda2 >= 1.0)
    throw InfiniteMoment("<lambda^-2> >= 1: E[R_n^2] has no uniform bound");
  const double g2 = 1.0 / (1.0 - m.inv_lambda2);
  const double g1 = 1.0 / (1.0 - m.inv_lambda);
  return m.delta2 * g2 + 2.0 * m.mean_delta * m.inv_lambda_delta * g1 * g2;
}

CouplingConstants CouplingConstants::from_means(double mean_A, double mean_B, double alpha,
                                                std::optional<double> K_opt,
                                                double K_dprime) {
  if (!(mean_A < 1.0)) throw Error("coupling constants need <A> < 1");
  if (alpha <= 0.0 || alpha > 1.0) throw Error("alpha must lie in (0,1]");
  CouplingConstants c;
  c.mean_A = mean_A;
  c.mean_B = mean_B;
  c.alpha = alpha;
  c.K_dprime = K_dprime;
  c.K = K_opt ? *K_opt : mean_B / (1.0 - mean_A) + 2.0;
  c.kappa = 0.5 * std::exp(-c.K);
  c.K_prime = std::exp(4.0 * c.K);
  c.q = mean_B > 0.0 ? mean_A + mean_B / (c.K - 1.0) : mean_A;
  const double beta = (c.K - 1.0) / (2.0 * c.K);
  if (c.q > 0.0 && c.q < 1.0) {
    c.t_rate = beta * std::log(1.0 / c.q) / std::log(c.K_prime);
    c.theta_N = std::pow(c.q, beta);
  }
  c.D_N = std::pow(K_dprime, 1.0 / alpha);
  return c;
}

CouplingConstants CouplingConstants::from_ensemble(const Ensemble& e, double alpha,
                                                   std::optional<double> K_opt,
                                                   double K_dprime) {
  const Moments m = e.moments(alpha);
  return from_means(m.inv_lambda, m.mean_delta, alpha, K_opt, K_dprime);
}

bool coupling_condition(double S, double R, double K_in, double alpha, double K) {
  if (S < 0.0 || R < 0.0 || K_in < 0.0) throw Error("coupling_condition: negative input");
  return std::pow(S, alpha) * K_in + R <= K;
}

CouplingTrace coupling_schedule(const OmegaSequence& omega, const CouplingConstants& c,
                                std::size_t horizon) {
  if (horizon > omega.size()) throw Error("coupling_schedule: horizon exceeds omega");
  CouplingTrace tr;
  tr.xi = c.K_dprime;
  tr.S.assign(horizon + 1, 1.0);
  tr.R.assign(horizon + 1, 0.0);
  tr.Z.assign(horizon + 1, 0.0);
  tr.L.assign(horizon + 1, 0.0);
  tr.N.assign(horizon + 1, 0);

  double xi_cur = c.K_dprime;
  double S = 1.0, R = 0.0;
  double L = std::pow(xi_cur, 1.0 / c.alpha);
  std::size_t epoch_len = 0;
  int couplings = 0;

  auto record = [&](std::size_t n) {
    tr.S[n] = S;
    tr.R[n] = R;
    tr.Z[n] = R + xi_cur * std::pow(S, c.alpha);
    tr.L[n] = L;
    tr.N[n] = couplings;
  };

  // time 0: tau_1 = 0 when the initial class already satisfies the condition
  record(0);
  if (coupling_condition(S, R, xi_cur, c.alpha, c.K)) {
    tr.tau.push_back(0);
    tr.n_k.push_back(0);
    ++couplings;
    xi_cur = c.K_prime;
    S = 1.0; R = 0.0;
    L = std::pow(xi_cur, 1.0 / c.alpha);
    epoch_len = 0;
    tr.N[0] = couplings;
  }

  for (std::size_t n = 1; n <= horizon; ++n) {
    const MapSample& m = omega.map_at(n - 1);
    const double a = 1.0 / m.lambda;
    const double b = m.delta;
    S *= a;
    R = a * R + b;
    L = a * L + b;
    ++epoch_len;
    record(n);
    if (coupling_condition(S, R, xi_cur, c.alpha, c.K)) {
      tr.tau.push_back(epoch_len);
      tr.n_k.push_back(n);
      ++couplings;
      tr.N[n] = couplings;
      xi_cur = c.K_prime;
      S = 1.0; R = 0.0;
      L = std::pow(xi_cur, 1.0 / c.alpha);
      epoch_len = 0;
    }
  }
  tr.no_coupling_within_horizon = tr.n_k.empty();
  return tr;
}

std::string coupling_trace_csv(const CouplingTrace& tr) {
  CsvWriter csv({"n", "S", "R", "Z", "L", "N"});
  for (std::size_t n = 0; n < tr.S.size(); ++n)
    csv.row(std::vector<double>{static_cast<double>(n), tr.S[n], tr.R[n], tr.Z[n],
                                tr.L[n], static_cast<double>(tr.N[n])});
  return csv.str();
}

double RdeLaw::mean_A() const {
  double s = 0.0;
  for (std::size_t i = 0; i < weight.size(); ++i) s += weight[i] * A[i];
  return s;
}

double RdeLaw::mean_B() const {
  double s = 0.0;
  for (std::size_t i = 0; i < weight.size(); ++i) s += weight[i] * B[i];
  return s;
}

RdeLaw RdeLaw::from_ensemble(const Ensemble& e) {
  RdeLaw law;
  for (const auto& a : e.atoms()) {
    law.weight.push_back(a.weight);
    law.A.push_back(1.0 / a.map.lambda);
    law.B.push_back(a.map.delta);
  }
  return law;
}

TailReport rde_simulate(const RdeLaw& law, double ell, double K, std::size_t n_max,
                        std::size_t samples, std::uint64_t seed) {
  if (law.weight.empty() || law.weight.size() != law.A.size() ||
      law.weight.size() != law.B.size())
    throw Error("rde_simulate: malformed law");
  const double mA = law.mean_A();
  const double mB = law.mean_B();
  if (!(mA < 1.0)) throw Error("rde_simulate: needs <A> < 1");
  const double min_K = mB / (1.0 - mA) + 1.0;
  if (!(K > min_K))
    throw InvalidThreshold("rde_simulate: needs K > <B>/(1-<A>) + 1 = " +
                               std::to_string(min_K),
                           min_K);
  if (!(ell > K - 1.0)) throw Error("rde_simulate: needs ell > K - 1");

  std::vector<double> cum(law.weight.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < cum.size(); ++i) { acc += law.weight[i]; cum[i] = acc; }
  cum.back() = 1.0;

  std::vector<std::size_t> survive(n_max + 1, 0);  // counts of T > n
  for (std::size_t s = 0; s < samples; ++s) {
    RngStream rng(seed, s + 1);
    double L = ell;
    std::size_t T = n_max + 1;
    for (std::size_t k = 1; k <= n_max; ++k) {
      const std::size_t i = rng.pick(cum);
      L = law.A[i] * L + law.B[i];
      if (L <= K - 1.0) { T = k; break; }
    }
    for (std::size_t n = 0; n <= n_max && n < T; ++n) ++survive[n];
  }

  TailReport rep;
  rep.level = ell;
  rep.K = K;
  rep.q = mB > 0.0 ? mA + mB / (K - 1.0) : mA;
  rep.samples = samples;
  rep.empirical.resize(n_max + 1);
  rep.bound.resize(n_max + 1);
  rep.wilson_lo.resize(n_max + 1);
  rep.wilson_hi.resize(n_max + 1);
  double qn = 1.0;
  for (std::size_t n = 0; n <= n_max; ++n) {
    rep.empirical[n] = static_cast<double>(survive[n]) / samples;
    rep.bound[n] = ell * qn / (K - 1.0);
    qn *= rep.q;
    const auto w = wilson_interval(survive[n], samples, z_99);
    rep.wilson_lo[n] = w.lo;
    rep.wilson_hi[n] = w.hi;
    if (rep.bound[n] > 0.0)
      rep.max_violation_ratio = std::max(rep.max_violation_ratio,
                                         rep.empirical[n] / rep.bound[n]);
    if (rep.wilson_lo[n] > rep.bound[n]) rep.violation = true;
  }
  return rep;
}

MemoryLossReport verify_memory_loss(const TransferContext& ctx, const OmegaSequence& omega,
                                    const DensityGrid& psi1, const DensityGrid& psi2,
                                    const CouplingConstants& c, std::size_t horizon,
                                    double tol_per_step) {
  // H_{K''} membership with 1% slack (the discrete estimate is a lower bound)
  for (const DensityGrid* psi : {&psi1, &psi2}) {
    if (psi->min_value() <= 0.0)
      throw ClassViolation("memory loss inputs must be strictly positive");
    std::vector<double> lg(psi->values().begin(), psi->values().end());
    for (double& x : lg) x = std::log(x);
    const double h = holder_estimate(lg, c.alpha);
    if (h > c.K_dprime * 1.01)
      throw ClassViolation("input density log-Hoelder constant " + std::to_string(h) +
                           " exceeds K'' = " + std::to_string(c.K_dprime));
  }

  MemoryLossReport rep;
  rep.trace = coupling_schedule(omega, c, horizon);
  rep.N = rep.trace.N;
  rep.distance.assign(horizon + 1, 0.0);
  rep.bound.assign(horizon + 1, 0.0);
  rep.distance[0] = l1_distance(psi1, psi2);

  std::vector<DensityGrid> path1(horizon + 1);
  path1[0] = psi1;
  quenched_push(ctx, omega, psi1, horizon,
                [&](std::size_t n, const DensityGrid& g) { path1[n] = g; });
  quenched_push(ctx, omega, psi2, horizon,
                [&](std::size_t n, const DensityGrid& g) {
                  rep.distance[n] = l1_distance(path1[n], g);
                });

  rep.max_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n <= horizon; ++n) {
    rep.bound[n] = 2.0 * std::pow(1.0 - c.kappa, rep.N[n]);
    const double excess = rep.distance[n] - rep.bound[n] - tol_per_step * n;
    rep.max_excess = std::max(rep.max_excess, excess);
    if (excess > 0.0) rep.all_within = false;
  }
  return rep;
}

CouplingTimeStats coupling_time_stats(const Ensemble& e, const CouplingConstants& c,
                                      std::size_t sequences, std::size_t horizon,
                                      std::uint64_t seed) {
  CouplingTimeStats st;
  st.sequences = sequences;
  std::vector<std::size_t> tau2s;
  std::vector<std::size_t> n_tildes;
  for (std::size_t s = 0; s < sequences; ++s) {
    const OmegaSequence omega = sample_sequence(e, horizon, seed, s + 1);
    const CouplingTrace tr = coupling_schedule(omega, c, horizon);
    tau2s.push_back(tr.tau.size() >= 2 ? tr.tau[1] : horizon + 1);  // censored
    // smallest m with N_n >= floor(t alpha n) for all n in [m, horizon]
    std::size_t nt = 0;
    for (std::size_t n = horizon + 1; n-- > 0;) {
      const double req = std::floor(c.t_rate * c.alpha * static_cast<double>(n));
      if (tr.N[n] < static_cast<int>(req)) { nt = n + 1; break; }
    }
    n_tildes.push_back(nt);
  }

  double mean_t2 = 0.0;
  for (auto t : tau2s) mean_t2 += static_cast<double>(t);
  st.mean_tau2 = mean_t2 / sequences;

  const std::size_t m_max = horizon;
  st.tau2_survival.resize(m_max + 1);
  st.tau2_bound.resize(m_max + 1);
  st.tau2_wilson_lo.resize(m_max + 1);
  const double lvl = std::pow(c.K_prime, 1.0 / c.alpha);
  double qm = 1.0;
  std::vector<double> xs, ys;
  for (std::size_t m = 0; m <= m_max; ++m) {
    std::size_t cnt = 0;
    for (auto t : tau2s)
      if (t > m) ++cnt;
    st.tau2_survival[m] = static_cast<double>(cnt) / sequences;
    st.tau2_bound[m] = lvl * qm / (c.K - 1.0);
    qm *= c.q;
    st.tau2_wilson_lo[m] = wilson_interval(cnt, sequences, z_99).lo;
    if (st.tau2_wilson_lo[m] > st.tau2_bound[m]) st.tau2_below_bound = false;
    if (cnt > 0 && cnt < sequences) {
      xs.push_back(static_cast<double>(m));
      ys.push_back(std::log(st.tau2_survival[m]));
    }
  }
  if (xs.size() >= 4) {
    st.tau2_logsurv_fit = fit_line(xs, ys);
    st.fit_ok = true;
  }

  double mnt = 0.0, zeros = 0.0;
  for (auto nt : n_tildes) {
    mnt += static_cast<double>(nt);
    if (nt == 0) zeros += 1.0;
  }
  st.mean_n_tilde = mnt / sequences;
  st.frac_n_tilde_zero = zeros / sequences;
  return st;
}

DecayFit measure_decay_rates(const TransferContext& ctx, const DensityGrid& phi,
                             const DensityGrid& psi, std::size_t samples,
                             std::size_t horizon, std::uint64_t seed) {
  DecayFit fit;
  // annealed: ||P^n psi - phi||
  std::vector<double> cur(psi.values().begin(), psi.values().end());
  fit.annealed_norms.reserve(horizon + 1);
  for (std::size_t n = 0; n <= horizon; ++n) {
    fit.annealed_norms.push_back(l1_distance(cur, phi.values()));
    if (n == horizon) break;
    auto nxt = ctx.annealed_apply(cur);
    for (double& x : nxt) x = std::max(x, 0.0);
    const double mass = grid_mean(nxt);
    for (double& x : nxt) x /= mass;
    cur = std::move(nxt);
  }
  std::vector<double> xs, ys;
  for (std::size_t n = 0; n <= horizon; ++n) {
    if (fit.annealed_norms[n] > 1e-10) {
      xs.push_back(static_cast<double>(n));
      ys.push_back(std::log(fit.annealed_norms[n]));
    }
  }
  // log-norms varying by under 1% cannot identify a rate
  const auto y_spread = [](const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
  };
  if (xs.size() < 4 || y_spread(ys) < 1e-2) {
    fit.status = "FitDegenerate: fewer than 4 usable points or flat norms";
  } else {
    const LineFit lf = fit_line(xs, ys);
    fit.theta_emp = std::exp(lf.slope);
    fit.r2 = lf.r2;
    fit.fit_ok = true;
    fit.status = "ok";
  }

  // quenched: mean log ||L^n psi - L^n phi|| over sampled omega
  if (samples > 0) {
    std::vector<std::vector<double>> dists(samples);
    for (std::size_t s = 0; s < samples; ++s) {
      const OmegaSequence omega = sample_sequence(ctx.ensemble(), horizon, seed, s + 1);
      std::vector<DensityGrid> path(horizon + 1);
      path[0] = psi;
      quenched_push(ctx, omega, psi, horizon,
                    [&](std::size_t n, const DensityGrid& g) { path[n] = g; });
      auto& d = dists[s];
      d.assign(horizon + 1, 0.0);
      d[0] = l1_distance(psi, phi);
      quenched_push(ctx, omega, phi, horizon,
                    [&](std::size_t n, const DensityGrid& g) {
                      d[n] = l1_distance(path[n], g);
                    });
    }
    std::vector<double> qx, qy;
    for (std::size_t n = 0; n <= horizon; ++n) {
      double lsum = 0.0;
      std::size_t cnt = 0;
      for (const auto& d : dists)
        if (d[n] > 1e-10) { lsum += std::log(d[n]); ++cnt; }
      if (cnt == samples) {
        qx.push_back(static_cast<double>(n));
        qy.push_back(lsum / cnt);
      }
    }
    if (qx.size() >= 4 && y_spread(qy) >= 1e-2) {
      const LineFit lf = fit_line(qx, qy);
      fit.theta_quenched = std::exp(lf.slope);
      fit.r2_quenched = lf.r2;
      fit.quenched_fit_ok = true;
      for (const auto& d : dists) {
        double cmax = 0.0;
        for (std::size_t n = 0; n <= horizon; ++n)
          cmax = std::max(cmax, d[n] / std::pow(fit.theta_quenched, static_cast<double>(n)));
        fit.c_omega.push_back(cmax);
      }
    }
  }
  return fit;
}

}  // namespace rcm
