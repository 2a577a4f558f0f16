#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rcm/ensemble.hpp"
#include "rcm/stat_util.hpp"
#include "rcm/transfer.hpp"

namespace rcm {

struct InfiniteMoment : Error { using Error::Error; };
struct ClassViolation : Error { using Error::Error; };
struct InvalidThreshold : Error {
  InvalidThreshold(const std::string& msg, double k) : Error(msg), min_K(k) {}
  double min_K;
};

// S_n = prod lambda_i^-1, R_n = sum_i Delta_i prod_{j>i} lambda_j^-1,
// computed by the one-step recursions S_n = A_n S_{n-1}, R_n = A_n R_{n-1} + B_n.
struct SRSequences {
  std::vector<double> S;  // S[0] = 1
  std::vector<double> R;  // R[0] = 0
};
SRSequences sr_recursion(std::span<const double> lambdas, std::span<const double> deltas);

// E[R_n] = <Delta> sum_{i=1}^{n} <lambda^-1>^{n-i}
double mean_R(const Moments& m, std::size_t n);

// Closed form
//   E[R_n^2] = <Delta^2> sum_i <l^-2>^{n-i}
//            + 2 <Delta><l^-1 Delta> sum_{i<l} <l^-1>^{l-1-i} <l^-2>^{n-l}.
// Throws InfiniteMoment when <lambda^-2> >= 1.
double exact_second_moment_R(const Moments& m, std::size_t n);
double exact_second_moment_R(const Ensemble& e, std::size_t n);

// n->infinity supremum of E[R_n^2] by geometric limits.
double sup_second_moment_R(const Moments& m);

// Lemma-5.4 constants plus the tail-bound rate of Prop 5.6 and the derived
// Prop-5.7 constants ((K')^t = q^-beta, beta = (K-1)/(2K), theta = q^beta,
// D = (K'')^{1/alpha}).
struct CouplingConstants {
  double K = 0.0;
  double kappa = 0.0;    // exp(-K)/2
  double K_prime = 0.0;  // exp(4K)
  double K_dprime = 1.0; // initial class constant
  double alpha = 1.0;
  double mean_A = 0.0;   // <lambda^-1>
  double mean_B = 0.0;   // <Delta>
  double q = 0.0;        // <A> + <B>/(K-1)
  double t_rate = 0.0;
  double theta_N = 0.0;  // q^beta
  double D_N = 0.0;      // (K'')^{1/alpha}

  // Default K = <B>/(1-<A>) + 2, one unit of slack past the strict bound.
  static CouplingConstants from_ensemble(const Ensemble& e, double alpha,
                                         std::optional<double> K_opt = std::nullopt,
                                         double K_dprime = 1.0);
  static CouplingConstants from_means(double mean_A, double mean_B, double alpha,
                                      std::optional<double> K_opt = std::nullopt,
                                      double K_dprime = 1.0);
};

// eq. (5.2): S_n^alpha K'' + R_n <= K
bool coupling_condition(double S, double R, double K_in, double alpha, double K);

// Per-sequence record of the coupling schedule. S, R, L, Z restart at each
// coupling time (the pushforward re-enters H_K; remainders live in H_{K'}),
// so the arrays hold the running epoch recursions. tau_1 uses class K'',
// every later tau_k uses K'.
struct CouplingTrace {
  std::vector<double> S, R, Z, L;
  std::vector<int> N;                // N[n] = couplings by time n
  std::vector<std::size_t> tau;      // inter-coupling times tau_1, tau_2, ...
  std::vector<std::size_t> n_k;      // coupling times
  double xi = 1.0;                   // initial class constant K''
  bool no_coupling_within_horizon = false;
};
CouplingTrace coupling_schedule(const OmegaSequence& omega, const CouplingConstants& c,
                                std::size_t horizon);

// plot-ready per-step export (n, S, R, Z, L, N)
std::string coupling_trace_csv(const CouplingTrace& tr);

// Empirical first-passage survival of L_n = A_n L_{n-1} + B_n below K-1
// against the bound ell q^n / (K-1), with Wilson 99% bands.
struct TailReport {
  double level = 0.0;
  double K = 0.0;
  double q = 0.0;
  std::size_t samples = 0;
  std::vector<double> empirical;
  std::vector<double> bound;
  std::vector<double> wilson_lo, wilson_hi;
  double max_violation_ratio = 0.0;  // max empirical/bound where bound > 0
  bool violation = false;            // wilson lower band above the bound
  double t_rate = 0.0, theta_N = 0.0, D_N = 0.0;
};

// i.i.d. (A,B) pairs; an ensemble supplies A = lambda^-1, B = Delta.
struct RdeLaw {
  std::vector<double> weight, A, B;
  double mean_A() const;
  double mean_B() const;
  static RdeLaw from_ensemble(const Ensemble& e);
};

TailReport rde_simulate(const RdeLaw& law, double ell, double K, std::size_t n_max,
                        std::size_t samples, std::uint64_t seed);

// Pathwise memory-loss verification: pushes psi1 and psi2 along the same
// omega and checks the L1 distance against 2 (1-kappa)^{N_n} at every step,
// with a grid tolerance growing linearly in n.
struct MemoryLossReport {
  std::vector<double> distance;  // index 0..horizon
  std::vector<double> bound;
  std::vector<int> N;
  bool all_within = true;
  double max_excess = 0.0;  // max over n of distance - bound - n*tol
  CouplingTrace trace;
};
MemoryLossReport verify_memory_loss(const TransferContext& ctx, const OmegaSequence& omega,
                                    const DensityGrid& psi1, const DensityGrid& psi2,
                                    const CouplingConstants& c, std::size_t horizon,
                                    double tol_per_step = 1e-4);

// Aggregated inter-coupling-time statistics over sampled sequences: the
// tau_2 tail against the Prop-5.6 curve at level (K')^{1/alpha}, and the
// random time after which N_n >= floor(t alpha n) holds for good.
struct CouplingTimeStats {
  std::size_t sequences = 0;
  double mean_tau2 = 0.0;
  std::vector<double> tau2_survival;
  std::vector<double> tau2_bound;
  std::vector<double> tau2_wilson_lo;
  bool tau2_below_bound = true;
  LineFit tau2_logsurv_fit;      // slope of log P(tau_2 > m), expected negative
  bool fit_ok = false;
  double mean_n_tilde = 0.0;
  double frac_n_tilde_zero = 0.0;
};
CouplingTimeStats coupling_time_stats(const Ensemble& e, const CouplingConstants& c,
                                      std::size_t sequences, std::size_t horizon,
                                      std::uint64_t seed);

// Empirical decay rates for ||P^n psi - phi||_L1 and its quenched analogue
// ||L_omega^n psi - L_omega^n phi||_L1 averaged over sampled omega.
struct DecayFit {
  std::vector<double> annealed_norms;
  double theta_emp = 1.0;
  double r2 = 0.0;
  bool fit_ok = false;
  std::string status;
  double theta_quenched = 1.0;
  double r2_quenched = 0.0;
  bool quenched_fit_ok = false;
  std::vector<double> c_omega;  // pathwise constants max_n dist_n / theta^n
};
DecayFit measure_decay_rates(const TransferContext& ctx, const DensityGrid& phi,
                             const DensityGrid& psi, std::size_t samples,
                             std::size_t horizon, std::uint64_t seed);

}  // namespace rcm
