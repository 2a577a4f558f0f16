#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "rcm/branch.hpp"
#include "rcm/density.hpp"
#include "rcm/ensemble.hpp"
#include "rcm/observable.hpp"

namespace rcm {

struct NonpositiveDensity : Error { using Error::Error; };
struct NoConvergence : Error {
  NoConvergence(const std::string& msg, double r) : Error(msg), last_residual(r) {}
  double last_residual;
};

using cvector = std::vector<std::complex<double>>;

// periodic Catmull-Rom interpolation of a complex grid function
std::complex<double> interp_periodic_c(const cvector& v, double x);

// Per-step bookkeeping of a transfer application on a density.
struct TransferDiag {
  double mass_in = 0.0;
  double mass_out = 0.0;
  double clamped_mass = 0.0;  // interpolation undershoot removed at 0
};

// L psi(x) = sum over preimages y of psi(y)/|T'(y)|, cubic interpolation of
// psi at the preimages.
std::vector<double> transfer_apply(const PreimageTable& t, std::span<const double> psi);
std::vector<double> transfer_apply(const MapSample& m, std::span<const double> psi);
cvector transfer_apply(const PreimageTable& t, const cvector& psi);

// Shared operator context for one ensemble at one grid size: branch
// inverters and grid preimage tables per atom, built once. Holds its own
// copy of the ensemble, so temporaries are safe to pass.
class TransferContext {
public:
  TransferContext(Ensemble e, int grid_n);

  const Ensemble& ensemble() const { return e_; }
  int grid_n() const { return n_; }
  const BranchInverter& inverter(std::size_t atom) const { return *invs_[atom]; }
  const PreimageTable& table(std::size_t atom) const { return tables_[atom]; }

  // annealed transfer operator P
  std::vector<double> annealed_apply(std::span<const double> psi) const;
  // Markov operator Q (weighted average of f o T_omega, interpolating f)
  std::vector<double> koopman_apply(std::span<const double> f) const;
  cvector koopman_apply(const cvector& f) const;

private:
  Ensemble e_;
  int n_;
  std::vector<std::unique_ptr<BranchInverter>> invs_;
  std::vector<PreimageTable> tables_;
};

// n-step quenched pushforward along omega with per-step renormalization.
// Negative interpolation undershoot is clamped at 0 and accounted; the
// renormalization drift must stay below 1e-8 per step.
struct PushResult {
  DensityGrid density;
  double max_step_drift = 0.0;   // max |mass_out - mass_in| over steps
  double total_clamped = 0.0;
};
PushResult quenched_push(const TransferContext& ctx, const OmegaSequence& omega,
                         const DensityGrid& psi, std::size_t n,
                         const std::function<void(std::size_t, const DensityGrid&)>&
                             per_step = nullptr);

// Normalized operator Phat g = phi^-1 P(phi g) and its tilted variants
// Phat_g h = Phat(g h), Q_g h = Q(g h).
cvector normalized_transfer_apply(const TransferContext& ctx, const DensityGrid& phi,
                                  const cvector& h);
cvector normalized_transfer_apply(const TransferContext& ctx, const DensityGrid& phi,
                                  const cvector& g, const cvector& h);
cvector koopman_tilted_apply(const TransferContext& ctx, const cvector& g,
                             const cvector& h);

// One tilt factor g_k = exp(i t_k f_k).
struct Tilt {
  double t = 0.0;
  TrigPoly f;
};

// Both evaluation orders of the tilted product
//   L_{w_n, g_{n-1}} ... L_{w_1, g_0} h  =  L_{w_n} ... L_{w_1} (e^{V_n} h),
// V_n = sum_k i t_k f_k o T_{w_k} o ... o T_{w_1}. The left side iterates
// grid-level tilted transfers; the right side enumerates the composed
// preimage tree and evaluates V_n exactly along each inverse orbit, so the
// discrepancy isolates the grid error of the iterated route.
struct TiltedPushResult {
  cvector left;
  cvector right;
  double max_abs_diff = 0.0;
};
TiltedPushResult tilted_quenched_push(const TransferContext& ctx,
                                      const OmegaSequence& omega, std::size_t n,
                                      std::span<const Tilt> tilts, const cvector& h);

// Stationary density of P: power iteration from 1 alongside the Cesaro
// average; whichever residual is smaller wins, both are reported.
struct StationaryResult {
  DensityGrid phi;
  double residual = 0.0;
  int iterations = 0;
  double inf_phi = 0.0;
  double lip_phi = 0.0;
  double power_residual = 0.0;
  double cesaro_residual = 0.0;
  bool used_cesaro = false;
  double inf_lower_bound = 0.0;  // exp(-sup_n E[R_n]), moments only
};
StationaryResult compute_stationary(const TransferContext& ctx, double tol = 1e-10,
                                    int max_iter = 2000);

// Checks the composed-derivative distortion bound
//   exp(-R_n d(x,y)) <= ratio <= exp(R_n d(x,y))
// on random same-branch preimage pairs within a common arc of length <= 1/2.
struct DistortionReport {
  std::size_t pairs = 0;
  double max_normalized_log_ratio = 0.0;  // max |log ratio| / (R_n d)
  double max_abs_log_ratio_zero_rn = 0.0; // where R_n d ~ 0 the ratio must be 1
  bool ok = false;
};
DistortionReport verify_distortion(const TransferContext& ctx, const OmegaSequence& omega,
                                   std::size_t n, std::size_t pairs, std::uint64_t seed);

// Checks |log L_{w_n}..L_{w_1} psi|_alpha <= S_n^alpha |log psi|_alpha + R_n
// step by step, plus ||L..1||_inf <= 1 + R_n when psi is constant.
struct HolderPropagationRow {
  std::size_t step = 0;
  double lhs = 0.0;         // discrete |log pushforward|_alpha
  double bound = 0.0;       // S_n^alpha |log psi|_alpha + R_n
  double sup_norm = 0.0;
  double sup_bound = 0.0;   // 1 + R_n (constant psi only)
  bool ok = true;
};
struct HolderPropagationReport {
  std::vector<HolderPropagationRow> rows;
  bool all_ok = true;
  bool sup_checked = false;
};
HolderPropagationReport verify_holder_propagation(const TransferContext& ctx,
                                                  const OmegaSequence& omega,
                                                  std::size_t n, const DensityGrid& psi,
                                                  double alpha, double tol = 1e-3);

}  // namespace rcm
