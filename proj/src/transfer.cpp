#include "rcm/transfer.hpp"

#include <algorithm>
#include <cmath>

#include "rcm/circle.hpp"

namespace rcm {

std::complex<double> interp_periodic_c(const cvector& v, double x) {
  const int n = static_cast<int>(v.size());
  double s = wrap01(x) * n;
  int j = static_cast<int>(s);
  if (j >= n) { j = 0; s = 0.0; }
  const double t = s - j;
  const auto p0 = v[(j + n - 1) % n];
  const auto p1 = v[j];
  const auto p2 = v[(j + 1) % n];
  const auto p3 = v[(j + 2) % n];
  return p1 + 0.5 * t * (p2 - p0 +
         t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
         t * (3.0 * (p1 - p2) + p3 - p0)));
}

std::vector<double> transfer_apply(const PreimageTable& t, std::span<const double> psi) {
  if (static_cast<int>(psi.size()) != t.grid_n)
    throw GridMismatch("transfer_apply: grid size differs from table");
  const int n = t.grid_n;
  std::vector<double> out(n, 0.0);
  for (int b = 0; b < t.branches; ++b) {
    const double* y = t.y.data() + static_cast<std::size_t>(b) * n;
    const double* w = t.inv_dt.data() + static_cast<std::size_t>(b) * n;
    for (int j = 0; j < n; ++j) out[j] += interp_periodic(psi, y[j]) * w[j];
  }
  return out;
}

std::vector<double> transfer_apply(const MapSample& m, std::span<const double> psi) {
  BranchInverter inv(m);
  return transfer_apply(build_preimage_table(inv, static_cast<int>(psi.size())), psi);
}

cvector transfer_apply(const PreimageTable& t, const cvector& psi) {
  if (static_cast<int>(psi.size()) != t.grid_n)
    throw GridMismatch("transfer_apply: grid size differs from table");
  const int n = t.grid_n;
  cvector out(n, 0.0);
  for (int b = 0; b < t.branches; ++b) {
    const double* y = t.y.data() + static_cast<std::size_t>(b) * n;
    const double* w = t.inv_dt.data() + static_cast<std::size_t>(b) * n;
    for (int j = 0; j < n; ++j) out[j] += interp_periodic_c(psi, y[j]) * w[j];
  }
  return out;
}

TransferContext::TransferContext(Ensemble e, int grid_n) : e_(std::move(e)), n_(grid_n) {
  invs_.reserve(e_.atoms().size());
  tables_.reserve(e_.atoms().size());
  for (const auto& a : e_.atoms()) {
    invs_.push_back(std::make_unique<BranchInverter>(a.map));
    tables_.push_back(build_preimage_table(*invs_.back(), grid_n));
  }
}

std::vector<double> TransferContext::annealed_apply(std::span<const double> psi) const {
  std::vector<double> out(n_, 0.0);
  for (std::size_t a = 0; a < tables_.size(); ++a) {
    const double w = e_.atoms()[a].weight;
    const auto part = transfer_apply(tables_[a], psi);
    for (int j = 0; j < n_; ++j) out[j] += w * part[j];
  }
  return out;
}

std::vector<double> TransferContext::koopman_apply(std::span<const double> f) const {
  std::vector<double> out(n_, 0.0);
  for (std::size_t a = 0; a < tables_.size(); ++a) {
    const double w = e_.atoms()[a].weight;
    const MapSample& m = e_.atoms()[a].map;
    for (int j = 0; j < n_; ++j)
      out[j] += w * interp_periodic(f, m.eval(static_cast<double>(j) / n_));
  }
  return out;
}

cvector TransferContext::koopman_apply(const cvector& f) const {
  cvector out(n_, 0.0);
  for (std::size_t a = 0; a < tables_.size(); ++a) {
    const double w = e_.atoms()[a].weight;
    const MapSample& m = e_.atoms()[a].map;
    for (int j = 0; j < n_; ++j)
      out[j] += w * interp_periodic_c(f, m.eval(static_cast<double>(j) / n_));
  }
  return out;
}

namespace {

// clamp undershoot, renormalize, report drift
DensityGrid finish_density_step(std::vector<double>&& raw, TransferDiag& diag) {
  double clamped = 0.0;
  for (double& x : raw)
    if (x < 0.0) { clamped += -x; x = 0.0; }
  diag.clamped_mass = clamped / raw.size();
  if (diag.clamped_mass > 1e-6)
    throw Error("transfer step clamped mass exceeds 1e-6");
  diag.mass_out = grid_mean(raw);
  return DensityGrid(std::move(raw), true);
}

}  // namespace

PushResult quenched_push(const TransferContext& ctx, const OmegaSequence& omega,
                         const DensityGrid& psi, std::size_t n,
                         const std::function<void(std::size_t, const DensityGrid&)>& per_step) {
  if (n > omega.size()) throw Error("quenched_push: n exceeds omega length");
  if (psi.size() != ctx.grid_n()) throw GridMismatch("quenched_push: grid mismatch");
  PushResult res;
  res.density = psi;
  const bool finite = ctx.ensemble().is_finite();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> raw;
    if (finite) {
      raw = transfer_apply(ctx.table(omega.atom_index_at(i)), res.density.values());
    } else {
      raw = transfer_apply(omega.map_at(i), res.density.values());
    }
    TransferDiag diag;
    diag.mass_in = 1.0;
    DensityGrid next = finish_density_step(std::move(raw), diag);
    res.max_step_drift = std::max(res.max_step_drift, std::fabs(diag.mass_out - diag.mass_in));
    res.total_clamped += diag.clamped_mass;
    res.density = std::move(next);
    if (per_step) per_step(i + 1, res.density);
  }
  return res;
}

cvector normalized_transfer_apply(const TransferContext& ctx, const DensityGrid& phi,
                                  const cvector& h) {
  if (phi.min_value() <= 0.0) throw NonpositiveDensity("Phat needs phi > 0");
  const int n = ctx.grid_n();
  if (static_cast<int>(h.size()) != n || phi.size() != n)
    throw GridMismatch("normalized_transfer_apply: grid mismatch");
  std::vector<double> re(n), im(n);
  for (int j = 0; j < n; ++j) {
    re[j] = phi[j] * h[j].real();
    im[j] = phi[j] * h[j].imag();
  }
  const auto pre = ctx.annealed_apply(re);
  const auto pim = ctx.annealed_apply(im);
  cvector out(n);
  for (int j = 0; j < n; ++j) out[j] = std::complex<double>(pre[j], pim[j]) / phi[j];
  return out;
}

cvector normalized_transfer_apply(const TransferContext& ctx, const DensityGrid& phi,
                                  const cvector& g, const cvector& h) {
  cvector gh(h.size());
  for (std::size_t j = 0; j < h.size(); ++j) gh[j] = g[j] * h[j];
  return normalized_transfer_apply(ctx, phi, gh);
}

cvector koopman_tilted_apply(const TransferContext& ctx, const cvector& g, const cvector& h) {
  cvector gh(h.size());
  for (std::size_t j = 0; j < h.size(); ++j) gh[j] = g[j] * h[j];
  return ctx.koopman_apply(gh);
}

TiltedPushResult tilted_quenched_push(const TransferContext& ctx,
                                      const OmegaSequence& omega, std::size_t n,
                                      std::span<const Tilt> tilts, const cvector& h) {
  if (tilts.size() != n) throw Error("tilted push needs one tilt per step");
  if (n > omega.size()) throw Error("tilted push: n exceeds omega length");
  const int gn = ctx.grid_n();
  if (static_cast<int>(h.size()) != gn) throw GridMismatch("tilted push: grid mismatch");
  const bool finite = ctx.ensemble().is_finite();

  // left: iterate cur <- L_{w_{k+1}}(g_k cur)
  TiltedPushResult res;
  res.left = h;
  std::vector<std::unique_ptr<BranchInverter>> local;  // continuous sequences
  std::vector<const BranchInverter*> invs(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (finite) {
      invs[k] = &ctx.inverter(omega.atom_index_at(k));
    } else {
      local.push_back(std::make_unique<BranchInverter>(omega.map_at(k)));
      invs[k] = local.back().get();
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    cvector gh(gn);
    for (int j = 0; j < gn; ++j) {
      const double fx = tilts[k].f.eval(static_cast<double>(j) / gn);
      gh[j] = std::polar(1.0, tilts[k].t * fx) * res.left[j];
    }
    if (finite) {
      res.left = transfer_apply(ctx.table(omega.atom_index_at(k)), gh);
    } else {
      res.left = transfer_apply(build_preimage_table(*invs[k], gn), gh);
    }
  }

  // right: composed preimage tree with V_n evaluated exactly on each inverse
  // orbit (tree ancestors at level k are the orbit points x_k)
  double branch_product = 1.0;
  for (std::size_t k = 0; k < n; ++k) branch_product *= invs[k]->n_branches();
  if (branch_product * gn > 5e8) throw Error("tilted push: composed branch tree too large");

  res.right.assign(gn, 0.0);
  int max_branches = 1;
  for (std::size_t k = 0; k < n; ++k)
    max_branches = std::max(max_branches, invs[k]->n_branches());
  std::vector<double> ys(max_branches), ds(max_branches);
  struct Node { std::size_t level; double pt; double dprod; double v; };
  std::vector<Node> stack;
  for (int j = 0; j < gn; ++j) {
    std::complex<double> sum = 0.0;
    stack.clear();
    stack.push_back({n, static_cast<double>(j) / gn, 1.0, 0.0});
    while (!stack.empty()) {
      const Node nd = stack.back();
      stack.pop_back();
      if (nd.level == 0) {
        sum += std::polar(1.0, nd.v) * interp_periodic_c(h, nd.pt) / nd.dprod;
        continue;
      }
      const BranchInverter& inv = *invs[nd.level - 1];
      const int nb = inv.n_branches();
      inv.preimages(wrap01(nd.pt), ys.data(), ds.data());
      for (int b = 0; b < nb; ++b) {
        const std::size_t lvl = nd.level - 1;
        const double contrib = tilts[lvl].t * tilts[lvl].f.eval(ys[b]);
        stack.push_back({lvl, ys[b], nd.dprod * ds[b], nd.v + contrib});
      }
    }
    res.right[j] = sum;
  }

  for (int j = 0; j < gn; ++j)
    res.max_abs_diff = std::max(res.max_abs_diff, std::abs(res.left[j] - res.right[j]));
  return res;
}

StationaryResult compute_stationary(const TransferContext& ctx, double tol, int max_iter) {
  require_standing_assumption(ctx.ensemble(), 0.5);
  const int n = ctx.grid_n();
  std::vector<double> cur(n, 1.0);
  std::vector<double> cesaro(cur);
  int k = 0;  // cesaro holds sum of P^0 1 .. P^k 1
  double last_resid = 2.0;
  int it = 0;
  for (it = 1; it <= max_iter; ++it) {
    auto nxt = ctx.annealed_apply(cur);
    for (double& x : nxt) x = std::max(x, 0.0);
    const double mass = grid_mean(nxt);
    for (double& x : nxt) x /= mass;
    last_resid = l1_distance(nxt, cur);
    cur = nxt;
    for (int j = 0; j < n; ++j) cesaro[j] += cur[j];
    ++k;
    if (last_resid <= tol) break;
  }

  StationaryResult res;
  res.iterations = std::min(it, max_iter);
  res.power_residual = last_resid;

  for (double& x : cesaro) x /= (k + 1);
  const double cmass = grid_mean(cesaro);
  for (double& x : cesaro) x /= cmass;
  {
    const auto pc = ctx.annealed_apply(cesaro);
    res.cesaro_residual = l1_distance(pc, cesaro);
  }

  res.used_cesaro = res.cesaro_residual < res.power_residual;
  const auto& best = res.used_cesaro ? cesaro : cur;
  res.residual = res.used_cesaro ? res.cesaro_residual : res.power_residual;
  if (res.residual > tol)
    throw NoConvergence("stationary solve residual above tolerance after max_iter",
                        res.residual);
  res.phi = DensityGrid(std::vector<double>(best), true);
  res.inf_phi = res.phi.min_value();
  res.lip_phi = lipschitz_estimate(res.phi.values());

  const Moments m = ctx.ensemble().moments(1.0);
  res.inf_lower_bound = std::exp(-sup_mean_R(m));
  if (res.inf_phi < res.inf_lower_bound - 1e-3)
    throw Error("stationary density violates the moment lower bound on inf phi");
  return res;
}

DistortionReport verify_distortion(const TransferContext& ctx, const OmegaSequence& omega,
                                   std::size_t n, std::size_t pairs, std::uint64_t seed) {
  if (n > omega.size()) throw Error("verify_distortion: n exceeds omega length");
  std::vector<const BranchInverter*> invs(n);
  std::vector<std::unique_ptr<BranchInverter>> local;
  for (std::size_t i = 0; i < n; ++i) {
    if (ctx.ensemble().is_finite()) {
      invs[i] = &ctx.inverter(omega.atom_index_at(i));
    } else {
      local.push_back(std::make_unique<BranchInverter>(omega.map_at(i)));
      invs[i] = local.back().get();
    }
  }
  double rn = 0.0;  // R_n of this prefix
  {
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const MapSample& m = omega.map_at(i);
      r = r / m.lambda + m.delta;
    }
    rn = r;
  }
  RngStream rng(seed, 0x64697374ull);
  DistortionReport rep;
  rep.pairs = pairs;
  std::vector<int> branch(n);
  for (std::size_t p = 0; p < pairs; ++p) {
    const double x = rng.uniform01();
    const double u = rng.uniform(-0.5, 0.5);
    for (std::size_t i = 0; i < n; ++i)
      branch[i] = static_cast<int>(rng.uniform01() * invs[n - 1 - i]->n_branches());
    const double lr = log_derivative_ratio_same_branch(invs, x, x + u, branch, branch);
    const double denom = rn * std::fabs(u);
    if (denom < 1e-12) {
      rep.max_abs_log_ratio_zero_rn = std::max(rep.max_abs_log_ratio_zero_rn, std::fabs(lr));
    } else {
      rep.max_normalized_log_ratio =
          std::max(rep.max_normalized_log_ratio, std::fabs(lr) / denom);
    }
  }
  rep.ok = rep.max_normalized_log_ratio <= 1.0 + 1e-6 &&
           rep.max_abs_log_ratio_zero_rn <= 1e-10;
  return rep;
}

HolderPropagationReport verify_holder_propagation(const TransferContext& ctx,
                                                  const OmegaSequence& omega,
                                                  std::size_t n, const DensityGrid& psi,
                                                  double alpha, double tol) {
  if (psi.min_value() <= 0.0)
    throw NonpositiveDensity("holder propagation needs strictly positive psi");
  const double log_holder_psi = [&] {
    std::vector<double> lg(psi.values().begin(), psi.values().end());
    for (double& x : lg) x = std::log(x);
    return holder_estimate(lg, alpha);
  }();
  const bool is_const = psi.max_value() - psi.min_value() == 0.0;

  HolderPropagationReport rep;
  rep.sup_checked = is_const;
  double s = 1.0, r = 0.0;
  DensityGrid cur = psi;
  for (std::size_t i = 0; i < n; ++i) {
    const MapSample& m = omega.map_at(i);
    s /= m.lambda;
    r = r / m.lambda + m.delta;
    cur = quenched_push(ctx, omega.suffix(i), cur, 1).density;
    HolderPropagationRow row;
    row.step = i + 1;
    if (cur.min_value() <= 0.0) {
      row.ok = false;
    } else {
      std::vector<double> lg(cur.values().begin(), cur.values().end());
      for (double& x : lg) x = std::log(x);
      row.lhs = holder_estimate(lg, alpha);
      row.bound = std::pow(s, alpha) * log_holder_psi + r;
      row.ok = row.lhs <= row.bound + tol;
      if (is_const) {
        row.sup_norm = cur.max_value();
        row.sup_bound = 1.0 + r;
        row.ok = row.ok && row.sup_norm <= row.sup_bound + tol;
      }
    }
    rep.all_ok = rep.all_ok && row.ok;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace rcm
