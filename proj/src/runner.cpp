#include "rcm/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "rcm/acceptance.hpp"
#include "rcm/coupling.hpp"
#include "rcm/io.hpp"
#include "rcm/limit_stats.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rcm {

const std::vector<std::string> kSubcommands = {
    "moments",    "stationary", "memory-loss", "coupling", "rde-tail", "correlation",
    "covariance", "clt",        "coboundary",  "multi-corr", "accept", "report"};

namespace {

double now_seconds() {
  using clk = std::chrono::steady_clock;
  return std::chrono::duration<double>(clk::now().time_since_epoch()).count();
}

struct OutSink {
  std::string dir;
  RunManifest manifest;

  OutSink(const std::string& root, const std::string& cmd, const ExperimentConfig& cfg) {
    dir = root + "/" + cmd + "/" + cfg.name;
    ensure_dir(dir);
    manifest.config_hash = cfg.hash();
  }

  void finish(const std::string& csv, const nlohmann::json& summary, double seconds,
              const std::string& op) {
    manifest.timings[op] = seconds;
    manifest.summary = summary;
    manifest.outputs = {dir + "/data.csv", dir + "/summary.json"};
    write_file(dir + "/data.csv", csv);
    write_file(dir + "/summary.json", summary.dump(2) + "\n");
    write_file(dir + "/manifest.json", manifest.to_json().dump(2) + "\n");
  }
};

DensityGrid observable_free_phi(const TransferContext& ctx) {
  return compute_stationary(ctx, 1e-8, 400).phi;
}

int run_moments(const ExperimentConfig& cfg, OutSink& sink) {
  const double t0 = now_seconds();
  const Ensemble& e = cfg.require_ensemble();
  const MomentReport rep = check_standing_assumption(e, cfg.alpha);
  CsvWriter csv({"atom", "weight", "lambda", "delta"});
  for (std::size_t a = 0; a < e.atoms().size(); ++a)
    csv.row(std::vector<double>{static_cast<double>(a), e.atoms()[a].weight,
                                e.atoms()[a].map.lambda, e.atoms()[a].map.delta});
  nlohmann::json summary{{"inv_lambda", rep.moments.inv_lambda},
                         {"inv_lambda2", rep.moments.inv_lambda2},
                         {"inv_lambda_2alpha", rep.moments.inv_lambda_2alpha},
                         {"mean_delta", rep.moments.mean_delta},
                         {"delta2", rep.moments.delta2},
                         {"inv_lambda_delta", rep.moments.inv_lambda_delta},
                         {"exact", rep.moments.exact},
                         {"jensen_ok", rep.jensen_ok},
                         {"pass", rep.pass},
                         {"detail", rep.detail}};
  sink.finish(csv.str(), summary, now_seconds() - t0, "moments");
  return rep.pass ? 0 : 1;
}

int run_stationary(const ExperimentConfig& cfg, OutSink& sink) {
  const double t0 = now_seconds();
  const TransferContext ctx(cfg.require_ensemble(), cfg.grid);
  const StationaryResult st =
      compute_stationary(ctx, cfg.num("tol", 1e-8), static_cast<int>(cfg.count("max_iter", 400)));
  nlohmann::json summary{{"residual", st.residual},
                         {"iterations", st.iterations},
                         {"inf_phi", st.inf_phi},
                         {"lip_phi", st.lip_phi},
                         {"power_residual", st.power_residual},
                         {"cesaro_residual", st.cesaro_residual},
                         {"used_cesaro", st.used_cesaro},
                         {"inf_lower_bound", st.inf_lower_bound},
                         {"pass", true}};
  sink.finish(density_to_csv(st.phi), summary, now_seconds() - t0, "stationary");
  return 0;
}

int run_memory_loss(const ExperimentConfig& cfg, OutSink& sink) {
  const double t0 = now_seconds();
  const Ensemble& e = cfg.require_ensemble();
  const TransferContext ctx(e, cfg.grid);
  const CouplingConstants consts =
      CouplingConstants::from_ensemble(e, cfg.alpha, cfg.K, cfg.K_dprime);
  const std::size_t horizon = cfg.count("horizon", 50);
  const std::size_t sequences = cfg.count("sequences", 100);

  std::vector<double> max_dist(horizon + 1, 0.0), min_bound(horizon + 1, 2.0);
  std::size_t violations = 0;
  for (std::size_t s = 0; s < sequences; ++s) {
    const OmegaSequence omega = sample_sequence(e, horizon, cfg.seed, s + 1);
    RngStream unused(cfg.seed, 0);
    const auto make_psi = [&](std::uint64_t stream) {
      RngStream rng(cfg.seed + 7919, stream);
      const TrigPoly p = TrigPoly::random(rng, 3, 0.3);
      std::vector<double> v(cfg.grid);
      for (int j = 0; j < cfg.grid; ++j) v[j] = 1.0 + p.eval(static_cast<double>(j) / cfg.grid);
      return regularize(DensityGrid(std::move(v), true), cfg.alpha, 0.0).first;
    };
    const MemoryLossReport rep = verify_memory_loss(
        ctx, omega, make_psi(2 * s + 1), make_psi(2 * s + 2), consts, horizon);
    if (!rep.all_within) ++violations;
    for (std::size_t n = 0; n <= horizon; ++n) {
      max_dist[n] = std::max(max_dist[n], rep.distance[n]);
      min_bound[n] = std::min(min_bound[n], rep.bound[n]);
    }
  }
  CsvWriter csv({"n", "max_distance", "min_bound"});
  for (std::size_t n = 0; n <= horizon; ++n)
    csv.row(std::vector<double>{static_cast<double>(n), max_dist[n], min_bound[n]});
  nlohmann::json summary{{"sequences", sequences}, {"horizon", horizon},
                         {"violations", violations}, {"K", consts.K},
                         {"kappa", consts.kappa}, {"pass", violations == 0}};
  sink.finish(csv.str(), summary, now_seconds() - t0, "memory-loss");
  return violations == 0 ? 0 : 1;
}

int run_coupling(const ExperimentConfig& cfg, OutSink& sink) {
  const double t0 = now_seconds();
  const Ensemble& e = cfg.require_ensemble();
  const CouplingConstants consts =
      CouplingConstants::from_ensemble(e, cfg.alpha, cfg.K, cfg.K_dprime);
  const std::size_t sequences = cfg.count("sequences", 10000);
  const std::size_t horizon = cfg.count("horizon", 200);
  const CouplingTimeStats st = coupling_time_stats(e, consts, sequences, horizon, cfg.seed);
  CsvWriter csv({"m", "tau2_survival", "bound", "wilson_lo"});
  for (std::size_t m = 0; m < st.tau2_survival.size(); ++m)
    csv.row(std::vector<double>{static_cast<double>(m), st.tau2_survival[m],
                                st.tau2_bound[m], st.tau2_wilson_lo[m]});
  nlohmann::json summary{{"K", consts.K},
                         {"kappa", consts.kappa},
                         {"K_prime", consts.K_prime},
                         {"K_dprime", consts.K_dprime},
                         {"q", consts.q},
                         {"t_rate", consts.t_rate},
                         {"theta_N", consts.theta_N},
                         {"D_N", consts.D_N},
                         {"mean_tau2", st.mean_tau2},
                         {"tau2_below_bound", st.tau2_below_bound},
                         {"logsurv_slope", st.fit_ok ? st.tau2_logsurv_fit.slope : 0.0},
                         {"fit_ok", st.fit_ok},
                         {"mean_n_tilde", st.mean_n_tilde},
                         {"frac_n_tilde_zero", st.frac_n_tilde_zero},
                         {"pass", st.tau2_below_bound}};
  sink.finish(csv.str(), summary, now_seconds() - t0, "coupling");
  return st.tau2_below_bound ? 0 : 1;
}

int run_rde_tail(const ExperimentConfig& cfg, OutSink& sink) {
  const double t0 = now_seconds();
  RdeLaw law;
  if (cfg.raw.contains("rde_law")) {
    for (const auto& row : cfg.raw.at("rde_law")) {
      law.weight.push_back(row.at("weight").get<double>());
      law.A.push_back(row.at("A").get<double>());
      law.B.push_back(row.at("B").get<double>());
    }
  } else {
    law = RdeLaw::from_ensemble(cfg.require_ensemble());
  }
  const double K = cfg.num("K_rde", cfg.K ? *cfg.K : 4.0);
  const double ell = cfg.num("ell", 8.0);
  const TailReport rep = rde_simulate(law, ell, K, cfg.count("n_max", 60),
                                      cfg.count("samples", 100000), cfg.seed);
  CsvWriter csv({"n", "empirical", "bound", "wilson_lo", "wilson_hi"});
  for (std::size_t n = 0; n < rep.empirical.size(); ++n)
    csv.row(std::vector<double>{static_cast<double>(n), rep.empirical[n], rep.bound[n],
                                rep.wilson_lo[n], rep.wilson_hi[n]});
  nlohmann::json summary{{"q", rep.q}, {"level", rep.level}, {"K", rep.K},
                         {"samples", rep.samples},
                         {"max_violation_ratio", rep.max_violation_ratio},
                         {"violation", rep.violation}, {"pass", !rep.violation}};
  sink.finish(csv.str(), summary, now_seconds() - t0, "rde-tail");
  return rep.violation ? 1 : 0;
}

int run_correlation(const ExperimentConfig& cfg, OutSink& sink) {
  const double t0 = now_seconds();
  const Ensemble& e = cfg.require_ensemble();
  const TransferContext ctx(e, cfg.grid);
  const DensityGrid phi = observable_free_phi(ctx);
  const Observable& f = cfg.require_observable();
  const TrigPoly& f0 = f.components.front();
  const std::size_t n_max = cfg.count("n_max", 16);
  const auto fg = f0.sample(cfg.grid);
  const CorrelationCurve op = correlation_operator(ctx, phi, fg, fg, n_max);
  const CorrelationCurve mc = correlation_mc(ctx, phi, f0, f0, n_max,
                                             cfg.count("samples", 100000), cfg.seed);
  CsvWriter csv({"lag", "operator", "mc", "mc_se"});
  double max_dev_se = 0.0;
  for (std::size_t n = 0; n <= n_max; ++n) {
    csv.row(std::vector<double>{static_cast<double>(n), op.values[n], mc.values[n], mc.se[n]});
    if (mc.se[n] > 0.0)
      max_dev_se = std::max(max_dev_se, std::fabs(op.values[n] - mc.values[n]) / mc.se[n]);
  }
  nlohmann::json summary{{"n_max", n_max}, {"max_deviation_in_se", max_dev_se},
                         {"pass", max_dev_se <= 4.0}};
  sink.finish(csv.str(), summary, now_seconds() - t0, "correlation");
  return max_dev_se <= 4.0 ? 0 : 1;
}

int run_covariance(const ExperimentConfig& cfg, OutSink& sink) {
  const double t0 = now_seconds();
  const Ensemble& e = cfg.require_ensemble();
  const TransferContext ctx(e, cfg.grid);
  const DensityGrid phi = observable_free_phi(ctx);
  const Observable& f = cfg.require_observable();
  const CovarianceEstimate series =
      covariance_series(ctx, phi, f, cfg.count("m_max", 256), cfg.num("tail_tol", 1e-9));
  const CovarianceEstimate batch = covariance_batch_means(
      ctx, phi, f, cfg.count("n", 2048), cfg.count("batches", 4096), cfg.seed);
  CsvWriter csv({"row", "col", "series", "batch", "batch_se"});
  double max_gap_se = 0.0;
  for (int a = 0; a < series.dim; ++a)
    for (int b = 0; b < series.dim; ++b) {
      csv.row(std::vector<double>{static_cast<double>(a), static_cast<double>(b),
                                  series.at(a, b), batch.at(a, b), batch.se[a * batch.dim + b]});
      if (batch.se[a * batch.dim + b] > 0.0)
        max_gap_se = std::max(max_gap_se, std::fabs(series.at(a, b) - batch.at(a, b)) /
                                              batch.se[a * batch.dim + b]);
    }
  nlohmann::json summary{{"dim", series.dim},
                         {"sigma2_series", series.sigma2},
                         {"sigma2_batch", batch.sigma2},
                         {"m_used", series.m_used},
                         {"min_eigenvalue_series", series.min_eigenvalue},
                         {"max_gap_in_se", max_gap_se},
                         {"pass", max_gap_se <= 4.0}};
  sink.finish(csv.str(), summary, now_seconds() - t0, "covariance");
  return max_gap_se <= 4.0 ? 0 : 1;
}

int run_clt(const ExperimentConfig& cfg, OutSink& sink) {
  const double t0 = now_seconds();
  const Ensemble& e = cfg.require_ensemble();
  const TransferContext ctx(e, cfg.grid);
  const DensityGrid phi = observable_free_phi(ctx);
  const Observable& f = cfg.require_observable();
  std::vector<double> v(f.dim(), 0.0);
  v[0] = 1.0;
  if (cfg.raw.contains("direction")) v = cfg.raw.at("direction").get<std::vector<double>>();
  const std::size_t reps = cfg.count("reps", 1);
  CsvWriter csv({"rep", "ks_stat", "ks_p", "ad_stat", "pass"});
  std::size_t passed = 0;
  bool any_verdict = false;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    const CltReport cr = clt_test(ctx, phi, f, v, cfg.count("n", 4096),
                                  cfg.count("samples", 10000), cfg.seed + rep);
    if (cr.has_verdict) any_verdict = true;
    if (cr.pass) ++passed;
    csv.row(std::vector<double>{static_cast<double>(rep), cr.ks_stat, cr.ks_p, cr.ad_stat,
                                cr.pass ? 1.0 : 0.0});
  }
  nlohmann::json summary{{"reps", reps}, {"passed", passed},
                         {"power_warning", !any_verdict},
                         {"pass", !any_verdict || passed == reps}};
  sink.finish(csv.str(), summary, now_seconds() - t0, "clt");
  return (!any_verdict || passed == reps) ? 0 : 1;
}

int run_coboundary(const ExperimentConfig& cfg, OutSink& sink) {
  const double t0 = now_seconds();
  const Ensemble& e = cfg.require_ensemble();
  const TransferContext ctx(e, cfg.grid);
  const DensityGrid phi = observable_free_phi(ctx);
  const Observable& f = cfg.require_observable();
  std::vector<double> v(f.dim(), 0.0);
  v[0] = 1.0;
  if (cfg.raw.contains("direction")) v = cfg.raw.at("direction").get<std::vector<double>>();
  std::vector<double> fv(cfg.grid, 0.0);
  for (int a = 0; a < f.dim(); ++a) {
    const auto comp = f.components[a].sample(cfg.grid);
    for (int j = 0; j < cfg.grid; ++j) fv[j] += v[a] * comp[j];
  }
  const CoboundaryResult res = coboundary_residual(ctx, phi, fv, cfg.count("m_max", 128));
  CsvWriter csv({"x", "g"});
  for (int j = 0; j < cfg.grid; ++j)
    csv.row(std::vector<double>{static_cast<double>(j) / cfg.grid, res.g[j]});
  nlohmann::json summary{{"residual", res.residual}, {"residual_q", res.residual_q},
                         {"terms_used", res.terms_used}, {"converged", res.converged},
                         {"pass", true}};
  sink.finish(csv.str(), summary, now_seconds() - t0, "coboundary");
  return 0;
}

int run_multi_corr(const ExperimentConfig& cfg, OutSink& sink) {
  const double t0 = now_seconds();
  const Ensemble& e = cfg.require_ensemble();
  const TransferContext ctx(e, cfg.grid);
  const DensityGrid phi = observable_free_phi(ctx);
  const std::size_t m = cfg.count("m", 2), k = cfg.count("k", 2);
  const double t = cfg.num("t", 0.1);
  const Observable& f = cfg.require_observable();
  std::vector<TrigPoly> fs(m + k + 1, f.components.front());
  std::vector<double> ts(m + k + 1, t);
  const MultiCorrReport rep = multiple_correlation_check(
      ctx, phi, fs, ts, m, k, cfg.count("n_max", 30), cfg.count("samples", 1000000),
      cfg.seed);
  CsvWriter csv({"lag", "re", "im", "abs", "se", "used_in_fit"});
  for (std::size_t n = 0; n < rep.diff.size(); ++n)
    csv.row(std::vector<double>{static_cast<double>(n), rep.diff[n].real(),
                                rep.diff[n].imag(), std::abs(rep.diff[n]), rep.se[n],
                                static_cast<double>(rep.used_in_fit[n])});
  const bool pass = rep.fit_ok && rep.envelope.slope < 0.0;
  nlohmann::json summary{{"slope", rep.envelope.slope}, {"r2", rep.envelope.r2},
                         {"fit_ok", rep.fit_ok}, {"pass", pass}};
  sink.finish(csv.str(), summary, now_seconds() - t0, "multi-corr");
  return pass ? 0 : 1;
}

int run_accept(const ExperimentConfig& cfg, const std::string& out_root, OutSink& sink) {
  const double t0 = now_seconds();
  accept::Options opt;
  opt.seed = cfg.seed;
  opt.grid_n = cfg.grid;
  const auto rs = accept::run_all(opt, out_root + "/accept/" + cfg.name + "/criteria");
  CsvWriter csv({"criterion", "pass"});
  auto failures = nlohmann::json::array();
  for (const auto& r : rs) {
    csv.row(std::vector<double>{static_cast<double>(r.id), r.pass ? 1.0 : 0.0});
    if (!r.pass)
      failures.push_back({{"id", r.id}, {"name", r.name}, {"detail", r.detail}});
  }
  const bool ok = accept::all_passed(rs);
  nlohmann::json summary{{"criteria", rs.size()}, {"failures", failures}, {"pass", ok}};
  sink.finish(csv.str(), summary, now_seconds() - t0, "accept");
  return ok ? 0 : 1;
}

}  // namespace

int run_subcommand(const std::string& cmd, const ExperimentConfig& cfg,
                   const std::string& out_root, int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
  if (cmd == "report") {
    const std::string text = report_dir(out_root);
    std::fputs(text.c_str(), stdout);
    return 0;
  }
  OutSink sink(out_root, cmd, cfg);
  if (cmd == "moments") return run_moments(cfg, sink);
  if (cmd == "stationary") return run_stationary(cfg, sink);
  if (cmd == "memory-loss") return run_memory_loss(cfg, sink);
  if (cmd == "coupling") return run_coupling(cfg, sink);
  if (cmd == "rde-tail") return run_rde_tail(cfg, sink);
  if (cmd == "correlation") return run_correlation(cfg, sink);
  if (cmd == "covariance") return run_covariance(cfg, sink);
  if (cmd == "clt") return run_clt(cfg, sink);
  if (cmd == "coboundary") return run_coboundary(cfg, sink);
  if (cmd == "multi-corr") return run_multi_corr(cfg, sink);
  if (cmd == "accept") return run_accept(cfg, out_root, sink);
  throw ConfigError("unknown subcommand: " + cmd);
}

std::string report_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  struct Row {
    std::string path;
    bool pass;
    std::string hash;
  };
  std::vector<Row> rows;
  if (fs::exists(dir)) {
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (!entry.is_regular_file() || entry.path().filename() != "manifest.json") continue;
      try {
        const auto j = nlohmann::json::parse(read_file(entry.path().string()));
        Row row;
        row.path = entry.path().parent_path().string();
        row.pass = j.at("summary").value("pass", false);
        row.hash = j.value("config_hash", "");
        rows.push_back(row);
      } catch (...) {
        rows.push_back({entry.path().parent_path().string(), false, "unreadable"});
      }
    }
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.pass != b.pass) return !a.pass;  // failures first
    return a.path < b.path;
  });
  std::string out;
  for (const auto& r : rows)
    out += std::string(r.pass ? "PASS" : "FAIL") + "  " + r.path + "  config=" + r.hash + "\n";
  if (rows.empty()) out = "(no manifests found under " + dir + ")\n";
  return out;
}

}  // namespace rcm
