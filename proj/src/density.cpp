#include "rcm/density.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rcm/circle.hpp"

namespace rcm {

double interp_periodic(std::span<const double> v, double x) {
  const int n = static_cast<int>(v.size());
  double s = wrap01(x) * n;
  int j = static_cast<int>(s);
  if (j >= n) { j = 0; s = 0.0; }
  const double t = s - j;
  const double p0 = v[(j + n - 1) % n];
  const double p1 = v[j];
  const double p2 = v[(j + 1) % n];
  const double p3 = v[(j + 2) % n];
  return p1 + 0.5 * t * (p2 - p0 +
         t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
         t * (3.0 * (p1 - p2) + p3 - p0)));
}

DensityGrid::DensityGrid(std::vector<double> values, bool normalize) : v_(std::move(values)) {
  if (v_.empty()) throw Error("DensityGrid needs a nonempty grid");
  for (double x : v_)
    if (!(x >= 0.0)) throw Error("DensityGrid values must be nonnegative");
  if (normalize) {
    const double mass = grid_mean(v_);
    if (mass <= 0.0) throw Error("DensityGrid cannot normalize zero mass");
    for (double& x : v_) x /= mass;
    normalized_ = true;
  }
}

DensityGrid DensityGrid::constant(int n) {
  return DensityGrid(std::vector<double>(n, 1.0), true);
}

double DensityGrid::integral() const { return grid_mean(v_); }

double DensityGrid::min_value() const { return *std::min_element(v_.begin(), v_.end()); }
double DensityGrid::max_value() const { return *std::max_element(v_.begin(), v_.end()); }

double grid_mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw GridMismatch("l1_distance: grid sizes differ");
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += std::fabs(a[j] - b[j]);
  return s / static_cast<double>(a.size());
}

double l1_distance(const DensityGrid& a, const DensityGrid& b) {
  return l1_distance(a.values(), b.values());
}

namespace {

// Stride family: all strides for N <= 1024; for larger N the strides
// {1 .. 64 N/1024} plus the multiples of N/1024 up to N/2, so that the pair
// set at 2N contains the doubled pair set at N (monotone refinement).
std::vector<int> holder_strides(int n) {
  std::vector<int> s;
  if (n <= 1024) {
    for (int k = 1; k <= n / 2; ++k) s.push_back(k);
    return s;
  }
  const int scale = n / 1024;
  for (int k = 1; k <= 64 * scale; ++k) s.push_back(k);
  for (int j = 1; j <= 512; ++j) {
    const int k = j * scale;
    if (k > 64 * scale) s.push_back(k);
  }
  return s;
}

}  // namespace

double holder_estimate(std::span<const double> f, double alpha) {
  if (alpha <= 0.0 || alpha > 1.0) throw Error("holder_estimate: alpha must be in (0,1]");
  const int n = static_cast<int>(f.size());
  double best = 0.0;
  for (int stride : holder_strides(n)) {
    double dmax = 0.0;
    for (int j = 0; j < n; ++j) {
      const int k = j + stride < n ? j + stride : j + stride - n;
      dmax = std::max(dmax, std::fabs(f[j] - f[k]));
    }
    const double d = static_cast<double>(stride) / n;  // strides <= N/2
    best = std::max(best, dmax / std::pow(d, alpha));
  }
  return best;
}

double lipschitz_estimate(std::span<const double> f) {
  const int n = static_cast<int>(f.size());
  double m = 0.0;
  for (int j = 0; j < n; ++j)
    m = std::max(m, std::fabs(f[(j + 1) % n] - f[j]));
  return m * n;
}

std::pair<DensityGrid, double> regularize(const DensityGrid& psi, double alpha,
                                          double lip_phi) {
  if (!psi.is_normalized()) throw Error("regularize: psi must be normalized");
  if (lip_phi < 0.0) throw Error("regularize: lip_phi must be nonnegative");
  const double h = holder_estimate(psi.values(), alpha) + lip_phi;
  if (h == 0.0) return {psi, 0.0};
  std::vector<double> out(psi.values().begin(), psi.values().end());
  for (double& x : out) x = (x + h) / (1.0 + h);
  return {DensityGrid(std::move(out), true), h};
}

DensitySampler::DensitySampler(const DensityGrid& phi) {
  if (!phi.is_normalized()) throw Error("DensitySampler: phi must be normalized");
  const int n = phi.size();
  cdf_.resize(n);
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    acc += phi[j] / n;
    cdf_[j] = acc;
  }
  cdf_.back() = 1.0;
}

double DensitySampler::draw(RngStream& rng) const {
  const double u = rng.uniform01();
  const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
  const int j = static_cast<int>(it - cdf_.begin());
  const double lo = j == 0 ? 0.0 : cdf_[j - 1];
  const double cell = cdf_[j] - lo;
  const double frac = cell > 0.0 ? (u - lo) / cell : 0.0;
  return (j + frac) / cdf_.size();
}

std::vector<double> sample_from_density(const DensityGrid& phi, std::size_t m,
                                        std::uint64_t seed, std::uint64_t stream) {
  const DensitySampler sampler(phi);
  RngStream rng(seed, stream);
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = sampler.draw(rng);
  return out;
}

double density_cdf(const DensityGrid& phi, double x) {
  const int n = phi.size();
  const double s = wrap01(x) * n;
  const int j = std::min(static_cast<int>(s), n - 1);
  double acc = 0.0;
  for (int i = 0; i < j; ++i) acc += phi[i] / n;
  return acc + phi[j] / n * (s - j);
}

std::string density_to_csv(const DensityGrid& g) {
  std::string out = "# grid_n=" + std::to_string(g.size()) + "\nx,value\n";
  char buf[64];
  for (int j = 0; j < g.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", g.x_at(j), g[j]);
    out += buf;
  }
  return out;
}

nlohmann::json density_to_json(const DensityGrid& g) {
  return nlohmann::json{{"n", g.size()},
                        {"normalized", g.is_normalized()},
                        {"values", std::vector<double>(g.values().begin(), g.values().end())}};
}

DensityGrid density_from_json(const nlohmann::json& j) {
  auto vals = j.at("values").get<std::vector<double>>();
  return DensityGrid(std::move(vals), j.value("normalized", true));
}

}  // namespace rcm
