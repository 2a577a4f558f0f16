#include "rcm/stat_util.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rcm {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_statistic_normal(std::span<const double> values) {
  std::vector<double> z(values.begin(), values.end());
  std::sort(z.begin(), z.end());
  const std::size_t n = z.size();
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = normal_cdf(z[i]);
    d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

static double kolmogorov_q(double t) {
  if (t < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  return kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
}

double anderson_darling_normal(std::span<const double> values) {
  std::vector<double> z(values.begin(), values.end());
  std::sort(z.begin(), z.end());
  const std::size_t n = z.size();
  if (n == 0) throw std::invalid_argument("anderson_darling_normal: empty sample");
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double fi = normal_cdf(z[i]);
    double fj = normal_cdf(z[n - 1 - i]);
    fi = std::clamp(fi, 1e-300, 1.0 - 1e-16);
    fj = std::clamp(fj, 0.0, 1.0 - 1e-300);
    s += (2.0 * i + 1.0) * (std::log(fi) + std::log1p(-fj));
  }
  return -static_cast<double>(n) - s / static_cast<double>(n);
}

double chi2_pvalue(double statistic, std::size_t dof) {
  if (dof == 0) throw std::invalid_argument("chi2_pvalue: zero dof");
  const double k = static_cast<double>(dof);
  const double c = 2.0 / (9.0 * k);
  const double z = (std::cbrt(statistic / k) - (1.0 - c)) / std::sqrt(c);
  return 1.0 - normal_cdf(z);
}

WilsonInterval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line: need >= 2 points of equal length");
  const std::size_t n = x.size();
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) { sx += x[i]; sy += y[i]; }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit fit;
  fit.n = n;
  if (sxx <= 0.0) throw std::invalid_argument("fit_line: degenerate x");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.se_slope = n > 2 ? std::sqrt(ss_res / (n - 2) / sxx) : 0.0;
  return fit;
}

Quadrature gauss_legendre(std::size_t n) {
  if (n == 0) throw std::invalid_argument("gauss_legendre: n must be positive");
  Quadrature q;
  q.nodes.resize(n);
  q.weights.resize(n);
  const std::size_t m = (n + 1) / 2;
  for (std::size_t i = 0; i < m; ++i) {
    // Newton from the Chebyshev-angle initial guess
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    q.nodes[i] = -x;
    q.nodes[n - 1 - i] = x;
    q.weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
    q.weights[n - 1 - i] = q.weights[i];
  }
  return q;
}

double MeanVar::se() const { return n > 0 ? std::sqrt(var / static_cast<double>(n)) : 0.0; }

MeanVar mean_var(std::span<const double> values) {
  MeanVar mv;
  mv.n = values.size();
  if (mv.n == 0) return mv;
  double s = 0.0;
  for (double v : values) s += v;
  mv.mean = s / mv.n;
  if (mv.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - mv.mean) * (v - mv.mean);
    mv.var = ss / (mv.n - 1);
  }
  return mv;
}

std::vector<double> sym_eigenvalues(std::span<const double> a, int d) {
  if (static_cast<int>(a.size()) != d * d)
    throw std::invalid_argument("sym_eigenvalues: size mismatch");
  std::vector<double> m(a.begin(), a.end());
  auto at = [&](int i, int j) -> double& { return m[i * d + j]; };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) off += at(i, j) * at(i, j);
    if (off < 1e-30) break;
    for (int p = 0; p < d; ++p) {
      for (int q = p + 1; q < d; ++q) {
        if (std::fabs(at(p, q)) < 1e-300) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < d; ++k) {
          const double mkp = at(k, p), mkq = at(k, q);
          at(k, p) = c * mkp - s * mkq;
          at(k, q) = s * mkp + c * mkq;
        }
        for (int k = 0; k < d; ++k) {
          const double mpk = at(p, k), mqk = at(q, k);
          at(p, k) = c * mpk - s * mqk;
          at(q, k) = s * mpk + c * mqk;
        }
      }
    }
  }
  std::vector<double> eig(d);
  for (int i = 0; i < d; ++i) eig[i] = at(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

}  // namespace rcm
