#include "rcm/observable.hpp"

#include <cmath>

#include "rcm/circle.hpp"
#include "rcm/density.hpp"

namespace rcm {

double TrigPoly::eval(double x) const {
  double s = c0;
  for (std::size_t k = 0; k < cos_c.size(); ++k)
    if (cos_c[k] != 0.0) s += cos_c[k] * std::cos(two_pi * (k + 1) * x);
  for (std::size_t k = 0; k < sin_c.size(); ++k)
    if (sin_c[k] != 0.0) s += sin_c[k] * std::sin(two_pi * (k + 1) * x);
  return s;
}

double TrigPoly::deriv(double x) const {
  double s = 0.0;
  for (std::size_t k = 0; k < cos_c.size(); ++k)
    if (cos_c[k] != 0.0) s -= cos_c[k] * two_pi * (k + 1) * std::sin(two_pi * (k + 1) * x);
  for (std::size_t k = 0; k < sin_c.size(); ++k)
    if (sin_c[k] != 0.0) s += sin_c[k] * two_pi * (k + 1) * std::cos(two_pi * (k + 1) * x);
  return s;
}

int TrigPoly::max_freq() const {
  return static_cast<int>(std::max(cos_c.size(), sin_c.size()));
}

std::vector<double> TrigPoly::sample(int grid_n) const {
  std::vector<double> v(grid_n);
  for (int j = 0; j < grid_n; ++j) v[j] = eval(static_cast<double>(j) / grid_n);
  return v;
}

TrigPoly TrigPoly::cosine(int k, double amp) {
  TrigPoly p;
  p.cos_c.assign(k, 0.0);
  p.cos_c[k - 1] = amp;
  return p;
}

TrigPoly TrigPoly::random(RngStream& rng, int max_freq, double scale) {
  TrigPoly p;
  p.cos_c.resize(max_freq);
  p.sin_c.resize(max_freq);
  for (int k = 0; k < max_freq; ++k) {
    const double damp = scale / ((k + 1) * (k + 1));  // smooth: coefficients ~ 1/k^2
    p.cos_c[k] = rng.uniform(-damp, damp);
    p.sin_c[k] = rng.uniform(-damp, damp);
  }
  return p;
}

nlohmann::json TrigPoly::to_json() const {
  return nlohmann::json{{"const", c0}, {"cos", cos_c}, {"sin", sin_c}};
}

TrigPoly TrigPoly::from_json(const nlohmann::json& j) {
  TrigPoly p;
  p.c0 = j.value("const", 0.0);
  if (j.contains("cos")) p.cos_c = j.at("cos").get<std::vector<double>>();
  if (j.contains("sin")) p.sin_c = j.at("sin").get<std::vector<double>>();
  return p;
}

Observable Observable::make(std::vector<TrigPoly> comps, double alpha, int grid_n) {
  if (comps.empty()) throw Error("observable needs at least one component");
  Observable f;
  f.components = std::move(comps);
  f.alpha = alpha;
  for (const auto& c : f.components)
    f.holder_const.push_back(holder_estimate(c.sample(grid_n), alpha));
  return f;
}

Observable Observable::from_json(const nlohmann::json& j, int grid_n) {
  std::vector<TrigPoly> comps;
  for (const auto& cj : j.at("components")) comps.push_back(TrigPoly::from_json(cj));
  return make(std::move(comps), j.value("alpha", 1.0), grid_n);
}

nlohmann::json Observable::to_json() const {
  auto arr = nlohmann::json::array();
  for (const auto& c : components) arr.push_back(c.to_json());
  return nlohmann::json{{"components", arr}, {"alpha", alpha}};
}

}  // namespace rcm
