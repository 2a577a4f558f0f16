#include "rcm/ensemble.hpp"

#include <cmath>

#include "rcm/stat_util.hpp"

namespace rcm {

MapSample FamilySpec::instantiate(double param) const {
  const double a = (varying == "a") ? param : fixed_a;
  const double c = (varying == "c") ? param : fixed_c;
  switch (kind) {
    case MapKind::linear: return make_map(MapKind::linear, d, c);
    case MapKind::perturbed: return make_map(MapKind::perturbed, d, a, phase);
    case MapKind::diffeo: return make_map(MapKind::diffeo, a, c);
  }
  throw Error("bad family kind");
}

MapSample FamilySpec::instantiate_raw(double param) const {
  const double a = (varying == "a") ? param : fixed_a;
  const double c = (varying == "c") ? param : fixed_c;
  MapSample m;
  m.kind = kind;
  switch (kind) {
    case MapKind::linear: m.p1 = d; m.p2 = c; m.degree = d; break;
    case MapKind::perturbed: m.p1 = d; m.p2 = a; m.p3 = phase; m.degree = d; break;
    case MapKind::diffeo: m.p1 = a; m.p2 = c; m.degree = 1; break;
  }
  return m;
}

static std::vector<double> build_cumweights(const std::vector<Atom>& atoms) {
  double sum = 0.0;
  for (const auto& a : atoms) {
    if (a.weight < 0.0) throw Error("ensemble weights must be nonnegative");
    sum += a.weight;
  }
  if (std::fabs(sum - 1.0) > 1e-9) throw Error("ensemble weights must sum to 1");
  std::vector<double> cum(atoms.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    acc += atoms[i].weight / sum;
    cum[i] = acc;
  }
  cum.back() = 1.0;
  return cum;
}

Ensemble Ensemble::finite(std::vector<Atom> atoms) {
  if (atoms.empty()) throw Error("ensemble needs at least one atom");
  Ensemble e;
  e.finite_ = true;
  e.atoms_ = std::move(atoms);
  e.cumweights_ = build_cumweights(e.atoms_);
  return e;
}

Ensemble Ensemble::continuous(FamilySpec family) {
  if (!(family.hi > family.lo)) throw Error("family parameter range must have hi > lo");
  if (family.varying != "a" && family.varying != "c")
    throw Error("family varying parameter must be 'a' or 'c'");
  if (family.quad_nodes < 2) throw Error("family needs >= 2 quadrature nodes");
  Ensemble e;
  e.finite_ = false;
  e.family_ = family;
  // Gauss-Legendre nodes in the parameter act as pseudo-atoms for operator
  // averaging and quadrature moments.
  const Quadrature q = gauss_legendre(static_cast<std::size_t>(family.quad_nodes));
  const double mid = 0.5 * (family.lo + family.hi);
  const double half = 0.5 * (family.hi - family.lo);
  e.atoms_.reserve(q.nodes.size());
  for (std::size_t i = 0; i < q.nodes.size(); ++i) {
    Atom a;
    a.weight = 0.5 * q.weights[i];  // uniform density over [lo,hi]
    a.map = family.instantiate(mid + half * q.nodes[i]);
    e.atoms_.push_back(a);
  }
  e.cumweights_ = build_cumweights(e.atoms_);
  return e;
}

static double json_number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw Error(std::string("ensemble atom missing field '") + key + "'");
  return j.at(key).get<double>();
}

Ensemble Ensemble::from_json(const nlohmann::json& j) {
  if (j.contains("atoms")) {
    std::vector<Atom> atoms;
    for (const auto& aj : j.at("atoms")) {
      Atom a;
      a.weight = json_number(aj, "weight");
      const MapKind kind = map_kind_from_string(aj.at("kind").get<std::string>());
      switch (kind) {
        case MapKind::linear:
          a.map = make_map(kind, json_number(aj, "d"), aj.value("c", 0.0));
          break;
        case MapKind::perturbed:
          a.map = make_map(kind, json_number(aj, "d"), json_number(aj, "a"),
                           aj.value("phase", 0.0));
          break;
        case MapKind::diffeo:
          a.map = make_map(kind, json_number(aj, "a"), aj.value("c", 0.0));
          break;
      }
      atoms.push_back(a);
    }
    return finite(std::move(atoms));
  }
  if (j.contains("family")) {
    const auto& fj = j.at("family");
    FamilySpec f;
    f.kind = map_kind_from_string(fj.at("kind").get<std::string>());
    if (f.kind != MapKind::diffeo) f.d = fj.at("d").get<int>();
    f.phase = fj.value("phase", 0.0);
    f.quad_nodes = fj.value("nodes", 32);
    int n_varying = 0;
    for (const char* key : {"a", "c"}) {
      if (!fj.contains(key)) continue;
      const auto& v = fj.at(key);
      if (v.is_object()) {
        if (!v.contains("uniform")) throw Error("family parameter law must be {\"uniform\":[lo,hi]}");
        f.varying = key;
        f.lo = v.at("uniform").at(0).get<double>();
        f.hi = v.at("uniform").at(1).get<double>();
        ++n_varying;
      } else {
        if (std::string(key) == "a") f.fixed_a = v.get<double>();
        else f.fixed_c = v.get<double>();
      }
    }
    if (n_varying != 1) throw Error("family needs exactly one varying parameter");
    return continuous(f);
  }
  throw Error("ensemble json needs 'atoms' or 'family'");
}

nlohmann::json Ensemble::to_json() const {
  nlohmann::json j;
  if (finite_) {
    auto arr = nlohmann::json::array();
    for (const auto& a : atoms_) {
      nlohmann::json aj{{"weight", a.weight}, {"kind", to_string(a.map.kind)}};
      switch (a.map.kind) {
        case MapKind::linear: aj["d"] = a.map.degree; aj["c"] = a.map.p2; break;
        case MapKind::perturbed:
          aj["d"] = a.map.degree; aj["a"] = a.map.p2; aj["phase"] = a.map.p3; break;
        case MapKind::diffeo: aj["a"] = a.map.p1; aj["c"] = a.map.p2; break;
      }
      arr.push_back(aj);
    }
    j["atoms"] = arr;
  } else {
    const auto& f = *family_;
    nlohmann::json fj{{"kind", to_string(f.kind)}, {"nodes", f.quad_nodes}};
    if (f.kind != MapKind::diffeo) fj["d"] = f.d;
    fj[f.varying] = nlohmann::json{{"uniform", {f.lo, f.hi}}};
    if (f.varying == "a" && f.kind == MapKind::diffeo) fj["c"] = f.fixed_c;
    if (f.varying == "c") fj["a"] = f.fixed_a;
    j["family"] = fj;
  }
  return j;
}

Moments Ensemble::moments(double alpha) const {
  Moments m;
  m.alpha = alpha;
  m.exact = true;
  for (const auto& a : atoms_) {
    const double w = a.weight;
    const double il = 1.0 / a.map.lambda;
    m.inv_lambda += w * il;
    m.inv_lambda2 += w * il * il;
    m.inv_lambda_2alpha += w * std::pow(il, 2.0 * alpha);
    m.mean_delta += w * a.map.delta;
    m.delta2 += w * a.map.delta * a.map.delta;
    m.inv_lambda_delta += w * il * a.map.delta;
  }
  return m;
}

Moments Ensemble::moments_mc(double alpha, std::size_t samples, std::uint64_t seed) const {
  if (samples < 10000) throw Error("MC moments need >= 1e4 samples");
  RngStream rng(seed, 0x6d6f6d656e74ull);
  Moments m;
  m.alpha = alpha;
  m.exact = false;
  double s_il2 = 0.0, s_il2_sq = 0.0, s_d2 = 0.0, s_d2_sq = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const MapSample map = sample_map(rng);
    const double il = 1.0 / map.lambda;
    m.inv_lambda += il;
    m.inv_lambda2 += il * il;
    m.inv_lambda_2alpha += std::pow(il, 2.0 * alpha);
    m.mean_delta += map.delta;
    m.delta2 += map.delta * map.delta;
    m.inv_lambda_delta += il * map.delta;
    s_il2 += il * il; s_il2_sq += il * il * il * il;
    s_d2 += map.delta * map.delta; s_d2_sq += std::pow(map.delta, 4.0);
  }
  const double n = static_cast<double>(samples);
  m.inv_lambda /= n; m.inv_lambda2 /= n; m.inv_lambda_2alpha /= n;
  m.mean_delta /= n; m.delta2 /= n; m.inv_lambda_delta /= n;
  m.se_inv_lambda2 = std::sqrt(std::max(0.0, s_il2_sq / n - (s_il2 / n) * (s_il2 / n)) / n);
  m.se_delta2 = std::sqrt(std::max(0.0, s_d2_sq / n - (s_d2 / n) * (s_d2 / n)) / n);
  return m;
}

MapSample Ensemble::sample_map(RngStream& rng) const {
  if (finite_) return atoms_[sample_atom_index(rng)].map;
  return family_->instantiate(rng.uniform(family_->lo, family_->hi));
}

std::size_t Ensemble::sample_atom_index(RngStream& rng) const {
  if (!finite_) throw Error("atom index sampling needs a finite ensemble");
  return rng.pick(cumweights_);
}

const MapSample& OmegaSequence::map_at(std::size_t i) const {
  const std::size_t k = offset_ + i;
  if (idx_) return ensemble_->atoms()[(*idx_)[k]].map;
  return (*maps_)[k];
}

std::size_t OmegaSequence::atom_index_at(std::size_t i) const {
  if (!idx_) throw Error("atom_index_at needs a finite ensemble");
  return (*idx_)[offset_ + i];
}

OmegaSequence OmegaSequence::suffix(std::size_t m) const {
  if (m > size()) throw Error("suffix shift exceeds sequence length");
  OmegaSequence s = *this;
  s.offset_ = offset_ + m;
  return s;
}

OmegaSequence sample_sequence(const Ensemble& e, std::size_t n, std::uint64_t seed,
                              std::uint64_t stream) {
  OmegaSequence w;
  w.seed = seed;
  w.stream = stream;
  w.total_ = n;
  RngStream rng(seed, stream);
  if (e.is_finite()) {
    w.ensemble_ = std::make_shared<Ensemble>(e);
    auto idx = std::make_shared<std::vector<std::uint32_t>>();
    idx->reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      idx->push_back(static_cast<std::uint32_t>(e.sample_atom_index(rng)));
    w.idx_ = std::move(idx);
  } else {
    auto maps = std::make_shared<std::vector<MapSample>>();
    maps->reserve(n);
    for (std::size_t i = 0; i < n; ++i) maps->push_back(e.sample_map(rng));
    w.maps_ = std::move(maps);
  }
  return w;
}

MomentReport check_standing_assumption(const Ensemble& e, double alpha) {
  if (alpha <= 0.0 || alpha > 1.0) throw Error("alpha must lie in (0,1]");
  MomentReport r;
  r.moments = e.moments(alpha);
  r.jensen_ok = r.moments.inv_lambda <= std::sqrt(r.moments.inv_lambda2) + 1e-12;
  r.pass = r.moments.inv_lambda2 < 1.0 && std::isfinite(r.moments.delta2);
  if (!r.pass)
    r.detail = "<lambda^-2> = " + std::to_string(r.moments.inv_lambda2) + " (needs < 1)";
  return r;
}

void require_standing_assumption(const Ensemble& e, double alpha) {
  const MomentReport r = check_standing_assumption(e, alpha);
  if (!r.pass) throw AssumptionViolated(r.detail);
}

}  // namespace rcm
