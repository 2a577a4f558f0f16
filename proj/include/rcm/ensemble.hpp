#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "rcm/maps.hpp"
#include "rcm/rng.hpp"

namespace rcm {

struct AssumptionViolated : Error { using Error::Error; };

struct Atom {
  double weight;
  MapSample map;
};

// eta-moments of the per-map summaries. `exact` means a weighted sum over
// atoms (finite eta) or Gauss-Legendre quadrature in the family parameter;
// Monte Carlo estimates carry standard errors instead.
struct Moments {
  double inv_lambda = 0.0;        // <lambda^-1>
  double inv_lambda2 = 0.0;       // <lambda^-2>
  double inv_lambda_2alpha = 0.0; // <lambda^-2alpha>
  double mean_delta = 0.0;        // <Delta>
  double delta2 = 0.0;            // <Delta^2>
  double inv_lambda_delta = 0.0;  // <lambda^-1 Delta>
  double alpha = 1.0;
  bool exact = true;
  double se_inv_lambda2 = 0.0;
  double se_delta2 = 0.0;
};

struct MomentReport {
  Moments moments;
  bool pass = false;       // <lambda^-2> < 1 and <Delta^2> finite
  bool jensen_ok = false;  // <lambda^-1> <= sqrt(<lambda^-2>)
  std::string detail;
};

// One-parameter continuous family: a single scalar parameter of a template
// varies uniformly over [lo, hi]; moments use Gauss-Legendre nodes.
struct FamilySpec {
  MapKind kind = MapKind::perturbed;
  int d = 2;              // slope for linear/perturbed
  double fixed_c = 0.0;   // c for linear/diffeo
  double fixed_a = 0.0;   // a when not the varying parameter
  double phase = 0.0;
  std::string varying = "a";  // which field varies: "a" or "c"
  double lo = 0.0, hi = 1.0;
  int quad_nodes = 32;

  MapSample instantiate(double param) const;
  // template only, no dilation/distortion scan (trajectory stepping)
  MapSample instantiate_raw(double param) const;
};

// The selection law eta: a weighted finite mixture of map templates, or a
// one-parameter family with a uniform sampler. Immutable after construction.
class Ensemble {
public:
  static Ensemble finite(std::vector<Atom> atoms);
  static Ensemble continuous(FamilySpec family);
  static Ensemble from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  bool is_finite() const { return finite_; }

  // Finite atoms, or Gauss-Legendre node maps with quadrature weights for a
  // continuous family. This is what operator-level averaging iterates over.
  const std::vector<Atom>& atoms() const { return atoms_; }

  Moments moments(double alpha) const;
  Moments moments_mc(double alpha, std::size_t samples, std::uint64_t seed) const;

  // One i.i.d. draw from eta.
  MapSample sample_map(RngStream& rng) const;
  std::size_t sample_atom_index(RngStream& rng) const;  // finite only

  std::span<const double> cumulative_weights() const { return cumweights_; }
  const std::optional<FamilySpec>& family() const { return family_; }

private:
  Ensemble() = default;
  bool finite_ = true;
  std::vector<Atom> atoms_;
  std::vector<double> cumweights_;
  std::optional<FamilySpec> family_;
};

// i.i.d. draws from eta, addressable as maps; supports the left shift sigma
// as a cheap suffix view.
class OmegaSequence {
public:
  OmegaSequence() = default;

  std::size_t size() const { return total_ - offset_; }
  const MapSample& map_at(std::size_t i) const;
  std::size_t atom_index_at(std::size_t i) const;  // finite ensembles only
  OmegaSequence suffix(std::size_t m) const;       // sigma^m omega

  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

private:
  friend OmegaSequence sample_sequence(const Ensemble&, std::size_t, std::uint64_t,
                                       std::uint64_t);
  std::shared_ptr<const Ensemble> ensemble_;                // finite: owns the atoms
  std::shared_ptr<const std::vector<std::uint32_t>> idx_;   // finite
  std::shared_ptr<const std::vector<MapSample>> maps_;      // continuous
  std::size_t offset_ = 0;
  std::size_t total_ = 0;
};

OmegaSequence sample_sequence(const Ensemble& e, std::size_t n, std::uint64_t seed,
                              std::uint64_t stream = 0);

MomentReport check_standing_assumption(const Ensemble& e, double alpha);

// Throws AssumptionViolated when <lambda^-2> >= 1.
void require_standing_assumption(const Ensemble& e, double alpha);

// sup_n E[R_n] = <Delta> / (1 - <lambda^-1>), the geometric limit of
// E[R_n] = <Delta> sum_{i<n} <lambda^-1>^i. Finite whenever <lambda^-1> < 1,
// which Jensen grants under the standing assumption.
inline double sup_mean_R(const Moments& m) {
  if (m.inv_lambda >= 1.0) return std::numeric_limits<double>::infinity();
  return m.mean_delta / (1.0 - m.inv_lambda);
}

}  // namespace rcm
