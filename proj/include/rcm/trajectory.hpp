#pragma once

#include "rcm/circle.hpp"
#include "rcm/ensemble.hpp"

namespace rcm {

// One chain step x -> T_omega(x).
//
// Exact linear templates map the dyadic double-precision lattice into itself
// and lose log2(d) mantissa bits per step, so long runs of them park orbits
// on exceptional rationals (eventually exactly 0). Conditional on the
// rounded state, the true next point is the computed one plus a uniform
// offset in [0, d * 2^-53); injecting that offset restores the law of the
// chain and keeps the entropy of the state constant. Nonlinear templates
// refresh the low bits on their own.
inline double trajectory_step(const MapSample& m, double x, RngStream& rng) {
  double y = m.eval(x);
  if (m.kind == MapKind::linear)
    y = wrap01(y + rng.uniform01() * m.degree * 0x1.0p-53);
  return y;
}

// Step with a fresh eta-draw from the ensemble.
inline double trajectory_step(const Ensemble& e, double x, RngStream& rng) {
  if (e.is_finite())
    return trajectory_step(e.atoms()[e.sample_atom_index(rng)].map, x, rng);
  const MapSample m = e.family()->instantiate_raw(rng.uniform(e.family()->lo, e.family()->hi));
  return trajectory_step(m, x, rng);
}

}  // namespace rcm
