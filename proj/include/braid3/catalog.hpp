#pragma once

// Named initial conditions of collinear (Euler-configuration) orbits and the
// (d, v, theta) -> state constructor.

#include <cmath>
#include <string>
#include <vector>

#include "braid3/analysis.hpp"
#include "braid3/errors.hpp"
#include "braid3/kinematics.hpp"
#include "braid3/potentials.hpp"

namespace braid3 {

/// Collinear start x0 = (d, 0), x1 = 0, x2 = (-d, 0). Both outer bodies move
/// with (v sin theta, v cos theta), theta measured from the +y axis, and the
/// middle body with -2 times that, so P = 0 and L = 0. The shape point is
/// (r, phi) = (1, pi/3).
inline ThreeBodyState build_initial_state(double d, double v, double theta, double m = 1.0) {
  if (!(d > 0.0) || !(v > 0.0)) throw DomainError("build_initial_state: d and v must be positive");
  if (!(m > 0.0)) throw DomainError("build_initial_state: mass must be positive");
  ThreeBodyState s;
  s.m = m;
  const Vec2 u{v * std::sin(theta), v * std::cos(theta)};
  s.x = {Vec2{d, 0.0}, Vec2{0.0, 0.0}, Vec2{-d, 0.0}};
  s.v = {u, -2.0 * u, u};
  return s;
}

struct OrbitSpec {
  std::string name;   // e.g. "fig8-newton"
  std::string label;  // orbit type: "fig.8", "type I", "type II"
  PotentialModel potential;
  double d = 1.0;
  double v = 1.0;
  double theta = 0.0;
  double m = 1.0;
  double period_hint = 0.0;  // strict period used to seed refinement, 0 if unknown
  std::string notes;

  ThreeBodyState initial_state() const { return build_initial_state(d, v, theta, m); }

  void validate() const {
    if (!(d > 0.0) || !(v > 0.0)) throw DomainError("OrbitSpec " + name + ": d and v must be positive");
    if (theta < 0.0 || theta > kPi / 2.0) throw DomainError("OrbitSpec " + name + ": theta must lie in [0, pi/2]");
  }
};

/// The five tabulated orbits, values verbatim. The Delta-string row closes
/// as a figure-eight only with sigma = 1/2 (equivalently d = 1/2 at sigma =
/// 1), so that row carries coupling 0.5.
inline std::vector<OrbitSpec> catalog_entries() {
  return {
      {"fig8-ystring", "fig.8", PotentialModel::y_string(), 6.0, 1.37, 1.205, 1.0, 15.82,
       "figure-eight choreography in the Y-string potential"},
      {"typeI-ystring", "type I", PotentialModel::y_string(), 6.0, 1.32, 1.437, 1.0, 31.29,
       "S2-symmetric orbit, phi rotates through four cycles per period"},
      {"typeII-ystring", "type II", PotentialModel::y_string(), 6.0, 4.53, 1.40, 1.0, 37.95,
       "S2-symmetric orbit with oscillating phi"},
      {"fig8-newton", "fig.8", PotentialModel::newton(), 1.0, 0.6355, 0.5736, 1.0, 6.326,
       "figure-eight choreography under Newtonian gravity"},
      {"fig8-delta", "fig.8", PotentialModel::delta_string(0.5), 1.0, 0.536, 1.49287, 1.0, 6.417,
       "figure-eight choreography in the Delta-string potential, sigma = 1/2"},
  };
}

inline OrbitSpec find_orbit(const std::string& name) {
  for (const auto& e : catalog_entries())
    if (e.name == name) return e;
  throw NotFoundError("unknown orbit: " + name);
}

/// Lookup by orbit type and potential, e.g. ("fig.8", newton).
inline OrbitSpec find_orbit(const std::string& label, PotentialKind kind) {
  for (const auto& e : catalog_entries())
    if (e.label == label && e.potential.kind == kind) return e;
  throw NotFoundError("unknown orbit: " + label + " / " + to_string(kind));
}

/// Two-parameter family (v, theta) at fixed d, for shooting.
inline StateFamily symmetric_family(const OrbitSpec& spec) {
  const double d = spec.d;
  const double m = spec.m;
  return {{spec.v, spec.theta},
          [d, m](const std::vector<double>& p) { return build_initial_state(d, p[0], p[1], m); }};
}

}  // namespace braid3
