#pragma once

// Permutation-symmetric three-body potentials: Newton (-g sum 1/r_ij),
// Delta-string (sigma sum r_ij) and Y-string (sigma times the minimal
// junction length, attained at the Torricelli point).

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "braid3/errors.hpp"
#include "braid3/kinematics.hpp"
#include "braid3/vec2.hpp"

namespace braid3 {

enum class PotentialKind { newton, delta_string, y_string };

inline std::string to_string(PotentialKind k) {
  switch (k) {
    case PotentialKind::newton: return "newton";
    case PotentialKind::delta_string: return "delta";
    case PotentialKind::y_string: return "ystring";
  }
  return "?";
}

/// Accepts the canonical names above plus a few spellings used in tables.
inline PotentialKind parse_potential_kind(const std::string& s) {
  std::string k;
  for (char c : s)
    if (c != '-' && c != '_' && c != ' ') k.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (k == "newton" || k == "gravity") return PotentialKind::newton;
  if (k == "delta" || k == "deltastring") return PotentialKind::delta_string;
  if (k == "ystring" || k == "y") return PotentialKind::y_string;
  throw NotFoundError("unknown potential '" + s + "'");
}

struct PotentialModel {
  PotentialKind kind = PotentialKind::newton;
  double coupling = 1.0;  // g, sigma_Delta or sigma_Y

  PotentialModel() = default;
  PotentialModel(PotentialKind k, double c = 1.0) : kind(k), coupling(c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("PotentialModel: coupling must be positive");
  }

  static PotentialModel newton(double g = 1.0) { return {PotentialKind::newton, g}; }
  static PotentialModel delta_string(double sigma = 1.0) { return {PotentialKind::delta_string, sigma}; }
  static PotentialModel y_string(double sigma = 1.0) { return {PotentialKind::y_string, sigma}; }
};

/// Which branch of the Y-string potential is active.
struct YRegion {
  enum class Kind { not_applicable, central_y, two_string };
  Kind kind = Kind::not_applicable;
  int vertex = -1;  // obtuse vertex for two_string

  static YRegion not_applicable() { return {}; }
  static YRegion central() { return {Kind::central_y, -1}; }
  static YRegion two_string(int k) { return {Kind::two_string, k}; }
  friend bool operator==(const YRegion&, const YRegion&) = default;
};

struct PotentialEvaluation {
  double value = 0.0;
  std::array<Vec2, 3> forces{};  // -grad_i V
  YRegion region;
  std::optional<Vec2> torricelli;
};

struct TorricelliResult {
  Vec2 point;
  YRegion region;
};

/// Iterative geometric median of three points (Weiszfeld). Used as an
/// independent check of the closed form below and as its fallback.
inline Vec2 weiszfeld_point(const std::array<Vec2, 3>& x, double tol = 1e-15, int max_iter = 100000) {
  Vec2 p = (x[0] + x[1] + x[2]) / 3.0;
  const double scale = std::max({norm(x[0] - p), norm(x[1] - p), norm(x[2] - p), 1e-300});
  for (int it = 0; it < max_iter; ++it) {
    Vec2 num{};
    double den = 0.0;
    for (const auto& xi : x) {
      const double d = norm(xi - p);
      if (d < 1e-300) return xi;
      num += xi / d;
      den += 1.0 / d;
    }
    const Vec2 q = num / den;
    const double step = norm(q - p);
    p = q;
    if (step < tol * scale) break;
  }
  return p;
}

/// |sum of unit vectors from p to the vertices|; zero at an interior Fermat point.
inline double torricelli_residual(const std::array<Vec2, 3>& x, const Vec2& p) {
  return norm(unit(x[0] - p) + unit(x[1] - p) + unit(x[2] - p));
}

/// Point minimising the summed distance to the three vertices.
///
/// With every interior angle below 2pi/3 the point is interior and each pair
/// of vertices subtends 2pi/3 there; it is computed from the barycentric
/// weights a_k / sin(A_k + pi/3). Otherwise it is the obtuse vertex.
/// A vertex angle of exactly 2pi/3 is reported as central_y with the point
/// on that vertex.
inline TorricelliResult torricelli_point(const std::array<Vec2, 3>& x) {
  const double a = norm(x[1] - x[2]);
  const double b = norm(x[0] - x[2]);
  const double c = norm(x[0] - x[1]);
  const double side_scale = std::max({a, b, c});
  if (!(side_scale > 0.0)) throw DegenerateShapeError("torricelli_point: triple collision");

  // Coincident pair: that point is the minimiser.
  const double tiny = 1e-14 * side_scale;
  if (c <= tiny) return {x[0], YRegion::two_string(0)};
  if (b <= tiny) return {x[0], YRegion::two_string(0)};
  if (a <= tiny) return {x[1], YRegion::two_string(1)};

  const auto ang = interior_angles(x);
  constexpr double limit = 2.0 * kPi / 3.0;
  for (int k = 0; k < 3; ++k)
    if (ang[k] > limit) return {x[k], YRegion::two_string(k)};
  for (int k = 0; k < 3; ++k)
    if (ang[k] == limit) return {x[k], YRegion::central()};

  const std::array<double, 3> sides{a, b, c};
  std::array<double, 3> w{};
  double wsum = 0.0;
  for (int k = 0; k < 3; ++k) {
    w[k] = sides[k] / std::sin(ang[k] + kPi / 3.0);
    wsum += w[k];
  }
  Vec2 p = (w[0] * x[0] + w[1] * x[1] + w[2] * x[2]) / wsum;
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || torricelli_residual(x, p) > 1e-8)
    p = weiszfeld_point(x);
  return {p, YRegion::central()};
}

namespace detail {

inline void check_newton_separation(const std::array<Vec2, 3>& x) {
  const Vec2 c = (x[0] + x[1] + x[2]) / 3.0;
  const double R = std::sqrt(norm2(x[0] - c) + norm2(x[1] - c) + norm2(x[2] - c));
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      if (!(norm(x[i] - x[j]) >= 1e-9 * R) || R == 0.0)
        throw SingularityError(i, j,
                               "newton potential: bodies " + std::to_string(i) + " and " +
                                   std::to_string(j) + " coincide");
}

}  // namespace detail

inline PotentialEvaluation evaluate(const PotentialModel& model, const std::array<Vec2, 3>& x) {
  PotentialEvaluation e;
  const double k = model.coupling;
  switch (model.kind) {
    case PotentialKind::newton: {
      detail::check_newton_separation(x);
      for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
          const Vec2 d = x[i] - x[j];
          const double r = norm(d);
          e.value -= k / r;
          const Vec2 f = (k / (r * r * r)) * d;  // pull i towards j
          e.forces[i] -= f;
          e.forces[j] += f;
        }
      break;
    }
    case PotentialKind::delta_string: {
      for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
          const Vec2 d = x[i] - x[j];
          e.value += k * norm(d);
          const Vec2 f = k * unit(d);
          e.forces[i] -= f;
          e.forces[j] += f;
        }
      break;
    }
    case PotentialKind::y_string: {
      const TorricelliResult tp = torricelli_point(x);
      e.region = tp.region;
      e.torricelli = tp.point;
      // Vertex sitting on the junction: the two other strings end there and
      // the vertex force balances them.
      int hub = tp.region.kind == YRegion::Kind::two_string ? tp.region.vertex : -1;
      if (hub < 0)
        for (int i = 0; i < 3; ++i)
          if (norm(x[i] - tp.point) == 0.0) hub = i;
      if (hub < 0) {
        for (int i = 0; i < 3; ++i) {
          const Vec2 d = x[i] - tp.point;
          e.value += k * norm(d);
          e.forces[i] = -k * unit(d);
        }
      } else {
        for (int i = 0; i < 3; ++i) {
          if (i == hub) continue;
          const Vec2 d = x[i] - x[hub];
          e.value += k * norm(d);
          e.forces[i] = -k * unit(d);
          e.forces[hub] += k * unit(d);
        }
      }
      break;
    }
  }
  return e;
}

inline PotentialEvaluation evaluate(const PotentialModel& model, const ThreeBodyState& s) {
  return evaluate(model, s.x);
}

inline double potential_value(const PotentialModel& model, const std::array<Vec2, 3>& x) {
  return evaluate(model, x).value;
}

inline double total_energy(const PotentialModel& model, const ThreeBodyState& s) {
  return s.kinetic_energy() + evaluate(model, s.x).value;
}

/// Largest deviation between the analytic forces and central differences of
/// the potential with step h, relative to the largest force component.
inline double force_check(const PotentialModel& model, const ThreeBodyState& s, double h) {
  const auto e = evaluate(model, s.x);
  double fmax = 0.0;
  for (const auto& f : e.forces) fmax = std::max({fmax, std::abs(f.x), std::abs(f.y)});
  double worst = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 2; ++c) {
      auto xp = s.x;
      auto xm = s.x;
      (c == 0 ? xp[i].x : xp[i].y) += h;
      (c == 0 ? xm[i].x : xm[i].y) -= h;
      const double fd = -(potential_value(model, xp) - potential_value(model, xm)) / (2.0 * h);
      const double an = c == 0 ? e.forces[i].x : e.forces[i].y;
      worst = std::max(worst, std::abs(fd - an));
    }
  return worst / std::max(fmax, 1e-300);
}

/// Angular harmonics of V at fixed (R, r) on the upper shape hemisphere.
struct FourierProfile {
  std::vector<double> r;
  std::vector<double> Vbar;      // mean over phi
  std::vector<double> deltaV;    // coefficient of cos(3 phi)
  std::vector<double> sin3;      // coefficient of sin(3 phi)
  std::vector<double> residual;  // largest |c_k| over k not divisible by 3
  std::vector<double> max_sin;   // largest sine coefficient over all k
};

/// Potential at hyper-radius R and disc point (r, phi).
inline double potential_at_shape(const PotentialModel& model, double R, double r, double phi) {
  return potential_value(model, from_jacobi(jacobi_from_disc(R, r, phi), 1.0).x);
}

inline FourierProfile fourier_profile(const PotentialModel& model, double R, const std::vector<double>& r_grid,
                                      int n_phi) {
  if (n_phi < 64) throw DomainError("fourier_profile: n_phi must be at least 64");
  if (!(R > 0.0)) throw DomainError("fourier_profile: R must be positive");
  FourierProfile out;
  std::vector<double> v(static_cast<std::size_t>(n_phi));
  for (double r : r_grid) {
    if (r < 0.0 || r >= 1.0) throw DomainError("fourier_profile: r must lie in [0, 1)");
    for (int k = 0; k < n_phi; ++k) v[k] = potential_at_shape(model, R, r, kTwoPi * k / n_phi);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n_phi;
    double resid = 0.0;
    double max_sin = 0.0;
    double c3 = 0.0;
    double s3 = 0.0;
    for (int h = 1; h <= n_phi / 2 - 1; ++h) {
      double cs = 0.0;
      double sn = 0.0;
      for (int k = 0; k < n_phi; ++k) {
        const double a = kTwoPi * static_cast<double>(h) * k / n_phi;
        cs += (v[k] - mean) * std::cos(a);
        sn += (v[k] - mean) * std::sin(a);
      }
      cs *= 2.0 / n_phi;
      sn *= 2.0 / n_phi;
      max_sin = std::max(max_sin, std::abs(sn));
      if (h == 3) {
        c3 = cs;
        s3 = sn;
      }
      if (h % 3 != 0) resid = std::max(resid, std::hypot(cs, sn));
    }
    out.r.push_back(r);
    out.Vbar.push_back(mean);
    out.deltaV.push_back(c3);
    out.sin3.push_back(s3);
    out.residual.push_back(resid);
    out.max_sin.push_back(max_sin);
  }
  return out;
}

/// Boundary between the central Y and two-string branches: triangles with a
/// 2pi/3 angle.
inline std::vector<DiscPoint> y_boundary_locus(int n) { return fixed_angle_locus(2.0 * kPi / 3.0, n); }

}  // namespace braid3
