#pragma once

// Three equal-mass bodies in the plane: Jacobi vectors, the Hopf shape
// coordinates (R, r, alpha, phi; x', y', z'), kinematic rotations and the
// relabelling group S3.
//
// Particle indices are 0-based in code. The fixed Jacobi tree is
//   rho    = (x0 - x1) / sqrt(2)
//   lambda = (x0 + x1 - 2 x2) / sqrt(6)
// which together with the centre of mass is an orthonormal change of
// variables, so R^2 = rho^2 + lambda^2 = sum |x_i - c|^2.

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "braid3/errors.hpp"
#include "braid3/vec2.hpp"

namespace braid3 {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kSqrt3 = std::numbers::sqrt3;
inline constexpr double kSqrt6 = kSqrt2 * kSqrt3;

/// Below this value of r the shape is treated as equilateral and phi is undefined.
inline constexpr double kPhiUndefinedBelow = 1e-10;

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, kTwoPi);
  if (w <= -kPi) w += kTwoPi;
  return w;
}

struct ThreeBodyState {
  double t = 0.0;
  std::array<Vec2, 3> x{};
  std::array<Vec2, 3> v{};
  double m = 1.0;  // shared mass of all three bodies

  Vec2 center_of_mass() const { return (x[0] + x[1] + x[2]) / 3.0; }
  Vec2 center_of_mass_velocity() const { return (v[0] + v[1] + v[2]) / 3.0; }
  Vec2 total_momentum() const { return m * (v[0] + v[1] + v[2]); }

  double angular_momentum() const {
    return m * (cross(x[0], v[0]) + cross(x[1], v[1]) + cross(x[2], v[2]));
  }

  double kinetic_energy() const {
    return 0.5 * m * (norm2(v[0]) + norm2(v[1]) + norm2(v[2]));
  }

  /// Copy with the centre of mass moved to the origin and at rest.
  ThreeBodyState relative_frame() const {
    ThreeBodyState s = *this;
    const Vec2 c = center_of_mass();
    const Vec2 w = center_of_mass_velocity();
    for (int i = 0; i < 3; ++i) {
      s.x[i] -= c;
      s.v[i] -= w;
    }
    return s;
  }

  /// Characteristic length (root-mean-square distance from the centroid).
  double length_scale() const {
    const Vec2 c = center_of_mass();
    return std::sqrt((norm2(x[0] - c) + norm2(x[1] - c) + norm2(x[2] - c)) / 3.0);
  }

  double velocity_scale() const {
    const Vec2 w = center_of_mass_velocity();
    return std::sqrt((norm2(v[0] - w) + norm2(v[1] - w) + norm2(v[2] - w)) / 3.0);
  }

  bool is_relative_frame(double tol = 1e-12) const {
    const double d = std::max(length_scale(), 1e-300);
    const double u = std::max(velocity_scale(), 1e-300);
    return norm(total_momentum()) < tol * m * u && norm(center_of_mass()) < tol * d;
  }
};

struct JacobiState {
  Vec2 rho;
  Vec2 lambda;
  Vec2 p_rho;
  Vec2 p_lambda;

  double hyper_radius() const { return std::sqrt(norm2(rho) + norm2(lambda)); }
};

/// Jacobi coordinates and momenta of the relative motion. Centre-of-mass
/// position and velocity are discarded.
inline JacobiState to_jacobi(const ThreeBodyState& s) {
  const auto& x = s.x;
  const auto& v = s.v;
  JacobiState j;
  j.rho = (x[0] - x[1]) / kSqrt2;
  j.lambda = (x[0] + x[1] - 2.0 * x[2]) / kSqrt6;
  j.p_rho = s.m * (v[0] - v[1]) / kSqrt2;
  j.p_lambda = s.m * (v[0] + v[1] - 2.0 * v[2]) / kSqrt6;
  return j;
}

/// Inverse of to_jacobi; the result is in the relative frame.
inline ThreeBodyState from_jacobi(const JacobiState& j, double m, double t = 0.0) {
  ThreeBodyState s;
  s.t = t;
  s.m = m;
  s.x[0] = j.rho / kSqrt2 + j.lambda / kSqrt6;
  s.x[1] = -j.rho / kSqrt2 + j.lambda / kSqrt6;
  s.x[2] = -2.0 * j.lambda / kSqrt6;
  const Vec2 u = j.p_rho / m;
  const Vec2 w = j.p_lambda / m;
  s.v[0] = u / kSqrt2 + w / kSqrt6;
  s.v[1] = -u / kSqrt2 + w / kSqrt6;
  s.v[2] = -2.0 * w / kSqrt6;
  return s;
}

/// Permutation-symmetric description of one configuration.
///
/// (x', y', z') is a unit vector on the shape sphere; (x', z') is the
/// disc projection used for plots. y' carries the sign of rho x lambda, so
/// mirror-image triangles have opposite y'.
struct ShapePoint {
  double R = 0.0;
  double r = 0.0;
  double alpha = 0.0;  // asin(r)
  double phi = 0.0;    // atan2(x', z'), in (-pi, pi]; 0 when !phi_defined
  double xp = 0.0;
  double yp = 0.0;
  double zp = 0.0;
  bool phi_defined = false;
};

inline ShapePoint shape_point(const JacobiState& j) {
  const double rr = norm2(j.rho);
  const double ll = norm2(j.lambda);
  const double R2 = rr + ll;
  if (!(R2 > 0.0)) throw DegenerateShapeError("shape_point: triple collision (R = 0)");
  ShapePoint p;
  p.R = std::sqrt(R2);
  p.xp = 2.0 * dot(j.rho, j.lambda) / R2;
  p.zp = (ll - rr) / R2;
  p.yp = 2.0 * cross(j.rho, j.lambda) / R2;
  p.r = std::hypot(p.xp, p.zp);
  p.alpha = std::asin(std::min(p.r, 1.0));
  p.phi_defined = p.r >= kPhiUndefinedBelow;
  p.phi = p.phi_defined ? std::atan2(p.xp, p.zp) : 0.0;
  return p;
}

inline ShapePoint shape_point(const ThreeBodyState& s) { return shape_point(to_jacobi(s)); }

/// Time derivative of phi from positions and momenta. Independent of R and
/// of the mass normalisation of the momenta only through the velocities.
inline double phi_rate(const JacobiState& j, double m) {
  const Vec2 drho = j.p_rho / m;
  const Vec2 dlam = j.p_lambda / m;
  const double P = dot(j.rho, j.lambda);
  const double D = norm2(j.lambda) - norm2(j.rho);
  const double dP = dot(drho, j.lambda) + dot(j.rho, dlam);
  const double dD = 2.0 * (dot(j.lambda, dlam) - dot(j.rho, drho));
  const double den = 4.0 * P * P + D * D;
  if (!(den > 0.0)) return 0.0;
  return 2.0 * (D * dP - P * dD) / den;
}

/// Jacobi positions (zero momenta) with hyper-radius R at the given point of
/// the unit shape sphere. The inverse of shape_point up to a rigid rotation.
inline JacobiState jacobi_from_shape(double R, double xp, double yp, double zp) {
  const double rr = 0.5 * R * R * std::max(0.0, 1.0 - zp);
  const double ll = 0.5 * R * R * std::max(0.0, 1.0 + zp);
  const double pdot = 0.5 * R * R * xp;
  const double pcross = 0.5 * R * R * yp;
  JacobiState j;
  if (rr >= ll) {
    const double a = std::sqrt(rr);
    if (a == 0.0) return j;
    j.rho = {a, 0.0};
    j.lambda = {pdot / a, pcross / a};
  } else {
    const double b = std::sqrt(ll);
    j.lambda = {b, 0.0};
    j.rho = {pdot / b, -pcross / b};
  }
  return j;
}

/// Jacobi positions for hyper-radius R and disc coordinates (r, phi), on the
/// y' >= 0 hemisphere.
inline JacobiState jacobi_from_disc(double R, double r, double phi) {
  const double rc = std::min(std::max(r, 0.0), 1.0);
  return jacobi_from_shape(R, rc * std::sin(phi), std::sqrt(1.0 - rc * rc), rc * std::cos(phi));
}

/// G3 = (p_rho . lambda - p_lambda . rho) / 2, the generator of kinematic
/// rotations and momentum conjugate to phi.
inline double hyper_angular_momentum(const JacobiState& j) {
  return 0.5 * (dot(j.p_rho, j.lambda) - dot(j.p_lambda, j.rho));
}

/// Finite kinematic rotation by eps, applied to positions and momenta alike.
/// Shifts phi by 2 eps and leaves R, r, y' and G3 unchanged.
inline JacobiState kinematic_rotation(const JacobiState& j, double eps) {
  const double c = std::cos(eps);
  const double s = std::sin(eps);
  JacobiState o;
  o.rho = c * j.rho + s * j.lambda;
  o.lambda = -s * j.rho + c * j.lambda;
  o.p_rho = c * j.p_rho + s * j.p_lambda;
  o.p_lambda = -s * j.p_rho + c * j.p_lambda;
  return o;
}

/// Element of S3 acting by relabelling: particle i becomes particle image[i].
class PermutationElement {
 public:
  enum class Kind { identity, cyclic_plus, cyclic_minus, transposition };

  constexpr PermutationElement() = default;

  static constexpr PermutationElement identity() { return PermutationElement({0, 1, 2}); }
  /// 0 -> 1 -> 2 -> 0
  static constexpr PermutationElement cyclic_plus() { return PermutationElement({1, 2, 0}); }
  /// 0 -> 2 -> 1 -> 0
  static constexpr PermutationElement cyclic_minus() { return PermutationElement({2, 0, 1}); }
  static PermutationElement transposition(int i, int j) {
    if (i == j || i < 0 || j < 0 || i > 2 || j > 2)
      throw DomainError("transposition: indices must be distinct and in {0, 1, 2}");
    std::array<int, 3> im{0, 1, 2};
    im[i] = j;
    im[j] = i;
    return PermutationElement(im);
  }

  static std::array<PermutationElement, 6> all() {
    return {identity(),          cyclic_plus(),       cyclic_minus(),
            transposition(0, 1), transposition(0, 2), transposition(1, 2)};
  }

  constexpr int operator()(int i) const { return image_[i]; }
  constexpr const std::array<int, 3>& image() const { return image_; }

  constexpr Kind kind() const {
    int fixed = 0;
    for (int i = 0; i < 3; ++i) fixed += image_[i] == i;
    if (fixed == 3) return Kind::identity;
    if (fixed == 1) return Kind::transposition;
    return image_[0] == 1 ? Kind::cyclic_plus : Kind::cyclic_minus;
  }

  /// (a * b)(i) = a(b(i)): apply b first.
  friend constexpr PermutationElement operator*(const PermutationElement& a,
                                                const PermutationElement& b) {
    return PermutationElement({a(b(0)), a(b(1)), a(b(2))});
  }

  constexpr PermutationElement inverse() const {
    std::array<int, 3> inv{};
    for (int i = 0; i < 3; ++i) inv[image_[i]] = i;
    return PermutationElement(inv);
  }

  friend constexpr bool operator==(const PermutationElement&, const PermutationElement&) = default;

  std::string name() const {
    switch (kind()) {
      case Kind::identity: return "identity";
      case Kind::cyclic_plus: return "cyclic+";
      case Kind::cyclic_minus: return "cyclic-";
      case Kind::transposition: break;
    }
    const int a = image_[0] != 0 ? 0 : 1;
    return "transposition(" + std::to_string(a) + "," + std::to_string(image_[a]) + ")";
  }

 private:
  constexpr explicit PermutationElement(std::array<int, 3> im) : image_(im) {}
  std::array<int, 3> image_{0, 1, 2};
};

inline ThreeBodyState permutation_action(const ThreeBodyState& s, const PermutationElement& g) {
  ThreeBodyState o = s;
  for (int i = 0; i < 3; ++i) {
    o.x[g(i)] = s.x[i];
    o.v[g(i)] = s.v[i];
  }
  return o;
}

/// Interior angles at vertices 0, 1, 2. A vertex coincident with another
/// gets angle 0.
inline std::array<double, 3> interior_angles(const std::array<Vec2, 3>& x) {
  std::array<double, 3> a{};
  for (int k = 0; k < 3; ++k) {
    const Vec2 u = x[(k + 1) % 3] - x[k];
    const Vec2 w = x[(k + 2) % 3] - x[k];
    a[k] = (norm2(u) > 0.0 && norm2(w) > 0.0) ? angle_between(u, w) : 0.0;
  }
  return a;
}

inline double largest_interior_angle(const std::array<Vec2, 3>& x) {
  const auto a = interior_angles(x);
  return std::max({a[0], a[1], a[2]});
}

/// Point (x', z') of the shape disc.
struct DiscPoint {
  double xp = 0.0;
  double zp = 0.0;
};

namespace detail {

// Largest interior angle of the triangle at polar angle `alpha` from the y'
// pole and azimuth `psi`. A coincident pair (only reachable on the rim at the
// collision azimuths) reports pi/2, the limit along the meridian.
inline double largest_angle_on_sphere(double alpha, double psi) {
  const double s = std::sin(alpha);
  const JacobiState j = jacobi_from_shape(1.0, s * std::sin(psi), std::cos(alpha), s * std::cos(psi));
  const ThreeBodyState st = from_jacobi(j, 1.0);
  const double d01 = norm(st.x[0] - st.x[1]);
  const double d02 = norm(st.x[0] - st.x[2]);
  const double d12 = norm(st.x[1] - st.x[2]);
  if (std::min({d01, d02, d12}) < 1e-14) return kPi / 2.0;
  return largest_interior_angle(st.x);
}

}  // namespace detail

/// Closed curve of shapes whose largest interior angle equals gamma, sampled
/// on n equally spaced azimuths phi_k = 2 pi k / n.
///
/// Along each ray from the disc centre the largest angle grows monotonically
/// from pi/3 to pi, so the crossing is found by bisection in the polar
/// angle alpha. On the three collision azimuths (phi = 0, +-2pi/3) the
/// angle only reaches pi/2 and the curve for gamma >= pi/2 ends on the rim.
inline std::vector<DiscPoint> fixed_angle_locus(double gamma, int n) {
  if (n < 3) throw DomainError("fixed_angle_locus: need at least 3 samples");
  if (!(gamma >= kPi / 3.0 - 1e-15) || gamma > kPi + 1e-15)
    throw DomainError("fixed_angle_locus: gamma must lie in [pi/3, pi]");
  std::vector<DiscPoint> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double psi = kTwoPi * k / n;
    double lo = 0.0;
    double hi = kPi / 2.0;
    double s = 0.0;
    if (gamma <= kPi / 3.0) {
      s = 0.0;
    } else if (detail::largest_angle_on_sphere(hi, psi) - gamma <= 0.0) {
      s = 1.0;
    } else {
      for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (detail::largest_angle_on_sphere(mid, psi) < gamma)
          lo = mid;
        else
          hi = mid;
      }
      s = std::sin(0.5 * (lo + hi));
    }
    out.push_back({s * std::sin(psi), s * std::cos(psi)});
  }
  return out;
}

}  // namespace braid3
