#include <gtest/gtest.h>

#include <random>

#include "braid3/kinematics.hpp"

using namespace braid3;

namespace {

ThreeBodyState random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  ThreeBodyState s;
  for (int i = 0; i < 3; ++i) {
    s.x[i] = {u(rng), u(rng)};
    s.v[i] = {u(rng), u(rng)};
  }
  return s.relative_frame();
}

void expect_vec_near(const Vec2& a, const Vec2& b, double tol) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
}

// Largest interior angle recomputed from the triangle itself.
double angle_at_disc_point(const DiscPoint& p) {
  const double r = std::hypot(p.xp, p.zp);
  const double yp = std::sqrt(std::max(0.0, 1.0 - r * r));
  const ThreeBodyState s = from_jacobi(jacobi_from_shape(1.0, p.xp, yp, p.zp), 1.0);
  return largest_interior_angle(s.x);
}

}  // namespace

TEST(Jacobi, SymmetricCollinear) {
  ThreeBodyState s;
  s.x = {Vec2{1, 0}, Vec2{-1, 0}, Vec2{0, 0}};
  const JacobiState j = to_jacobi(s);
  expect_vec_near(j.rho, {kSqrt2, 0}, 1e-15);
  expect_vec_near(j.lambda, {0, 0}, 1e-15);

  const ThreeBodyState back = from_jacobi(j, 1.0);
  expect_vec_near(back.x[0], {1, 0}, 1e-15);
  expect_vec_near(back.x[1], {-1, 0}, 1e-15);
  expect_vec_near(back.x[2], {0, 0}, 1e-15);
}

TEST(Jacobi, EquilateralHasEqualOrthogonalVectors) {
  const double a = 1.7;
  ThreeBodyState s;
  s.x = {Vec2{0, 0}, Vec2{a, 0}, Vec2{a / 2, a * kSqrt3 / 2}};
  const JacobiState j = to_jacobi(s);
  EXPECT_NEAR(norm(j.rho), a / kSqrt2, 1e-14);
  EXPECT_NEAR(norm(j.lambda), a / kSqrt2, 1e-14);
  EXPECT_NEAR(dot(j.rho, j.lambda), 0.0, 1e-14);
}

TEST(Jacobi, RoundTrip) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int k = 0; k < 1000; ++k) {
    JacobiState j{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}};
    const JacobiState b = to_jacobi(from_jacobi(j, 1.3));
    expect_vec_near(b.rho, j.rho, 1e-12);
    expect_vec_near(b.lambda, j.lambda, 1e-12);
    expect_vec_near(b.p_rho, j.p_rho, 1e-12);
    expect_vec_near(b.p_lambda, j.p_lambda, 1e-12);
  }
}

TEST(Jacobi, ZeroVectorsGiveTripleCollisionAtOrigin) {
  const ThreeBodyState s = from_jacobi(JacobiState{}, 1.0);
  for (const auto& x : s.x) expect_vec_near(x, {0, 0}, 0.0);
  EXPECT_THROW(shape_point(s), DegenerateShapeError);
}

TEST(Jacobi, HyperRadiusIsCentroidMoment) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 100; ++k) {
    const ThreeBodyState s = random_state(rng);
    const double sum = norm2(s.x[0]) + norm2(s.x[1]) + norm2(s.x[2]);
    EXPECT_NEAR(to_jacobi(s).hyper_radius(), std::sqrt(sum), 1e-12);
  }
}

TEST(ShapePoint, EulerStartIsPiOverThree) {
  ThreeBodyState s;
  s.x = {Vec2{2.5, 0}, Vec2{0, 0}, Vec2{-2.5, 0}};
  const ShapePoint p = shape_point(s);
  EXPECT_NEAR(p.r, 1.0, 1e-15);
  EXPECT_NEAR(p.phi, kPi / 3, 1e-15);
  EXPECT_NEAR(p.yp, 0.0, 1e-15);
}

TEST(ShapePoint, EquilateralIsCentreWithPhiUndefined) {
  ThreeBodyState s;
  s.x = {Vec2{0, 0}, Vec2{1, 0}, Vec2{0.5, kSqrt3 / 2}};
  const ShapePoint p = shape_point(s);
  EXPECT_LT(p.r, 1e-15);
  EXPECT_FALSE(p.phi_defined);
  EXPECT_NEAR(std::abs(p.yp), 1.0, 1e-15);
}

TEST(ShapePoint, TwoBodyCoincidenceSitsAtPhiZero) {
  // rho = 0, so z' = +1 and x' = 0.
  ThreeBodyState s;
  s.x = {Vec2{0.3, 0.2}, Vec2{0.3, 0.2}, Vec2{-1, 0.5}};
  const ShapePoint p = shape_point(s);
  EXPECT_NEAR(p.r, 1.0, 1e-15);
  EXPECT_NEAR(p.phi, 0.0, 1e-15);
}

TEST(ShapePoint, CollinearMiddleParticleAngles) {
  // Middle body 0 -> -pi/3, 1 -> pi/3, 2 -> pi.
  const double want[3] = {-kPi / 3, kPi / 3, kPi};
  for (int mid = 0; mid < 3; ++mid) {
    ThreeBodyState s;
    int outer = 0;
    for (int i = 0; i < 3; ++i) s.x[i] = i == mid ? Vec2{0, 0} : Vec2{outer++ ? -1.0 : 1.0, 0.0};
    EXPECT_NEAR(std::abs(wrap_angle(shape_point(s).phi - want[mid])), 0.0, 1e-14) << "middle " << mid;
  }
}

TEST(ShapePoint, SphereAndDiscInvariants) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 2000; ++k) {
    const ShapePoint p = shape_point(random_state(rng));
    EXPECT_NEAR(p.xp * p.xp + p.yp * p.yp + p.zp * p.zp, 1.0, 1e-12);
    EXPECT_NEAR(p.r * p.r, p.xp * p.xp + p.zp * p.zp, 1e-12);
    EXPECT_NEAR(std::sin(p.alpha), p.r, 1e-12);
  }
}

TEST(ShapePoint, JacobiFromDiscInverts) {
  for (double r : {0.0, 0.2, 0.7, 0.99, 1.0})
    for (double phi : {-2.5, -1.0, 0.0, 0.4, 3.0}) {
      const ShapePoint p = shape_point(jacobi_from_disc(2.0, r, phi));
      EXPECT_NEAR(p.R, 2.0, 1e-14);
      EXPECT_NEAR(p.r, r, 1e-12);
      if (r > 0.0) EXPECT_NEAR(wrap_angle(p.phi - phi), 0.0, 1e-12);
      EXPECT_GE(p.yp, 0.0);
    }
}

TEST(PhiRate, MatchesFiniteDifference) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 50; ++k) {
    const ThreeBodyState s = random_state(rng);
    const double h = 1e-6;
    ThreeBodyState a = s, b = s;
    for (int i = 0; i < 3; ++i) {
      a.x[i] += h * s.v[i];
      b.x[i] -= h * s.v[i];
    }
    const double fd = wrap_angle(shape_point(a).phi - shape_point(b).phi) / (2 * h);
    EXPECT_NEAR(phi_rate(to_jacobi(s), s.m), fd, 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST(HyperAngularMomentum, VanishesForRadialMomenta) {
  JacobiState j{{1.2, 0}, {0, 0.7}, {3.0, 0}, {0, -2.0}};
  EXPECT_EQ(hyper_angular_momentum(j), 0.0);
}

TEST(HyperAngularMomentum, InvariantUnderKinematicRotation) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int k = 0; k < 100; ++k) {
    JacobiState j{{u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}, {u(rng), u(rng)}};
    const double g = hyper_angular_momentum(j);
    EXPECT_NEAR(hyper_angular_momentum(kinematic_rotation(j, u(rng))), g, 1e-12 * std::max(1.0, std::abs(g)));
  }
}

TEST(KinematicRotation, ShiftsPhiByTwiceTheAngle) {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 100; ++k) {
    const JacobiState j = to_jacobi(random_state(rng));
    const ShapePoint a = shape_point(j);
    const ShapePoint b = shape_point(kinematic_rotation(j, kPi / 3));
    EXPECT_NEAR(b.r, a.r, 1e-12);
    EXPECT_NEAR(b.R, a.R, 1e-12);
    EXPECT_NEAR(b.yp, a.yp, 1e-12);
    EXPECT_NEAR(wrap_angle(b.phi - a.phi - 2 * kPi / 3), 0.0, 1e-10);
  }
}

TEST(KinematicRotation, ZeroAndPi) {
  std::mt19937_64 rng(7);
  const JacobiState j = to_jacobi(random_state(rng));
  const JacobiState z = kinematic_rotation(j, 0.0);
  expect_vec_near(z.rho, j.rho, 0.0);
  expect_vec_near(z.p_lambda, j.p_lambda, 0.0);

  const JacobiState p = kinematic_rotation(j, kPi);
  expect_vec_near(p.rho, -j.rho, 1e-15);
  expect_vec_near(p.lambda, -j.lambda, 1e-15);
  const ShapePoint a = shape_point(j), b = shape_point(p);
  EXPECT_NEAR(a.xp, b.xp, 1e-15);
  EXPECT_NEAR(a.yp, b.yp, 1e-15);
  EXPECT_NEAR(a.zp, b.zp, 1e-15);
}

TEST(Permutation, GroupStructure) {
  using P = PermutationElement;
  EXPECT_EQ(P::cyclic_plus() * P::cyclic_plus(), P::cyclic_minus());
  EXPECT_EQ(P::cyclic_plus() * P::cyclic_minus(), P::identity());
  EXPECT_EQ(P::transposition(0, 2) * P::transposition(0, 2), P::identity());
  for (const auto& g : P::all()) EXPECT_EQ(g * g.inverse(), P::identity());
  EXPECT_EQ(P::transposition(1, 2).name(), "transposition(1,2)");
}

TEST(Permutation, CyclicRelabellingRotatesShapeByTwoThirdsPi) {
  ThreeBodyState s;
  s.x = {Vec2{1, 0}, Vec2{0, 0}, Vec2{-1, 0}};
  const ShapePoint a = shape_point(permutation_action(s, PermutationElement::cyclic_plus()));
  EXPECT_NEAR(a.r, 1.0, 1e-15);
  EXPECT_NEAR(std::abs(wrap_angle(a.phi - kPi)), 0.0, 1e-14);
  const ShapePoint b = shape_point(permutation_action(s, PermutationElement::cyclic_minus()));
  EXPECT_NEAR(b.phi, -kPi / 3, 1e-14);
}

TEST(Permutation, TranspositionReflectsPhi) {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 50; ++k) {
    const ThreeBodyState s = random_state(rng);
    const ShapePoint a = shape_point(s);
    const ShapePoint b = shape_point(permutation_action(s, PermutationElement::transposition(0, 1)));
    EXPECT_NEAR(b.r, a.r, 1e-12);
    EXPECT_NEAR(wrap_angle(b.phi + a.phi), 0.0, 1e-10);
    EXPECT_NEAR(b.yp, -a.yp, 1e-12);
  }
}

TEST(Permutation, IdentityLeavesStateUnchanged) {
  std::mt19937_64 rng(9);
  const ThreeBodyState s = random_state(rng);
  const ThreeBodyState o = permutation_action(s, PermutationElement::identity());
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(o.x[i], s.x[i]);
    EXPECT_EQ(o.v[i], s.v[i]);
  }
}

TEST(FixedAngleLocus, CollinearIsUnitCircle) {
  for (const auto& p : fixed_angle_locus(kPi, 90)) EXPECT_NEAR(std::hypot(p.xp, p.zp), 1.0, 1e-8);
}

TEST(FixedAngleLocus, EquilateralIsCentre) {
  for (const auto& p : fixed_angle_locus(kPi / 3, 12)) EXPECT_EQ(std::hypot(p.xp, p.zp), 0.0);
}

TEST(FixedAngleLocus, PointsHaveTheRequestedLargestAngle) {
  for (double g : {1.2, kPi / 2, 2 * kPi / 3, 2.6}) {
    for (const auto& p : fixed_angle_locus(g, 60)) {
      if (std::hypot(p.xp, p.zp) > 1.0 - 1e-12) continue;  // clipped onto the rim
      EXPECT_NEAR(angle_at_disc_point(p), g, 1e-8);
    }
  }
}

TEST(FixedAngleLocus, RejectsAnglesBelowEquilateral) {
  EXPECT_THROW(fixed_angle_locus(1.0, 12), DomainError);
  EXPECT_THROW(fixed_angle_locus(4.0, 12), DomainError);
  EXPECT_THROW(fixed_angle_locus(2.0, 2), DomainError);
}

TEST(WrapAngle, Range) {
  EXPECT_NEAR(wrap_angle(3 * kPi), kPi, 1e-15);
  EXPECT_NEAR(wrap_angle(-kPi), kPi, 1e-15);
  EXPECT_NEAR(wrap_angle(0.5 + 4 * kPi), 0.5, 1e-14);
}
