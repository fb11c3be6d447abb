#include <gtest/gtest.h>

#include <random>

#include "braid3/catalog.hpp"

using namespace braid3;

TEST(Catalog, HasExactlyTheFiveRows) {
  struct Row {
    const char* label;
    PotentialKind kind;
    double d, v, theta;
  };
  const Row rows[] = {{"fig.8", PotentialKind::y_string, 6, 1.37, 1.205},
                      {"type I", PotentialKind::y_string, 6, 1.32, 1.437},
                      {"type II", PotentialKind::y_string, 6, 4.53, 1.40},
                      {"fig.8", PotentialKind::newton, 1, 0.6355, 0.5736},
                      {"fig.8", PotentialKind::delta_string, 1, 0.536, 1.49287}};
  const auto all = catalog_entries();
  ASSERT_EQ(all.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) {
    EXPECT_EQ(all[k].label, rows[k].label);
    EXPECT_EQ(all[k].potential.kind, rows[k].kind);
    EXPECT_EQ(all[k].d, rows[k].d);
    EXPECT_EQ(all[k].v, rows[k].v);
    EXPECT_EQ(all[k].theta, rows[k].theta);
    EXPECT_NO_THROW(all[k].validate());
  }
}

TEST(Catalog, Lookup) {
  const OrbitSpec n = find_orbit("fig.8", PotentialKind::newton);
  EXPECT_EQ(n.name, "fig8-newton");
  EXPECT_EQ(n.d, 1.0);
  EXPECT_EQ(n.v, 0.6355);
  EXPECT_EQ(n.theta, 0.5736);
  const OrbitSpec d = find_orbit("fig.8", PotentialKind::delta_string);
  EXPECT_EQ(d.v, 0.536);
  EXPECT_EQ(d.theta, 1.49287);
  EXPECT_EQ(find_orbit("typeII-ystring").v, 4.53);
  EXPECT_THROW(find_orbit("fig9-newton"), NotFoundError);
  EXPECT_THROW(find_orbit("type III", PotentialKind::y_string), NotFoundError);
}

TEST(InitialState, OuterVelocityConvention) {
  const ThreeBodyState s = find_orbit("fig8-newton").initial_state();
  // Quoted to four digits.
  EXPECT_NEAR(s.v[0].x, 0.3449, 2e-4);
  EXPECT_NEAR(s.v[0].y, 0.5339, 2e-4);
  EXPECT_EQ(s.v[2], s.v[0]);
  EXPECT_EQ(s.v[1], -2.0 * s.v[0]);
  const ShapePoint p = shape_point(s);
  EXPECT_NEAR(p.r, 1.0, 1e-15);
  EXPECT_NEAR(p.phi, kPi / 3, 1e-15);
}

TEST(InitialState, ZeroMomentumAndAngularMomentum) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.1, 5.0), th(0.0, kPi / 2);
  for (int k = 0; k < 100; ++k) {
    const ThreeBodyState s = build_initial_state(u(rng), u(rng), th(rng), u(rng));
    EXPECT_EQ(norm(s.total_momentum()), 0.0);
    EXPECT_EQ(s.angular_momentum(), 0.0);
    EXPECT_TRUE(s.is_relative_frame());
  }
}

TEST(InitialState, RejectsBadInput) {
  EXPECT_THROW(build_initial_state(0.0, 1.0, 0.3), DomainError);
  EXPECT_THROW(build_initial_state(1.0, -1.0, 0.3), DomainError);
  EXPECT_THROW(build_initial_state(1.0, 1.0, 0.3, 0.0), DomainError);
  OrbitSpec s = find_orbit("fig8-newton");
  s.theta = 2.0;
  EXPECT_THROW(s.validate(), DomainError);
}

TEST(Refinement, NewtonRowClosesAsAChoreography) {
  const OrbitSpec spec = find_orbit("fig8-newton");
  PeriodOptions opt;
  opt.floquet = false;
  const auto r = detect_and_refine_period(spec.potential, symmetric_family(spec), spec.period_hint, opt);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.closure_residual, 1e-6);
  EXPECT_TRUE(r.choreography);
  // The refined parameters stay within the table's rounding.
  EXPECT_NEAR(r.params[0], spec.v, 1e-3);
  EXPECT_NEAR(r.params[1], spec.theta, 5e-3);
}

TEST(Refinement, DeltaRowNeedsHalfCoupling) {
  const OrbitSpec spec = find_orbit("fig8-delta");
  EXPECT_EQ(spec.potential.coupling, 0.5);
  PeriodOptions opt;
  opt.floquet = false;
  const auto r = detect_and_refine_period(spec.potential, symmetric_family(spec), spec.period_hint, opt);
  EXPECT_TRUE(r.converged);
  EXPECT_TRUE(r.choreography);
  EXPECT_NEAR(r.params[0], spec.v, 1e-3);
  EXPECT_NEAR(r.params[1], spec.theta, 1e-3);
}

TEST(Orbits, TypeTwoPhiStaysBounded) {
  const OrbitSpec spec = find_orbit("typeII-ystring");
  const Trajectory tr = integrate(spec.potential, spec.initial_state(), 3 * spec.period_hint);
  double lo = 1e9, hi = -1e9;
  for (const double phi : shape_series(tr, 6000).phi_unwrapped) lo = std::min(lo, phi), hi = std::max(hi, phi);
  EXPECT_GT(lo, -kPi);
  EXPECT_LT(hi, 1.6 * kPi);
}
