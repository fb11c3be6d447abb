#include <gtest/gtest.h>

#include <map>
#include <random>

#include "braid3/analysis.hpp"
#include "braid3/catalog.hpp"

using namespace braid3;

namespace {

const IntegratorConfig kTight{1e-12, 1e-13};

// Refined catalog orbits, computed once per test binary.
const PeriodicityReport& refined(const std::string& name) {
  static std::map<std::string, PeriodicityReport> cache;
  auto it = cache.find(name);
  if (it == cache.end()) {
    const OrbitSpec spec = find_orbit(name);
    PeriodOptions opt;
    opt.floquet = false;
    it = cache.emplace(name, detect_and_refine_period(spec.potential, symmetric_family(spec), spec.period_hint, opt))
             .first;
  }
  return it->second;
}

Trajectory orbit(const std::string& name, double periods = 1.0) {
  const auto& r = refined(name);
  return integrate(find_orbit(name).potential, r.state0, periods * r.period_T, kTight);
}

ThreeBodyState lagrange() {
  ThreeBodyState s;
  const double rad = 1.0 / kSqrt3;
  for (int i = 0; i < 3; ++i) {
    const double a = kTwoPi * i / 3;
    s.x[i] = {rad * std::cos(a), rad * std::sin(a)};
    s.v[i] = {-rad * kSqrt3 * std::sin(a), rad * kSqrt3 * std::cos(a)};
  }
  return s;
}

ThreeBodyState reversed(ThreeBodyState s) {
  for (auto& v : s.v) v = -v;
  return s;
}

ThreeBodyState mirrored_y(ThreeBodyState s) {
  for (int i = 0; i < 3; ++i) {
    s.x[i].y = -s.x[i].y;
    s.v[i].y = -s.v[i].y;
  }
  return s;
}

ThreeBodyState random_zero_l_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2, 2);
  ThreeBodyState s;
  for (int i = 0; i < 3; ++i) {
    s.x[i] = {u(rng), u(rng)};
    s.v[i] = {u(rng), u(rng)};
  }
  s = s.relative_frame();
  // Remove the rigid rotation: v -= w x r with w = L / I.
  double I = 0.0;
  for (int i = 0; i < 3; ++i) I += s.m * norm2(s.x[i]);
  const double w = s.angular_momentum() / I;
  for (int i = 0; i < 3; ++i) s.v[i] -= w * Vec2{-s.x[i].y, s.x[i].x};
  return s;
}

}  // namespace

TEST(ShapeSeries, FigureEightPhiAdvancesTwoPiPerShapePeriod) {
  const auto& r = refined("fig8-newton");
  const Trajectory tr = orbit("fig8-newton");
  const ShapeSeries s = shape_series(tr, 0.0, r.shape_period_T, 2000);
  EXPECT_NEAR(std::abs(s.phi_unwrapped.back() - s.phi_unwrapped.front()), kTwoPi, 1e-3);
  EXPECT_NEAR(r.shape_period_T, 0.5 * r.period_T, 1e-6);
  EXPECT_NEAR(std::abs(r.shape_phi_advance), kTwoPi, 1e-6);
  EXPECT_NEAR(std::abs(r.phi_advance), 2 * kTwoPi, 1e-6);
}

TEST(ShapeSeries, LagrangeHoldsPhi) {
  const Trajectory tr = integrate(PotentialModel::newton(), lagrange(), 3.0, kTight);
  const ShapeSeries s = shape_series(tr, 200);
  for (std::size_t k = 0; k < s.size(); ++k) {
    EXPECT_LT(s.r[k], 1e-8);
    EXPECT_TRUE(s.phi_held[k]);
  }
  EXPECT_THROW(lock_fit(s), UnsupportedOrbitError);
}

TEST(ShapeSeries, TypeTwoPhiIsBoundedAndTurnsBack) {
  const Trajectory tr = orbit("typeII-ystring", 2.0);
  const ShapeSeries s = shape_series(tr, 4000);
  const auto [lo, hi] = std::minmax_element(s.phi_unwrapped.begin(), s.phi_unwrapped.end());
  EXPECT_LT(*hi - *lo, 2.3 * kPi);
  int turns = 0;
  for (std::size_t k = 2; k < s.size(); ++k)
    turns += (s.phi_unwrapped[k] - s.phi_unwrapped[k - 1]) * (s.phi_unwrapped[k - 1] - s.phi_unwrapped[k - 2]) < 0;
  EXPECT_GE(turns, 4);
  EXPECT_THROW(lock_fit(s), UnsupportedOrbitError);
}

TEST(G3, MomentumAndPhaseFormsAgree) {
  for (const char* name : {"fig8-newton", "fig8-ystring", "typeI-ystring"}) {
    const ShapeSeries s = shape_series(orbit(name), 2000);
    EXPECT_LT(g3_identity_deviation(s), 1e-6) << name;
  }
}

TEST(G3, VanishesWithoutPhiMotion) {
  // Pure breathing: momenta parallel to positions.
  ThreeBodyState s;
  s.x = {Vec2{1, 0}, Vec2{-0.3, 0.8}, Vec2{-0.7, -0.8}};
  for (int i = 0; i < 3; ++i) s.v[i] = 0.4 * s.x[i];
  EXPECT_NEAR(hyper_angular_momentum(to_jacobi(s)), 0.0, 1e-15);
  EXPECT_NEAR(phi_rate(to_jacobi(s), 1.0), 0.0, 1e-15);
}

TEST(G3, ConstantOnUniformShapeRotation) {
  // j(t) = K(omega t) j0 with p = dj/dt moves phi at rate 2 omega, r and R fixed.
  const JacobiState j0 = jacobi_from_disc(1.5, 0.6, 0.3);
  const double w = 0.7;
  std::vector<ThreeBodyState> st;
  for (int k = 0; k <= 100; ++k) {
    const double t = 0.05 * k;
    JacobiState j = kinematic_rotation(j0, w * t);
    j.p_rho = w * j.lambda;
    j.p_lambda = -w * j.rho;
    st.push_back(from_jacobi(j, 1.0, t));
  }
  const ShapeSeries s = shape_series(st);
  for (std::size_t k = 0; k < s.size(); ++k) {
    EXPECT_NEAR(s.G3[k], s.G3[0], 1e-12);
    EXPECT_NEAR(s.phi_rate[k], 2 * w, 1e-12);
  }
  // Off the rim this motion carries L != 0, so G3 = w R^2 / 2 rather than (Rr)^2 phidot / 4.
  EXPECT_NEAR(s.G3[0], 0.5 * w * 1.5 * 1.5, 1e-12);
}

TEST(G3, AverageIsNonzeroAndOdd) {
  for (const char* name : {"fig8-newton", "fig8-ystring", "fig8-delta"}) {
    const auto& r = refined(name);
    const PotentialModel model = find_orbit(name).potential;
    const ShapeSeries s = shape_series(integrate(model, r.state0, r.period_T, kTight), 0.0, r.period_T, 4000);
    const G3Average a = g3_average(s);
    EXPECT_NEAR(a.time_average, a.phi_form, 1e-5 * std::abs(a.time_average)) << name;
    EXPECT_GT(std::abs(a.time_average), 0.1) << name;
    EXPECT_GT(*std::min_element(s.G3.begin(), s.G3.end()) * a.time_average, 0.0) << name;

    // Reversed velocities flip G3; a spatial mirror leaves it alone (x', z' are
    // mirror invariant, only y' changes sign).
    const ShapeSeries rev =
        shape_series(integrate(model, reversed(r.state0), r.period_T, kTight), 0.0, r.period_T, 4000);
    EXPECT_NEAR(g3_average(rev).time_average, -a.time_average, 1e-8) << name;
    const ShapeSeries mir =
        shape_series(integrate(model, mirrored_y(r.state0), r.period_T, kTight), 0.0, r.period_T, 4000);
    EXPECT_NEAR(g3_average(mir).time_average, a.time_average, 1e-8) << name;
  }
  // Rigid rotation of the equilateral triangle: r = 0, so the phase form
  // vanishes; with L != 0 the momentum form is L y' / 2 instead.
  const ShapeSeries lag = shape_series(integrate(PotentialModel::newton(), lagrange(), 3.0, kTight), 300);
  const G3Average la = g3_average(lag);
  EXPECT_NEAR(la.phi_form, 0.0, 1e-12);
  EXPECT_NEAR(la.time_average, 0.5 * lagrange().angular_momentum() * lag.yp[0], 1e-9);
}

TEST(G3, RateIsMinusPhiDerivativeOfV) {
  std::mt19937_64 rng(31);
  for (auto model : {PotentialModel::newton(), PotentialModel::delta_string()})
    for (int k = 0; k < 30; ++k) {
      const ThreeBodyState s = random_zero_l_state(rng);
      if (detail::min_pair_distance(s) < 0.1) continue;
      const double a = g3_rate(model, s);
      EXPECT_NEAR(a, -potential_phi_derivative(model, s), 1e-6 * std::max(1.0, std::abs(a)));
    }
  ThreeBodyState eq;
  eq.x = {Vec2{0, 0}, Vec2{1, 0}, Vec2{0.5, kSqrt3 / 2}};
  for (auto model : {PotentialModel::newton(), PotentialModel::delta_string(), PotentialModel::y_string()})
    EXPECT_NEAR(g3_rate(model, eq), 0.0, 1e-12);
}

TEST(G3, DotCheckOnOrbit) {
  const auto& r = refined("fig8-newton");
  const Trajectory tr = orbit("fig8-newton");
  EXPECT_LT(g3_dot_check(PotentialModel::newton(), tr, 0.0, r.period_T), 1e-5);
}

TEST(G3, FlatTopsInsideCentralY) {
  const auto& r = refined("fig8-ystring");
  const FlatTopReport f = flat_top_report(PotentialModel::y_string(), orbit("fig8-ystring"), 0.0, r.period_T);
  EXPECT_GE(f.segments.size(), 6u);
  EXPECT_TRUE(f.flat);
  EXPECT_LT(f.worst_ratio, 1e-8);
}

TEST(Lock, RecoversSyntheticSignal) {
  ShapeSeries s;
  for (int k = 0; k <= 600; ++k) {
    const double phi = 0.01 * k;
    s.t.push_back(phi);
    s.phi_unwrapped.push_back(phi);
    s.r.push_back(0.9 + 0.05 * std::sin(3 * phi));
    s.R.push_back(2.0 + 0.1 * std::sin(3 * phi + 0.4));
  }
  const auto f = detail::fit_sin3(s.phi_unwrapped, s.r);
  EXPECT_NEAR(f.amp, 0.05, 1e-12);
  EXPECT_NEAR(f.phase, 0.0, 1e-10);
  EXPECT_LT(f.residual_fraction, 1e-10);
  const auto g = detail::fit_sin3(s.phi_unwrapped, s.R);
  EXPECT_NEAR(g.phase, 0.4, 1e-10);
  EXPECT_NEAR(g.mean, 2.0, 1e-12);
}

TEST(Lock, FigureEightsAreLockedAtThreePhi) {
  for (const char* name : {"fig8-newton", "fig8-ystring", "fig8-delta"}) {
    const auto& r = refined(name);
    const ShapeSeries s = shape_series(orbit(name), 0.0, r.shape_period_T, 4096);
    const LockReport l = lock_fit(s);
    EXPECT_LT(l.residual_fraction, 0.15) << name;
    EXPECT_LT(std::abs(wrap_angle(l.phase_r - l.phase_R)), 0.2) << name;
    EXPECT_GT(k3_dominance(phi_harmonic_power(s, s.r, 8)), 10.0) << name;
    EXPECT_GT(k3_dominance(phi_harmonic_power(s, s.R, 8)), 10.0) << name;
  }
}

TEST(Syzygy, FigureEightCyclesThroughAllMiddles) {
  const Trajectory tr = orbit("fig8-newton", 1.0);
  auto z = syzygy_sequence(tr);
  // The final event sits at t = T, the orbit's start.
  if (!z.empty() && z.back().t > tr.t_end() - 1e-6) z.pop_back();
  ASSERT_EQ(z.size(), 5u);
  const int want[] = {2, 0, 1, 2, 0};
  for (std::size_t k = 0; k < z.size(); ++k) {
    EXPECT_EQ(z[k].middle_particle, want[k]);
    EXPECT_EQ(z[k].sector, z[k].middle_particle);
  }
}

TEST(Syzygy, TypeOneRepeatsOnlyAfterFourCycles) {
  const auto& r = refined("typeI-ystring");
  EXPECT_EQ(r.n_phi_cycles, 4);
  const Trajectory tr = orbit("typeI-ystring", 1.0);
  const auto z = syzygy_sequence(tr);
  ASSERT_GE(z.size(), 8u);
  // The pattern of phi values of one quarter is not repeated in the next.
  std::vector<double> quarter[4];
  for (const auto& e : z) quarter[std::min(3, static_cast<int>(4 * e.t / r.period_T))].push_back(e.phi);
  bool differ = false;
  for (int q = 1; q < 4; ++q)
    if (quarter[q].size() != quarter[0].size()) differ = true;
    else
      for (std::size_t k = 0; k < quarter[0].size(); ++k)
        if (std::abs(wrap_angle(quarter[q][k] - quarter[0][k])) > 1e-3) differ = true;
  EXPECT_TRUE(differ);
}

TEST(Syzygy, LagrangeHasNone) {
  EXPECT_TRUE(syzygy_sequence(integrate(PotentialModel::newton(), lagrange(), 5.0, kTight)).empty());
}

TEST(Period, NewtonFigureEight) {
  const auto& r = refined("fig8-newton");
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.closure_residual, 1e-9 * r.phase_scale);
  EXPECT_TRUE(r.choreography);
  EXPECT_EQ(r.symmetry_class, SymmetryClass::S3);
  EXPECT_NEAR(r.period_T, 6.3259, 1e-3);
  EXPECT_NEAR(r.quotient_period_T, r.period_T / 6, 1e-6);
}

TEST(Period, TypeOne) {
  const auto& r = refined("typeI-ystring");
  EXPECT_TRUE(r.converged);
  EXPECT_FALSE(r.choreography);
  EXPECT_EQ(r.symmetry_class, SymmetryClass::S2);
  EXPECT_NEAR(std::abs(r.phi_advance), 4 * kTwoPi, 1e-3);
  EXPECT_EQ(r.n_phi_cycles, 4);
}

TEST(Period, TypeTwoIsNotAChoreography) {
  const auto& r = refined("typeII-ystring");
  EXPECT_TRUE(r.converged);
  EXPECT_FALSE(r.choreography);
  EXPECT_EQ(r.symmetry_class, SymmetryClass::S2);
  EXPECT_FALSE(choreography_test(orbit("typeII-ystring", 1.4), r.period_T).choreography);
}

TEST(Period, NonPeriodicStartDoesNotConverge) {
  ThreeBodyState s;
  s.x = {Vec2{1, 0}, Vec2{-0.4, 0.3}, Vec2{-0.6, -0.3}};
  s.v = {Vec2{0.1, 0.5}, Vec2{-0.3, -0.2}, Vec2{0.2, -0.3}};
  PeriodOptions opt;
  opt.max_iterations = 4;
  opt.floquet = false;
  try {
    detect_and_refine_period(PotentialModel::y_string(), s, 3.7, opt);
    FAIL() << "expected no convergence";
  } catch (const NoConvergenceError& e) {
    EXPECT_GT(e.best.closure_residual, 0.0);
  } catch (const DivergenceError&) {
  }
}

TEST(Period, FloquetModuliOfFigureEight) {
  const OrbitSpec spec = find_orbit("fig8-newton");
  const auto& r = refined("fig8-newton");
  const auto mod = detail::floquet_moduli(spec.potential, r.state0, r.period_T, kTight, 1e-7);
  ASSERT_EQ(mod.size(), 8u);
  // Linearly stable: every multiplier on the unit circle.
  for (double m : mod) EXPECT_NEAR(m, 1.0, 1e-3);
}

TEST(RadialPotential, NoMinimumWithoutG3) {
  std::vector<double> R;
  for (int k = 1; k <= 200; ++k) R.push_back(0.05 * k);
  const auto v = effective_radial_potential(PotentialModel::newton(), 0.0, 1.0, R, 0.5, 0.3);
  for (std::size_t k = 1; k < v.size(); ++k) EXPECT_GT(v[k], v[k - 1]);
  EXPECT_LT(v.back(), 0.0);
  EXPECT_FALSE(interior_minimum(R, v).has_value());

  const auto v1 = effective_radial_potential(PotentialModel::newton(), 1.0, 1.0, R, 0.5, 0.3);
  const auto v2 = effective_radial_potential(PotentialModel::newton(), 2.0, 1.0, R, 0.5, 0.3);
  for (std::size_t k = 0; k < R.size(); ++k) EXPECT_NEAR(v2[k] - v[k], 4 * (v1[k] - v[k]), 1e-9 * std::abs(v2[k] - v[k]));
}

TEST(RadialPotential, YStringFigureEightMinimumNearMeanRadius) {
  const auto& r = refined("fig8-ystring");
  const ShapeSeries s = shape_series(orbit("fig8-ystring"), 0.0, r.period_T, 4000);
  const G3Average a = g3_average(s);
  double Rbar = 0, rbar = 0;
  for (std::size_t k = 0; k < s.size(); ++k) Rbar += s.R[k], rbar += s.r[k];
  Rbar /= s.size();
  rbar /= s.size();
  std::vector<double> grid;
  for (int k = 1; k <= 400; ++k) grid.push_back(0.05 * k);
  const auto v = effective_radial_potential_phi_averaged(PotentialModel::y_string(), a.time_average, 1.0, grid, rbar);
  const auto rstar = interior_minimum(grid, v);
  ASSERT_TRUE(rstar.has_value());
  EXPECT_LT(std::abs(*rstar - Rbar) / Rbar, 0.15);
}

TEST(KineticIdentity, RandomZeroAngularMomentumStates) {
  std::mt19937_64 rng(32);
  for (int k = 0; k < 200; ++k) {
    const ThreeBodyState s = random_zero_l_state(rng);
    ASSERT_LT(std::abs(s.angular_momentum()), 1e-12);
    EXPECT_LT(kinetic_identity_check(s), 1e-8);
  }
}

TEST(KineticIdentity, PureBreathingAndPurePhi) {
  ThreeBodyState s;
  s.x = {Vec2{1, 0}, Vec2{-0.3, 0.8}, Vec2{-0.7, -0.8}};
  for (int i = 0; i < 3; ++i) s.v[i] = 0.4 * s.x[i];
  const ShapeRates d = shape_rates(s);
  EXPECT_NEAR(s.kinetic_energy(), 0.5 * d.R_dot * d.R_dot, 1e-14);
  EXPECT_NEAR(d.phi_dot, 0.0, 1e-14);
  EXPECT_NEAR(d.alpha_dot, 0.0, 1e-14);

  // Collinear shape moving only along phi.
  JacobiState j = jacobi_from_disc(2.0, 1.0, 0.4);
  j.p_rho = 0.3 * j.lambda;
  j.p_lambda = -0.3 * j.rho;
  const ThreeBodyState c = from_jacobi(j, 1.0);
  const ShapeRates e = shape_rates(c);
  EXPECT_NEAR(e.R_dot, 0.0, 1e-14);
  EXPECT_NEAR(c.kinetic_energy(), 0.5 * std::pow(2.0 / 2, 2) * e.phi_dot * e.phi_dot, 1e-13);
}
