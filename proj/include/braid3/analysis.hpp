#pragma once

// Shape-space diagnostics along integrated orbits: the G3 suite, phase-lock
// fits, syzygy sequences, period refinement by shooting, symmetry and
// stability of closed orbits.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "braid3/dynamics.hpp"
#include "braid3/kinematics.hpp"
#include "braid3/potentials.hpp"

namespace braid3 {

// ---------------------------------------------------------------------------
// Shape series

struct ShapeSeries {
  double m = 1.0;
  std::vector<double> t;
  std::vector<double> R;
  std::vector<double> r;
  std::vector<double> alpha;
  std::vector<double> phi_unwrapped;
  std::vector<double> phi_rate;  // analytic, from velocities
  std::vector<double> G3;        // momentum form
  std::vector<double> xp;
  std::vector<double> yp;
  std::vector<double> zp;
  std::vector<char> phi_held;  // 1 where r < kPhiUndefinedBelow

  std::size_t size() const { return t.size(); }
};

inline ShapeSeries shape_series(const std::vector<ThreeBodyState>& states) {
  ShapeSeries s;
  if (states.empty()) return s;
  s.m = states.front().m;
  double last_wrapped = 0.0;
  bool have_phi = false;
  double unwrapped = 0.0;
  for (const auto& st : states) {
    const JacobiState j = to_jacobi(st);
    const ShapePoint p = shape_point(j);
    if (p.phi_defined) {
      unwrapped = have_phi ? unwrapped + wrap_angle(p.phi - last_wrapped) : p.phi;
      last_wrapped = p.phi;
      have_phi = true;
    }
    s.t.push_back(st.t);
    s.R.push_back(p.R);
    s.r.push_back(p.r);
    s.alpha.push_back(p.alpha);
    s.phi_unwrapped.push_back(unwrapped);
    s.phi_rate.push_back(p.phi_defined ? phi_rate(j, st.m) : 0.0);
    s.G3.push_back(hyper_angular_momentum(j));
    s.xp.push_back(p.xp);
    s.yp.push_back(p.yp);
    s.zp.push_back(p.zp);
    s.phi_held.push_back(p.phi_defined ? 0 : 1);
  }
  return s;
}

/// n = 0 uses the accepted step endpoints, otherwise n + 1 equally spaced
/// samples from the dense output.
inline ShapeSeries shape_series(const Trajectory& tr, std::size_t n = 0) {
  return shape_series(n == 0 ? tr.samples : tr.resample(n));
}

/// Samples of tr on [t0, t1], n + 1 equally spaced.
inline ShapeSeries shape_series(const Trajectory& tr, double t0, double t1, std::size_t n) {
  std::vector<ThreeBodyState> st;
  st.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k)
    st.push_back(tr.state_at(k == n ? t1 : t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(n)));
  return shape_series(st);
}

// ---------------------------------------------------------------------------
// G3 suite

/// G3 = (m/4) (R r)^2 dphi/dt, valid for L = 0. Zero where phi is held.
inline std::vector<double> g3_from_phase_rate(const ShapeSeries& s, double m) {
  std::vector<double> g(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double Rr = s.R[k] * s.r[k];
    g[k] = s.phi_held[k] ? 0.0 : 0.25 * m * Rr * Rr * s.phi_rate[k];
  }
  return g;
}

/// Largest |G3 - (m/4)(R r)^2 phidot| over the defined samples, relative to
/// max |G3|.
inline double g3_identity_deviation(const ShapeSeries& s) {
  const auto g = g3_from_phase_rate(s, s.m);
  double worst = 0.0;
  double scale = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    scale = std::max(scale, std::abs(s.G3[k]));
    if (!s.phi_held[k]) worst = std::max(worst, std::abs(g[k] - s.G3[k]));
  }
  return worst / std::max(scale, 1e-300);
}

struct G3Average {
  double time_average = 0.0;  // (1/T) int G3 dt
  double phi_form = 0.0;      // (1/T) int (m/4)(R r)^2 dphi
  double stddev = 0.0;        // spread of G3 about its mean
  double phi_advance = 0.0;
};

/// Averages over the window covered by the series, which should span exactly
/// one period with equally spaced samples.
inline G3Average g3_average(const ShapeSeries& s) {
  G3Average a;
  const std::size_t n = s.size();
  if (n < 2) return a;
  const double T = s.t.back() - s.t.front();
  double it = 0.0;
  double ip = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double dt = s.t[k] - s.t[k - 1];
    it += 0.5 * dt * (s.G3[k] + s.G3[k - 1]);
    const double w0 = 0.25 * s.m * std::pow(s.R[k - 1] * s.r[k - 1], 2);
    const double w1 = 0.25 * s.m * std::pow(s.R[k] * s.r[k], 2);
    ip += 0.5 * (w0 + w1) * (s.phi_unwrapped[k] - s.phi_unwrapped[k - 1]);
  }
  a.time_average = it / T;
  a.phi_form = ip / T;
  double var = 0.0;
  for (std::size_t k = 1; k < n; ++k) var += std::pow(s.G3[k] - a.time_average, 2);
  a.stddev = std::sqrt(var / static_cast<double>(n - 1));
  a.phi_advance = s.phi_unwrapped.back() - s.phi_unwrapped.front();
  return a;
}

/// dG3/dt from the forces: (F_rho . lambda - F_lambda . rho) / 2.
inline double g3_rate(const PotentialModel& model, const ThreeBodyState& s) {
  const auto e = evaluate(model, s.x);
  const JacobiState j = to_jacobi(s);
  const Vec2 f_rho = (e.forces[0] - e.forces[1]) / kSqrt2;
  const Vec2 f_lam = (e.forces[0] + e.forces[1] - 2.0 * e.forces[2]) / kSqrt6;
  return 0.5 * (dot(f_rho, j.lambda) - dot(f_lam, j.rho));
}

/// dV/dphi at fixed R, r and y', by a central difference along the
/// kinematic rotation (a rotation by eps moves phi by 2 eps).
inline double potential_phi_derivative(const PotentialModel& model, const ThreeBodyState& s, double h = 1e-5) {
  const JacobiState j = to_jacobi(s);
  const double vp = potential_value(model, from_jacobi(kinematic_rotation(j, 0.25 * h), s.m).x);
  const double vm = potential_value(model, from_jacobi(kinematic_rotation(j, -0.25 * h), s.m).x);
  return (vp - vm) / h;
}

/// Largest deviation between a numerical time derivative of G3 (fourth-order
/// central differences on the dense output) and -dV/dphi, over n + 1 times in
/// [t0, t1], relative to max |dV/dphi|.
inline double g3_dot_check(const PotentialModel& model, const Trajectory& tr, double t0, double t1,
                           std::size_t n = 400) {
  const double dt = 1e-3 * std::max(1.0, (t1 - t0) / 100.0);
  t0 = std::max(t0, tr.t_begin() + 2.0 * dt);
  t1 = std::min(t1, tr.t_end() - 2.0 * dt);
  auto G = [&](double t) { return hyper_angular_momentum(to_jacobi(tr.state_at(t))); };
  double worst = 0.0;
  double scale = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(n);
    const double num = (-G(t + 2 * dt) + 8 * G(t + dt) - 8 * G(t - dt) + G(t - 2 * dt)) / (12 * dt);
    const double ref = -potential_phi_derivative(model, tr.state_at(t));
    worst = std::max(worst, std::abs(num - ref));
    scale = std::max(scale, std::abs(ref));
  }
  return worst / std::max(scale, 1e-300);
}

/// One maximal run of samples in the central Y region.
struct FlatTop {
  double t_begin = 0.0;
  double t_end = 0.0;
  std::size_t samples = 0;
  double max_abs_g3_rate = 0.0;
};

struct FlatTopReport {
  std::vector<FlatTop> segments;
  double max_abs_g3 = 0.0;
  double worst_ratio = 0.0;  // max over segments of |dG3/dt| / max |G3|
  bool flat = true;          // worst_ratio < 1e-8
};

/// Y-string only: dG3/dt on every central-Y stretch of the orbit sampled at
/// n + 1 times in [t0, t1].
inline FlatTopReport flat_top_report(const PotentialModel& model, const Trajectory& tr, double t0, double t1,
                                     std::size_t n = 4000) {
  FlatTopReport rep;
  std::optional<FlatTop> cur;
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(n);
    const ThreeBodyState s = tr.state_at(t);
    rep.max_abs_g3 = std::max(rep.max_abs_g3, std::abs(hyper_angular_momentum(to_jacobi(s))));
    const bool central = model.kind == PotentialKind::y_string &&
                         evaluate(model, s.x).region.kind == YRegion::Kind::central_y;
    if (central) {
      if (!cur) cur = FlatTop{t, t, 0, 0.0};
      cur->t_end = t;
      ++cur->samples;
      cur->max_abs_g3_rate = std::max(cur->max_abs_g3_rate, std::abs(g3_rate(model, s)));
    } else if (cur) {
      rep.segments.push_back(*cur);
      cur.reset();
    }
  }
  if (cur) rep.segments.push_back(*cur);
  for (const auto& seg : rep.segments)
    rep.worst_ratio = std::max(rep.worst_ratio, seg.max_abs_g3_rate / std::max(rep.max_abs_g3, 1e-300));
  rep.flat = rep.worst_ratio < 1e-8;
  return rep;
}

// ---------------------------------------------------------------------------
// Phase and frequency locking

struct LockReport {
  double mean_phi_rate = 0.0;
  double r_bar = 0.0;
  double R_bar = 0.0;
  double amp_r = 0.0;
  double amp_R = 0.0;
  double amp_phi = 0.0;
  double phase_r = 0.0;  // x = mean + amp sin(3 phi + phase)
  double phase_R = 0.0;
  double phase_phi = 0.0;
  double residual_fraction = 0.0;  // worst of the r and R fits
};

namespace detail {

struct HarmonicFit {
  double mean = 0.0;
  double amp = 0.0;
  double phase = 0.0;
  double residual_fraction = 0.0;
};

// Least squares for y ~ c0 + a sin(3 phi) + b cos(3 phi).
inline HarmonicFit fit_sin3(const std::vector<double>& phi, const std::vector<double>& y) {
  const std::size_t n = y.size();
  Eigen::MatrixXd A(n, 3);
  Eigen::VectorXd b(n);
  double ybar = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    A(k, 0) = 1.0;
    A(k, 1) = std::sin(3.0 * phi[k]);
    A(k, 2) = std::cos(3.0 * phi[k]);
    b(k) = y[k];
    ybar += y[k];
  }
  ybar /= static_cast<double>(n);
  const Eigen::Vector3d c = A.colPivHouseholderQr().solve(b);
  const double ss_res = (A * c - b).squaredNorm();
  double ss_tot = 0.0;
  for (double v : y) ss_tot += (v - ybar) * (v - ybar);
  HarmonicFit f;
  f.mean = c(0);
  f.amp = std::hypot(c(1), c(2));
  f.phase = std::atan2(c(2), c(1));
  f.residual_fraction = ss_tot > 0.0 ? std::clamp(ss_res / ss_tot, 0.0, 1.0) : 0.0;
  return f;
}

}  // namespace detail

/// Fits r, R and phi - <phidot> t against {1, sin 3phi, cos 3phi} over the
/// window covered by the series (one period, equally spaced in time).
inline LockReport lock_fit(const ShapeSeries& s) {
  if (s.size() < 8) throw DomainError("lock_fit: series too short");
  const double dphi = s.phi_unwrapped.back() - s.phi_unwrapped.front();
  const double T = s.t.back() - s.t.front();
  bool monotone = true;
  for (std::size_t k = 1; k < s.size(); ++k)
    if ((s.phi_unwrapped[k] - s.phi_unwrapped[k - 1]) * dphi < 0.0) monotone = false;
  if (std::abs(dphi) < kPi || !monotone)
    throw UnsupportedOrbitError("lock_fit: phi does not rotate on this orbit");
  LockReport rep;
  rep.mean_phi_rate = dphi / T;
  const auto fr = detail::fit_sin3(s.phi_unwrapped, s.r);
  const auto fR = detail::fit_sin3(s.phi_unwrapped, s.R);
  std::vector<double> dev(s.size());
  for (std::size_t k = 0; k < s.size(); ++k)
    dev[k] = s.phi_unwrapped[k] - s.phi_unwrapped.front() - rep.mean_phi_rate * (s.t[k] - s.t.front());
  const auto fp = detail::fit_sin3(s.phi_unwrapped, dev);
  rep.r_bar = fr.mean;
  rep.R_bar = fR.mean;
  rep.amp_r = fr.amp;
  rep.amp_R = fR.amp;
  rep.amp_phi = fp.amp;
  rep.phase_r = fr.phase;
  rep.phase_R = fR.phase;
  rep.phase_phi = fp.phase;
  rep.residual_fraction = std::max(fr.residual_fraction, fR.residual_fraction);
  return rep;
}

/// Power |c_k|^2 of the harmonics k = 0..kmax of y as a function of phi,
/// integrated over the phi range of the series (trapezoid in phi).
inline std::vector<double> phi_harmonic_power(const ShapeSeries& s, const std::vector<double>& y, int kmax) {
  std::vector<double> p(static_cast<std::size_t>(kmax) + 1, 0.0);
  const double span = s.phi_unwrapped.back() - s.phi_unwrapped.front();
  if (span == 0.0) return p;
  for (int k = 0; k <= kmax; ++k) {
    std::complex<double> c{};
    for (std::size_t i = 1; i < s.size(); ++i) {
      const double d = s.phi_unwrapped[i] - s.phi_unwrapped[i - 1];
      const auto e0 = y[i - 1] * std::polar(1.0, -k * s.phi_unwrapped[i - 1]);
      const auto e1 = y[i] * std::polar(1.0, -k * s.phi_unwrapped[i]);
      c += 0.5 * d * (e0 + e1);
    }
    p[static_cast<std::size_t>(k)] = std::norm(c / span);
  }
  return p;
}

/// power[3] over the largest power at k in [1, kmax] other than 3.
inline double k3_dominance(const std::vector<double>& power) {
  double other = 0.0;
  for (std::size_t k = 1; k < power.size(); ++k)
    if (k != 3) other = std::max(other, power[k]);
  return power.size() > 3 ? power[3] / std::max(other, 1e-300) : 0.0;
}

/// Amplitude and phase of the best fit y ~ c + a cos(w t) + b sin(w t) as
/// amp cos(w t - phase).
struct ToneFit {
  double omega = 0.0;
  double amp = 0.0;
  double phase = 0.0;
};

inline ToneFit fit_tone(const std::vector<double>& t, const std::vector<double>& y, double omega) {
  const std::size_t n = y.size();
  Eigen::MatrixXd A(n, 3);
  Eigen::VectorXd b(n);
  for (std::size_t k = 0; k < n; ++k) {
    A(k, 0) = 1.0;
    A(k, 1) = std::cos(omega * t[k]);
    A(k, 2) = std::sin(omega * t[k]);
    b(k) = y[k];
  }
  const Eigen::Vector3d c = A.colPivHouseholderQr().solve(b);
  return {omega, std::hypot(c(1), c(2)), std::atan2(c(2), c(1))};
}

/// Angular frequency of the strongest periodogram peak of y (mean removed),
/// searched up to max_cycles cycles per window and refined locally.
inline double dominant_frequency(const std::vector<double>& t, const std::vector<double>& y, int max_cycles = 64) {
  const std::size_t n = y.size();
  const double span = t.back() - t.front();
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  auto power = [&](double w) {
    std::complex<double> c{};
    for (std::size_t k = 0; k < n; ++k) c += (y[k] - mean) * std::polar(1.0, -w * t[k]);
    return std::norm(c);
  };
  const double dw = kTwoPi / span;
  const double wmax = std::min(max_cycles * dw, kPi * static_cast<double>(n - 1) / span);
  double best_w = dw;
  double best_p = -1.0;
  for (double w = 0.5 * dw; w <= wmax; w += 0.25 * dw) {
    const double p = power(w);
    if (p > best_p) {
      best_p = p;
      best_w = w;
    }
  }
  double lo = best_w - 0.25 * dw;
  double hi = best_w + 0.25 * dw;
  for (int it = 0; it < 50; ++it) {
    const double a = lo + (hi - lo) / 3.0;
    const double b = hi - (hi - lo) / 3.0;
    if (power(a) < power(b))
      lo = a;
    else
      hi = b;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Syzygies

struct SyzygyEvent {
  double t = 0.0;
  double phi = 0.0;
  int middle_particle = 0;  // geometrically between the other two
  int sector = 0;           // phi sector, centred on the collinear point with that middle
};

/// Sector k is centred on the collinear configuration with particle k in the
/// middle: -pi/3, pi/3, pi. Sectors are half-open, and a phi exactly on a
/// boundary goes to the lower index.
inline int phi_sector(double phi) {
  phi = wrap_angle(phi);
  const double b = 2.0 * kPi / 3.0;
  if (phi >= -b && phi <= 0.0) return 0;
  if (phi > 0.0 && phi <= b) return 1;
  return 2;
}

/// Index of the body lying between the other two on a (nearly) collinear
/// configuration.
inline int middle_particle(const std::array<Vec2, 3>& x) {
  int best = 0;
  double best_angle = -1.0;
  const auto a = interior_angles(x);
  for (int k = 0; k < 3; ++k)
    if (a[k] > best_angle) {
      best_angle = a[k];
      best = k;
    }
  return best;
}

inline std::vector<SyzygyEvent> syzygy_sequence(const Trajectory& tr) {
  std::vector<SyzygyEvent> out;
  for (const auto& e : poincare_section(tr, EventSpec::syzygy())) {
    const ShapePoint p = shape_point(e.state);
    if (p.r <= 0.5) continue;
    out.push_back({e.t, p.phi, middle_particle(e.state.x), phi_sector(p.phi)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Symmetries of an orbit

/// Element of S3 x O(2) x time reversal acting on states: relabel by perm,
/// optionally mirror (y -> -y), rotate by `rotation`, optionally reverse
/// velocities.
struct SymmetryElement {
  PermutationElement perm = PermutationElement::identity();
  bool mirror = false;
  bool time_reversal = false;
  double rotation = 0.0;

  std::string name() const {
    std::string s = perm.name();
    if (mirror) s += "+mirror";
    if (time_reversal) s += "+time_reversal";
    return s;
  }
};

namespace detail {

inline ThreeBodyState mirrored(const ThreeBodyState& s) {
  ThreeBodyState o = s;
  for (int i = 0; i < 3; ++i) {
    o.x[i].y = -o.x[i].y;
    o.v[i].y = -o.v[i].y;
  }
  return o;
}

inline Vec2 rotate(const Vec2& a, double beta) {
  const double c = std::cos(beta);
  const double s = std::sin(beta);
  return {c * a.x - s * a.y, s * a.x + c * a.y};
}

inline ThreeBodyState rotated(const ThreeBodyState& s, double beta) {
  ThreeBodyState o = s;
  for (int i = 0; i < 3; ++i) {
    o.x[i] = rotate(s.x[i], beta);
    o.v[i] = rotate(s.v[i], beta);
  }
  return o;
}

// Phase-space distance, with velocities weighted by `vw`.
inline double phase_distance(const ThreeBodyState& a, const ThreeBodyState& b, double vw = 1.0) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += norm2(a.x[i] - b.x[i]) + vw * vw * norm2(a.v[i] - b.v[i]);
  return std::sqrt(s);
}

// Image of s under g without the rotation, plus the rotation that best maps
// it onto `target` (least squares over positions and velocities).
inline std::pair<ThreeBodyState, double> align(const ThreeBodyState& s, const SymmetryElement& g,
                                               const ThreeBodyState& target, bool allow_rotation) {
  ThreeBodyState o = permutation_action(s, g.perm);
  if (g.mirror) o = mirrored(o);
  if (g.time_reversal)
    for (auto& v : o.v) v = -v;
  double beta = 0.0;
  if (allow_rotation) {
    double c = 0.0;
    double d = 0.0;
    for (int i = 0; i < 3; ++i) {
      c += cross(o.x[i], target.x[i]) + cross(o.v[i], target.v[i]);
      d += dot(o.x[i], target.x[i]) + dot(o.v[i], target.v[i]);
    }
    beta = std::atan2(c, d);
  }
  return {rotated(o, beta), beta};
}

}  // namespace detail

inline ThreeBodyState apply(const SymmetryElement& g, const ThreeBodyState& s) {
  ThreeBodyState o = permutation_action(s, g.perm);
  if (g.mirror) o = detail::mirrored(o);
  if (g.time_reversal)
    for (auto& v : o.v) v = -v;
  return detail::rotated(o, g.rotation);
}

/// A symmetry found along an orbit: state(shift) = g(state(0)). With time
/// reversal this means x(shift - t) = g x(t).
struct OrbitSymmetry {
  SymmetryElement element;
  double shift = 0.0;
  double deviation = 0.0;
};

enum class SymmetryClass { S3, S2, none };

inline std::string to_string(SymmetryClass c) {
  switch (c) {
    case SymmetryClass::S3: return "S3";
    case SymmetryClass::S2: return "S2";
    case SymmetryClass::none: return "none";
  }
  return "?";
}

/// Searches shifts j T / k (k <= 12) for states related to state(0) by an
/// element of S3 x O(2) x time reversal. The flow commutes with every such
/// element, so agreement at one time implies it along the whole orbit.
inline std::vector<OrbitSymmetry> find_symmetries(const Trajectory& tr, double T, double tol) {
  std::vector<OrbitSymmetry> out;
  const ThreeBodyState s0 = tr.state_at(tr.t_begin());
  const double vw = s0.length_scale() / std::max(s0.velocity_scale(), 1e-300);
  const double scale = detail::phase_distance(s0, ThreeBodyState{0.0, {}, {}, s0.m}, vw);
  std::vector<double> shifts{0.0};
  for (int k = 2; k <= 12; ++k)
    for (int j = 1; j < k; ++j) {
      const double f = static_cast<double>(j) / k;
      if (std::none_of(shifts.begin(), shifts.end(), [&](double x) { return std::abs(x - f) < 1e-12; }))
        shifts.push_back(f);
    }
  std::sort(shifts.begin(), shifts.end());
  for (double f : shifts) {
    const ThreeBodyState target = tr.state_at(tr.t_begin() + f * T);
    for (const auto& p : PermutationElement::all())
      for (int mir = 0; mir < 2; ++mir)
        for (int rev = 0; rev < 2; ++rev) {
          SymmetryElement g{p, mir == 1, rev == 1, 0.0};
          if (f == 0.0 && p == PermutationElement::identity() && !g.mirror && !g.time_reversal) continue;
          auto [img, beta] = detail::align(s0, g, target, true);
          const double dev = detail::phase_distance(img, target, vw) / scale;
          if (dev < tol) {
            g.rotation = beta;
            out.push_back({g, f * T, dev});
          }
        }
  }
  return out;
}

inline SymmetryClass classify_symmetry(const std::vector<OrbitSymmetry>& syms) {
  bool cyclic = false;
  bool transposition = false;
  for (const auto& s : syms) {
    const auto k = s.element.perm.kind();
    cyclic |= k == PermutationElement::Kind::cyclic_plus || k == PermutationElement::Kind::cyclic_minus;
    transposition |= k == PermutationElement::Kind::transposition;
  }
  if (cyclic) return SymmetryClass::S3;
  if (transposition) return SymmetryClass::S2;
  return SymmetryClass::none;
}

// ---------------------------------------------------------------------------
// Choreography

struct ChoreographyResult {
  bool choreography = false;
  double max_deviation = 0.0;  // best over the two cyclic relabellings
  double tolerance = 0.0;
};

/// Checks x_{sigma(i)}(t + T/3) = x_i(t) on n + 1 times across one period for
/// a cyclic sigma. The trajectory must cover [t0, t0 + 4T/3].
inline ChoreographyResult choreography_test(const Trajectory& tr, double T, std::size_t n = 256) {
  if (tr.t_end() - tr.t_begin() < 4.0 * T / 3.0 * (1.0 - 1e-12))
    throw DomainError("choreography_test: trajectory shorter than 4T/3");
  ChoreographyResult res;
  double Rbar = 0.0;
  std::vector<ThreeBodyState> a;
  std::vector<ThreeBodyState> b;
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = tr.t_begin() + T * static_cast<double>(k) / static_cast<double>(n);
    a.push_back(tr.state_at(t));
    b.push_back(tr.state_at(std::min(t + T / 3.0, tr.t_end())));
    Rbar += shape_point(a.back()).R;
  }
  Rbar /= static_cast<double>(n + 1);
  res.tolerance = 1e-6 * Rbar;
  res.max_deviation = std::numeric_limits<double>::infinity();
  for (const auto& sigma : {PermutationElement::cyclic_plus(), PermutationElement::cyclic_minus()}) {
    double worst = 0.0;
    for (std::size_t k = 0; k <= n; ++k)
      for (int i = 0; i < 3; ++i) worst = std::max(worst, norm(b[k].x[sigma(i)] - a[k].x[i]));
    res.max_deviation = std::min(res.max_deviation, worst);
  }
  res.choreography = res.max_deviation < res.tolerance;
  return res;
}

// ---------------------------------------------------------------------------
// Period refinement

/// Initial states parametrised by a few numbers, e.g. (v, theta) at fixed d.
struct StateFamily {
  std::vector<double> p0;
  std::function<ThreeBodyState(const std::vector<double>&)> build;
};

/// Every relative-frame phase-space point; the parameters are the 12 packed
/// components of state0.
inline StateFamily full_state_family(const ThreeBodyState& state0) {
  const PhaseVector y = pack(state0.relative_frame());
  const double m = state0.m;
  return {std::vector<double>(y.begin(), y.end()), [m](const std::vector<double>& p) {
            PhaseVector y{};
            std::copy(p.begin(), p.end(), y.begin());
            return unpack(y, 0.0, m).relative_frame();
          }};
}

struct PeriodOptions {
  IntegratorConfig integrator{1e-12, 1e-13};
  int max_iterations = 30;
  double closure_tol = 1e-9;  // relative to the phase-space scale
  double fd_step = 1e-7;      // relative parameter step of the Jacobian
  double symmetry_tol = 1e-6;
  bool floquet = true;
};

struct PeriodicityReport {
  bool converged = false;
  int iterations = 0;
  std::vector<double> params;  // refined family parameters
  ThreeBodyState state0;       // refined initial state
  double period_T = 0.0;       // strict closure time
  double closure_residual = 0.0;
  double phase_scale = 0.0;
  double phi_advance = 0.0;  // over period_T
  int n_phi_cycles = 0;
  double phi_min = 0.0;
  double phi_max = 0.0;
  // Smallest shift after which the state returns up to a rotation or
  // reflection of the plane, with unchanged labels: the period of the
  // (R, r, phi) motion.
  double shape_period_T = 0.0;
  double shape_phi_advance = 0.0;
  // Smallest shift carrying state(0) to its image under S3 x O(2).
  double quotient_period_T = 0.0;
  std::string quotient_element;
  bool choreography = false;
  double choreography_deviation = 0.0;
  SymmetryClass symmetry_class = SymmetryClass::none;
  std::vector<OrbitSymmetry> symmetries;
  std::vector<double> floquet_moduli;  // descending
};

class NoConvergenceError : public Error {
 public:
  NoConvergenceError(const std::string& what, PeriodicityReport best) : Error(what), best(std::move(best)) {}
  PeriodicityReport best;  // best iterate; best.closure_residual is the residual reached
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline double phase_scale(const ThreeBodyState& s) {
  double n2 = 0.0;
  for (double c : pack(s)) n2 += c * c;
  return std::sqrt(n2);
}

// Phi_T(s) - s, packed. Throws IntegrationError on collisions.
inline Eigen::VectorXd closure_map(const PotentialModel& model, const ThreeBodyState& s, double T,
                                   const IntegratorConfig& cfg, PhaseVector* end_rate = nullptr) {
  const Trajectory tr = integrate(model, s, T, cfg);
  const ThreeBodyState e = tr.samples.back();
  const PhaseVector a = pack(e);
  const PhaseVector b = pack(s.relative_frame());
  Eigen::VectorXd F(12);
  for (int k = 0; k < 12; ++k) F(k) = a[k] - b[k];
  if (end_rate) {
    const auto d = derivative(model, e);
    for (int i = 0; i < 3; ++i) {
      (*end_rate)[2 * i] = d.dx[i].x;
      (*end_rate)[2 * i + 1] = d.dx[i].y;
      (*end_rate)[6 + 2 * i] = d.dv[i].x;
      (*end_rate)[6 + 2 * i + 1] = d.dv[i].y;
    }
  }
  return F;
}

// Monodromy in Jacobi coordinates by central differences of 8 basis
// perturbations, positions scaled by h R and momenta by h P.
inline std::vector<double> floquet_moduli(const PotentialModel& model, const ThreeBodyState& s0, double T,
                                          const IntegratorConfig& cfg, double h) {
  const JacobiState j0 = to_jacobi(s0);
  const double R = j0.hyper_radius();
  const double P = std::sqrt(norm2(j0.p_rho) + norm2(j0.p_lambda));
  auto to_vec = [](const JacobiState& j) {
    return std::array<double, 8>{j.rho.x,   j.rho.y,   j.lambda.x,   j.lambda.y,
                                 j.p_rho.x, j.p_rho.y, j.p_lambda.x, j.p_lambda.y};
  };
  auto from_vec = [](const std::array<double, 8>& v) {
    return JacobiState{{v[0], v[1]}, {v[2], v[3]}, {v[4], v[5]}, {v[6], v[7]}};
  };
  const auto v0 = to_vec(j0);
  Eigen::Matrix<double, 8, 8> M;
  for (int c = 0; c < 8; ++c) {
    const double sc = c < 4 ? R : P;
    std::array<std::array<double, 8>, 2> ends{};
    for (int sgn = 0; sgn < 2; ++sgn) {
      auto v = v0;
      v[c] += (sgn == 0 ? 1.0 : -1.0) * h * sc;
      const ThreeBodyState s = from_jacobi(from_vec(v), s0.m);
      ends[sgn] = to_vec(to_jacobi(integrate(model, s, T, cfg).samples.back()));
    }
    for (int r = 0; r < 8; ++r) {
      const double sr = r < 4 ? R : P;
      M(r, c) = (ends[0][r] - ends[1][r]) / (2.0 * h * sc) * (sc / sr);
    }
  }
  Eigen::EigenSolver<Eigen::Matrix<double, 8, 8>> es(M, false);
  std::vector<double> mod;
  for (int k = 0; k < 8; ++k) mod.push_back(std::abs(es.eigenvalues()(k)));
  std::sort(mod.rbegin(), mod.rend());
  return mod;
}

}  // namespace detail

/// Diagnostics of a closed orbit starting at s0 with strict period T.
inline PeriodicityReport describe_periodic_orbit(const PotentialModel& model, const ThreeBodyState& s0, double T,
                                                 const PeriodOptions& opt = {}) {
  PeriodicityReport rep;
  rep.state0 = s0.relative_frame();
  rep.period_T = T;
  rep.phase_scale = detail::phase_scale(rep.state0);
  rep.closure_residual = detail::closure_map(model, rep.state0, T, opt.integrator).norm();
  const Trajectory tr = integrate(model, rep.state0, 4.0 * T / 3.0, opt.integrator);
  const ShapeSeries ser = shape_series(tr, tr.t_begin(), tr.t_begin() + T, 8192);
  rep.phi_advance = ser.phi_unwrapped.back() - ser.phi_unwrapped.front();
  rep.n_phi_cycles = static_cast<int>(std::lround(rep.phi_advance / kTwoPi));
  rep.phi_min = *std::min_element(ser.phi_unwrapped.begin(), ser.phi_unwrapped.end());
  rep.phi_max = *std::max_element(ser.phi_unwrapped.begin(), ser.phi_unwrapped.end());

  rep.symmetries = find_symmetries(tr, T, opt.symmetry_tol);
  rep.symmetry_class = classify_symmetry(rep.symmetries);
  rep.shape_period_T = T;
  rep.quotient_period_T = T;
  rep.quotient_element = "identity";
  for (const auto& s : rep.symmetries) {
    if (s.shift <= 0.0 || s.element.time_reversal) continue;
    const bool rigid = s.element.perm == PermutationElement::identity();
    if (rigid && s.shift < rep.shape_period_T) rep.shape_period_T = s.shift;
    if (s.shift < rep.quotient_period_T) {
      rep.quotient_period_T = s.shift;
      rep.quotient_element = s.element.name();
    }
  }
  const std::size_t i_shape = static_cast<std::size_t>(std::lround(8192.0 * rep.shape_period_T / T));
  rep.shape_phi_advance = ser.phi_unwrapped[i_shape] - ser.phi_unwrapped.front();

  const auto ch = choreography_test(tr, T);
  rep.choreography = ch.choreography;
  rep.choreography_deviation = ch.max_deviation;
  if (opt.floquet) {
    double Rbar = 0.0;
    for (double v : ser.R) Rbar += v;
    Rbar /= static_cast<double>(ser.size());
    rep.floquet_moduli = detail::floquet_moduli(model, rep.state0, T, opt.integrator,
                                                1e-7 * Rbar / shape_point(rep.state0).R);
  }
  return rep;
}

/// Gauss-Newton shooting on Phi_T(s(p)) - s(p) over (p, T). Steps are the
/// minimum-norm least-squares solutions of the linearised closure equations
/// (truncated SVD), with backtracking on the residual norm.
inline PeriodicityReport detect_and_refine_period(const PotentialModel& model, const StateFamily& family,
                                                  double T_guess, const PeriodOptions& opt = {}) {
  if (!(T_guess > 0.0)) throw DomainError("detect_and_refine_period: T_guess must be positive");
  const std::size_t np = family.p0.size();
  Eigen::VectorXd z(static_cast<Eigen::Index>(np + 1));
  for (std::size_t k = 0; k < np; ++k) z(static_cast<Eigen::Index>(k)) = family.p0[k];
  z(static_cast<Eigen::Index>(np)) = T_guess;

  auto unpack_z = [&](const Eigen::VectorXd& v) {
    std::vector<double> p(np);
    for (std::size_t k = 0; k < np; ++k) p[k] = v(static_cast<Eigen::Index>(k));
    return p;
  };
  auto residual = [&](const Eigen::VectorXd& v, PhaseVector* rate = nullptr) -> std::optional<Eigen::VectorXd> {
    const double T = v(static_cast<Eigen::Index>(np));
    if (!(T > 0.0) || T > 10.0 * T_guess) return std::nullopt;
    try {
      return detail::closure_map(model, family.build(unpack_z(v)), T, opt.integrator, rate);
    } catch (const Error&) {
      return std::nullopt;
    }
  };

  const double scale = detail::phase_scale(family.build(family.p0));
  PhaseVector rate{};
  auto F0 = residual(z, &rate);
  if (!F0) throw DivergenceError("detect_and_refine_period: initial guess cannot be integrated");
  Eigen::VectorXd F = *F0;
  double res = F.norm();
  const double res_initial = res;
  int it = 0;
  bool converged = res < opt.closure_tol * scale;
  for (; it < opt.max_iterations && !converged; ++it) {
    const Eigen::Index n = static_cast<Eigen::Index>(np + 1);
    Eigen::MatrixXd J(12, n);
    for (Eigen::Index c = 0; c + 1 < n; ++c) {
      Eigen::VectorXd zp = z;
      const double h = opt.fd_step * std::max(std::abs(z(c)), 1e-3 * scale);
      zp(c) += h;
      auto Fp = residual(zp);
      if (!Fp) throw DivergenceError("detect_and_refine_period: Jacobian column cannot be integrated");
      J.col(c) = (*Fp - F) / h;
    }
    for (int k = 0; k < 12; ++k) J(k, n - 1) = rate[k];

    Eigen::BDCSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-7);
    const Eigen::VectorXd dz = -svd.solve(F);

    bool improved = false;
    for (double step = 1.0; step > 1e-4; step *= 0.5) {
      const Eigen::VectorXd zt = z + step * dz;
      PhaseVector rt{};
      auto Ft = residual(zt, &rt);
      if (Ft && Ft->norm() < res) {
        z = zt;
        F = *Ft;
        rate = rt;
        res = F.norm();
        improved = true;
        break;
      }
    }
    if (!improved) break;
    if (res > 1e3 * res_initial) throw DivergenceError("detect_and_refine_period: residual diverged");
    converged = res < opt.closure_tol * scale;
  }

  const double T = z(static_cast<Eigen::Index>(np));
  PeriodicityReport rep = describe_periodic_orbit(model, family.build(unpack_z(z)), T, opt);
  rep.converged = converged;
  rep.iterations = it;
  rep.params = unpack_z(z);
  rep.closure_residual = res;
  if (!converged)
    throw NoConvergenceError("detect_and_refine_period: no convergence, closure residual " + std::to_string(res),
                             rep);
  return rep;
}

/// Refinement over the full relative-frame state.
inline PeriodicityReport detect_and_refine_period(const PotentialModel& model, const ThreeBodyState& state0,
                                                  double T_guess, const PeriodOptions& opt = {}) {
  return detect_and_refine_period(model, full_state_family(state0), T_guess, opt);
}

// ---------------------------------------------------------------------------
// Hyper-radial dynamics and kinetic energy

/// V_eff(R) = 2 G3bar^2 / (m R^2) + V(R, r, phi).
inline std::vector<double> effective_radial_potential(const PotentialModel& model, double G3bar, double m,
                                                      const std::vector<double>& R_grid, double r, double phi) {
  std::vector<double> out;
  for (double R : R_grid) out.push_back(2.0 * G3bar * G3bar / (m * R * R) + potential_at_shape(model, R, r, phi));
  return out;
}

/// Same with V averaged over phi at fixed r (n_phi samples).
inline std::vector<double> effective_radial_potential_phi_averaged(const PotentialModel& model, double G3bar,
                                                                   double m, const std::vector<double>& R_grid,
                                                                   double r, int n_phi = 96) {
  std::vector<double> out;
  for (double R : R_grid) {
    double v = 0.0;
    for (int k = 0; k < n_phi; ++k) v += potential_at_shape(model, R, r, kTwoPi * k / n_phi);
    out.push_back(2.0 * G3bar * G3bar / (m * R * R) + v / n_phi);
  }
  return out;
}

/// Location of the smallest interior grid minimum, refined by a parabola
/// through its neighbours; nullopt when the minimum sits on the grid edge.
inline std::optional<double> interior_minimum(const std::vector<double>& x, const std::vector<double>& y) {
  if (y.size() < 3) return std::nullopt;
  const auto it = std::min_element(y.begin(), y.end());
  const std::size_t i = static_cast<std::size_t>(it - y.begin());
  if (i == 0 || i + 1 == y.size()) return std::nullopt;
  const double x0 = x[i - 1], x1 = x[i], x2 = x[i + 1];
  const double y0 = y[i - 1], y1 = y[i], y2 = y[i + 1];
  const double num = (x1 - x0) * (x1 - x0) * (y1 - y2) - (x1 - x2) * (x1 - x2) * (y1 - y0);
  const double den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
  return den != 0.0 ? x1 - 0.5 * num / den : x1;
}

/// Rates of the shape coordinates from positions and velocities.
struct ShapeRates {
  double R_dot = 0.0;
  double alpha_dot = 0.0;
  double phi_dot = 0.0;
};

inline ShapeRates shape_rates(const ThreeBodyState& s) {
  const JacobiState j = to_jacobi(s);
  const Vec2 drho = j.p_rho / s.m;
  const Vec2 dlam = j.p_lambda / s.m;
  const double R2 = norm2(j.rho) + norm2(j.lambda);
  const double dR2 = 2.0 * (dot(j.rho, drho) + dot(j.lambda, dlam));
  const double P = dot(j.rho, j.lambda);
  const double D = norm2(j.lambda) - norm2(j.rho);
  const double C = cross(j.rho, j.lambda);
  const double dP = dot(drho, j.lambda) + dot(j.rho, dlam);
  const double dD = 2.0 * (dot(j.lambda, dlam) - dot(j.rho, drho));
  const double dC = cross(drho, j.lambda) + cross(j.rho, dlam);
  const double xp = 2.0 * P / R2, zp = D / R2, yp = 2.0 * C / R2;
  const double dxp = 2.0 * dP / R2 - 2.0 * P * dR2 / (R2 * R2);
  const double dzp = dD / R2 - D * dR2 / (R2 * R2);
  const double dyp = 2.0 * dC / R2 - 2.0 * C * dR2 / (R2 * R2);
  const double r = std::hypot(xp, zp);
  ShapeRates out;
  out.R_dot = 0.5 * dR2 / std::sqrt(R2);
  if (r > 0.0) {
    const double dr = (xp * dxp + zp * dzp) / r;
    // alpha = atan2(r, |y'|), and r^2 + y'^2 = 1.
    const double sy = yp >= 0.0 ? 1.0 : -1.0;
    out.alpha_dot = std::abs(yp) * dr - r * sy * dyp;
    out.phi_dot = (zp * dxp - xp * dzp) / (r * r);
  }
  return out;
}

/// Relative difference between the Cartesian kinetic energy and
/// (m/2)[Rdot^2 + (R/2)^2 (alphadot^2 + phidot^2 sin^2 alpha)], for L = 0.
inline double kinetic_identity_check(const ThreeBodyState& state) {
  const ThreeBodyState s = state.relative_frame();
  const ShapePoint p = shape_point(s);
  const ShapeRates d = shape_rates(s);
  const double sa = p.r;
  const double hyper = 0.5 * s.m *
                       (d.R_dot * d.R_dot +
                        0.25 * p.R * p.R * (d.alpha_dot * d.alpha_dot + d.phi_dot * d.phi_dot * sa * sa));
  const double kin = s.kinetic_energy();
  return std::abs(kin - hyper) / std::max(kin, 1e-300);
}

}  // namespace braid3
