#pragma once

// Equations of motion, adaptive integration with dense output, and event
// location (syzygies, phi cycles, Y-string region changes, phi sections).

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "braid3/dop853.hpp"
#include "braid3/kinematics.hpp"
#include "braid3/potentials.hpp"

namespace braid3 {

using PhaseVector = std::array<double, 12>;

/// Layout: x0x x0y x1x x1y x2x x2y v0x v0y v1x v1y v2x v2y.
inline PhaseVector pack(const ThreeBodyState& s) {
  PhaseVector y{};
  for (int i = 0; i < 3; ++i) {
    y[2 * i] = s.x[i].x;
    y[2 * i + 1] = s.x[i].y;
    y[6 + 2 * i] = s.v[i].x;
    y[6 + 2 * i + 1] = s.v[i].y;
  }
  return y;
}

inline ThreeBodyState unpack(const PhaseVector& y, double t, double m) {
  ThreeBodyState s;
  s.t = t;
  s.m = m;
  for (int i = 0; i < 3; ++i) {
    s.x[i] = {y[2 * i], y[2 * i + 1]};
    s.v[i] = {y[6 + 2 * i], y[6 + 2 * i + 1]};
  }
  return s;
}

struct StateDerivative {
  std::array<Vec2, 3> dx{};  // velocities
  std::array<Vec2, 3> dv{};  // accelerations
};

inline StateDerivative derivative(const PotentialModel& model, const ThreeBodyState& s) {
  const auto e = evaluate(model, s.x);
  StateDerivative d;
  for (int i = 0; i < 3; ++i) {
    d.dx[i] = s.v[i];
    d.dv[i] = e.forces[i] / s.m;
  }
  return d;
}

struct IntegratorConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  double min_pair_separation = 0.0;  // 0: 1e-6 times the initial R
  double max_time = 1e6;

  void validate() const {
    if (!(rel_tol > 0.0 && rel_tol <= 1e-2) || !(abs_tol > 0.0 && abs_tol <= 1e-2))
      throw DomainError("IntegratorConfig: tolerances must lie in (0, 1e-2]");
    if (min_pair_separation < 0.0) throw DomainError("IntegratorConfig: min_pair_separation must be positive");
    if (!(max_step > 0.0)) throw DomainError("IntegratorConfig: max_step must be positive");
  }
};

enum class EventKind { syzygy, phi_cycle, y_region_change, section_hit };

inline std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::syzygy: return "syzygy";
    case EventKind::phi_cycle: return "phi_cycle";
    case EventKind::y_region_change: return "y_region_change";
    case EventKind::section_hit: return "section_hit";
  }
  return "?";
}

/// What to detect. For phi-based kinds the crossing levels are
/// phi0 + k * spacing of the unwrapped phi.
struct EventSpec {
  EventKind kind = EventKind::syzygy;
  double phi0 = 0.0;
  double spacing = kTwoPi;
  int direction = 0;  // 0: both, +1 rising only, -1 falling only

  static EventSpec syzygy() { return {EventKind::syzygy}; }
  static EventSpec phi_cycle() { return {EventKind::phi_cycle, 0.0, kTwoPi}; }
  static EventSpec y_region_change() { return {EventKind::y_region_change}; }
  /// phi = phi0 (mod 2pi/3)
  static EventSpec phi_section(double phi0, int direction = 0) {
    return {EventKind::section_hit, phi0, kTwoPi / 3.0, direction};
  }
  /// y' = 0
  static EventSpec area_section(int direction = 0) { return {EventKind::syzygy, 0.0, 0.0, direction}; }
};

struct Event {
  EventKind kind = EventKind::syzygy;
  double t = 0.0;
  int direction = 0;       // sign of the event function's slope
  double level = 0.0;      // crossed phi level for phi-based kinds
  double residual = 0.0;   // |g(t)| at the located root
  ThreeBodyState state;
};

struct Trajectory {
  PotentialModel model;
  IntegratorConfig config;
  double m = 1.0;
  std::vector<ThreeBodyState> samples;  // accepted step endpoints, t strictly increasing
  std::vector<dop853::DenseSegment<12>> segments;
  std::vector<Event> events;
  double energy0 = 0.0;

  double t_begin() const { return samples.front().t; }
  double t_end() const { return samples.back().t; }

  /// State at any t in [t_begin, t_end] from the continuous extension.
  ThreeBodyState state_at(double t) const {
    if (segments.empty()) return samples.front();
    t = std::clamp(t, t_begin(), t_end());
    auto it = std::lower_bound(segments.begin(), segments.end(), t,
                               [](const auto& seg, double tt) { return seg.t1 < tt; });
    if (it == segments.end()) it = std::prev(segments.end());
    if (t == it->t1) return unpack(it->y1, t, m);
    return unpack((*it)(t), t, m);
  }

  /// n + 1 equally spaced states covering [t_begin, t_end].
  std::vector<ThreeBodyState> resample(std::size_t n) const {
    std::vector<ThreeBodyState> out;
    out.reserve(n + 1);
    const double a = t_begin();
    const double b = t_end();
    for (std::size_t k = 0; k <= n; ++k) {
      const double t = k == n ? b : a + (b - a) * static_cast<double>(k) / static_cast<double>(n);
      out.push_back(state_at(t));
    }
    return out;
  }

  double max_energy_drift() const {
    double worst = 0.0;
    for (const auto& s : samples)
      worst = std::max(worst, std::abs(total_energy(model, s) - energy0) / std::max(std::abs(energy0), 1e-300));
    return worst;
  }
};

namespace detail {

// Scans dense segments for sign changes of one event function and refines
// every root with the Illinois variant of regula falsi.
class EventScanner {
 public:
  EventScanner(EventSpec spec, double m) : spec_(spec), m_(m) {}

  void scan(const dop853::DenseSegment<12>& seg, std::vector<Event>& out) {
    constexpr int kSub = 8;
    if (!started_) {
      start(seg.t0, seg.y0);
    }
    for (int q = 1; q <= kSub; ++q) {
      const double t = q == kSub ? seg.t1 : seg.t0 + (seg.t1 - seg.t0) * q / kSub;
      const PhaseVector y = q == kSub ? seg.y1 : seg(t);
      advance(seg, t, y, out);
    }
  }

 private:
  struct Sample {
    double t;
    double phi_wrapped;
    double phi_unwrapped;
    double value;
  };

  double raw(const PhaseVector& y) const {
    const ThreeBodyState s = unpack(y, 0.0, m_);
    switch (spec_.kind) {
      case EventKind::syzygy: return shape_point(s).yp;
      case EventKind::y_region_change: return largest_interior_angle(s.x) - 2.0 * kPi / 3.0;
      default: return 0.0;
    }
  }

  bool phi_based() const { return spec_.kind == EventKind::phi_cycle || spec_.kind == EventKind::section_hit; }

  // Unwrapped phi continued from `from`.
  double continue_phi(const Sample& from, const PhaseVector& y, double& wrapped) const {
    const ShapePoint p = shape_point(unpack(y, 0.0, m_));
    if (!p.phi_defined) {
      wrapped = from.phi_wrapped;
      return from.phi_unwrapped;
    }
    wrapped = p.phi;
    return from.phi_unwrapped + wrap_angle(p.phi - from.phi_wrapped);
  }

  void start(double t, const PhaseVector& y) {
    started_ = true;
    const ShapePoint p = shape_point(unpack(y, t, m_));
    last_ = {t, p.phi, p.phi, phi_based() ? 0.0 : raw(y)};
  }

  double level_index(double phi_u) const { return std::floor((phi_u - spec_.phi0) / spec_.spacing); }

  void advance(const dop853::DenseSegment<12>& seg, double t, const PhaseVector& y, std::vector<Event>& out) {
    Sample cur{t, 0.0, 0.0, 0.0};
    if (phi_based()) {
      cur.phi_unwrapped = continue_phi(last_, y, cur.phi_wrapped);
      const double i0 = level_index(last_.phi_unwrapped);
      const double i1 = level_index(cur.phi_unwrapped);
      if (i1 != i0) {
        const int dir = i1 > i0 ? 1 : -1;
        // One crossing per sub-interval; sub-sampling keeps |dphi| small.
        const double level = spec_.phi0 + spec_.spacing * (dir > 0 ? i1 : i0);
        const Sample anchor = last_;
        auto g = [&](double tt) {
          double w = 0.0;
          return continue_phi(anchor, seg(tt), w) - level;
        };
        emit(seg, last_.t, t, g, dir, level, out);
      }
    } else {
      const ShapePoint p = shape_point(unpack(y, t, m_));
      cur.phi_wrapped = p.phi;
      cur.value = raw(y);
      const double a = last_.value;
      const double b = cur.value;
      if ((a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0)) {
        auto g = [&](double tt) { return raw(seg(tt)); };
        emit(seg, last_.t, t, g, b > a ? 1 : -1, 0.0, out);
      }
    }
    last_ = cur;
  }

  template <class G>
  void emit(const dop853::DenseSegment<12>& seg, double ta, double tb, G&& g, int dir, double level,
            std::vector<Event>& out) {
    if (spec_.direction != 0 && spec_.direction != dir) return;
    double a = ta;
    double b = tb;
    double fa = g(a);
    double fb = g(b);
    double t = b;
    double ft = fb;
    if (fa == 0.0) {
      // Root exactly at the left end: it belongs to the previous interval.
      return;
    }
    int side = 0;
    for (int it = 0; it < 200; ++it) {
      if (fb == 0.0) {
        t = b;
        ft = 0.0;
        break;
      }
      t = (a * fb - b * fa) / (fb - fa);
      if (!(t > a && t < b)) t = 0.5 * (a + b);
      ft = g(t);
      if ((ft > 0.0) == (fa > 0.0)) {
        a = t;
        fa = ft;
        if (side == -1) fb *= 0.5;
        side = -1;
      } else {
        b = t;
        fb = ft;
        if (side == 1) fa *= 0.5;
        side = 1;
      }
      if (b - a <= 1e-13 * std::max(1.0, std::abs(t)) || ft == 0.0) break;
    }
    Event e;
    e.kind = spec_.kind;
    e.t = t;
    e.direction = dir;
    e.level = level;
    e.residual = std::abs(ft);
    e.state = unpack(seg(t), t, m_);
    out.push_back(e);
  }

  EventSpec spec_;
  double m_;
  bool started_ = false;
  Sample last_{};
};

inline double min_pair_distance(const ThreeBodyState& s) {
  return std::min({norm(s.x[0] - s.x[1]), norm(s.x[0] - s.x[2]), norm(s.x[1] - s.x[2])});
}

}  // namespace detail

/// Integrates the relative motion from state0 (reduced to the relative frame)
/// over [state0.t, state0.t + duration].
inline Trajectory integrate(const PotentialModel& model, const ThreeBodyState& state0, double duration,
                            const IntegratorConfig& config = {}, const std::vector<EventSpec>& events = {}) {
  config.validate();
  if (!(duration > 0.0)) throw DomainError("integrate: duration must be positive");
  if (duration > config.max_time)
    throw IntegrationError(IntegrationError::Kind::max_time_exceeded, state0.t,
                           "integrate: requested time exceeds max_time");
  Trajectory tr;
  tr.model = model;
  tr.config = config;
  tr.m = state0.m;
  const ThreeBodyState s0 = state0.relative_frame();
  const double R0 = shape_point(s0).R;
  const double min_sep = config.min_pair_separation > 0.0 ? config.min_pair_separation : 1e-6 * R0;
  if (detail::min_pair_distance(s0) < min_sep)
    throw IntegrationError(IntegrationError::Kind::collision_approach, s0.t, "integrate: initial state is a collision");
  tr.energy0 = total_energy(model, s0);
  tr.samples.push_back(s0);

  const double m = s0.m;
  auto rhs = [&](double, const PhaseVector& y) {
    const ThreeBodyState s = unpack(y, 0.0, m);
    const auto e = evaluate(model, s.x);
    PhaseVector d{};
    for (int i = 0; i < 3; ++i) {
      d[2 * i] = y[6 + 2 * i];
      d[2 * i + 1] = y[6 + 2 * i + 1];
      d[6 + 2 * i] = e.forces[i].x / m;
      d[6 + 2 * i + 1] = e.forces[i].y / m;
    }
    return d;
  };

  std::vector<detail::EventScanner> scanners;
  for (const auto& spec : events) scanners.emplace_back(spec, m);

  dop853::Options opt;
  opt.rel_tol = config.rel_tol;
  opt.abs_tol = config.abs_tol;
  opt.max_step = config.max_step;
  try {
    dop853::integrate<12>(rhs, s0.t, pack(s0), s0.t + duration, opt, [&](const dop853::DenseSegment<12>& seg) {
      ThreeBodyState s = unpack(seg.y1, seg.t1, m);
      if (detail::min_pair_distance(s) < min_sep)
        throw IntegrationError(IntegrationError::Kind::collision_approach, seg.t1,
                               "integrate: bodies approached closer than min_pair_separation");
      tr.segments.push_back(seg);
      tr.samples.push_back(s);
      for (auto& sc : scanners) sc.scan(seg, tr.events);
      return true;
    });
  } catch (const SingularityError& e) {
    throw IntegrationError(IntegrationError::Kind::collision_approach, tr.samples.back().t,
                           std::string("integrate: ") + e.what());
  }
  std::stable_sort(tr.events.begin(), tr.events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
  return tr;
}

/// Crossings of a section along an integrated trajectory. A crossing exactly
/// at the first sample is not reported.
inline std::vector<Event> poincare_section(const Trajectory& tr, const EventSpec& section) {
  std::vector<Event> out;
  detail::EventScanner sc(section, tr.m);
  for (const auto& seg : tr.segments) sc.scan(seg, out);
  return out;
}

}  // namespace braid3
