#pragma once

// Potential maps on the shape disc: grids, isocontours and their roundness.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "braid3/kinematics.hpp"
#include "braid3/potentials.hpp"

namespace braid3 {

struct DiscSample {
  double xp = 0.0;
  double zp = 0.0;
  double V = 0.0;
};

/// V at hyper-radius R on an n x n grid over [-1, 1]^2, keeping the points
/// with x'^2 + z'^2 <= r_max^2. Upper hemisphere (y' >= 0). Points whose
/// evaluation is singular are skipped.
inline std::vector<DiscSample> equipotential_grid(const PotentialModel& model, double R, int n,
                                                  double r_max = 0.999) {
  if (n < 2) throw DomainError("equipotential_grid: n must be at least 2");
  std::vector<DiscSample> out;
  for (int iz = 0; iz < n; ++iz)
    for (int ix = 0; ix < n; ++ix) {
      const double xp = -1.0 + 2.0 * ix / (n - 1);
      const double zp = -1.0 + 2.0 * iz / (n - 1);
      const double r = std::hypot(xp, zp);
      if (r > r_max) continue;
      try {
        out.push_back({xp, zp, potential_at_shape(model, R, r, std::atan2(xp, zp))});
      } catch (const SingularityError&) {
      }
    }
  return out;
}

/// Points of the level set V = level found by bisection in r along n rays
/// phi_k = 2 pi k / n, for rays on which V(r) - level changes sign in
/// [0, r_max]. Exact for star-shaped contours around the disc centre.
inline std::vector<DiscPoint> isocontour_on_rays(const PotentialModel& model, double R, double level, int n,
                                                 double r_max = 0.999) {
  std::vector<DiscPoint> out;
  for (int k = 0; k < n; ++k) {
    const double phi = kTwoPi * k / n;
    auto f = [&](double r) { return potential_at_shape(model, R, r, phi) - level; };
    double lo = 0.0;
    double hi = r_max;
    double flo = f(lo);
    if ((flo < 0.0) == (f(hi) < 0.0)) continue;
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = f(mid);
      if ((fm < 0.0) == (flo < 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    const double r = 0.5 * (lo + hi);
    out.push_back({r * std::sin(phi), r * std::cos(phi)});
  }
  return out;
}

/// (max r - min r) / mean r of a point set; 0 for a circle about the centre.
inline double circularity_deviation(const std::vector<DiscPoint>& pts) {
  if (pts.empty()) return 0.0;
  double lo = 1e300, hi = 0.0, sum = 0.0;
  for (const auto& p : pts) {
    const double r = std::hypot(p.xp, p.zp);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    sum += r;
  }
  return (hi - lo) / (sum / static_cast<double>(pts.size()));
}

/// Line segment of a marching-squares contour.
struct ContourSegment {
  DiscPoint a;
  DiscPoint b;
};

/// Marching squares over a row-major n x n grid of values on [-1, 1]^2;
/// cells with a missing (non-finite) corner are skipped.
inline std::vector<ContourSegment> marching_squares(const std::vector<double>& grid, int n, double level) {
  std::vector<ContourSegment> segs;
  auto at = [&](int ix, int iz) { return grid[static_cast<std::size_t>(iz) * n + ix]; };
  auto coord = [&](int i) { return -1.0 + 2.0 * i / (n - 1); };
  for (int iz = 0; iz + 1 < n; ++iz)
    for (int ix = 0; ix + 1 < n; ++ix) {
      const double v[4] = {at(ix, iz), at(ix + 1, iz), at(ix + 1, iz + 1), at(ix, iz + 1)};
      if (!std::all_of(v, v + 4, [](double x) { return std::isfinite(x); })) continue;
      const DiscPoint c[4] = {{coord(ix), coord(iz)},
                              {coord(ix + 1), coord(iz)},
                              {coord(ix + 1), coord(iz + 1)},
                              {coord(ix), coord(iz + 1)}};
      std::vector<DiscPoint> cut;
      for (int e = 0; e < 4; ++e) {
        const int f = (e + 1) % 4;
        const double a = v[e] - level;
        const double b = v[f] - level;
        if ((a < 0.0) != (b < 0.0)) {
          const double s = a / (a - b);
          cut.push_back({c[e].xp + s * (c[f].xp - c[e].xp), c[e].zp + s * (c[f].zp - c[e].zp)});
        }
      }
      if (cut.size() == 2) segs.push_back({cut[0], cut[1]});
      if (cut.size() == 4) {
        segs.push_back({cut[0], cut[1]});
        segs.push_back({cut[2], cut[3]});
      }
    }
  return segs;
}

}  // namespace braid3
