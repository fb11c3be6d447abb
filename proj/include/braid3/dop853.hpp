#pragma once

// Dormand-Prince 8(5,3) embedded Runge-Kutta pair with the 7th-order
// continuous extension (Hairer, Norsett & Wanner, "Solving Ordinary
// Differential Equations I", II.10). Step control follows the usual
// combined 5th/3rd order error estimate.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

#include "braid3/errors.hpp"

namespace braid3 {

class IntegrationError : public Error {
 public:
  enum class Kind { step_underflow, collision_approach, max_time_exceeded, too_many_steps };
  IntegrationError(Kind k, double t, const std::string& what) : Error(what), kind(k), time(t) {}
  Kind kind;
  double time;
};

namespace dop853 {

// clang-format off
inline constexpr std::array<double, 16> kC{0.0, 0.05260015195876773, 0.0789002279381516, 0.1183503419072274, 0.2816496580927726, 0.3333333333333333, 0.25, 0.3076923076923077, 0.6512820512820513, 0.6, 0.8571428571428571, 1.0, 1.0, 0.1, 0.2, 0.7777777777777778};
inline constexpr std::array<std::array<double, 16>, 16> kA{{
    {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.05260015195876773, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.0197250569845379, 0.0591751709536137, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.02958758547680685, 0.0, 0.08876275643042054, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.2413651341592667, 0.0, -0.8845494793282861, 0.924834003261792, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.037037037037037035, 0.0, 0.0, 0.17082860872947386, 0.12546768756682242, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.037109375, 0.0, 0.0, 0.17025221101954405, 0.06021653898045596, -0.017578125, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.03709200011850479, 0.0, 0.0, 0.17038392571223998, 0.10726203044637328, -0.015319437748624402, 0.008273789163814023, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.6241109587160757, 0.0, 0.0, -3.3608926294469414, -0.868219346841726, 27.59209969944671, 20.154067550477894, -43.48988418106996, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.47766253643826434, 0.0, 0.0, -2.4881146199716677, -0.590290826836843, 21.230051448181193, 15.279233632882423, -33.28821096898486, -0.020331201708508627, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {-0.9371424300859873, 0.0, 0.0, 5.186372428844064, 1.0914373489967295, -8.149787010746927, -18.52006565999696, 22.739487099350505, 2.4936055526796523, -3.0467644718982196, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {2.273310147516538, 0.0, 0.0, -10.53449546673725, -2.0008720582248625, -17.9589318631188, 27.94888452941996, -2.8589982771350235, -8.87285693353063, 12.360567175794303, 0.6433927460157636, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.054293734116568765, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, 0.3111643669578199, -0.1521609496625161, 0.20136540080403034, 0.04471061572777259, 0.0, 0.0, 0.0, 0.0},
    {0.056167502283047954, 0.0, 0.0, 0.0, 0.0, 0.0, 0.25350021021662483, -0.2462390374708025, -0.12419142326381637, 0.15329179827876568, 0.00820105229563469, 0.007567897660545699, -0.008298, 0.0, 0.0, 0.0},
    {0.03183464816350214, 0.0, 0.0, 0.0, 0.0, 0.028300909672366776, 0.053541988307438566, -0.05492374857139099, 0.0, 0.0, -0.00010834732869724932, 0.0003825710908356584, -0.00034046500868740456, 0.1413124436746325, 0.0, 0.0},
    {-0.42889630158379194, 0.0, 0.0, 0.0, 0.0, -4.697621415361164, 7.683421196062599, 4.06898981839711, 0.3567271874552811, 0.0, 0.0, 0.0, -0.0013990241651590145, 2.9475147891527724, -9.15095847217987, 0.0},
}};
inline constexpr std::array<double, 13> kE3{-0.18980075407240762, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, -0.4226823213237919, -0.1521609496625161, 0.20136540080403034, 0.02265179219836082, 0.0};
inline constexpr std::array<double, 13> kE5{0.01312004499419488, 0.0, 0.0, 0.0, 0.0, -1.2251564463762044, -0.4957589496572502, 1.6643771824549864, -0.35032884874997366, 0.3341791187130175, 0.08192320648511571, -0.022355307863886294, 0.0};
inline constexpr std::array<std::array<double, 16>, 4> kD{{
    {-8.428938276109013, 0.0, 0.0, 0.0, 0.0, 0.5667149535193777, -3.0689499459498917, 2.38466765651207, 2.117034582445028, -0.871391583777973, 2.2404374302607883, 0.6315787787694688, -0.08899033645133331, 18.148505520854727, -9.194632392478356, -4.436036387594894},
    {10.427508642579134, 0.0, 0.0, 0.0, 0.0, 242.28349177525817, 165.20045171727028, -374.5467547226902, -22.113666853125306, 7.733432668472264, -30.674084731089398, -9.332130526430229, 15.697238121770845, -31.139403219565178, -9.35292435884448, 35.81684148639408},
    {19.985053242002433, 0.0, 0.0, 0.0, 0.0, -387.0373087493518, -189.17813819516758, 527.8081592054236, -11.57390253995963, 6.8812326946963, -1.0006050966910838, 0.7777137798053443, -2.778205752353508, -60.19669523126412, 84.32040550667716, 11.99229113618279},
    {-25.69393346270375, 0.0, 0.0, 0.0, 0.0, -154.18974869023643, -231.5293791760455, 357.6391179106141, 93.40532418362432, -37.45832313645163, 104.0996495089623, 29.8402934266605, -43.53345659001114, 96.32455395918828, -39.17726167561544, -149.72683625798564},
}};
// clang-format on

inline constexpr int kStages = 12;

struct Options {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  double first_step = 0.0;  // 0: automatic
  std::size_t max_steps = 10'000'000;
};

/// One accepted step with its continuous extension.
template <std::size_t N>
struct DenseSegment {
  using State = std::array<double, N>;
  double t0 = 0.0;
  double t1 = 0.0;
  State y0{};
  State y1{};
  std::array<State, 7> F{};

  State operator()(double t) const {
    const double h = t1 - t0;
    const double s = (t - t0) / h;
    State y{};
    for (std::size_t i = 0; i < 7; ++i) {
      const State& f = F[6 - i];
      const double m = (i % 2 == 0) ? s : 1.0 - s;
      for (std::size_t k = 0; k < N; ++k) y[k] = (y[k] + f[k]) * m;
    }
    for (std::size_t k = 0; k < N; ++k) y[k] += y0[k];
    return y;
  }
};

namespace detail {

template <std::size_t N>
double rms_scaled(const std::array<double, N>& v, const std::array<double, N>& scale) {
  double s = 0.0;
  for (std::size_t k = 0; k < N; ++k) s += (v[k] / scale[k]) * (v[k] / scale[k]);
  return std::sqrt(s / static_cast<double>(N));
}

}  // namespace detail

/// Integrates dy/dt = rhs(t, y) from t0 to t_end (t_end > t0).
///
/// `on_step(segment)` is called for every accepted step and returns false to
/// stop early. Returns the time reached.
template <std::size_t N, class Rhs, class OnStep>
double integrate(Rhs&& rhs, double t0, std::array<double, N> y, double t_end, const Options& opt,
                 OnStep&& on_step) {
  using State = std::array<double, N>;
  if (!(t_end > t0)) throw std::invalid_argument("dop853::integrate: t_end must exceed t0");
  if (!(opt.rel_tol > 0.0) || !(opt.abs_tol > 0.0))
    throw std::invalid_argument("dop853::integrate: tolerances must be positive");

  constexpr double kSafety = 0.9;
  constexpr double kMinFactor = 0.2;
  constexpr double kMaxFactor = 10.0;
  constexpr double kErrExponent = -1.0 / 8.0;

  double t = t0;
  State f = rhs(t, y);
  std::array<State, 16> K{};

  auto scale_of = [&](const State& a, const State& b) {
    State sc{};
    for (std::size_t k = 0; k < N; ++k)
      sc[k] = opt.abs_tol + std::max(std::abs(a[k]), std::abs(b[k])) * opt.rel_tol;
    return sc;
  };

  // Initial step (Hairer's heuristic).
  double h_abs = opt.first_step;
  if (!(h_abs > 0.0)) {
    const State sc = scale_of(y, y);
    const double d0 = detail::rms_scaled(y, sc);
    const double d1 = detail::rms_scaled(f, sc);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, t_end - t0);
    State y1{};
    for (std::size_t k = 0; k < N; ++k) y1[k] = y[k] + h0 * f[k];
    const State f1 = rhs(t + h0, y1);
    State df{};
    for (std::size_t k = 0; k < N; ++k) df[k] = f1[k] - f[k];
    const double d2 = detail::rms_scaled(df, sc) / h0;
    const double h1 = (d1 <= 1e-15 && d2 <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                  : std::pow(0.01 / std::max(d1, d2), 1.0 / 8.0);
    h_abs = std::min(100.0 * h0, h1);
  }
  h_abs = std::min(h_abs, opt.max_step);

  DenseSegment<N> seg;
  for (std::size_t n_steps = 0; t < t_end; ++n_steps) {
    if (n_steps >= opt.max_steps)
      throw IntegrationError(IntegrationError::Kind::too_many_steps, t, "dop853: step limit reached");
    const double min_step = 10.0 * std::abs(std::nextafter(t, t_end) - t);
    h_abs = std::min(h_abs, opt.max_step);
    bool rejected = false;
    double h = 0.0;
    State y_new{};
    State f_new{};
    for (;;) {
      if (h_abs < min_step)
        throw IntegrationError(IntegrationError::Kind::step_underflow, t, "dop853: step size underflow");
      double t_new = t + h_abs;
      if (t_new > t_end) t_new = t_end;
      h = t_new - t;

      K[0] = f;
      for (int s = 1; s < kStages; ++s) {
        State ys = y;
        for (int q = 0; q < s; ++q) {
          const double a = kA[s][q];
          if (a == 0.0) continue;
          for (std::size_t k = 0; k < N; ++k) ys[k] += h * a * K[q][k];
        }
        K[s] = rhs(t + kC[s] * h, ys);
      }
      y_new = y;
      for (int q = 0; q < kStages; ++q) {
        const double b = kA[kStages][q];
        if (b == 0.0) continue;
        for (std::size_t k = 0; k < N; ++k) y_new[k] += h * b * K[q][k];
      }
      f_new = rhs(t + h, y_new);
      K[kStages] = f_new;

      const State sc = scale_of(y, y_new);
      double e5 = 0.0;
      double e3 = 0.0;
      for (std::size_t k = 0; k < N; ++k) {
        double s5 = 0.0;
        double s3 = 0.0;
        for (int q = 0; q <= kStages; ++q) {
          s5 += kE5[q] * K[q][k];
          s3 += kE3[q] * K[q][k];
        }
        s5 /= sc[k];
        s3 /= sc[k];
        e5 += s5 * s5;
        e3 += s3 * s3;
      }
      double err = 0.0;
      if (e5 > 0.0 || e3 > 0.0) err = std::abs(h) * e5 / std::sqrt((e5 + 0.01 * e3) * static_cast<double>(N));
      if (!std::isfinite(err)) err = std::numeric_limits<double>::max();

      if (err < 1.0) {
        double factor = err == 0.0 ? kMaxFactor : std::min(kMaxFactor, kSafety * std::pow(err, kErrExponent));
        if (rejected) factor = std::min(1.0, factor);
        h_abs = h * factor;
        break;
      }
      h_abs = h * std::max(kMinFactor, kSafety * std::pow(err, kErrExponent));
      rejected = true;
    }

    // Continuous extension: three extra stages.
    for (int s = kStages + 1; s < 16; ++s) {
      State ys = y;
      for (int q = 0; q < s; ++q) {
        const double a = kA[s][q];
        if (a == 0.0) continue;
        for (std::size_t k = 0; k < N; ++k) ys[k] += h * a * K[q][k];
      }
      K[s] = rhs(t + kC[s] * h, ys);
    }
    seg.t0 = t;
    seg.t1 = t + h;
    seg.y0 = y;
    seg.y1 = y_new;
    for (std::size_t k = 0; k < N; ++k) {
      const double dy = y_new[k] - y[k];
      seg.F[0][k] = dy;
      seg.F[1][k] = h * f[k] - dy;
      seg.F[2][k] = 2.0 * dy - h * (f_new[k] + f[k]);
      for (int r = 0; r < 4; ++r) {
        double acc = 0.0;
        for (int q = 0; q < 16; ++q) acc += kD[r][q] * K[q][k];
        seg.F[3 + r][k] = h * acc;
      }
    }

    t = seg.t1;
    y = y_new;
    f = f_new;
    if (!on_step(static_cast<const DenseSegment<N>&>(seg))) break;
  }
  return t;
}

}  // namespace dop853
}  // namespace braid3
