// braid3: simulate catalog or custom three-body orbits, analyse them in
// shape-space coordinates and export potential maps on the shape disc.
//
// Exit codes: 0 success, 1 integration or I/O failure, 2 usage error or
// unknown orbit, 3 analysis not applicable to the orbit.

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "braid3/analysis.hpp"
#include "braid3/catalog.hpp"
#include "braid3/contours.hpp"
#include "braid3/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace braid3;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitUnsupported = 3;

struct UsageError : Error {
  using Error::Error;
};

std::string default_out_dir() {
  const char* env = std::getenv("BRAID3_OUT");
  return env && *env ? env : "braid3-out";
}

struct OrbitArgs {
  std::vector<std::string> names;
  std::string spec_file;
  std::optional<double> d, v, theta;
  std::string potential = "newton";
  double coupling = 1.0;
  double period_hint = 0.0;
};

void add_orbit_options(CLI::App* cmd, OrbitArgs& a) {
  cmd->add_option("--orbit", a.names, "catalog orbit name(s), see 'braid3 list'");
  cmd->add_option("--spec", a.spec_file, "JSON orbit spec file (object or array)");
  cmd->add_option("--d", a.d, "custom orbit: outer-to-middle distance");
  cmd->add_option("--v", a.v, "custom orbit: outer speed");
  cmd->add_option("--theta", a.theta, "custom orbit: velocity angle from the +y axis (rad)");
  cmd->add_option("--potential", a.potential, "custom orbit or trajectory input: newton | delta | ystring");
  cmd->add_option("--coupling", a.coupling, "custom orbit or trajectory input: coupling constant");
  cmd->add_option("--period-guess", a.period_hint, "custom orbit: strict period guess for refinement");
}

std::vector<OrbitSpec> resolve_orbits(const OrbitArgs& a) {
  std::vector<OrbitSpec> out;
  for (const auto& n : a.names) out.push_back(find_orbit(n));
  if (!a.spec_file.empty()) {
    const auto more = io::load_orbit_specs(a.spec_file);
    out.insert(out.end(), more.begin(), more.end());
  }
  if (a.d || a.v || a.theta) {
    if (!(a.d && a.v && a.theta)) throw UsageError("custom orbit needs --d, --v and --theta");
    OrbitSpec s;
    s.name = "custom";
    s.potential = PotentialModel(parse_potential_kind(a.potential), a.coupling);
    s.d = *a.d;
    s.v = *a.v;
    s.theta = *a.theta;
    s.period_hint = a.period_hint;
    s.validate();
    out.push_back(s);
  }
  if (out.empty()) throw UsageError("no orbit given (use --orbit, --spec or --d/--v/--theta)");
  return out;
}

std::string command_echo(int argc, char** argv) {
  std::string s;
  for (int k = 0; k < argc; ++k) s += (k ? " " : "") + std::string(argv[k]);
  return s;
}

json config_json(const IntegratorConfig& c) {
  return {{"rel_tol", c.rel_tol}, {"abs_tol", c.abs_tol}};
}

json report_json(const PeriodicityReport& r) {
  json syms = json::array();
  for (const auto& s : r.symmetries)
    syms.push_back({{"element", s.element.name()}, {"shift", s.shift}, {"rotation", s.element.rotation},
                    {"deviation", s.deviation}});
  return {{"converged", r.converged},
          {"iterations", r.iterations},
          {"params", r.params},
          {"period_T", r.period_T},
          {"closure_residual", r.closure_residual},
          {"phase_scale", r.phase_scale},
          {"phi_advance", r.phi_advance},
          {"n_phi_cycles", r.n_phi_cycles},
          {"phi_min", r.phi_min},
          {"phi_max", r.phi_max},
          {"shape_period_T", r.shape_period_T},
          {"shape_phi_advance", r.shape_phi_advance},
          {"quotient_period_T", r.quotient_period_T},
          {"quotient_element", r.quotient_element},
          {"choreography", r.choreography},
          {"choreography_deviation", r.choreography_deviation},
          {"symmetry_class", to_string(r.symmetry_class)},
          {"symmetries", syms},
          {"floquet_moduli", r.floquet_moduli}};
}

// Closed orbit through the spec's family, seeded from its period hint.
PeriodicityReport refine(const OrbitSpec& spec, bool floquet) {
  if (!(spec.period_hint > 0.0))
    throw UsageError("orbit '" + spec.name + "' has no period hint; pass --t-end or --period-guess");
  PeriodOptions opt;
  opt.floquet = floquet;
  return detect_and_refine_period(spec.potential, symmetric_family(spec), spec.period_hint, opt);
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  OrbitArgs orbit;
  std::optional<double> periods;
  std::optional<double> t_end;
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  int samples_per_period = 512;
  bool no_refine = false;
  std::string out;
  int jobs = 1;
};

void simulate_one(const OrbitSpec& spec, const SimulateArgs& a, const fs::path& dir, const std::string& echo) {
  const auto start = std::chrono::steady_clock::now();
  IntegratorConfig cfg;
  cfg.rel_tol = a.rel_tol;
  cfg.abs_tol = a.abs_tol;
  cfg.validate();

  json refined = nullptr;
  ThreeBodyState s0 = spec.initial_state();
  double period = 0.0;
  if (!a.t_end || !a.no_refine) {
    if (spec.period_hint > 0.0) {
      const PeriodicityReport rep = refine(spec, false);
      period = rep.shape_period_T;
      if (!a.no_refine) s0 = rep.state0;
      refined = {{"v", rep.params.at(0)},
                 {"theta", rep.params.at(1)},
                 {"period_T", rep.period_T},
                 {"shape_period_T", rep.shape_period_T},
                 {"closure_residual", rep.closure_residual}};
    } else if (!a.t_end) {
      throw UsageError("orbit '" + spec.name + "' has no known period; pass --t-end");
    }
  }
  const double t_end = a.t_end ? *a.t_end : a.periods.value_or(1.0) * period;
  const double unit = period > 0.0 ? period : 1.0;
  const auto n = static_cast<std::size_t>(std::max(1L, std::lround(a.samples_per_period * t_end / unit)));

  std::vector<EventSpec> ev{EventSpec::syzygy(), EventSpec::phi_cycle()};
  if (spec.potential.kind == PotentialKind::y_string) ev.push_back(EventSpec::y_region_change());
  const Trajectory tr = integrate(spec.potential, s0, t_end, cfg, ev);
  const auto states = tr.resample(n);

  fs::create_directories(dir);
  const std::vector<std::pair<std::string, std::string>> files{
      {"trajectory.csv", io::trajectory_csv(states)},
      {"shape.csv", io::shape_csv(spec.potential, states)},
      {"events.csv", io::events_csv(tr.events)}};
  json outputs = json::array();
  for (const auto& [name, content] : files) {
    io::write_file(dir / name, content);
    outputs.push_back({{"file", name}, {"sha256", io::sha256_hex(content)}, {"bytes", content.size()}});
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const json manifest{{"command", echo},
                      {"subcommand", "simulate"},
                      {"config",
                       {{"integrator", config_json(cfg)},
                        {"samples_per_period", a.samples_per_period},
                        {"periods", a.periods ? json(*a.periods) : json(nullptr)},
                        {"t_end", t_end},
                        {"period_unit", period},
                        {"refined_initial_state", !a.no_refine && period > 0.0}}},
                      {"input", io::orbit_to_json(spec)},
                      {"refined", refined},
                      {"energy_drift", tr.max_energy_drift()},
                      {"outputs", outputs},
                      {"wall_time_s", wall}};
  io::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

int cmd_simulate(const SimulateArgs& a, const std::string& echo) {
  const auto specs = resolve_orbits(a.orbit);
  const fs::path root = a.out.empty() ? default_out_dir() : a.out;
  std::vector<int> status(specs.size(), 0);
  std::mutex err_mu;
  auto run = [&](std::size_t k) {
    const fs::path dir = specs.size() == 1 ? root : root / specs[k].name;
    try {
      simulate_one(specs[k], a, dir, echo);
    } catch (const UsageError& e) {
      std::lock_guard lk(err_mu);
      std::cerr << "error: " << e.what() << '\n';
      status[k] = kExitUsage;
    } catch (const std::exception& e) {
      std::lock_guard lk(err_mu);
      std::cerr << "error: " << specs[k].name << ": " << e.what() << '\n';
      status[k] = kExitFailure;
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(a.jobs, 1)), 1, specs.size());
  std::vector<std::thread> pool;
  std::size_t next = 0;
  std::mutex mu;
  for (std::size_t w = 0; w < jobs; ++w)
    pool.emplace_back([&] {
      for (;;) {
        std::size_t k;
        {
          std::lock_guard lk(mu);
          if (next == specs.size()) return;
          k = next++;
        }
        run(k);
      }
    });
  for (auto& t : pool) t.join();
  return *std::max_element(status.begin(), status.end());
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
  OrbitArgs orbit;
  std::string trajectory;
  std::string report = "period";
  std::string out;
  bool svg = true;
};

std::vector<io::Panel> shape_panels(const ShapeSeries& s) {
  io::Panel top{"hyper-angles", "t", "", {}};
  top.series.push_back({"r", s.t, s.r, "#d62728"});
  top.series.push_back({"alpha", s.t, s.alpha, "#1f77b4", true});
  top.series.push_back({"phi", s.t, s.phi_unwrapped, "#7f7f7f", true});
  io::Panel bottom{"hyper-radius and G3", "t", "", {}};
  bottom.series.push_back({"R", s.t, s.R, "#d62728"});
  bottom.series.push_back({"G3", s.t, s.G3, "#7f7f7f", true});
  return {top, bottom};
}

json lock_json(const ShapeSeries& s) {
  const LockReport l = lock_fit(s);
  return {{"mean_phi_rate", l.mean_phi_rate},
          {"r_bar", l.r_bar},
          {"R_bar", l.R_bar},
          {"amp_r", l.amp_r},
          {"amp_R", l.amp_R},
          {"amp_phi", l.amp_phi},
          {"phase_r", l.phase_r},
          {"phase_R", l.phase_R},
          {"phase_phi", l.phase_phi},
          {"residual_fraction", l.residual_fraction},
          {"k3_dominance_r", k3_dominance(phi_harmonic_power(s, s.r, 8))},
          {"k3_dominance_R", k3_dominance(phi_harmonic_power(s, s.R, 8))}};
}

json g3_series_json(const ShapeSeries& s) {
  const G3Average g = g3_average(s);
  return {{"identity_deviation", g3_identity_deviation(s)},
          {"G3bar", g.time_average},
          {"G3bar_phi_form", g.phi_form},
          {"G3_stddev", g.stddev},
          {"G3_min", *std::min_element(s.G3.begin(), s.G3.end())},
          {"G3_max", *std::max_element(s.G3.begin(), s.G3.end())}};
}

json flat_top_json(const FlatTopReport& f) {
  json segs = json::array();
  for (const auto& s : f.segments)
    segs.push_back({{"t_begin", s.t_begin}, {"t_end", s.t_end}, {"max_abs_g3_rate", s.max_abs_g3_rate}});
  return {{"flat_top", f.flat}, {"worst_ratio", f.worst_ratio}, {"segments", segs}};
}

json syzygy_json(const std::vector<SyzygyEvent>& z) {
  json out = json::array();
  for (const auto& e : z)
    out.push_back({{"t", e.t}, {"phi", e.phi}, {"middle_particle", e.middle_particle}, {"sector", e.sector}});
  return out;
}

// Syzygies of a sampled series: sign changes of y' with r > 0.5, located by
// linear interpolation.
std::vector<SyzygyEvent> syzygies_from_samples(const std::vector<ThreeBodyState>& st) {
  std::vector<SyzygyEvent> out;
  for (std::size_t k = 1; k < st.size(); ++k) {
    const ShapePoint a = shape_point(st[k - 1]);
    const ShapePoint b = shape_point(st[k]);
    if ((a.yp < 0.0) == (b.yp < 0.0) || a.yp == 0.0) continue;
    const double s = a.yp / (a.yp - b.yp);
    ThreeBodyState m = st[k - 1];
    for (int i = 0; i < 3; ++i) {
      m.x[i] = st[k - 1].x[i] + s * (st[k].x[i] - st[k - 1].x[i]);
      m.v[i] = st[k - 1].v[i] + s * (st[k].v[i] - st[k - 1].v[i]);
    }
    m.t = st[k - 1].t + s * (st[k].t - st[k - 1].t);
    const ShapePoint p = shape_point(m);
    if (p.r > 0.5) out.push_back({m.t, p.phi, middle_particle(m.x), phi_sector(p.phi)});
  }
  return out;
}

int cmd_analyze(const AnalyzeArgs& a, const std::string& echo) {
  const fs::path dir = a.out.empty() ? default_out_dir() : a.out;
  json rep{{"command", echo}, {"report", a.report}};
  std::optional<ShapeSeries> plot;

  if (!a.trajectory.empty()) {
    const PotentialModel model(parse_potential_kind(a.orbit.potential), a.orbit.coupling);
    const auto states = io::read_trajectory_csv(a.trajectory);
    const ShapeSeries s = shape_series(states);
    rep["input"] = {{"trajectory", a.trajectory}, {"potential", to_string(model.kind)}, {"coupling", model.coupling}};
    if (a.report == "lock") {
      rep["lock"] = lock_json(s);
    } else if (a.report == "g3") {
      rep["g3"] = g3_series_json(s);
      if (model.kind == PotentialKind::y_string) {
        FlatTopReport f;
        std::optional<FlatTop> cur;
        for (const auto& st : states) {
          f.max_abs_g3 = std::max(f.max_abs_g3, std::abs(hyper_angular_momentum(to_jacobi(st))));
          if (evaluate(model, st.x).region.kind == YRegion::Kind::central_y) {
            if (!cur) cur = FlatTop{st.t, st.t, 0, 0.0};
            cur->t_end = st.t;
            ++cur->samples;
            cur->max_abs_g3_rate = std::max(cur->max_abs_g3_rate, std::abs(g3_rate(model, st)));
          } else if (cur) {
            f.segments.push_back(*cur);
            cur.reset();
          }
        }
        if (cur) f.segments.push_back(*cur);
        for (const auto& g : f.segments) f.worst_ratio = std::max(f.worst_ratio, g.max_abs_g3_rate / f.max_abs_g3);
        f.flat = f.worst_ratio < 1e-8;
        rep["g3"]["flat_tops"] = flat_top_json(f);
      }
    } else if (a.report == "syzygy") {
      rep["syzygies"] = syzygy_json(syzygies_from_samples(states));
    } else {
      throw UsageError("report '" + a.report + "' needs an orbit, not a trajectory file");
    }
    plot = s;
  } else {
    const auto specs = resolve_orbits(a.orbit);
    if (specs.size() != 1) throw UsageError("analyze takes exactly one orbit");
    const OrbitSpec& spec = specs.front();
    rep["input"] = io::orbit_to_json(spec);
    const PeriodicityReport pr = refine(spec, a.report == "stability" || a.report == "period");
    const double T = pr.period_T;
    const IntegratorConfig cfg{1e-12, 1e-13};
    const Trajectory tr = integrate(spec.potential, pr.state0, T, cfg);
    const ShapeSeries s = shape_series(tr, 0.0, T, 4096);
    plot = s;
    if (a.report == "period" || a.report == "stability") {
      rep["period"] = report_json(pr);
    } else if (a.report == "lock") {
      rep["lock"] = lock_json(shape_series(tr, 0.0, pr.shape_period_T, 4096));
    } else if (a.report == "g3") {
      rep["g3"] = g3_series_json(s);
      rep["g3"]["dot_check"] = g3_dot_check(spec.potential, tr, 0.0, T);
      if (spec.potential.kind == PotentialKind::y_string)
        rep["g3"]["flat_tops"] = flat_top_json(flat_top_report(spec.potential, tr, 0.0, T));
    } else if (a.report == "syzygy") {
      rep["syzygies"] = syzygy_json(syzygy_sequence(tr));
    } else {
      throw UsageError("unknown report '" + a.report + "'");
    }
  }

  fs::create_directories(dir);
  io::write_file(dir / ("report_" + a.report + ".json"), rep.dump(2) + "\n");
  if (a.svg && plot) io::write_file(dir / ("report_" + a.report + ".svg"), io::svg_panels(shape_panels(*plot)));
  std::cout << rep.dump(2) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// contours

struct ContourArgs {
  std::string potential = "ystring";
  double coupling = 1.0;
  double R = 1.0;
  int n = 128;
  std::string what = "equipotential";
  double gamma = 2.0 * kPi / 3.0;
  int levels = 24;
  std::string out;
};

int cmd_contours(const ContourArgs& a) {
  if (a.n < 32) throw UsageError("--n must be at least 32");
  const PotentialModel model(parse_potential_kind(a.potential), a.coupling);
  const fs::path dir = a.out.empty() ? default_out_dir() : a.out;
  fs::create_directories(dir);
  std::string csv;
  std::string svg;
  if (a.what == "equipotential") {
    const bool newton = model.kind == PotentialKind::newton;
    std::vector<std::string> header{"xp", "zp", "V"};
    if (newton) header.push_back("log_neg_V");
    io::CsvWriter w(header);
    std::vector<double> grid(static_cast<std::size_t>(a.n) * a.n, std::nan(""));
    const auto pts = equipotential_grid(model, a.R, a.n);
    for (const auto& p : pts) {
      std::vector<double> row{p.xp, p.zp, p.V};
      if (newton) row.push_back(std::log(-p.V));
      w.row(row);
      const int ix = static_cast<int>(std::lround((p.xp + 1.0) * (a.n - 1) / 2.0));
      const int iz = static_cast<int>(std::lround((p.zp + 1.0) * (a.n - 1) / 2.0));
      grid[static_cast<std::size_t>(iz) * a.n + ix] = newton ? std::log(-p.V) : p.V;
    }
    csv = w.str();
    double lo = 1e300, hi = -1e300;
    for (double g : grid)
      if (std::isfinite(g)) lo = std::min(lo, g), hi = std::max(hi, g);
    std::vector<std::vector<ContourSegment>> levels;
    for (int k = 1; k <= a.levels; ++k)
      levels.push_back(marching_squares(grid, a.n, lo + (hi - lo) * k / (a.levels + 1)));
    std::vector<std::vector<DiscPoint>> lines;
    if (model.kind == PotentialKind::y_string) lines.push_back(y_boundary_locus(360));
    svg = io::svg_disc(to_string(model.kind) + (newton ? " potential, log(-V)" : " potential"), levels, lines);
  } else if (a.what == "fourier") {
    std::vector<double> rg;
    for (int k = 0; k < a.n; ++k) rg.push_back(0.99 * k / (a.n - 1));
    const FourierProfile f = fourier_profile(model, a.R, rg, 96);
    io::CsvWriter w({"r", "Vbar", "deltaV", "sin3", "residual"});
    for (std::size_t k = 0; k < f.r.size(); ++k) w.row({f.r[k], f.Vbar[k], f.deltaV[k], f.sin3[k], f.residual[k]});
    csv = w.str();
    io::Panel p{"angular harmonics of V", "r", "", {}};
    p.series.push_back({"Vbar", f.r, f.Vbar, "#d62728"});
    p.series.push_back({"deltaV", f.r, f.deltaV, "#1f77b4", true});
    svg = io::svg_panels({p});
  } else if (a.what == "angle-locus" || a.what == "y-boundary") {
    const double g = a.what == "y-boundary" ? 2.0 * kPi / 3.0 : a.gamma;
    const auto pts = fixed_angle_locus(g, a.n);
    io::CsvWriter w({"xp", "zp"});
    for (const auto& p : pts) w.row({p.xp, p.zp});
    csv = w.str();
    svg = io::svg_disc("largest angle " + io::detail::short_num(g) + " rad", {}, {pts});
  } else {
    throw UsageError("unknown --what '" + a.what + "'");
  }
  io::write_file(dir / ("contours_" + a.what + ".csv"), csv);
  io::write_file(dir / ("contours_" + a.what + ".svg"), svg);
  return 0;
}

int cmd_list() {
  for (const auto& e : catalog_entries())
    std::cout << e.name << "  " << to_string(e.potential.kind) << " coupling=" << e.potential.coupling
              << " d=" << e.d << " v=" << e.v << " theta=" << e.theta << "  " << e.notes << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Equal-mass planar three-body orbits in shape-space coordinates"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "integrate an orbit and write CSV series and a manifest");
  add_orbit_options(s, sim.orbit);
  s->add_option("--periods", sim.periods, "duration in periods of the (R, r, phi) motion");
  s->add_option("--t-end", sim.t_end, "duration in time units (overrides --periods)");
  s->add_option("--rel-tol", sim.rel_tol, "integrator relative tolerance")->capture_default_str();
  s->add_option("--abs-tol", sim.abs_tol, "integrator absolute tolerance")->capture_default_str();
  s->add_option("--samples-per-period", sim.samples_per_period, "output samples per period")->capture_default_str();
  s->add_flag("--no-refine", sim.no_refine, "start from the tabulated values instead of the closed orbit");
  s->add_option("--out", sim.out, "output directory (default $BRAID3_OUT or ./braid3-out)");
  s->add_option("--jobs", sim.jobs, "parallel runs for several orbits")->capture_default_str();

  AnalyzeArgs an;
  auto* z = app.add_subcommand("analyze", "period, stability, lock, g3 or syzygy report");
  add_orbit_options(z, an.orbit);
  z->add_option("--trajectory", an.trajectory, "trajectory.csv written by simulate");
  z->add_option("--report", an.report, "lock | g3 | syzygy | period | stability")
      ->check(CLI::IsMember({"lock", "g3", "syzygy", "period", "stability"}));
  z->add_option("--out", an.out, "output directory");
  bool no_svg = false;
  z->add_flag("--no-svg", no_svg, "skip the SVG plot");

  ContourArgs co;
  auto* c = app.add_subcommand("contours", "potential maps and loci on the shape disc");
  c->add_option("--potential", co.potential, "newton | delta | ystring")->capture_default_str();
  c->add_option("--coupling", co.coupling)->capture_default_str();
  c->add_option("--R", co.R, "hyper-radius")->capture_default_str();
  c->add_option("--n", co.n, "grid size or sample count (>= 32)")->capture_default_str();
  c->add_option("--what", co.what, "equipotential | fourier | angle-locus | y-boundary")->capture_default_str();
  c->add_option("--gamma", co.gamma, "angle-locus: largest interior angle (rad)");
  c->add_option("--levels", co.levels, "equipotential: number of contour levels")->capture_default_str();
  c->add_option("--out", co.out, "output directory");

  app.add_subcommand("list", "print the orbit catalog");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  const std::string echo = command_echo(argc, argv);
  try {
    if (*s) return cmd_simulate(sim, echo);
    if (*z) {
      an.svg = !no_svg;
      return cmd_analyze(an, echo);
    }
    if (*c) return cmd_contours(co);
    return cmd_list();
  } catch (const NotFoundError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UnsupportedOrbitError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUnsupported;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
