#pragma once

// Serialization used by the command-line tool: CSV tables with fixed headers,
// polyline SVG plots, JSON orbit specs and run manifests with SHA-256 hashes.
// Needs nlohmann/json and OpenSSL (libcrypto).

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "braid3/analysis.hpp"
#include "braid3/catalog.hpp"
#include "braid3/contours.hpp"
#include "braid3/dynamics.hpp"

namespace braid3::io {

/// 17 significant digits, enough for an exact round trip of any double.
inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Simple comma-separated table. Values are written as they are pushed.
class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) {
    for (std::size_t k = 0; k < header.size(); ++k) out_ << (k ? "," : "") << header[k];
    out_ << '\n';
    columns_ = header.size();
  }

  CsvWriter& row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw DomainError("CsvWriter: row width does not match header");
    for (std::size_t k = 0; k < cells.size(); ++k) out_ << (k ? "," : "") << cells[k];
    out_ << '\n';
    return *this;
  }

  CsvWriter& row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(fmt(v));
    return row(cells);
  }

  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
  std::size_t columns_ = 0;
};

inline const std::vector<std::string>& trajectory_header() {
  static const std::vector<std::string> h{"t",   "x1x", "x1y", "x2x", "x2y", "x3x", "x3y",
                                          "v1x", "v1y", "v2x", "v2y", "v3x", "v3y"};
  return h;
}

inline const std::vector<std::string>& shape_header() {
  static const std::vector<std::string> h{"t", "R", "r", "alpha", "phi_unwrapped", "xp", "yp", "zp", "G3", "energy"};
  return h;
}

inline const std::vector<std::string>& events_header() {
  static const std::vector<std::string> h{"t", "kind", "direction", "level", "residual", "R", "r", "phi", "middle"};
  return h;
}

/// Bodies 0, 1, 2 are written as x1, x2, x3.
inline std::string trajectory_csv(const std::vector<ThreeBodyState>& states) {
  CsvWriter w(trajectory_header());
  for (const auto& s : states) {
    const PhaseVector y = pack(s);
    std::vector<double> row{s.t};
    row.insert(row.end(), y.begin(), y.end());
    w.row(row);
  }
  return w.str();
}

inline std::string shape_csv(const PotentialModel& model, const std::vector<ThreeBodyState>& states) {
  const ShapeSeries s = shape_series(states);
  CsvWriter w(shape_header());
  for (std::size_t k = 0; k < s.size(); ++k)
    w.row({s.t[k], s.R[k], s.r[k], s.alpha[k], s.phi_unwrapped[k], s.xp[k], s.yp[k], s.zp[k], s.G3[k],
           total_energy(model, states[k])});
  return w.str();
}

inline std::string events_csv(const std::vector<Event>& events) {
  CsvWriter w(events_header());
  for (const auto& e : events) {
    const ShapePoint p = shape_point(e.state);
    w.row({fmt(e.t), to_string(e.kind), std::to_string(e.direction), fmt(e.level), fmt(e.residual), fmt(p.R),
           fmt(p.r), fmt(p.phi), std::to_string(e.kind == EventKind::syzygy ? middle_particle(e.state.x) : -1)});
  }
  return w.str();
}

/// Parses a CSV with a header row into named numeric columns.
inline std::vector<std::pair<std::string, std::vector<double>>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open " + path);
  std::string line;
  std::vector<std::pair<std::string, std::vector<double>>> cols;
  if (!std::getline(in, line)) return cols;
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) cols.push_back({cell, {}});
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::size_t k = 0;
    for (std::string cell; std::getline(ls, cell, ',') && k < cols.size(); ++k)
      cols[k].second.push_back(std::strtod(cell.c_str(), nullptr));
  }
  return cols;
}

/// States from a trajectory.csv produced by trajectory_csv.
inline std::vector<ThreeBodyState> read_trajectory_csv(const std::string& path, double m = 1.0) {
  const auto cols = read_csv(path);
  const auto& h = trajectory_header();
  if (cols.size() != h.size()) throw DomainError(path + ": unexpected trajectory columns");
  for (std::size_t k = 0; k < h.size(); ++k)
    if (cols[k].first != h[k]) throw DomainError(path + ": unexpected column " + cols[k].first);
  std::vector<ThreeBodyState> out;
  for (std::size_t r = 0; r < cols[0].second.size(); ++r) {
    PhaseVector y{};
    for (int k = 0; k < 12; ++k) y[k] = cols[k + 1].second[r];
    out.push_back(unpack(y, cols[0].second[r], m));
  }
  return out;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw NotFoundError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string sha256_hex(const std::string& data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 failed");
  std::ostringstream ss;
  for (unsigned int k = 0; k < len; ++k) ss << std::hex << std::setw(2) << std::setfill('0') << int(md[k]);
  return ss.str();
}

// ---------------------------------------------------------------------------
// Orbit specs in JSON

/// {"name", "potential", "coupling", "d", "v", "theta"} with optional "m",
/// "period_hint", "label" and "notes". "potential" is newton, delta or y.
inline OrbitSpec orbit_from_json(const nlohmann::json& j) {
  OrbitSpec s;
  s.name = j.at("name").get<std::string>();
  s.potential = PotentialModel(parse_potential_kind(j.at("potential").get<std::string>()), j.value("coupling", 1.0));
  s.d = j.at("d").get<double>();
  s.v = j.at("v").get<double>();
  s.theta = j.at("theta").get<double>();
  s.m = j.value("m", 1.0);
  s.period_hint = j.value("period_hint", 0.0);
  s.label = j.value("label", std::string{});
  s.notes = j.value("notes", std::string{});
  s.validate();
  return s;
}

inline nlohmann::json orbit_to_json(const OrbitSpec& s) {
  return {{"name", s.name},   {"label", s.label}, {"potential", to_string(s.potential.kind)},
          {"coupling", s.potential.coupling},     {"d", s.d},
          {"v", s.v},         {"theta", s.theta}, {"m", s.m},
          {"period_hint", s.period_hint},         {"notes", s.notes}};
}

/// A file holding one spec object or an array of them.
inline std::vector<OrbitSpec> load_orbit_specs(const std::string& path) {
  const nlohmann::json j = nlohmann::json::parse(read_file(path));
  std::vector<OrbitSpec> out;
  if (j.is_array())
    for (const auto& e : j) out.push_back(orbit_from_json(e));
  else
    out.push_back(orbit_from_json(j));
  return out;
}

// ---------------------------------------------------------------------------
// SVG

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct Panel {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  std::vector<PlotSeries> series;
  bool equal_aspect = false;
};

namespace detail {

inline std::string svg_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

inline std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace detail

/// Panels stacked vertically, one polyline per series, with axis ranges
/// taken from the data. Coordinates are written with fixed precision so the
/// file is reproducible.
inline std::string svg_panels(const std::vector<Panel>& panels, double width = 720, double panel_height = 260) {
  const double ml = 70, mr = 150, mt = 30, mb = 40;
  const double H = panel_height * static_cast<double>(panels.size());
  std::ostringstream o;
  o << std::fixed << std::setprecision(2);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << H << "\" viewBox=\"0 0 "
    << width << ' ' << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const Panel& pn = panels[p];
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& s : pn.series)
      for (std::size_t k = 0; k < s.x.size(); ++k) {
        if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
        x0 = std::min(x0, s.x[k]);
        x1 = std::max(x1, s.x[k]);
        y0 = std::min(y0, s.y[k]);
        y1 = std::max(y1, s.y[k]);
      }
    if (x0 > x1) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double top = panel_height * static_cast<double>(p) + mt;
    double pw = width - ml - mr;
    double ph = panel_height - mt - mb;
    if (pn.equal_aspect) {
      const double s = std::min(pw / (x1 - x0), ph / (y1 - y0));
      pw = s * (x1 - x0);
      ph = s * (y1 - y0);
    }
    auto X = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
    auto Y = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };
    o << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    o << "<text x=\"" << ml << "\" y=\"" << top - 10 << "\" font-size=\"13\">" << detail::svg_escape(pn.title)
      << "</text>\n";
    o << "<rect x=\"" << ml << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
    o << "<text x=\"" << ml << "\" y=\"" << top + ph + 14 << "\">" << detail::short_num(x0) << "</text>\n";
    o << "<text x=\"" << ml + pw << "\" y=\"" << top + ph + 14 << "\" text-anchor=\"end\">" << detail::short_num(x1)
      << "</text>\n";
    o << "<text x=\"" << ml + 0.5 * pw << "\" y=\"" << top + ph + 28 << "\" text-anchor=\"middle\">"
      << detail::svg_escape(pn.xlabel) << "</text>\n";
    o << "<text x=\"" << ml - 6 << "\" y=\"" << top + ph << "\" text-anchor=\"end\">" << detail::short_num(y0)
      << "</text>\n";
    o << "<text x=\"" << ml - 6 << "\" y=\"" << top + 10 << "\" text-anchor=\"end\">" << detail::short_num(y1)
      << "</text>\n";
    o << "<text x=\"" << ml - 6 << "\" y=\"" << top + 0.5 * ph << "\" text-anchor=\"end\">"
      << detail::svg_escape(pn.ylabel) << "</text>\n";
    for (std::size_t s = 0; s < pn.series.size(); ++s) {
      const auto& se = pn.series[s];
      o << "<polyline fill=\"none\" stroke=\"" << se.color << "\" stroke-width=\"1.3\""
        << (se.dashed ? " stroke-dasharray=\"5,3\"" : "") << " points=\"";
      for (std::size_t k = 0; k < se.x.size(); ++k)
        if (std::isfinite(se.x[k]) && std::isfinite(se.y[k])) o << X(se.x[k]) << ',' << Y(se.y[k]) << ' ';
      o << "\"/>\n";
      const double ly = top + 14.0 * static_cast<double>(s + 1);
      o << "<line x1=\"" << width - mr + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << width - mr + 30 << "\" y2=\""
        << ly - 4 << "\" stroke=\"" << se.color << "\"" << (se.dashed ? " stroke-dasharray=\"5,3\"" : "") << "/>\n";
      o << "<text x=\"" << width - mr + 35 << "\" y=\"" << ly << "\">" << detail::svg_escape(se.name) << "</text>\n";
    }
    o << "</g>\n";
  }
  o << "</svg>\n";
  return o.str();
}

/// Line segments (e.g. marching-squares output) drawn inside the unit disc.
inline std::string svg_disc(const std::string& title, const std::vector<std::vector<ContourSegment>>& levels,
                            const std::vector<std::vector<DiscPoint>>& polylines, double size = 520) {
  const double c = size / 2.0;
  const double s = 0.45 * size;
  std::ostringstream o;
  o << std::fixed << std::setprecision(2);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size + 30
    << "\" viewBox=\"0 0 " << size << ' ' << size + 30 << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"10\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">" << detail::svg_escape(title)
    << "</text>\n";
  // x' to the right, z' up: phi = 0 at twelve o'clock.
  auto X = [&](double xp) { return c + s * xp; };
  auto Y = [&](double zp) { return 30 + c - s * zp; };
  o << "<circle cx=\"" << c << "\" cy=\"" << 30 + c << "\" r=\"" << s << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (std::size_t l = 0; l < levels.size(); ++l) {
    o << "<path fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"0.8\" d=\"";
    for (const auto& seg : levels[l])
      o << 'M' << X(seg.a.xp) << ',' << Y(seg.a.zp) << 'L' << X(seg.b.xp) << ',' << Y(seg.b.zp);
    o << "\"/>\n";
  }
  for (const auto& pl : polylines) {
    o << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : pl) o << X(p.xp) << ',' << Y(p.zp) << ' ';
    if (!pl.empty()) o << X(pl.front().xp) << ',' << Y(pl.front().zp);
    o << "\"/>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace braid3::io
