#pragma once

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "esf/dissection.hpp"
#include "esf/model.hpp"

namespace esf {

struct SvgOptions {
  double pixels = 640;        // width and height of the drawing area
  double margin = 16;
  double base_stroke = 2.0;   // stroke width of the level-0 lines
  int max_level = 4;          // deeper dissection lines are not drawn
  int portal_levels = 2;      // portals are drawn on lines up to this level
  double terminal_radius = 4;
};

namespace detail {

// Fixed precision keeps the output byte-stable.
inline std::string fixed3(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s == "-0.000") s = "0.000";
  return s;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

inline double svg_stroke_width(int level, double base) { return base * std::pow(2.0, -level / 2.0); }

// Dissection lines thinner with depth, admissible portals as dots, terminals
// as labeled circles and the forest in red. y grows upwards in the picture.
inline std::string render_svg(const Dissection& diss, const Forest& forest, const std::vector<Terminal>& terminals,
                              const SvgOptions& opt = {}) {
  const Square root = diss.root();
  const double scale = opt.pixels / root.side;
  const double total = opt.pixels + 2 * opt.margin;
  auto X = [&](double x) { return detail::fixed3(opt.margin + (x - root.x0()) * scale); };
  auto Y = [&](double y) { return detail::fixed3(opt.margin + (root.y1() - y) * scale); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::fixed3(total) << "\" height=\""
     << detail::fixed3(total) << "\" viewBox=\"0 0 " << detail::fixed3(total) << " " << detail::fixed3(total)
     << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << detail::fixed3(total) << "\" height=\"" << detail::fixed3(total)
     << "\" fill=\"white\"/>\n";

  os << "<g id=\"dissection\" stroke=\"#555\" fill=\"none\">\n";
  const int top = std::min(opt.max_level, diss.depth());
  for (int level = 0; level <= top; ++level) {
    const double step = root.side / std::ldexp(1.0, level);
    const std::string w = detail::fixed3(svg_stroke_width(level, opt.base_stroke));
    for (int k = 0; k * step <= root.side; ++k) {
      // lines already drawn at a coarser level are skipped
      if (level > 0 && k % 2 == 0) continue;
      const double x = root.x0() + k * step, y = root.y0() + k * step;
      os << "<line x1=\"" << X(x) << "\" y1=\"" << Y(root.y0()) << "\" x2=\"" << X(x) << "\" y2=\"" << Y(root.y1())
         << "\" stroke-width=\"" << w << "\" data-level=\"" << level << "\"/>\n";
      os << "<line x1=\"" << X(root.x0()) << "\" y1=\"" << Y(y) << "\" x2=\"" << X(root.x1()) << "\" y2=\"" << Y(y)
         << "\" stroke-width=\"" << w << "\" data-level=\"" << level << "\"/>\n";
    }
  }
  os << "</g>\n";

  os << "<g id=\"portals\" fill=\"#36c\">\n";
  const int plev = std::min(opt.portal_levels, diss.depth());
  for (int level = 1; level <= plev; ++level) {
    const double step = root.side / std::ldexp(1.0, level);
    const double sp = diss.crossing_spacing(level);
    for (int k = 1; k * step < root.side; k += 2) {
      const double line = k * step;
      for (int j = 1; j * sp < root.side; ++j) {
        const double along = j * sp;
        for (const Point& p : {Point{root.x0() + line, root.y0() + along}, Point{root.x0() + along, root.y0() + line}})
          if (diss.admissible(p)) os << "<circle cx=\"" << X(p.x) << "\" cy=\"" << Y(p.y) << "\" r=\"1.200\"/>\n";
      }
    }
  }
  os << "</g>\n";

  os << "<g id=\"forest\" stroke=\"#d22\" stroke-width=\"2.500\" stroke-linecap=\"round\">\n";
  for (const auto& s : forest.segments())
    os << "<line x1=\"" << X(s.a.x) << "\" y1=\"" << Y(s.a.y) << "\" x2=\"" << X(s.b.x) << "\" y2=\"" << Y(s.b.y)
       << "\"/>\n";
  os << "</g>\n";

  os << "<g id=\"terminals\" font-family=\"monospace\" font-size=\"10\">\n";
  for (const auto& t : terminals) {
    os << "<circle cx=\"" << X(t.location.x) << "\" cy=\"" << Y(t.location.y) << "\" r=\""
       << detail::fixed3(opt.terminal_radius) << "\" fill=\"#fff\" stroke=\"#000\"/>\n";
    os << "<text x=\"" << detail::fixed3(opt.margin + (t.location.x - root.x0()) * scale + opt.terminal_radius + 2)
       << "\" y=\"" << Y(t.location.y) << "\">" << detail::xml_escape(t.id) << "</text>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

// Draws a raw-coordinate solution over a dissection of side 128 drawn from
// seed: the bounding box of terminals and forest is mapped onto [1, 63]^2.
inline std::string render_solution_svg(const Instance& inst, const Forest& forest, std::uint64_t seed, int m = 8,
                                       const SvgOptions& opt = {}) {
  double x0 = 0, y0 = 0, x1 = 1, y1 = 1;
  bool first = true;
  auto grow = [&](const Point& p) {
    if (first) x0 = x1 = p.x, y0 = y1 = p.y, first = false;
    x0 = std::min(x0, p.x), x1 = std::max(x1, p.x), y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
  };
  for (const auto& t : inst.terminals) grow(t.location);
  for (const auto& p : forest.points()) grow(p);
  const double ext = std::max({x1 - x0, y1 - y0, 1e-9});
  const double k = 62.0 / ext;
  auto map = [&](const Point& p) { return Point{1 + (p.x - x0) * k, 1 + (p.y - y0) * k}; };
  std::vector<Terminal> ts = inst.terminals;
  for (auto& t : ts) t.location = map(t.location);
  Forest g;
  for (const auto& p : forest.points()) g.add_point(map(p));
  for (const auto& s : forest.segments()) g.add_segment(map(s.a), map(s.b));
  return render_svg(build_dissection(64, seed, m), g, ts, opt);
}

}  // namespace esf
