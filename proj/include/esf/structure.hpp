#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "esf/config.hpp"
#include "esf/dissection.hpp"
#include "esf/model.hpp"

namespace esf {

enum class PropertyKind { BoundaryComponents, Portals, Locality };

inline const char* to_string(PropertyKind k) {
  switch (k) {
    case PropertyKind::BoundaryComponents: return "boundary-components";
    case PropertyKind::Portals: return "portals";
    case PropertyKind::Locality: return "locality";
  }
  return "?";
}

struct PropertyReport {
  PropertyKind kind = PropertyKind::BoundaryComponents;
  Square square;
  int side = -1;  // -1 when the whole square is meant
  std::string details;
};

inline std::string describe(const PropertyReport& r) {
  std::ostringstream os;
  os << to_string(r.kind) << " at square (" << r.square.x0() << "," << r.square.y0() << ") side " << r.square.side;
  if (r.side >= 0) os << " edge " << r.side;
  if (!r.details.empty()) os << ": " << r.details;
  return os.str();
}

struct RepairRefused : InvalidArgument {
  std::vector<PropertyReport> reports;
  RepairRefused(const std::string& what, std::vector<PropertyReport> r) : InvalidArgument(what), reports(std::move(r)) {}
};

namespace detail {

inline double snap(double v, double target, double scale) {
  return std::abs(v - target) <= 1e-12 * std::max(1.0, scale) ? target : v;
}

inline Point snap_to_box(Point p, const Square& sq) {
  const double sc = std::max({std::abs(sq.x0()), std::abs(sq.y0()), sq.side});
  p.x = snap(snap(p.x, sq.x0(), sc), sq.x1(), sc);
  p.y = snap(snap(p.y, sq.y0(), sc), sq.y1(), sc);
  return p;
}

// Splits segments at their mutual intersections and at endpoints lying on
// other segments, so the endpoint graph reflects geometric connectivity.
inline Forest planarize(const Forest& f) {
  const auto& segs = f.segments();
  std::vector<std::vector<std::pair<double, Point>>> cuts(segs.size());
  auto param = [](const Segment& s, const Point& p) {
    const double dx = s.b.x - s.a.x, dy = s.b.y - s.a.y;
    return std::abs(dx) >= std::abs(dy) ? (p.x - s.a.x) / dx : (p.y - s.a.y) / dy;
  };
  auto on_segment = [&](const Segment& s, const Point& p) {
    const double dx = s.b.x - s.a.x, dy = s.b.y - s.a.y;
    const double len = std::hypot(dx, dy);
    const double cr = (p.x - s.a.x) * dy - (p.y - s.a.y) * dx;
    if (std::abs(cr) > 1e-12 * len * std::max(1.0, len)) return false;
    const double t = param(s, p);
    return t > 0 && t < 1;
  };
  for (std::size_t i = 0; i < segs.size(); ++i)
    for (std::size_t j = i + 1; j < segs.size(); ++j) {
      const Segment& u = segs[i];
      const Segment& v = segs[j];
      if (std::max(u.a.x, u.b.x) < std::min(v.a.x, v.b.x) || std::max(v.a.x, v.b.x) < std::min(u.a.x, u.b.x) ||
          std::max(u.a.y, u.b.y) < std::min(v.a.y, v.b.y) || std::max(v.a.y, v.b.y) < std::min(u.a.y, u.b.y))
        continue;
      // endpoints of one lying inside the other
      bool touched = false;
      for (const Point& p : {v.a, v.b})
        if (on_segment(u, p)) cuts[i].push_back({param(u, p), p}), touched = true;
      for (const Point& p : {u.a, u.b})
        if (on_segment(v, p)) cuts[j].push_back({param(v, p), p}), touched = true;
      if (touched) continue;
      const double rx = u.b.x - u.a.x, ry = u.b.y - u.a.y;
      const double sx = v.b.x - v.a.x, sy = v.b.y - v.a.y;
      const double den = rx * sy - ry * sx;
      if (den == 0) continue;
      const double qx = v.a.x - u.a.x, qy = v.a.y - u.a.y;
      const double t = (qx * sy - qy * sx) / den;
      const double w = (qx * ry - qy * rx) / den;
      if (t <= 0 || t >= 1 || w <= 0 || w >= 1) continue;
      Point p{u.a.x + rx * t, u.a.y + ry * t};
      // keep axis-parallel pieces exactly on their line
      if (u.a.x == u.b.x) p.x = u.a.x;
      if (u.a.y == u.b.y) p.y = u.a.y;
      if (v.a.x == v.b.x) p.x = v.a.x;
      if (v.a.y == v.b.y) p.y = v.a.y;
      cuts[i].push_back({t, p});
      cuts[j].push_back({w, p});
    }
  Forest out;
  for (const auto& p : f.points()) out.add_point(p);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    auto& c = cuts[i];
    std::sort(c.begin(), c.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    Point prev = segs[i].a;
    for (const auto& [t, p] : c) {
      out.add_segment(prev, p);
      prev = p;
    }
    out.add_segment(prev, segs[i].b);
  }
  return out;
}

// Clip to the closed square with crossing points placed exactly on the boundary.
inline Forest clip_exact(const Forest& f, const Square& sq) {
  Forest out;
  for (const auto& s : f.segments()) {
    auto [t0, t1] = clip_interval(s.a, s.b, sq);
    if (t0 > t1) continue;
    auto at = [&](double t) {
      if (t == 0) return s.a;
      if (t == 1) return s.b;
      return snap_to_box({s.a.x + (s.b.x - s.a.x) * t, s.a.y + (s.b.y - s.a.y) * t}, sq);
    };
    out.add_segment(at(t0), at(t1));
  }
  for (const auto& p : f.points())
    if (sq.contains_closed(p)) out.add_point(p);
  return out;
}

inline bool along_side(const Segment& s, const Square& sq, int side) {
  switch (side) {
    case 0: return s.a.y == sq.y0() && s.b.y == sq.y0();
    case 1: return s.a.x == sq.x1() && s.b.x == sq.x1();
    case 2: return s.a.y == sq.y1() && s.b.y == sq.y1();
    default: return s.a.x == sq.x0() && s.b.x == sq.x0();
  }
}

inline bool on_side(const Point& p, const Square& sq, int side) {
  if (!sq.contains_closed(p)) return false;
  switch (side) {
    case 0: return p.y == sq.y0();
    case 1: return p.x == sq.x1();
    case 2: return p.y == sq.y1();
    default: return p.x == sq.x0();
  }
}

using Intervals = std::vector<std::pair<double, double>>;

inline Intervals merge_intervals(Intervals iv) {
  std::sort(iv.begin(), iv.end());
  Intervals out;
  for (auto [a, b] : iv) {
    if (!out.empty() && a <= out.back().second) out.back().second = std::max(out.back().second, b);
    else out.push_back({a, b});
  }
  return out;
}

// Components of g along one side, as intervals of the coordinate running along it.
inline Intervals side_components(const Forest& g, const Square& sq, int side) {
  const bool horizontal = side % 2 == 0;
  auto coord = [&](const Point& p) { return horizontal ? p.x : p.y; };
  Intervals iv;
  for (const auto& p : g.points())
    if (on_side(p, sq, side)) iv.push_back({coord(p), coord(p)});
  for (const auto& s : g.segments())
    if (along_side(s, sq, side)) iv.push_back({std::min(coord(s.a), coord(s.b)), std::max(coord(s.a), coord(s.b))});
  return merge_intervals(iv);
}

}  // namespace detail

// Per side, counts the components of F on that side which avoid both of its
// corners and reports every side with more than rho of them.
inline std::vector<PropertyReport> check_boundary_components(const Forest& f, const Square& sq, int rho) {
  Forest g = detail::clip_exact(detail::planarize(f), sq);
  std::vector<PropertyReport> out;
  for (int side = 0; side < 4; ++side) {
    const bool horizontal = side % 2 == 0;
    const double lo = horizontal ? sq.x0() : sq.y0();
    const double hi = horizontal ? sq.x1() : sq.y1();
    int count = 0;
    for (auto [a, b] : detail::side_components(g, sq, side))
      if (a > lo && b < hi) ++count;
    if (count > rho)
      out.push_back({PropertyKind::BoundaryComponents, sq, side,
                     std::to_string(count) + " non-corner components, limit " + std::to_string(rho)});
  }
  return out;
}

// Every component of F on the boundary loop must contain one of the m portals per side.
inline std::vector<PropertyReport> check_portal_property(const Forest& f, const Square& sq, int m) {
  Forest g = detail::clip_exact(detail::planarize(f), sq);
  const double per = 4 * sq.side;
  detail::Intervals iv;
  for (const auto& p : g.points())
    if (sq.on_boundary(p)) {
      double t = perimeter_param(sq, p);
      iv.push_back({t, t});
    }
  for (const auto& s : g.segments())
    for (int side = 0; side < 4; ++side)
      if (detail::along_side(s, sq, side)) {
        double ta = perimeter_param(sq, s.a), tb = perimeter_param(sq, s.b);
        // the left side closes the loop at the bottom-left corner
        if (side == 3) {
          if (ta == 0) ta = per;
          if (tb == 0) tb = per;
        }
        iv.push_back({std::min(ta, tb), std::max(ta, tb)});
        break;
      }
  auto merged = detail::merge_intervals(iv);
  if (merged.size() > 1 && merged.front().first == 0 && merged.back().second >= per) {
    merged.front().first = merged.back().first - per;
    merged.pop_back();
  }
  std::vector<double> portal_t;
  for (const auto& p : sq.portals(m)) portal_t.push_back(perimeter_param(sq, p));
  std::vector<PropertyReport> out;
  for (auto [a, b] : merged) {
    bool hit = false;
    for (double t : portal_t)
      hit = hit || (t >= a && t <= b) || (t + per >= a && t + per <= b) || (t - per >= a && t - per <= b);
    if (!hit) {
      std::ostringstream os;
      os << "boundary component [" << a << ", " << b << "] of the perimeter holds no portal";
      out.push_back({PropertyKind::Portals, sq, -1, os.str()});
    }
  }
  return out;
}

// Terminals sharing a cell of sq whose components inside sq reach the boundary
// must lie in one component of F inside sq.
inline std::vector<PropertyReport> check_locality(const Forest& f, const Square& sq, int gamma,
                                                  const std::vector<Point>& terminals) {
  Forest g = detail::clip_exact(detail::planarize(f), sq);
  UnionFind uf = g.components();
  std::vector<bool> touches(g.points().size(), false);
  for (std::size_t i = 0; i < g.points().size(); ++i)
    if (sq.on_boundary(g.points()[i])) touches[uf.find(i)] = true;
  std::map<std::pair<int, int>, std::vector<std::size_t>> by_cell;
  for (const auto& p : terminals) {
    if (!sq.contains_strictly(p)) continue;
    auto k = g.point_index(p);
    if (!k || !touches[uf.find(*k)]) continue;
    CellIndex c = cell_of(p, sq, gamma);
    by_cell[{c.row, c.col}].push_back(uf.find(*k));
  }
  std::vector<PropertyReport> out;
  for (auto& [cell, roots] : by_cell) {
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
    if (roots.size() > 1)
      out.push_back({PropertyKind::Locality, sq, -1,
                     "cell (" + std::to_string(cell.first) + "," + std::to_string(cell.second) + ") holds " +
                         std::to_string(roots.size()) + " boundary-reaching components"});
  }
  return out;
}

struct RepairResult {
  Forest forest;
  double added_length = 0.0;
  int repairs = 0;
};

namespace detail {

// Dissection squares whose cells may hold two terminals: side at least 2 gamma
// and at least two terminals strictly inside.
inline std::vector<Square> crowded_squares(const Dissection& diss, int gamma, const std::vector<Point>& terminals) {
  std::vector<Square> out;
  std::vector<Square> stack{diss.root()};
  while (!stack.empty()) {
    Square sq = stack.back();
    stack.pop_back();
    if (sq.side < 2.0 * gamma) continue;
    int inside = 0;
    std::vector<Point> seen;
    for (const auto& p : terminals)
      if (sq.contains_strictly(p) && std::find(seen.begin(), seen.end(), p) == seen.end()) {
        seen.push_back(p);
        ++inside;
      }
    if (inside < 2) continue;
    out.push_back(sq);
    for (int q = 0; q < 4; ++q) stack.push_back(sq.child(q));
  }
  return out;
}

}  // namespace detail

// Makes F satisfy locality in every dissection square. Violating cells are
// processed smallest first; each gets its private sides plus every side F
// already meets. F must already have at most rho non-corner boundary
// components per side in each of those squares, otherwise the repair refuses.
inline RepairResult locality_repair(const Forest& f, const Dissection& diss, int gamma,
                                    const std::vector<Point>& terminals, std::optional<int> rho = std::nullopt) {
  if (gamma < 1) throw InvalidArgument("gamma must be positive");
  RepairResult res;
  res.forest = detail::planarize(f);
  const double base_len = forest_length(f);
  auto squares = detail::crowded_squares(diss, gamma, terminals);
  if (rho) {
    std::vector<PropertyReport> bad;
    for (const auto& sq : squares)
      for (auto& r : check_boundary_components(res.forest, sq, *rho)) bad.push_back(std::move(r));
    if (!bad.empty()) throw RepairRefused("forest violates the boundary-component bound", std::move(bad));
  }
  const Square root = diss.root();
  std::map<std::tuple<int, long long, long long>, int> times;
  const int limit = 4 * static_cast<int>(squares.size()) * gamma * gamma + 16;
  for (int iter = 0;; ++iter) {
    if (iter > limit) throw RepairRefused("locality repair did not converge", {});
    // smallest violating cell; ties by level, then row, then column
    std::optional<Square> pick;
    std::tuple<int, long long, long long> pick_key{};
    for (const auto& sq : squares) {
      if (check_locality(res.forest, sq, gamma, terminals).empty()) continue;
      Forest g = detail::clip_exact(res.forest, sq);
      UnionFind uf = g.components();
      std::vector<bool> touches(g.points().size(), false);
      for (std::size_t i = 0; i < g.points().size(); ++i)
        if (sq.on_boundary(g.points()[i])) touches[uf.find(i)] = true;
      std::map<std::pair<int, int>, std::vector<std::size_t>> by_cell;
      for (const auto& p : terminals) {
        if (!sq.contains_strictly(p)) continue;
        auto k = g.point_index(p);
        if (!k || !touches[uf.find(*k)]) continue;
        CellIndex c = cell_of(p, sq, gamma);
        by_cell[{c.row, c.col}].push_back(uf.find(*k));
      }
      CellGrid grid{sq, gamma};
      for (auto& [rc, roots] : by_cell) {
        std::sort(roots.begin(), roots.end());
        if (std::unique(roots.begin(), roots.end()) - roots.begin() < 2) continue;
        Square cell = grid.cell(rc.first, rc.second);
        cell.level = sq.level + static_cast<int>(std::lround(std::log2(gamma)));
        const long long row = std::llround((cell.y0() - root.y0()) / cell.side);
        const long long col = std::llround((cell.x0() - root.x0()) / cell.side);
        std::tuple<int, long long, long long> key{cell.level, row, col};
        if (!pick || cell.side < pick->side || (cell.side == pick->side && key < pick_key)) {
          pick = cell;
          pick_key = key;
        }
      }
    }
    if (!pick) break;
    const Square& cell = *pick;
    const long long row = std::get<1>(pick_key), col = std::get<2>(pick_key);
    if (++times[pick_key] > 2) throw RepairRefused("cell repaired more than twice", {});
    // a side is private when it does not lie on a side of the parent square
    bool add[4] = {row % 2 == 1, col % 2 == 0, row % 2 == 0, col % 2 == 1};
    Forest g = detail::clip_exact(res.forest, cell);
    for (int s = 0; s < 4; ++s) {
      if (add[s]) continue;
      for (const auto& p : g.points()) add[s] = add[s] || detail::on_side(p, cell, s);
    }
    Forest next = res.forest;
    for (int s = 0; s < 4; ++s)
      if (add[s]) {
        auto [a, b] = cell.side_segment(s);
        next.add_segment(a, b);
      }
    res.forest = detail::planarize(next);
    ++res.repairs;
  }
  // a forest that needed nothing comes back untouched
  if (res.repairs == 0) res.forest = f;
  res.added_length = forest_length(res.forest) - base_len;
  return res;
}

// Number of components of F restricted to the even grid lines x = 2i and
// y = 2j; nullopt when a breakpoint of F sits on one of those lines.
inline std::optional<std::size_t> grid_component_count(const Forest& f) {
  auto even = [](double v) { return std::fmod(v, 2.0) == 0.0; };
  for (const auto& p : f.points())
    if (even(p.x) || even(p.y)) return std::nullopt;
  std::vector<Point> hits;
  for (const auto& s : f.segments()) {
    const double dx = s.b.x - s.a.x, dy = s.b.y - s.a.y;
    for (double x = 2 * std::ceil(std::min(s.a.x, s.b.x) / 2); x < std::max(s.a.x, s.b.x); x += 2)
      hits.push_back({x, s.a.y + dy * (x - s.a.x) / dx});
    for (double y = 2 * std::ceil(std::min(s.a.y, s.b.y) / 2); y < std::max(s.a.y, s.b.y); y += 2) {
      Point p{s.a.x + dx * (y - s.a.y) / dy, y};
      if (std::abs(p.x / 2 - std::round(p.x / 2)) < 1e-12 * std::max(1.0, std::abs(p.x))) p.x = 2 * std::round(p.x / 2);
      hits.push_back(p);
    }
  }
  // a crossing through a grid vertex, or shared by crossing segments, counts once
  std::sort(hits.begin(), hits.end());
  std::size_t count = 0;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    bool dup = false;
    for (std::size_t j = i; j-- > 0 && hits[i].x - hits[j].x <= 1e-9;)
      if (std::abs(hits[i].y - hits[j].y) <= 1e-9) dup = true;
    if (!dup) ++count;
  }
  return count;
}

}  // namespace esf
