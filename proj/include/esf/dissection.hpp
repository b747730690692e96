#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "esf/model.hpp"
#include "esf/util.hpp"

namespace esf {

// Child quadrants are numbered SW=0, SE=1, NW=2, NE=3.
// Sides are numbered bottom=0, right=1, top=2, left=3.
struct Square {
  Point origin;
  double side = 0.0;
  int level = 0;

  double x0() const { return origin.x; }
  double y0() const { return origin.y; }
  double x1() const { return origin.x + side; }
  double y1() const { return origin.y + side; }
  Point center() const { return {origin.x + side / 2, origin.y + side / 2}; }

  bool contains_strictly(const Point& p) const { return p.x > x0() && p.x < x1() && p.y > y0() && p.y < y1(); }
  bool contains_closed(const Point& p) const { return p.x >= x0() && p.x <= x1() && p.y >= y0() && p.y <= y1(); }
  bool on_boundary(const Point& p) const { return contains_closed(p) && !contains_strictly(p); }

  Square child(int q) const {
    const double h = side / 2;
    return {{origin.x + (q & 1 ? h : 0), origin.y + (q & 2 ? h : 0)}, h, level + 1};
  }

  std::array<Point, 4> corners() const { return {{{x0(), y0()}, {x1(), y0()}, {x1(), y1()}, {x0(), y1()}}}; }

  // endpoints of side s, counter-clockwise
  std::pair<Point, Point> side_segment(int s) const {
    auto c = corners();
    return {c[s], c[(s + 1) % 4]};
  }

  // m+1 equally spaced points per side including corners; 4m distinct in total
  std::vector<Point> portals(int m) const {
    std::vector<Point> out;
    out.reserve(4 * m);
    for (int s = 0; s < 4; ++s) {
      auto [a, b] = side_segment(s);
      for (int j = 0; j < m; ++j) {
        double t = static_cast<double>(j) / m;
        out.push_back({a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t});
      }
    }
    return out;
  }

  friend bool operator==(const Square& a, const Square& b) {
    return a.origin == b.origin && a.side == b.side && a.level == b.level;
  }
};

struct CellIndex {
  int row = 0;
  int col = 0;
  friend bool operator==(const CellIndex& a, const CellIndex& b) { return a.row == b.row && a.col == b.col; }
};

inline CellIndex cell_of(const Point& p, const Square& sq, int gamma) {
  if (!sq.contains_closed(p)) throw InvalidArgument("point outside square");
  const double cs = sq.side / gamma;
  int col = static_cast<int>(std::floor((p.x - sq.x0()) / cs));
  int row = static_cast<int>(std::floor((p.y - sq.y0()) / cs));
  col = std::min(std::max(col, 0), gamma - 1);
  row = std::min(std::max(row, 0), gamma - 1);
  return {row, col};
}

struct CellGrid {
  Square owner;
  int gamma = 1;

  Square cell(int row, int col) const {
    const double cs = owner.side / gamma;
    return {{owner.x0() + col * cs, owner.y0() + row * cs}, cs, -1};
  }
  CellIndex locate(const Point& p) const { return cell_of(p, owner, gamma); }
};

struct Parameters {
  int m = 8;
  int rho = 3;
  int lambda = 16;
  int gamma = 4;
  bool practical = true;
  std::string warning;
};

inline bool is_power_of_two(long long v) { return v > 0 && (v & (v - 1)) == 0; }

inline long long next_power_of_two(double v) {
  long long p = 1;
  while (static_cast<double>(p) < v) p <<= 1;
  return p;
}

// Smallest power of two strictly greater than v.
inline long long power_of_two_above(double v) {
  long long p = 1;
  while (static_cast<double>(p) <= v) p <<= 1;
  return p;
}

inline Parameters compute_parameters(double epsilon, long long L, bool practical, int m = 8, int rho = 3,
                                     int gamma = 4, double c_rho = 4.0) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  Parameters p;
  p.practical = practical;
  if (practical) {
    p.m = m;
    p.rho = rho;
    p.gamma = gamma;
    p.warning = "practical parameters: the (1+eps) guarantee does not apply";
  } else {
    p.m = static_cast<int>(power_of_two_above(4.0 / epsilon * std::log2(static_cast<double>(L))));
    p.gamma = static_cast<int>(power_of_two_above(112.0 * (1.0 + epsilon) * 2.0 / epsilon));
    p.rho = static_cast<int>(std::ceil(c_rho / epsilon));
  }
  p.lambda = 4 * (p.rho + 1);
  return p;
}

// Randomly shifted quadtree over an L x L box. Children are produced on
// demand; nothing below the root is stored.
class Dissection {
 public:
  Dissection() = default;
  Dissection(long long L, long long a, long long b, int m = 8) : L_(L), a_(a), b_(b), m_(m) {
    depth_ = 0;
    for (long long s = L; s > 2; s >>= 1) ++depth_;
  }

  long long L() const { return L_; }
  std::pair<long long, long long> shift() const { return {a_, b_}; }
  int depth() const { return depth_; }
  int m() const { return m_; }
  void set_m(int m) { m_ = m; }

  Square root() const {
    return {{static_cast<double>(-a_), static_cast<double>(-b_)}, static_cast<double>(L_), 0};
  }

  std::array<Square, 4> children(const Square& sq) const {
    return {sq.child(0), sq.child(1), sq.child(2), sq.child(3)};
  }

  // Leaf square (side 2) containing p.
  Square leaf_of(const Point& p) const {
    Square sq = root();
    while (sq.side > 2) {
      Point c = sq.center();
      sq = sq.child((p.x > c.x ? 1 : 0) | (p.y > c.y ? 2 : 0));
    }
    return sq;
  }

  // Level of the vertical line x = v (or horizontal y = v); -1 when v is not
  // on a dissection line. Box edges have level 0.
  int line_level(double v, bool vertical) const {
    double u = v + static_cast<double>(vertical ? a_ : b_);
    if (u < 0 || u > static_cast<double>(L_)) return -1;
    double step = static_cast<double>(L_);
    for (int i = 0; i <= depth_; ++i, step /= 2) {
      double q = u / step;
      if (q == std::floor(q)) return i;
    }
    return -1;
  }

  // Spacing of admissible crossings along a line of the given level.
  double crossing_spacing(int level) const { return static_cast<double>(L_) / (std::ldexp(1.0, level) * m_); }

  // A boundary point may carry a crossing when it sits at a multiple of the
  // crossing spacing of every line through it. The box boundary carries none.
  bool admissible(const Point& p) const {
    int lx = line_level(p.x, true);
    int ly = line_level(p.y, false);
    if (lx < 0 && ly < 0) return false;
    if (lx == 0 || ly == 0) return false;
    if (lx > 0) {
      double q = (p.y + static_cast<double>(b_)) / crossing_spacing(lx);
      if (q != std::floor(q)) return false;
    }
    if (ly > 0) {
      double q = (p.x + static_cast<double>(a_)) / crossing_spacing(ly);
      if (q != std::floor(q)) return false;
    }
    return true;
  }

  // Admissible crossing points on side s of sq, ordered along the side.
  std::vector<Point> admissible_portals(const Square& sq, int s) const {
    auto [pa, pb] = sq.side_segment(s);
    const bool horizontal = (s % 2 == 0);
    const double fixed = horizontal ? pa.y : pa.x;
    const int lev = line_level(fixed, !horizontal);
    std::vector<Point> out;
    if (lev <= 0) return out;
    const double sp = crossing_spacing(lev);
    const double off = static_cast<double>(horizontal ? a_ : b_);
    double lo = std::min(horizontal ? pa.x : pa.y, horizontal ? pb.x : pb.y);
    double hi = std::max(horizontal ? pa.x : pa.y, horizontal ? pb.x : pb.y);
    double k0 = std::ceil((lo + off) / sp), k1 = std::floor((hi + off) / sp);
    for (double k = k0; k <= k1; k += 1) {
      double t = k * sp - off;
      Point p = horizontal ? Point{t, fixed} : Point{fixed, t};
      if (admissible(p)) out.push_back(p);
    }
    if (s >= 2) std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  long long L_ = 2;
  long long a_ = 0;
  long long b_ = 0;
  int m_ = 8;
  int depth_ = 0;
};

// The shift is drawn from even integers in [0, L/2) so that a box with its
// lower-left corner at (-a,-b) still covers [0, d'] x [0, d'].
inline Dissection build_dissection(double d_prime, std::uint64_t seed, int m = 8) {
  if (!(d_prime > 0)) throw InvalidArgument("d_prime must be positive");
  long long L = std::max<long long>(4, next_power_of_two(2.0 * d_prime));
  Rng rng(seed);
  const std::uint64_t slots = static_cast<std::uint64_t>(L / 4);
  long long a = 2 * static_cast<long long>(rng.below(slots));
  long long b = 2 * static_cast<long long>(rng.below(slots));
  return Dissection(L, a, b, m);
}

}  // namespace esf
