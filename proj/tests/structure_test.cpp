#include <gtest/gtest.h>

#include <cmath>

#include "esf/oracle.hpp"
#include "esf/structure.hpp"

using namespace esf;

namespace {

Forest path(std::vector<Point> pts) {
  Forest f;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) f.add_segment(pts[i], pts[i + 1]);
  if (pts.size() == 1) f.add_point(pts[0]);
  return f;
}

Forest join(Forest a, const Forest& b) {
  a.merge(b);
  return a;
}

// Random forest on odd lattice points in (0, 16): groups of terminals joined by
// their minimum spanning tree.
struct LatticeForest {
  Forest forest;
  std::vector<Point> terminals;
};

LatticeForest random_lattice_forest(Rng& rng, int n, int groups) {
  LatticeForest out;
  std::vector<Point> pts;
  while (static_cast<int>(pts.size()) < n) {
    Point p{1.0 + 2 * rng.below(8), 1.0 + 2 * rng.below(8)};
    if (std::find(pts.begin(), pts.end(), p) == pts.end()) pts.push_back(p);
  }
  out.terminals = pts;
  for (int g = 0; g < groups; ++g) {
    std::vector<Point> grp;
    for (int i = g; i < n; i += groups) grp.push_back(pts[i]);
    // Prim on the group
    std::vector<bool> in(grp.size(), false);
    in[0] = true;
    out.forest.add_point(grp[0]);
    for (std::size_t step = 1; step < grp.size(); ++step) {
      double best = 1e18;
      std::size_t bi = 0, bj = 0;
      for (std::size_t i = 0; i < grp.size(); ++i)
        for (std::size_t j = 0; j < grp.size(); ++j)
          if (in[i] && !in[j] && dist(grp[i], grp[j]) < best) best = dist(grp[i], grp[j]), bi = i, bj = j;
      in[bj] = true;
      out.forest.add_segment(grp[bi], grp[bj]);
    }
  }
  return out;
}

std::vector<Square> all_squares(const Dissection& d, double min_side) {
  std::vector<Square> out, stack{d.root()};
  while (!stack.empty()) {
    Square sq = stack.back();
    stack.pop_back();
    out.push_back(sq);
    if (sq.side / 2 >= min_side)
      for (int q = 0; q < 4; ++q) stack.push_back(sq.child(q));
  }
  return out;
}

int side_count(const Forest& f, const Square& sq, int side) {
  // rho = -1 reports every side, with the count in front of the details
  for (const auto& r : check_boundary_components(f, sq, -1))
    if (r.side == side) return std::stoi(r.details);
  return 0;
}

// Non-corner components of g on a side that have positive length yet miss
// every contact of f with that side. A private side ending on the side adds a
// lone point there, which is not counted here.
int fresh_collinear_components(const Forest& f, const Forest& g, const Square& sq, int side) {
  auto before = detail::side_components(detail::clip_exact(detail::planarize(f), sq), sq, side);
  auto after = detail::side_components(detail::clip_exact(detail::planarize(g), sq), sq, side);
  const bool horizontal = side % 2 == 0;
  const double lo = horizontal ? sq.x0() : sq.y0();
  const double hi = horizontal ? sq.x1() : sq.y1();
  int fresh = 0;
  for (auto [a, b] : after) {
    if (a <= lo || b >= hi || a == b) continue;
    bool old = false;
    for (auto [c, d] : before) old = old || (c <= b && d >= a);
    if (!old) ++fresh;
  }
  return fresh;
}

}  // namespace

TEST(BoundaryComponents, Examples) {
  const Square sq{{0, 0}, 8, 0};
  EXPECT_TRUE(check_boundary_components(Forest{}, sq, 0).empty());

  Forest three = join(join(path({{1, -1}, {1, 1}}), path({{3, -1}, {3, 1}})), path({{5, -1}, {5, 1}}));
  auto r = check_boundary_components(three, sq, 2);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].side, 0);
  EXPECT_EQ(r[0].kind, PropertyKind::BoundaryComponents);
  EXPECT_TRUE(check_boundary_components(three, sq, 3).empty());

  // a piece running into the corner does not count
  Forest corner = join(join(path({{-1, 0}, {2, 0}}), path({{4, -1}, {4, 1}})), path({{6, -1}, {6, 1}}));
  EXPECT_TRUE(check_boundary_components(corner, sq, 2).empty());
  EXPECT_EQ(side_count(corner, sq, 0), 2);
  // touching a corner from outside also covers both incident sides
  EXPECT_EQ(side_count(path({{-1, -1}, {1, 1}}), sq, 0), 0);
  EXPECT_EQ(side_count(path({{-1, -1}, {1, 1}}), sq, 3), 0);
}

TEST(PortalProperty, Examples) {
  const Square sq{{0, 0}, 8, 0};
  const int m = 4;  // portals every 2 units
  EXPECT_TRUE(check_portal_property(Forest{}, sq, m).empty());
  EXPECT_TRUE(check_portal_property(path({{2, -1}, {2, 1}}), sq, m).empty());
  auto r = check_portal_property(path({{3, -1}, {3, 1}}), sq, m);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].kind, PropertyKind::Portals);
  EXPECT_TRUE(check_portal_property(path({{1, 0}, {3, 0}}), sq, m).empty());
  // the left side wraps into the bottom through the corner
  EXPECT_TRUE(check_portal_property(path({{0, 1.5}, {0, 0.5}}), sq, m).size() == 1);
  EXPECT_TRUE(check_portal_property(path({{0, 1}, {0, 0}, {1, 0}}), sq, m).empty());
  // two crossings, one on a portal
  EXPECT_EQ(check_portal_property(join(path({{4, -1}, {4, 1}}), path({{8.5, 3}, {7.5, 3}})), sq, m).size(), 1u);
}

TEST(Locality, Examples) {
  const Square sq{{0, 0}, 16, 0};
  const int gamma = 2;
  std::vector<Point> one{{1, 1}, {9, 9}};
  EXPECT_TRUE(check_locality(join(path({{1, 1}, {1, -1}}), path({{9, 9}, {9, 17}})), sq, gamma, one).empty());

  std::vector<Point> two{{1, 1}, {5, 1}};
  Forest apart = join(path({{1, 1}, {1, -1}}), path({{5, 1}, {5, -1}}));
  auto r = check_locality(apart, sq, gamma, two);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].kind, PropertyKind::Locality);

  // joined inside the square
  EXPECT_TRUE(check_locality(join(apart, path({{1, 1}, {5, 1}})), sq, gamma, two).empty());
  // joined only outside the square still violates
  EXPECT_EQ(check_locality(join(apart, path({{1, -1}, {5, -1}})), sq, gamma, two).size(), 1u);
  // neither reaches the boundary
  EXPECT_TRUE(check_locality(join(path({{1, 1}, {2, 2}}), path({{5, 1}, {6, 2}})), sq, gamma, two).empty());
  // only one reaches it
  EXPECT_TRUE(check_locality(join(path({{1, 1}, {1, -1}}), path({{5, 1}, {6, 2}})), sq, gamma, two).empty());
}

TEST(LocalityRepair, LocalForestUnchanged) {
  Dissection d(32, 16, 16);
  std::vector<Point> terms{{1, 3}, {7, 3}};
  Forest f = path({{1, 3}, {7, 3}, {7, 9}});
  auto r = locality_repair(f, d, 2, terms);
  EXPECT_EQ(r.forest, f);
  EXPECT_EQ(r.repairs, 0);
  EXPECT_DOUBLE_EQ(r.added_length, 0);
}

TEST(LocalityRepair, OppositeSidesJoinedByPrivateSide) {
  // root is [-16,16]^2; the cell [0,8]^2 of [0,16]^2 is left and right of the two terminals
  Dissection d(32, 16, 16);
  std::vector<Point> terms{{1, 3}, {7, 3}};
  Forest f = join(path({{1, 3}, {-1, 3}}), path({{7, 3}, {17, 3}}));
  const Square R{{0, 0}, 16, 1};
  ASSERT_EQ(check_locality(f, R, 2, terms).size(), 1u);
  auto r = locality_repair(f, d, 2, terms);
  EXPECT_EQ(r.repairs, 1);
  // left and right sides touch F, the top is private
  EXPECT_NEAR(r.added_length, 24, 1e-12);
  EXPECT_TRUE(connected(r.forest, {1, 3}, {7, 3}));
  for (const auto& sq : all_squares(d, 4)) EXPECT_TRUE(check_locality(r.forest, sq, 2, terms).empty());
}

TEST(LocalityRepair, AdjacentSides) {
  Dissection d(32, 16, 16);
  std::vector<Point> terms{{2, 1}, {7, 5}};
  Forest f = join(path({{2, 1}, {2, -1}}), path({{7, 5}, {17, 5}}));
  auto r = locality_repair(f, d, 2, terms);
  EXPECT_EQ(r.repairs, 1);
  EXPECT_LE(r.added_length, 4 * 8 + 1e-12);
  EXPECT_TRUE(connected(r.forest, {2, 1}, {7, 5}));
  for (const auto& sq : all_squares(d, 4)) EXPECT_TRUE(check_locality(r.forest, sq, 2, terms).empty());
}

TEST(LocalityRepair, RefusesWithoutBoundaryBound) {
  Dissection d(32, 16, 16);
  std::vector<Point> terms{{1, 1}, {3, 3}, {5, 5}};
  Forest f;
  for (double x : {1.0, 3.0, 5.0}) f.add_segment({x, x}, {x, -1});
  try {
    locality_repair(f, d, 2, terms, 1);
    FAIL() << "expected refusal";
  } catch (const RepairRefused& e) {
    EXPECT_FALSE(e.reports.empty());
    for (const auto& rep : e.reports) EXPECT_EQ(rep.kind, PropertyKind::BoundaryComponents);
  }
}

TEST(LocalityRepair, RandomForestsBecomeLocal) {
  Rng rng(11);
  const int gamma = 2;
  for (int trial = 0; trial < 30; ++trial) {
    auto lf = random_lattice_forest(rng, 4 + static_cast<int>(rng.below(5)), 1 + static_cast<int>(rng.below(3)));
    Dissection d(32, 2 * static_cast<long long>(rng.below(8)), 2 * static_cast<long long>(rng.below(8)));
    auto r = locality_repair(lf.forest, d, gamma, lf.terminals);
    const auto squares = all_squares(d, 2.0 * gamma);
    for (const auto& sq : squares) {
      EXPECT_TRUE(check_locality(r.forest, sq, gamma, lf.terminals).empty()) << "trial " << trial;
      for (int s = 0; s < 4; ++s) EXPECT_EQ(fresh_collinear_components(lf.forest, r.forest, sq, s), 0) << "trial " << trial;
    }
    for (const auto& p : lf.forest.points()) EXPECT_TRUE(r.forest.contains(p));
    for (const auto& t : lf.terminals)
      for (const auto& u : lf.terminals)
        if (connected(lf.forest, t, u)) EXPECT_TRUE(connected(r.forest, t, u));
  }
}

TEST(LocalityRepair, PrivateSideEndpointAddsContact) {
  // the private right side of the cell [0,8]^2 ends at (8,0), a non-corner
  // point on the bottom side of [0,16]^2 that F never touched
  Dissection d(32, 16, 16);
  std::vector<Point> terms{{1, 3}, {7, 3}};
  Forest f = join(path({{1, 3}, {-1, 3}}), path({{7, 3}, {17, 3}}));
  auto r = locality_repair(f, d, 2, terms);
  const Square R{{0, 0}, 16, 1};
  EXPECT_EQ(side_count(f, R, 0), 0);
  EXPECT_EQ(side_count(r.forest, R, 0), 1);
  EXPECT_EQ(fresh_collinear_components(f, r.forest, R, 0), 0);
}

TEST(LocalityRepair, MeanAddedLengthOverShifts) {
  Rng rng(12);
  const int gamma = 4;
  auto lf = random_lattice_forest(rng, 10, 3);
  const double len = forest_length(lf.forest);
  double total = 0;
  const int shifts = 200;
  for (int k = 0; k < shifts; ++k) {
    Dissection d(32, 2 * static_cast<long long>(rng.below(8)), 2 * static_cast<long long>(rng.below(8)));
    total += locality_repair(lf.forest, d, gamma, lf.terminals).added_length;
  }
  EXPECT_LE(total / shifts, 112.0 / gamma * len * 1.2);
}

TEST(GridComponents, Examples) {
  EXPECT_EQ(grid_component_count(path({{1, 1}, {9, 1}})), 4u);
  EXPECT_EQ(grid_component_count(Forest{}), 0u);
  EXPECT_EQ(grid_component_count(path({{1, 1}, {5, 1}, {5, 5}})), 4u);
  // through a grid vertex: one component, not two
  EXPECT_EQ(grid_component_count(path({{1, 1}, {3, 3}})), 1u);
  // two segments crossing on a grid line share the crossing
  EXPECT_EQ(grid_component_count(join(path({{1, 1}, {3, 3}}), path({{1, 3}, {3, 1}}))), 1u);
  EXPECT_FALSE(grid_component_count(path({{2, 1}, {5, 1}})).has_value());
  EXPECT_FALSE(grid_component_count(path({{1, 4}, {5, 1}})).has_value());
}

TEST(GridComponents, AtMostLength) {
  Rng rng(13);
  for (int trial = 0; trial < 60; ++trial) {
    auto lf = random_lattice_forest(rng, 3 + static_cast<int>(rng.below(8)), 1 + static_cast<int>(rng.below(3)));
    auto c = grid_component_count(lf.forest);
    ASSERT_TRUE(c.has_value());
    EXPECT_LE(static_cast<double>(*c), forest_length(lf.forest) + 1e-9);
  }
}
