#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "esf/dissection.hpp"

using namespace esf;

TEST(Dissection, BoxSide) {
  EXPECT_EQ(build_dissection(500, 1).L(), 1024);
  EXPECT_EQ(build_dissection(512, 1).L(), 1024);
  EXPECT_EQ(build_dissection(1, 1).L(), 4);
  EXPECT_THROW(build_dissection(0, 1), InvalidArgument);
}

TEST(Dissection, ShiftIsEvenAndCovers) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Dissection d = build_dissection(300, seed);
    auto [a, b] = d.shift();
    EXPECT_EQ(a % 2, 0);
    EXPECT_EQ(b % 2, 0);
    Square r = d.root();
    EXPECT_TRUE(r.contains_closed({0, 0}));
    EXPECT_TRUE(r.contains_closed({300, 300}));
  }
}

TEST(Dissection, Deterministic) {
  Dissection a = build_dissection(700, 42), b = build_dissection(700, 42);
  EXPECT_EQ(a.shift(), b.shift());
  EXPECT_EQ(a.depth(), b.depth());
  EXPECT_EQ(a.leaf_of({13, 17}), b.leaf_of({13, 17}));
}

TEST(Dissection, LeavesHoldOneOddPoint) {
  Dissection d = build_dissection(100, 3);
  for (double x : {1.0, 37.0, 99.0})
    for (double y : {1.0, 55.0}) {
      Square leaf = d.leaf_of({x, y});
      EXPECT_EQ(leaf.side, 2);
      EXPECT_TRUE(leaf.contains_strictly({x, y}));
      EXPECT_EQ(leaf.level, d.depth());
    }
}

TEST(Parameters, Theoretical) {
  auto p = compute_parameters(0.5, 1024, false);
  EXPECT_EQ(p.m, 128);
  EXPECT_EQ(compute_parameters(1.0, 1024, false).gamma, 512);
  EXPECT_TRUE(p.warning.empty());
}

TEST(Parameters, Practical) {
  auto p = compute_parameters(0.5, 1024, true);
  EXPECT_EQ(p.m, 8);
  EXPECT_EQ(p.rho, 3);
  EXPECT_EQ(p.lambda, 16);
  EXPECT_EQ(p.gamma, 4);
  EXPECT_FALSE(p.warning.empty());
  EXPECT_THROW(compute_parameters(0, 1024, true), InvalidArgument);
}

TEST(Cells, Examples) {
  Square sq{{0, 0}, 16, 0};
  EXPECT_EQ(cell_of({1, 1}, sq, 4), (CellIndex{0, 0}));
  EXPECT_EQ(cell_of({15, 15}, sq, 4), (CellIndex{3, 3}));
  EXPECT_EQ(cell_of({9, 3}, sq, 4), (CellIndex{0, 2}));
  EXPECT_THROW(cell_of({17, 1}, sq, 4), InvalidArgument);
  CellGrid grid{sq, 4};
  Square c = grid.cell(0, 2);
  EXPECT_TRUE(c.contains_strictly({9, 3}));
}

TEST(Portals, CountAndRefinement) {
  Square sq{{0, 0}, 16, 2};
  auto ps = sq.portals(8);
  EXPECT_EQ(ps.size(), 32u);
  std::set<Point> uniq(ps.begin(), ps.end());
  EXPECT_EQ(uniq.size(), 32u);

  // every parent portal on a side shared with a child is a child portal
  for (int q = 0; q < 4; ++q) {
    Square ch = sq.child(q);
    auto cps = ch.portals(8);
    std::set<Point> child(cps.begin(), cps.end());
    for (const auto& p : ps)
      if (ch.on_boundary(p)) EXPECT_TRUE(child.count(p)) << p.x << "," << p.y;
  }
}

TEST(Portals, AdmissibleRefinesDownward) {
  Dissection d(64, 0, 0, 4);
  // the vertical midline has level 1; spacing 64 / (2*4) = 8
  EXPECT_EQ(d.line_level(32, true), 1);
  EXPECT_DOUBLE_EQ(d.crossing_spacing(1), 8);
  EXPECT_TRUE(d.admissible({32, 8}));
  EXPECT_FALSE(d.admissible({32, 4}));
  EXPECT_FALSE(d.admissible({0, 8}));  // box edge
  Square root = d.root();
  Square sw = root.child(0);
  auto right = d.admissible_portals(sw, 1);
  EXPECT_EQ(right.size(), 4u);  // y = 8, 16, 24, 32
  Square sww = sw.child(1);
  for (const auto& p : d.admissible_portals(sww, 1)) EXPECT_TRUE(d.admissible(p));
}

TEST(Dissection, LineDepthDistribution) {
  // Over random shifts, the vertical line x = 0 falls on a dissection
  // line of level i with probability about 2^i / L for i >= 2.
  const long long L = 64;
  const int trials = 20000;
  std::vector<int> hits(8, 0);
  Rng rng(5);
  for (int t = 0; t < trials; ++t) {
    long long a = 2 * static_cast<long long>(rng.below(L / 2));
    Dissection d(L, a, 0, 8);
    int lev = d.line_level(0, true);
    if (lev >= 0) ++hits[lev];
  }
  for (int i = 2; i <= 5; ++i) {
    double expect = std::ldexp(1.0, i) / L;
    double got = static_cast<double>(hits[i]) / trials;
    EXPECT_NEAR(got, expect, 4 * std::sqrt(expect / trials) + 0.01) << "level " << i;
  }
}
