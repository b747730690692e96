#include <gtest/gtest.h>

#include <chrono>
#include <cmath>

#include "esf/oracle.hpp"

using namespace esf;

namespace {

double mst_length(const std::vector<Point>& pts) {
  const std::size_t n = pts.size();
  std::vector<double> best(n, 1e300);
  std::vector<bool> in(n, false);
  double total = 0;
  if (n == 0) return 0;
  best[0] = 0;
  for (std::size_t it = 0; it < n; ++it) {
    std::size_t u = n;
    for (std::size_t i = 0; i < n; ++i)
      if (!in[i] && (u == n || best[i] < best[u])) u = i;
    in[u] = true;
    total += best[u];
    for (std::size_t i = 0; i < n; ++i)
      if (!in[i]) best[i] = std::min(best[i], dist(pts[u], pts[i]));
  }
  return total;
}

// Plain gradient descent on the Steiner point; an independent check of the
// closed form.
double descend_fermat(const Point& a, const Point& b, const Point& c) {
  Point s{(a.x + b.x + c.x) / 3, (a.y + b.y + c.y) / 3};
  double step = 0.1;
  auto f = [&](Point p) { return dist(p, a) + dist(p, b) + dist(p, c); };
  for (int it = 0; it < 200000 && step > 1e-14; ++it) {
    double gx = 0, gy = 0;
    for (const Point* p : {&a, &b, &c}) {
      double d = std::max(dist(s, *p), 1e-15);
      gx += (s.x - p->x) / d;
      gy += (s.y - p->y) / d;
    }
    Point t{s.x - step * gx, s.y - step * gy};
    if (f(t) < f(s)) s = t, step *= 1.2;
    else step *= 0.5;
  }
  return f(s);
}

Instance sf_instance(std::vector<Point> pts, std::vector<std::pair<int, int>> pairs) {
  Instance inst;
  for (std::size_t i = 0; i < pts.size(); ++i) inst.terminals.push_back({"t" + std::to_string(i), pts[i], 0, 0, 0});
  for (auto [a, b] : pairs) inst.pairs.push_back({"t" + std::to_string(a), "t" + std::to_string(b), 0});
  return inst;
}

double forest_validity_length(const OracleResult& r) { return forest_length(r.forest); }

}  // namespace

TEST(FermatPoint, EquilateralTriangle) {
  auto r = fermat_point({0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2});
  EXPECT_NEAR(r.length, std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(r.length, descend_fermat({0, 0}, {1, 0}, {0.5, std::sqrt(3.0) / 2}), 1e-9);
}

TEST(FermatPoint, DegenerateCollinear) {
  auto r = fermat_point({0, 0}, {2, 0}, {5, 0});
  EXPECT_DOUBLE_EQ(r.length, 5.0);
  EXPECT_EQ(r.point, (Point{2, 0}));
}

TEST(FermatPoint, RightIsoscelesInterior) {
  Point a{0, 0}, b{2, 0}, c{0, 2};
  auto r = fermat_point(a, b, c);
  EXPECT_LT(r.length, 4.0);
  EXPECT_NE(r.point, a);
  EXPECT_NEAR(r.length, dist(r.point, a) + dist(r.point, b) + dist(r.point, c), 1e-12);
  EXPECT_NEAR(r.length, descend_fermat(a, b, c), 1e-10);
}

TEST(FermatPoint, SteinerRatioBounds) {
  Rng rng(5);
  for (int rep = 0; rep < 500; ++rep) {
    std::vector<Point> p;
    for (int i = 0; i < 3; ++i) p.push_back({rng.uniform(-10, 10), rng.uniform(-10, 10)});
    auto r = fermat_point(p[0], p[1], p[2]);
    double mst = mst_length(p);
    EXPECT_LE(r.length, mst + 1e-12);
    EXPECT_GE(r.length, std::sqrt(3.0) / 2 * mst - 1e-12);
    EXPECT_NEAR(r.length, dist(r.point, p[0]) + dist(r.point, p[1]) + dist(r.point, p[2]), 1e-9);
  }
}

TEST(SteinerOracle, UnitSquare) {
  auto t = steiner_minimal_tree({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  EXPECT_NEAR(t.length, 1 + std::sqrt(3.0), 1e-9);
  Forest f;
  for (const auto& s : t.segments) f.add_segment(s.a, s.b);
  EXPECT_NEAR(forest_length(f), t.length, 1e-9);
  EXPECT_TRUE(connected(f, {0, 0}, {1, 1}));
  EXPECT_TRUE(connected(f, {1, 0}, {0, 1}));
}

TEST(SteinerOracle, LadderOfSixIsTwoSquares) {
  // 2x1 block of unit squares; two unit-square trees glued along the middle
  // edge give an upper bound.
  std::vector<Point> pts = {{0, 0}, {1, 0}, {2, 0}, {0, 1}, {1, 1}, {2, 1}};
  auto t = steiner_minimal_tree(pts);
  EXPECT_LE(t.length, mst_length(pts) + 1e-9);
  EXPECT_GE(t.length, std::sqrt(3.0) / 2 * mst_length(pts) - 1e-9);
  EXPECT_LE(t.length, 2 * (1 + std::sqrt(3.0)) + 1e-9);
}

TEST(SteinerOracle, RatioBoundsAndTreeValidity) {
  Rng rng(17);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = 3 + static_cast<int>(rng.below(5));
    std::vector<Point> pts;
    for (int i = 0; i < n; ++i) pts.push_back({rng.uniform(0, 20), rng.uniform(0, 20)});
    auto t = steiner_minimal_tree(pts);
    double mst = mst_length(pts);
    EXPECT_LE(t.length, mst + 1e-9);
    EXPECT_GE(t.length, std::sqrt(3.0) / 2 * mst - 1e-9);
    Forest f;
    for (const auto& s : t.segments) f.add_segment(s.a, s.b);
    EXPECT_NEAR(forest_length(f), t.length, 1e-7);
    for (int i = 1; i < n; ++i) EXPECT_TRUE(connected(f, pts[0], pts[i]));
  }
}

TEST(SteinerOracle, SevenPointsInReasonableTime) {
  Rng rng(99);
  std::vector<Point> pts;
  for (int i = 0; i < 7; ++i) pts.push_back({rng.uniform(0, 50), rng.uniform(0, 50)});
  auto t0 = std::chrono::steady_clock::now();
  auto t = steiner_minimal_tree(pts);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_GT(t.length, 0);
  EXPECT_LT(secs, 10.0);
}

TEST(SteinerOracle, RefusesEightDistinctPoints) {
  std::vector<Point> pts;
  for (int i = 0; i < 8; ++i) pts.push_back({double(i), double(i * i)});
  EXPECT_THROW(steiner_minimal_tree(pts), InvalidArgument);
  std::vector<Point> dup = {{0, 0}, {0, 0}, {1, 0}, {2, 1}, {3, 0}, {4, 4}, {5, 1}, {6, 2}};
  EXPECT_NO_THROW(steiner_minimal_tree(dup));
}

TEST(BruteForceSteinerForest, Examples) {
  auto one = brute_force_steiner_forest(sf_instance({{0, 0}, {3, 4}}, {{0, 1}}));
  EXPECT_DOUBLE_EQ(one.cost, 5.0);

  auto far = brute_force_steiner_forest(sf_instance({{0, 0}, {1, 0}, {100, 0}, {101, 0}}, {{0, 1}, {2, 3}}));
  EXPECT_DOUBLE_EQ(far.cost, 2.0);
  EXPECT_FALSE(connected(far.forest, {0, 0}, {100, 0}));

  auto sq = brute_force_steiner_forest(sf_instance({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 2}, {1, 3}}));
  EXPECT_NEAR(sq.cost, 1 + std::sqrt(3.0), 1e-9);
  EXPECT_NEAR(forest_validity_length(sq), sq.cost, 1e-9);
}

TEST(BruteForceSteinerForest, RigidMotionInvariance) {
  Rng rng(23);
  for (int rep = 0; rep < 15; ++rep) {
    std::vector<Point> pts;
    for (int i = 0; i < 6; ++i) pts.push_back({rng.uniform(0, 10), rng.uniform(0, 10)});
    std::vector<std::pair<int, int>> pairs = {{0, 1}, {2, 3}, {4, 5}};
    double base = brute_force_steiner_forest(sf_instance(pts, pairs)).cost;
    double th = rng.uniform(0, 6.28), dx = rng.uniform(-50, 50), dy = rng.uniform(-50, 50);
    std::vector<Point> moved;
    for (auto p : pts)
      moved.push_back({std::cos(th) * p.x - std::sin(th) * p.y + dx, std::sin(th) * p.x + std::cos(th) * p.y + dy});
    EXPECT_NEAR(brute_force_steiner_forest(sf_instance(moved, pairs)).cost, base, 1e-8);
  }
}

TEST(BruteForceMpcsf, Examples) {
  Instance zero;
  zero.mode = Mode::Mpcsf;
  zero.terminals = {{"a", {0, 0}, 0, 0, 0}, {"b", {5, 0}, 0, 0, 0}};
  auto z = brute_force_mpcsf(zero);
  EXPECT_EQ(z.cost, 0.0);
  EXPECT_TRUE(z.forest.empty());

  Instance close;
  close.mode = Mode::Mpcsf;
  close.terminals = {{"a", {0, 0}, 1, 1, 1}, {"b", {0.5, 0}, 1, 1, 1}};
  auto c = brute_force_mpcsf(close);
  EXPECT_DOUBLE_EQ(c.cost, 0.5);
  EXPECT_DOUBLE_EQ(c.collected, 4.0);
}

TEST(BruteForceMpcsf, TargetVariant) {
  Instance inst;
  inst.mode = Mode::SMpcsf;
  inst.terminals = {{"a", {0, 0}, 1, 1, 1}, {"b", {5, 0}, 1, 1, 1}};
  auto r = brute_force_mpcsf(inst, 4.0);
  EXPECT_TRUE(r.feasible);
  EXPECT_DOUBLE_EQ(r.cost, 5.0);
  auto none = brute_force_mpcsf(inst, 5.0);
  EXPECT_FALSE(none.feasible);
}

TEST(BruteForceKmst, AgreesWithSubsetEnumeration) {
  Rng rng(31);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<Point> pts;
    for (int i = 0; i < 5; ++i) pts.push_back({rng.uniform(0, 10), rng.uniform(0, 10)});
    for (std::size_t k = 0; k < 5; ++k) {
      auto r = brute_force_kmst(pts, 0, k);
      double best = 1e300;
      for (std::uint32_t m = 1; m < 32; m += 2)
        if (static_cast<std::size_t>(__builtin_popcount(m)) == k + 1) {
          std::vector<Point> sub;
          for (int i = 0; i < 5; ++i)
            if (m >> i & 1) sub.push_back(pts[i]);
          best = std::min(best, steiner_minimal_tree(sub).length);
        }
      EXPECT_NEAR(r.cost, best, 1e-12);
    }
  }
}

TEST(BruteForcePcsf, PaysPenaltyWhenCheaper) {
  Instance inst;
  inst.mode = Mode::Pcsf;
  inst.terminals = {{"a", {0, 0}, 0, 0, 0}, {"b", {1, 0}, 0, 0, 0}, {"c", {0, 50}, 0, 0, 0}, {"d", {50, 50}, 0, 0, 0}};
  inst.pairs = {{"a", "b", 10}, {"c", "d", 3}};
  auto r = brute_force_pcsf(inst);
  EXPECT_DOUBLE_EQ(r.objective, 1.0 + 3.0);
}

TEST(Partitions, BellNumbers) {
  const int bell[] = {1, 1, 2, 5, 15, 52, 203, 877};
  for (int n = 0; n <= 7; ++n) {
    int count = 0;
    for_each_partition(n, [&](const std::vector<int>&, int) { ++count; });
    EXPECT_EQ(count, bell[n]);
  }
}
