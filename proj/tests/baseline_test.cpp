#include <gtest/gtest.h>

#include <cmath>

#include "esf/baseline.hpp"
#include "esf/oracle.hpp"

using namespace esf;

namespace {

Instance forest_instance(std::vector<Point> pts, std::vector<std::pair<int, int>> pairs) {
  Instance inst;
  for (std::size_t i = 0; i < pts.size(); ++i) inst.terminals.push_back({"t" + std::to_string(i), pts[i]});
  for (auto [a, b] : pairs) inst.pairs.push_back({"t" + std::to_string(a), "t" + std::to_string(b)});
  return inst;
}

}  // namespace

TEST(GW, CollinearTerminals) {
  auto inst = forest_instance({{0, 0}, {1, 0}, {2, 0}}, {{0, 1}, {1, 2}});
  Forest f = gw_steiner_forest(inst);
  EXPECT_TRUE(pairs_satisfied(inst, f));
  EXPECT_NEAR(forest_length(f), 2.0, 1e-12);
}

TEST(GW, DualFeasibleAndWithinTwice) {
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const int n = 2 + 2 * static_cast<int>(rng.below(3));
    std::vector<Point> pts;
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i) pts.push_back({rng.uniform() * 50, rng.uniform() * 50});
    for (int i = 0; i + 1 < n; i += 2) pairs.push_back({i, i + 1});
    auto inst = forest_instance(pts, pairs);
    DualState dual;
    Forest f = gw_steiner_forest(inst, &dual);
    ASSERT_TRUE(pairs_satisfied(inst, f));
    // no terminal edge is overpaid by the moats crossing it
    double ysum = 0;
    for (const auto& s : dual.sets) ysum += s.y;
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v) {
        double load = 0;
        for (const auto& s : dual.sets) {
          bool iu = std::count(s.members.begin(), s.members.end(), static_cast<std::size_t>(u)) > 0;
          bool iv = std::count(s.members.begin(), s.members.end(), static_cast<std::size_t>(v)) > 0;
          if (iu != iv) load += s.y;
        }
        EXPECT_LE(load, dist(pts[u], pts[v]) + 1e-9);
      }
    EXPECT_LE(forest_length(f), 2 * ysum + 1e-9);
    EXPECT_LE(forest_length(f), 2 * brute_force_steiner_forest(inst).cost + 1e-6);
  }
}

TEST(MstForest, Examples) {
  const double h = std::sqrt(3.0) / 2;
  auto tri = forest_instance({{0, 0}, {1, 0}, {0.5, h}}, {{0, 1}, {1, 2}, {0, 2}});
  EXPECT_NEAR(forest_length(mst_forest(tri)), 2.0, 1e-12);
  auto one = forest_instance({{0, 0}, {3, 4}, {9, 9}}, {{0, 1}});
  Forest f = mst_forest(one);
  EXPECT_NEAR(forest_length(f), 5.0, 1e-12);
  EXPECT_TRUE(pairs_satisfied(one, f));
}

TEST(PcsfBaseline, TwoFarTerminals) {
  Instance inst;
  inst.mode = Mode::Mpcsf;
  inst.terminals = {{"a", {0, 0}, 1}, {"b", {10, 0}, 1}};
  auto b = pcsf_baseline(inst);
  EXPECT_DOUBLE_EQ(b.omega, 2.0);
  EXPECT_TRUE(b.forest.empty());
  EXPECT_THROW(pcsf_baseline(forest_instance({{0, 0}, {1, 1}}, {{0, 1}})), InvalidArgument);
}

TEST(PcsfBaseline, OptimumAtLeastAThird) {
  Rng rng(8);
  for (int k = 0; k < 25; ++k) {
    Instance inst;
    inst.mode = k % 3 == 0 ? Mode::AsymMpcsf : Mode::Mpcsf;
    const int n = 3 + static_cast<int>(rng.below(4));
    for (int i = 0; i < n; ++i) {
      Terminal t{"v" + std::to_string(i), {rng.uniform() * 30, rng.uniform() * 30}};
      t.weight = rng.uniform() * 4;
      t.weight_s = rng.uniform() * 4;
      t.weight_t = rng.uniform() * 4;
      inst.terminals.push_back(t);
    }
    auto b = pcsf_baseline(inst);
    EXPECT_NEAR(objective(inst, b.forest), b.omega, 1e-9);
    auto opt = brute_force_mpcsf(inst);
    EXPECT_GE(opt.objective, b.omega / 3 - 1e-9);
    EXPECT_GE(b.omega, opt.objective - 1e-9);
  }
}

TEST(PcsfBaseline, PairPenalties) {
  auto inst = forest_instance({{0, 0}, {4, 0}, {0, 30}, {1, 31}}, {{0, 1}, {2, 3}});
  inst.mode = Mode::Pcsf;
  inst.pairs[0].penalty = 10;
  inst.pairs[1].penalty = 1;
  auto b = pcsf_baseline(inst);
  EXPECT_NEAR(b.omega, 4 + 1, 1e-9);
  EXPECT_GE(brute_force_pcsf(inst).objective, b.omega / 3);
}
