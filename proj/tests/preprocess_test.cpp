#include <gtest/gtest.h>

#include <cmath>

#include "esf/preprocess.hpp"

using namespace esf;

namespace {

Instance pair_instance(Point a, Point b, double eps = 0.5) {
  Instance inst;
  inst.epsilon = eps;
  inst.terminals = {{"a", a}, {"b", b}};
  inst.pairs = {{"a", "b"}};
  return inst;
}

bool odd(double v) { return std::fmod(std::abs(v), 2.0) == 1.0; }

}  // namespace

TEST(NormalizeForest, SinglePair) {
  const double d = 3.7;
  auto si = normalize_forest_instance(pair_instance({2, 5}, {2 + d, 5}));
  ASSERT_FALSE(si.empty_forest);
  for (const auto& t : si.base.terminals) {
    EXPECT_TRUE(odd(t.location.x));
    EXPECT_TRUE(odd(t.location.y));
  }
  const double n = 2, target = 16 * std::sqrt(2.0) * n / 0.5;
  const double got = dist(si.base.terminals[0].location, si.base.terminals[1].location);
  EXPECT_NEAR(got, target, 2 * std::sqrt(2.0));
  EXPECT_LE(si.extent(), 2 * n * n / 0.5 * target);
}

TEST(NormalizeForest, Collocated) {
  auto si = normalize_forest_instance(pair_instance({1, 1}, {1, 1}));
  EXPECT_TRUE(si.empty_forest);
  Instance none;
  none.terminals = {{"a", {0, 0}}};
  EXPECT_THROW(normalize_forest_instance(none), InvalidArgument);
}

TEST(NormalizeForest, SnapDisplacement) {
  Rng rng(3);
  Instance inst;
  for (int i = 0; i < 8; ++i) inst.terminals.push_back({std::to_string(i), {rng.uniform() * 10, rng.uniform() * 10}});
  for (int i = 0; i < 8; i += 2) inst.pairs.push_back({std::to_string(i), std::to_string(i + 1)});
  auto si = normalize_forest_instance(inst);
  for (std::size_t i = 0; i < inst.terminals.size(); ++i) {
    Point exact = si.to_scaled(inst.terminals[i].location);
    EXPECT_LE(dist(exact, si.base.terminals[i].location), std::sqrt(2.0) + 1e-9);
    // to_raw inverts to_scaled
    Point back = si.to_raw(exact);
    EXPECT_NEAR(back.x, inst.terminals[i].location.x, 1e-9);
    EXPECT_NEAR(back.y, inst.terminals[i].location.y, 1e-9);
  }
}

TEST(NormalizeForest, RestoreRoundTrip) {
  auto inst = pair_instance({0.3, 0.2}, {4.1, 2.9});
  auto si = normalize_forest_instance(inst);
  Point a = si.base.terminals[0].location, b = si.base.terminals[1].location;
  Point mid{a.x + 1, b.y};  // some Steiner bend
  std::vector<Segment> segs{{a, mid}, {mid, b}};
  Forest f = restore_forest(si, inst, segs, {0, 1});
  EXPECT_TRUE(pairs_satisfied(inst, f));
  const double scaled = dist(a, mid) + dist(mid, b);
  const double connectors = dist(inst.terminals[0].location, si.to_raw(a)) + dist(inst.terminals[1].location, si.to_raw(b));
  EXPECT_NEAR(forest_length(f), scaled / si.scale_factor + connectors, 1e-9);
}

TEST(NormalizeMultiplicative, Components) {
  Instance inst;
  inst.mode = Mode::Mpcsf;
  inst.terminals = {{"a", {0, 0}, 1}, {"b", {0.5, 0}, 1}, {"c", {10, 0}, 1}, {"d", {10.5, 0}, 1}};
  auto si = normalize_multiplicative(inst, 1.0);
  EXPECT_EQ(si.subinstances.size(), 2u);
  EXPECT_EQ(si.subinstance_terminals[0], (std::vector<std::size_t>{0, 1}));
  for (const auto& t : si.base.terminals) {
    EXPECT_TRUE(odd(t.location.x));
    EXPECT_TRUE(odd(t.location.y));
  }
  EXPECT_DOUBLE_EQ(si.scale_factor, 8.0 * 4 / (inst.epsilon * 1.0));

  Instance line;
  line.mode = Mode::Mpcsf;
  line.terminals = {{"a", {0, 0}, 1}, {"b", {1, 0}, 1}, {"c", {2, 0}, 1}};
  EXPECT_EQ(normalize_multiplicative(line, 1.0).subinstances.size(), 1u);

  Instance single;
  single.mode = Mode::Mpcsf;
  single.terminals = {{"a", {3, 3}, 2}};
  auto s1 = normalize_multiplicative(single, 1.0);
  EXPECT_EQ(s1.subinstances.size(), 1u);
  EXPECT_TRUE(s1.empty_forest);

  EXPECT_THROW(normalize_multiplicative(line, 0.0), InvalidArgument);
  EXPECT_THROW(normalize_multiplicative(pair_instance({0, 0}, {1, 1}), 1.0), InvalidArgument);
}

TEST(NormalizeMultiplicative, NoStraddlingPair) {
  Rng rng(9);
  for (int k = 0; k < 20; ++k) {
    Instance inst;
    inst.mode = Mode::SMpcsf;
    for (int i = 0; i < 7; ++i) inst.terminals.push_back({std::to_string(i), {rng.uniform() * 20, rng.uniform() * 20}, 1});
    const double g = 1 + rng.uniform() * 6;
    auto si = normalize_multiplicative(inst, g);
    std::vector<int> sub(inst.terminals.size());
    for (std::size_t s = 0; s < si.subinstance_terminals.size(); ++s)
      for (auto i : si.subinstance_terminals[s]) sub[i] = static_cast<int>(s);
    for (std::size_t i = 0; i < inst.terminals.size(); ++i)
      for (std::size_t j = 0; j < inst.terminals.size(); ++j)
        if (dist(inst.terminals[i].location, inst.terminals[j].location) <= g) EXPECT_EQ(sub[i], sub[j]);
  }
}

TEST(GuessSchedule, Examples) {
  Instance four;
  four.terminals.resize(4);
  four.epsilon = 1.0;
  EXPECT_EQ(guess_opt_schedule(four, 16), (std::vector<double>{4, 8, 16}));
  Instance one;
  one.terminals.resize(1);
  EXPECT_EQ(guess_opt_schedule(one, 1), (std::vector<double>{1}));
  Instance three;
  three.terminals.resize(3);
  three.epsilon = 0.5;
  auto g = guess_opt_schedule(three, 27);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_DOUBLE_EQ(g[0], 9);
  EXPECT_DOUBLE_EQ(g[1], 13.5);
  EXPECT_DOUBLE_EQ(g[2], 20.25);
  EXPECT_DOUBLE_EQ(g[3], 27);
  EXPECT_THROW(guess_opt_schedule(three, 0), InvalidArgument);
}
