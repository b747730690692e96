#include <gtest/gtest.h>

#include "esf/io.hpp"

using namespace esf;

namespace {

std::size_t error_line(const std::string& text) {
  try {
    parse_instance(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST(ParseInstance, SteinerForest) {
  auto inst = parse_instance(
      "# two terminals\n"
      "mode steiner-forest\n"
      "\n"
      "terminal a 0 0\n"
      "terminal b 3 4   # trailing comment\n"
      "pair a b\n");
  EXPECT_EQ(inst.mode, Mode::SteinerForest);
  ASSERT_EQ(inst.terminals.size(), 2u);
  EXPECT_EQ(inst.terminals[1].location, (Point{3, 4}));
  ASSERT_EQ(inst.pairs.size(), 1u);
  EXPECT_EQ(inst.pairs[0].b, "b");
}

TEST(ParseInstance, FieldMapping) {
  auto inst = parse_instance("mode asym-mpcsf\nterminal a 1 1 ws 2 wt 0\nterminal b 2 2 w 3\neps-prime 0.25\n");
  EXPECT_DOUBLE_EQ(inst.terminals[0].weight_s, 2);
  EXPECT_DOUBLE_EQ(inst.terminals[0].weight_t, 0);
  EXPECT_DOUBLE_EQ(inst.terminals[1].weight, 3);
  EXPECT_DOUBLE_EQ(inst.epsilon_prime, 0.25);
  auto p = parse_instance("mode pcsf\nterminal a 0 0\nterminal b 1 0\npair a b penalty 7.5\nepsilon 0.3\n");
  EXPECT_DOUBLE_EQ(p.pairs[0].penalty, 7.5);
  EXPECT_DOUBLE_EQ(p.epsilon, 0.3);
  auto s = parse_instance("mode s-mpcsf\nprize-target 12\nterminal a 0 0 w 2\n");
  EXPECT_EQ(s.prize_target, 12.0);
}

TEST(ParseInstance, Errors) {
  EXPECT_EQ(error_line("mode steiner-forest\nterminal a 0 0\nterminal a 1 1\n"), 3u);
  EXPECT_EQ(error_line("mode steiner-forest\nterminal a 0 0\npair a zz\nterminal b 1 1\n"), 3u);
  EXPECT_EQ(error_line("terminal a 0 0\nterminal b 1 1\n"), 2u);
  EXPECT_EQ(error_line("mode steiner-forest\nsize 4\n"), 2u);
  EXPECT_EQ(error_line("mode nonsense\n"), 1u);
  EXPECT_EQ(error_line("mode pcsf\nterminal a x 0\n"), 2u);
  EXPECT_EQ(error_line("mode pcsf\nterminal a 0 0 q 1\n"), 2u);
  EXPECT_EQ(error_line("mode pcsf\nmode pcsf\n"), 2u);
  // pairs may point forward
  EXPECT_EQ(error_line("mode steiner-forest\npair a b\nterminal a 0 0\nterminal b 1 1\n"), 0u);
  try {
    parse_instance("mode steiner-forest\nterminal a 0 0\nterminal a 1 1\n");
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
  }
}

TEST(ParseInstance, RoundTrip) {
  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    Instance inst;
    inst.mode = static_cast<Mode>(rng.below(6));
    inst.epsilon = rng.uniform();
    inst.epsilon_prime = rng.uniform() * 1e-3;
    if (rng.below(2)) inst.prize_target = rng.uniform() * 1e6;
    const int n = 1 + static_cast<int>(rng.below(6));
    for (int i = 0; i < n; ++i) {
      Terminal t{"v" + std::to_string(i), {rng.uniform(-1e3, 1e3), rng.uniform() / 3}};
      if (rng.below(2)) t.weight = rng.uniform() * 10;
      if (rng.below(2)) t.weight_s = rng.uniform(), t.weight_t = rng.uniform();
      inst.terminals.push_back(t);
    }
    for (int i = 0; i + 1 < n; i += 2) inst.pairs.push_back({"v" + std::to_string(i), "v" + std::to_string(i + 1), rng.below(2) ? rng.uniform() : 0.0});
    Instance back = parse_instance(serialize_instance(inst));
    EXPECT_TRUE(same_instance(inst, back)) << serialize_instance(inst);
    EXPECT_EQ(serialize_instance(back), serialize_instance(inst));
  }
}

TEST(SolutionFile, RoundTripAndConsistency) {
  Instance inst = parse_instance("mode mpcsf\nterminal a 0 0 w 2\nterminal b 3 4 w 1\nterminal c 9 9 w 1\n");
  Forest f;
  f.add_segment({0, 0}, {1.5, 2});
  f.add_segment({1.5, 2}, {3, 4});
  auto s = make_solution_file(inst, f, 42, 0.5, 8, 3, 4, true);
  EXPECT_DOUBLE_EQ(s.cost, 5);
  EXPECT_DOUBLE_EQ(s.collected, 9 + 1);  // the lone terminal collects its own square
  EXPECT_DOUBLE_EQ(s.penalty, 16 - 10);
  const std::string text = serialize_solution(s);
  auto back = parse_solution(text);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.forest(), f);
  EXPECT_EQ(serialize_solution(back), text);

  s.cost = 6;
  EXPECT_FALSE(self_consistent(s));
  EXPECT_THROW(serialize_solution(s), InvalidArgument);
  EXPECT_THROW(parse_solution("mode mpcsf\ncost 1\nsegment 0 0 3 4\n"), InvalidArgument);
  EXPECT_THROW(parse_solution("cost 0\n"), ParseError);
}

TEST(FormatNumber, ShortestExact) {
  EXPECT_EQ(format_number(1), "1");
  EXPECT_EQ(format_number(0.1), "0.1");
  Rng rng(9);
  for (int k = 0; k < 1000; ++k) {
    double v = rng.uniform(-1e9, 1e9) * std::pow(10.0, static_cast<double>(rng.below(20)) - 10);
    EXPECT_EQ(std::stod(format_number(v)), v);
  }
}
