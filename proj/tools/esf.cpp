#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "esf/esf.hpp"

using namespace esf;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << text;
}

struct Common {
  std::string input;
  std::string out;
  std::string svg;
  std::uint64_t seed = 1;
  std::optional<double> epsilon;
  std::optional<double> eps_prime;
  std::optional<double> prize_target;
  int gamma = 4;
  int m = 8;
  int rho = 3;
  bool practical = true;
  int shifts = 4;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "seed for shifts and generators");
  app->add_option("--epsilon", c.epsilon, "accuracy parameter");
  app->add_option("--eps-prime", c.eps_prime, "prize slack for the S-variants");
  app->add_option("--prize-target", c.prize_target, "prize target S");
  app->add_option("--gamma", c.gamma, "cells per square side");
  app->add_option("--m", c.m, "portals per square side");
  app->add_option("--rho", c.rho, "non-corner components per side");
  app->add_option("--shifts", c.shifts, "independent random shifts");
  app->add_flag("--practical,!--theoretical", c.practical, "parameter regime");
}

SolveOptions solve_options(const Common& c) {
  SolveOptions so;
  so.seed = c.seed;
  so.epsilon = c.epsilon;
  so.practical = c.practical;
  so.m = c.m;
  so.rho = c.rho;
  so.gamma = c.gamma;
  so.shifts = c.shifts;
  return so;
}

Instance load_instance(const Common& c) {
  Instance inst = parse_instance(read_file(c.input));
  if (c.epsilon) inst.epsilon = *c.epsilon;
  if (c.eps_prime) inst.epsilon_prime = *c.eps_prime;
  if (c.prize_target) inst.prize_target = *c.prize_target;
  return inst;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Euclidean Steiner forest and multiplicative prize-collecting solvers"};
  app.require_subcommand(1);
  Common c;

  auto* solve = app.add_subcommand("solve", "solve an instance file");
  std::string algo = "ptas";
  solve->add_option("--input", c.input, "instance file")->required();
  solve->add_option("--algo", algo, "ptas, gw, mst, baseline, kforest or oracle");
  solve->add_option("--out", c.out, "solution file (stdout when omitted)");
  solve->add_option("--svg", c.svg, "also render the solution");
  add_common(solve, c);

  auto* verify = app.add_subcommand("verify", "check a solution file against its instance");
  std::string solution;
  verify->add_option("--input", c.input, "instance file")->required();
  verify->add_option("--solution", solution, "solution file")->required();
  add_common(verify, c);

  auto* reduce = app.add_subcommand("reduce", "print a reduced instance");
  std::string kind = "kmst";
  std::string root;
  std::size_t k = 1;
  reduce->add_option("--input", c.input, "instance file")->required();
  reduce->add_option("--kind", kind, "kmst (to s-mpcsf) or kforest (pcsf to k-forest copies)");
  reduce->add_option("--root", root, "k-MST root id");
  reduce->add_option("--k", k, "k-MST vertex count besides the root");
  reduce->add_option("--out", c.out, "output path");
  add_common(reduce, c);

  auto* bench = app.add_subcommand("bench", "run generated instances through several algorithms");
  std::string family = "uniform", mode = "steiner-forest", algos = "ptas,gw,mst,oracle", seeds = "1,2,3";
  std::string weights = "uniform";
  std::size_t n = 6, pairs = 3;
  bench->add_option("--family", family, "uniform, clustered, star or kmst");
  bench->add_option("--mode", mode, "instance mode");
  bench->add_option("--n", n, "terminals per instance");
  bench->add_option("--pairs", pairs, "demand pairs per instance");
  bench->add_option("--weights", weights, "unit, uniform or pareto");
  bench->add_option("--algo", algos, "comma-separated algorithms");
  bench->add_option("--seeds", seeds, "comma-separated instance seeds");
  bench->add_option("--k", k, "k for the kmst family");
  bench->add_option("--out", c.out, "report path");
  add_common(bench, c);

  auto* render = app.add_subcommand("render", "draw an instance and optional solution as SVG");
  render->add_option("--input", c.input, "instance file")->required();
  render->add_option("--solution", solution, "solution file");
  render->add_option("--svg", c.svg, "output path")->required();
  add_common(render, c);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) {
      Instance inst = load_instance(c);
      AlgoOutcome o = run_algorithm(inst, algo, solve_options(c));
      auto sf = make_solution_file(inst, o.forest, c.seed, inst.epsilon, c.m, c.rho, c.gamma, c.practical);
      write_or_print(c.out, serialize_solution(sf));
      if (!c.svg.empty()) write_or_print(c.svg, render_solution_svg(inst, o.forest, c.seed, c.m));
      std::cerr << algo << ": cost " << format_number(o.cost) << " objective " << format_number(o.objective)
                << (o.feasible ? "" : " (infeasible)") << (o.message.empty() ? "" : " [" + o.message + "]") << "\n";
      return o.feasible ? 0 : 2;
    }
    if (verify->parsed()) {
      Instance inst = load_instance(c);
      SolutionFile sf = parse_solution(read_file(solution));
      AlgoOutcome o;
      o.forest = sf.forest();
      detail::fill_scores(inst, o);
      bool ok = o.feasible && sf.mode == inst.mode;
      std::cout << "cost " << format_number(o.cost) << "\n"
                << "objective " << format_number(o.objective) << "\n"
                << "feasible " << (o.feasible ? "yes" : "no") << "\n";
      if (sf.mode != inst.mode) std::cout << "mode mismatch: " << mode_name(sf.mode) << "\n";
      return ok ? 0 : 2;
    }
    if (reduce->parsed()) {
      Instance inst = load_instance(c);
      if (kind == "kmst") {
        KMSTInstance km{inst.terminals, root.empty() ? inst.terminals.at(0).id : root, k};
        auto [red, S] = kmst_to_smpcsf(km);
        red.epsilon_prime = 0.5 / S;
        write_or_print(c.out, serialize_instance(red));
      } else if (kind == "kforest") {
        auto red = pcsf_to_kforest(inst, inst.epsilon);
        std::ostringstream os;
        os << "omega " << format_number(red.omega) << "\ntheta " << format_number(red.theta) << "\n";
        for (std::size_t i = 0; i < red.copies.pairs.size(); ++i)
          os << "pair " << inst.terminals[red.copies.pairs[i].first].id << " "
             << inst.terminals[red.copies.pairs[i].second].id << " copies " << red.copies.multiplicity[i] << "\n";
        write_or_print(c.out, os.str());
      } else {
        throw InvalidArgument("unknown reduction '" + kind + "'");
      }
      return 0;
    }
    if (bench->parsed()) {
      GeneratorSpec g;
      auto fam = parse_family(family);
      auto md = parse_mode(mode);
      if (!fam) throw InvalidArgument("unknown family '" + family + "'");
      if (!md) throw InvalidArgument("unknown mode '" + mode + "'");
      g.family = *fam;
      g.mode = *md;
      g.n = n;
      g.pairs = pairs;
      g.k = k;
      if (weights == "unit") g.weights = WeightLaw::Unit;
      else if (weights == "pareto") g.weights = WeightLaw::Pareto;
      else if (weights != "uniform") throw InvalidArgument("unknown weight law '" + weights + "'");
      std::vector<std::uint64_t> sv;
      for (const auto& s : split_list(seeds)) sv.push_back(std::stoull(s));
      auto rep = run_benchmark({g}, split_list(algos), sv, solve_options(c));
      std::ostringstream os;
      os << "# seeds " << seeds << "\n" << bench_table(rep) << "\n" << ratio_table(rep);
      for (const auto& note : rep.notices) os << "# " << note << "\n";
      write_or_print(c.out, os.str());
      return 0;
    }
    if (render->parsed()) {
      Instance inst = load_instance(c);
      Forest f;
      if (!solution.empty()) f = parse_solution(read_file(solution)).forest();
      write_or_print(c.svg, render_solution_svg(inst, f, c.seed, c.m));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
