#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "esf/baseline.hpp"
#include "esf/config.hpp"
#include "esf/io.hpp"
#include "esf/oracle.hpp"
#include "esf/prize.hpp"
#include "esf/reductions.hpp"
#include "esf/steiner_forest.hpp"

namespace esf {

// ---------------------------------------------------------------------------
// one entry point per algorithm name

struct AlgoOutcome {
  std::string algo;
  Forest forest;
  double cost = 0.0;
  double collected = 0.0;
  double penalty = 0.0;
  double objective = 0.0;  // cost for steiner-forest and s-variants, cost + penalty otherwise
  bool feasible = false;
  std::size_t max_states = 0;  // largest per-level dp state count, 0 when no dp ran
  std::string message;
};

inline const std::vector<std::string>& algorithm_names() {
  static const std::vector<std::string> names{"ptas", "gw", "mst", "baseline", "kforest", "oracle"};
  return names;
}

namespace detail {

inline void fill_scores(const Instance& inst, AlgoOutcome& o) {
  o.cost = forest_length(o.forest);
  if (is_multiplicative(inst.mode)) {
    o.collected = collected_prize(inst, o.forest);
    o.penalty = total_prize(inst) - o.collected;
  } else if (inst.mode == Mode::Pcsf) {
    o.penalty = unpaid_penalty(inst, o.forest);
  }
  if (inst.mode == Mode::SteinerForest) {
    o.feasible = pairs_satisfied(inst, o.forest);
    o.objective = o.cost;
  } else if (is_s_variant(inst.mode)) {
    const double S = inst.prize_target.value_or(0.0);
    o.feasible = o.collected >= (1 - inst.epsilon_prime) * S - 1e-9 * std::max(1.0, S);
    o.objective = o.cost;
  } else {
    o.feasible = true;
    o.objective = o.cost + o.penalty;
  }
}

inline std::size_t max_states(const DPStats& st) {
  std::size_t m = 0;
  for (auto c : st.states_per_level) m = std::max(m, c);
  return m;
}

inline double require_target(const Instance& inst) {
  if (!inst.prize_target) throw InvalidArgument(std::string(mode_name(inst.mode)) + " needs a prize-target");
  return *inst.prize_target;
}

}  // namespace detail

inline AlgoOutcome run_algorithm(const Instance& inst, const std::string& algo, const SolveOptions& so = {}) {
  AlgoOutcome o;
  o.algo = algo;
  PrizeOptions po;
  static_cast<SolveOptions&>(po) = so;
  if (algo == "ptas") {
    switch (inst.mode) {
      case Mode::SteinerForest: {
        auto r = solve_steiner_forest(inst, so);
        o.forest = r.forest;
        o.max_states = detail::max_states(r.stats);
        o.message = r.message;
        break;
      }
      case Mode::Pcsf: {
        auto r = solve_pcsf(inst, so);
        o.forest = r.forest;
        o.message = r.method;
        break;
      }
      default: {
        PrizeResult r;
        if (inst.mode == Mode::SMpcsf) r = solve_s_mpcsf(inst, detail::require_target(inst), inst.epsilon_prime, po);
        else if (inst.mode == Mode::AsymSMpcsf)
          r = solve_asym_s_mpcsf(inst, detail::require_target(inst), inst.epsilon_prime, po);
        else if (inst.mode == Mode::Mpcsf) r = solve_mpcsf(inst, po);
        else r = solve_asym_mpcsf(inst, po);
        o.forest = r.forest;
        o.max_states = detail::max_states(r.stats);
        o.message = r.case_taken.empty() ? r.message : r.case_taken;
      }
    }
  } else if (algo == "gw") {
    if (inst.mode != Mode::SteinerForest) throw InvalidArgument("gw runs on steiner-forest instances");
    o.forest = gw_steiner_forest(inst);
  } else if (algo == "mst") {
    o.forest = mst_forest(inst);
  } else if (algo == "baseline") {
    o.forest = pcsf_baseline(inst).forest;
  } else if (algo == "kforest") {
    o.forest = pcsf_via_kforest(inst, inst.epsilon);
  } else if (algo == "oracle") {
    OracleResult r;
    if (inst.mode == Mode::SteinerForest) r = brute_force_steiner_forest(inst);
    else if (inst.mode == Mode::Pcsf) r = brute_force_pcsf(inst);
    else if (is_s_variant(inst.mode)) r = brute_force_mpcsf(inst, detail::require_target(inst));
    else r = brute_force_mpcsf(inst);
    if (!r.feasible) o.message = "no forest meets the requirement";
    o.forest = r.forest;
  } else {
    throw InvalidArgument("unknown algorithm '" + algo + "'");
  }
  detail::fill_scores(inst, o);
  return o;
}

// ---------------------------------------------------------------------------
// instance generators

enum class Family { Uniform, Clustered, Star, KmstReduced };
enum class WeightLaw { Unit, Uniform, Pareto };

inline const char* family_name(Family f) {
  switch (f) {
    case Family::Uniform: return "uniform";
    case Family::Clustered: return "clustered";
    case Family::Star: return "star";
    case Family::KmstReduced: return "kmst";
  }
  return "?";
}

inline std::optional<Family> parse_family(const std::string& s) {
  for (Family f : {Family::Uniform, Family::Clustered, Family::Star, Family::KmstReduced})
    if (s == family_name(f)) return f;
  return std::nullopt;
}

struct GeneratorSpec {
  Family family = Family::Uniform;
  Mode mode = Mode::SteinerForest;
  std::size_t n = 6;
  std::size_t pairs = 3;        // steiner-forest and pcsf only
  WeightLaw weights = WeightLaw::Uniform;
  double side = 100.0;
  std::size_t k = 2;            // kmst family
  double target_fraction = 0.5; // s-variants: S as a fraction of the total prize
  std::uint64_t seed = 1;
};

namespace detail {

inline double draw_weight(Rng& rng, WeightLaw w) {
  switch (w) {
    case WeightLaw::Unit: return 1.0;
    case WeightLaw::Uniform: return rng.uniform(0.5, 4.0);
    case WeightLaw::Pareto: return std::min(1e3, 1.0 / std::pow(1.0 - rng.uniform(), 1.0 / 1.5));
  }
  return 1.0;
}

}  // namespace detail

inline Instance generate_instance(const GeneratorSpec& g) {
  if (g.n < 2) throw InvalidArgument("a generated instance needs at least two terminals");
  Rng rng(g.seed);
  std::vector<Point> pts;
  switch (g.family) {
    case Family::Uniform:
    case Family::KmstReduced:
      for (std::size_t i = 0; i < g.n; ++i) pts.push_back({rng.uniform(0, g.side), rng.uniform(0, g.side)});
      break;
    case Family::Clustered: {
      const std::size_t c = std::max<std::size_t>(1, g.n / 3);
      std::vector<Point> centers;
      for (std::size_t i = 0; i < c; ++i) centers.push_back({rng.uniform(0, g.side), rng.uniform(0, g.side)});
      for (std::size_t i = 0; i < g.n; ++i) {
        const Point& ctr = centers[i % c];
        const double r = 0.05 * g.side;
        pts.push_back({ctr.x + rng.uniform(-r, r), ctr.y + rng.uniform(-r, r)});
      }
      break;
    }
    case Family::Star: {
      pts.push_back({g.side / 2, g.side / 2});
      for (std::size_t i = 1; i < g.n; ++i) {
        const double a = 2 * M_PI * static_cast<double>(i) / static_cast<double>(g.n - 1);
        const double r = g.side / 2 * rng.uniform(0.6, 1.0);
        pts.push_back({g.side / 2 + r * std::cos(a), g.side / 2 + r * std::sin(a)});
      }
      break;
    }
  }
  Instance inst;
  inst.mode = g.mode;
  for (std::size_t i = 0; i < g.n; ++i) inst.terminals.push_back({"t" + std::to_string(i), pts[i]});

  if (g.family == Family::KmstReduced) {
    KMSTInstance km{inst.terminals, "t0", std::min(g.k, g.n - 1)};
    auto [red, S] = kmst_to_smpcsf(km);
    red.epsilon_prime = 0.5 / S;
    return red;
  }
  if (has_pairs(g.mode)) {
    for (std::size_t p = 0; p < g.pairs; ++p) {
      std::size_t a, b;
      if (g.family == Family::Star) {
        a = 0;
        b = 1 + rng.below(g.n - 1);
      } else {
        a = rng.below(g.n);
        b = rng.below(g.n - 1);
        if (b >= a) ++b;
      }
      DemandPair dp{inst.terminals[a].id, inst.terminals[b].id};
      if (g.mode == Mode::Pcsf) dp.penalty = detail::draw_weight(rng, g.weights) * g.side * 0.3;
      inst.pairs.push_back(dp);
    }
  } else {
    // weights scaled so squared sums are comparable to lengths
    const double unit = std::sqrt(g.side) / 2;
    for (auto& t : inst.terminals) {
      t.weight = detail::draw_weight(rng, g.weights) * unit;
      t.weight_s = detail::draw_weight(rng, g.weights) * unit;
      t.weight_t = detail::draw_weight(rng, g.weights) * unit;
    }
    if (is_s_variant(g.mode)) {
      inst.prize_target = g.target_fraction * total_prize(inst);
      inst.epsilon_prime = 0.1;
    }
  }
  return inst;
}

// ---------------------------------------------------------------------------
// benchmark harness

struct BenchRow {
  std::string instance;
  std::uint64_t seed = 0;
  std::string algo;
  std::size_t n = 0;
  double cost = 0.0;
  double collected = 0.0;
  double penalty = 0.0;
  double objective = 0.0;
  bool feasible = false;
  double seconds = 0.0;
  std::size_t max_states = 0;
  double log2_phi = 0.0;  // configuration-count bound at the run's parameters
  std::optional<double> ratio;  // objective / oracle objective
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<std::string> notices;
};

inline std::string instance_label(const GeneratorSpec& g) {
  return std::string(family_name(g.family)) + "-" + mode_name(g.mode) + "-n" + std::to_string(g.n);
}

// Every algorithm on every generated instance; the oracle, when listed, is run
// first and sets the ratio column. An oracle refusal skips that instance.
inline BenchReport run_benchmark(const std::vector<GeneratorSpec>& corpus, const std::vector<std::string>& algos,
                                 const std::vector<std::uint64_t>& seeds, const SolveOptions& so = {}) {
  BenchReport rep;
  const bool with_oracle = std::find(algos.begin(), algos.end(), "oracle") != algos.end();
  const int lambda = 4 * (so.rho + 1);
  for (const auto& spec : corpus)
    for (auto seed : seeds) {
      GeneratorSpec g = spec;
      g.seed = seed;
      const Instance inst = generate_instance(g);
      const std::string label = instance_label(g);
      std::optional<double> ref;
      std::vector<BenchRow> rows;
      bool skip = false;
      std::vector<std::string> order;
      if (with_oracle) order.push_back("oracle");
      for (const auto& a : algos)
        if (a != "oracle") order.push_back(a);
      for (const auto& a : order) {
        BenchRow row;
        row.instance = label;
        row.seed = seed;
        row.algo = a;
        row.n = inst.terminals.size();
        row.log2_phi = log2_config_bound(so.m, lambda, so.gamma);
        SolveOptions one = so;
        one.seed = seed;
        auto t0 = std::chrono::steady_clock::now();
        AlgoOutcome o;
        try {
          o = run_algorithm(inst, a, one);
        } catch (const InvalidArgument& e) {
          if (a == "oracle") {
            rep.notices.push_back(label + " seed " + std::to_string(seed) + " skipped: " + e.what());
            skip = true;
            break;
          }
          rep.notices.push_back(label + " seed " + std::to_string(seed) + " " + a + ": " + e.what());
          continue;
        }
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        row.cost = o.cost;
        row.collected = o.collected;
        row.penalty = o.penalty;
        row.objective = o.objective;
        row.feasible = o.feasible;
        row.max_states = o.max_states;
        if (a == "oracle" && o.feasible) ref = o.objective;
        rows.push_back(row);
      }
      if (skip) continue;
      for (auto& r : rows) {
        if (ref && r.feasible) r.ratio = *ref > 0 ? r.objective / *ref : (r.objective <= 1e-12 ? 1.0 : INFINITY);
        rep.rows.push_back(r);
      }
    }
  return rep;
}

inline std::string bench_table(const BenchReport& rep, char sep = '\t') {
  std::ostringstream os;
  os << "instance" << sep << "seed" << sep << "algo" << sep << "n" << sep << "cost" << sep << "collected" << sep
     << "penalty" << sep << "objective" << sep << "feasible" << sep << "seconds" << sep << "max_states" << sep
     << "log2_phi" << sep << "ratio\n";
  for (const auto& r : rep.rows) {
    os << r.instance << sep << r.seed << sep << r.algo << sep << r.n << sep << format_number(r.cost) << sep
       << format_number(r.collected) << sep << format_number(r.penalty) << sep << format_number(r.objective) << sep
       << (r.feasible ? 1 : 0) << sep << format_number(r.seconds) << sep << r.max_states << sep
       << format_number(r.log2_phi) << sep << (r.ratio ? format_number(*r.ratio) : "-") << "\n";
  }
  return os.str();
}

struct RatioSummary {
  std::string algo;
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
};

inline std::vector<RatioSummary> ratio_summary(const BenchReport& rep) {
  std::map<std::string, std::vector<double>> by;
  for (const auto& r : rep.rows)
    if (r.ratio) by[r.algo].push_back(*r.ratio);
  std::vector<RatioSummary> out;
  for (auto& [algo, v] : by) {
    std::sort(v.begin(), v.end());
    RatioSummary s;
    s.algo = algo;
    s.count = v.size();
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    s.median = v.size() % 2 ? v[v.size() / 2] : (v[v.size() / 2 - 1] + v[v.size() / 2]) / 2;
    s.max = v.back();
    out.push_back(s);
  }
  return out;
}

inline std::string ratio_table(const BenchReport& rep, char sep = '\t') {
  std::ostringstream os;
  os << "algo" << sep << "count" << sep << "mean_ratio" << sep << "median_ratio" << sep << "max_ratio\n";
  for (const auto& s : ratio_summary(rep))
    os << s.algo << sep << s.count << sep << format_number(s.mean) << sep << format_number(s.median) << sep
       << format_number(s.max) << "\n";
  return os.str();
}

}  // namespace esf
