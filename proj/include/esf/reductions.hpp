#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "esf/baseline.hpp"
#include "esf/model.hpp"
#include "esf/oracle.hpp"
#include "esf/steiner_forest.hpp"

namespace esf {

struct KMSTInstance {
  std::vector<Terminal> points;
  std::string root;
  std::size_t k = 0;  // vertices besides the root
};

// Root weight n^2, every other weight 1, target (n^2 + k)^2; n counts the root.
inline std::pair<Instance, double> kmst_to_smpcsf(const KMSTInstance& km) {
  const std::size_t n = km.points.size();
  if (km.k + 1 > n) throw InvalidArgument("k exceeds the number of non-root vertices");
  Instance inst;
  inst.mode = Mode::SMpcsf;
  inst.terminals = km.points;
  const double nn = static_cast<double>(n);
  bool found = false;
  for (auto& t : inst.terminals) {
    const bool root = t.id == km.root;
    found = found || root;
    t.weight = root ? nn * nn : 1.0;
    t.weight_s = t.weight_t = 0.0;
  }
  if (!found) throw InvalidArgument("unknown root id '" + km.root + "'");
  const double S = (nn * nn + static_cast<double>(km.k)) * (nn * nn + static_cast<double>(km.k));
  inst.prize_target = S;
  return {inst, S};
}

using KForestSolver = std::function<std::optional<Forest>(const KForestInstance&)>;

inline std::optional<Forest> exact_kforest(const KForestInstance& kf) {
  auto r = brute_force_kforest(kf);
  if (!r.feasible) return std::nullopt;
  return r.forest;
}

struct KForestReduction {
  KForestInstance copies;  // k left at 0
  double omega = 0.0;
  double theta = 0.0;
};

// Copies of each pair in proportion to its (clamped) penalty: p_i = floor(pi_i / theta)
// with theta = eps * omega / 3n.
inline KForestReduction pcsf_to_kforest(const Instance& inst, double eps, std::optional<double> omega = std::nullopt) {
  if (inst.mode != Mode::Pcsf) throw InvalidArgument("pcsf_to_kforest needs a pcsf instance");
  if (!(eps > 0)) throw InvalidArgument("epsilon must be positive");
  KForestReduction red;
  red.omega = omega ? *omega : pcsf_baseline(inst).omega;
  const double n = static_cast<double>(inst.terminals.size());
  red.theta = eps * red.omega / (3 * n);
  for (const auto& t : inst.terminals) red.copies.points.push_back(t.location);
  auto idx = inst.pair_indices();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    red.copies.pairs.push_back(idx[i]);
    const double pen = std::min(inst.pairs[i].penalty, 2 * red.omega);
    red.copies.multiplicity.push_back(red.theta > 0 ? static_cast<long long>(std::floor(pen / red.theta + 1e-9)) : 0);
  }
  return red;
}

// Sweeps k over every copy count and keeps the forest with the best objective
// under the original penalties. A forest that already connects g >= k copies
// answers every k' in [k, g] as well, so the sweep resumes at g + 1.
inline Forest pcsf_via_kforest(const Instance& inst, double eps, const KForestSolver& solver = exact_kforest) {
  KForestReduction red = pcsf_to_kforest(inst, eps);
  Forest best;
  double best_v = objective(inst, best);
  if (red.omega <= 0) return pcsf_baseline(inst).forest;
  long long total = 0;
  for (auto p : red.copies.multiplicity) total += p;
  KForestInstance kf = red.copies;
  for (long long k = 0; k <= total; ++k) {
    kf.k = k;
    auto f = solver(kf);
    if (!f) continue;
    auto label = terminal_components(inst, *f);
    long long got = 0;
    for (std::size_t i = 0; i < kf.pairs.size(); ++i)
      if (label[kf.pairs[i].first] == label[kf.pairs[i].second]) got += kf.multiplicity[i];
    k = std::max(k, got);
    const double v = objective(inst, *f);
    if (v < best_v - 1e-12) {
      best_v = v;
      best = std::move(*f);
    }
  }
  return best;
}

struct PcsfResult {
  Forest forest;
  double cost = 0.0;
  double penalty = 0.0;
  double objective = 0.0;
  std::string method;
};

// Prize-collecting Steiner forest: with few pairs every subset of pairs to
// connect is solved by the Steiner forest scheme; otherwise the primal-dual
// baseline answers.
inline PcsfResult solve_pcsf(const Instance& inst, const SolveOptions& so = {}, std::size_t max_subset_pairs = 6) {
  if (inst.mode != Mode::Pcsf) throw InvalidArgument("solve_pcsf needs a pcsf instance");
  PcsfResult res;
  auto score = [&](PcsfResult& r) {
    r.cost = forest_length(r.forest);
    r.penalty = unpaid_penalty(inst, r.forest);
    r.objective = r.cost + r.penalty;
  };
  auto base = pcsf_baseline(inst);
  res.forest = base.forest;
  res.method = "baseline";
  score(res);
  if (inst.pairs.size() > max_subset_pairs) return res;
  const std::size_t m = inst.pairs.size();
  for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
    double pen = 0;
    Instance sub = inst;
    sub.mode = Mode::SteinerForest;
    sub.pairs.clear();
    for (std::size_t i = 0; i < m; ++i) {
      if (mask >> i & 1) sub.pairs.push_back(inst.pairs[i]);
      else pen += inst.pairs[i].penalty;
    }
    if (pen >= res.objective) continue;
    auto r = solve_steiner_forest(sub, so);
    if (!r.feasible) continue;
    PcsfResult cand;
    cand.forest = std::move(r.forest);
    cand.method = "subsets";
    score(cand);
    if (cand.objective < res.objective - 1e-12) res = std::move(cand);
  }
  return res;
}

}  // namespace esf
