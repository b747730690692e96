#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "esf/config.hpp"
#include "esf/dissection.hpp"
#include "esf/dp.hpp"
#include "esf/model.hpp"
#include "esf/preprocess.hpp"

namespace esf {

// Cheapest leaf structure realising chi: each component becomes one
// leaf piece, holding the terminal when its bitmap is non-empty.
inline std::optional<double> solve_base(const Square& leaf, const Configuration& chi,
                                        const std::vector<Point>& terminals_in_leaf) {
  std::vector<Point> occupied = terminals_in_leaf;
  std::sort(occupied.begin(), occupied.end());
  occupied.erase(std::unique(occupied.begin(), occupied.end()), occupied.end());
  if (occupied.size() > 1) throw InvalidArgument("solve_base expects at most one occupied point");
  double total = 0.0;
  for (const auto& c : chi.components) {
    std::optional<Point> t;
    if (c.cells.gamma() > 0 && c.cells.any()) {
      if (occupied.empty()) return std::nullopt;
      CellIndex ci = cell_of(occupied[0], leaf, c.cells.gamma());
      for (int r = 0; r < c.cells.gamma(); ++r)
        for (int k = 0; k < c.cells.gamma(); ++k)
          if (c.cells.get(r, k) && !(r == ci.row && k == ci.col)) return std::nullopt;
      t = occupied[0];
    }
    for (const auto& p : c.portals)
      if (!leaf.on_boundary(p)) return std::nullopt;
    if (c.portals.empty()) continue;
    auto piece = leaf_component(leaf, c.portals, t);
    if (!piece) return std::nullopt;
    total += piece->cost;
  }
  return total;
}

// Removes components without required points and trims non-required
// vertices of degree one. Never increases length.
inline Forest prune_forest(const Forest& f, const std::vector<Point>& required) {
  std::set<Point> req(required.begin(), required.end());
  std::set<Segment> segs(f.segments().begin(), f.segments().end());
  bool changed = true;
  while (changed) {
    changed = false;
    std::map<Point, int> deg;
    for (const auto& s : segs) {
      ++deg[s.a];
      ++deg[s.b];
    }
    for (auto it = segs.begin(); it != segs.end();) {
      bool da = deg[it->a] == 1 && !req.count(it->a);
      bool db = deg[it->b] == 1 && !req.count(it->b);
      if (da || db) {
        it = segs.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }
  Forest g;
  for (const auto& s : segs) g.add_segment(s.a, s.b);
  UnionFind uf = g.components();
  std::set<std::size_t> keep;
  for (const auto& p : req)
    if (auto i = g.point_index(p)) keep.insert(uf.find(*i));
  Forest out;
  for (const auto& s : g.segments())
    if (keep.count(uf.find(*g.point_index(s.a)))) out.add_segment(s.a, s.b);
  for (const auto& p : req)
    if (auto i = g.point_index(p); i && keep.count(uf.find(*i))) out.add_point(p);
  return out;
}

struct ForestDP {
  std::shared_ptr<DPEngine<ForestPolicy>> engine;
  std::vector<Point> locations;
  std::vector<std::pair<int, int>> location_pairs;
};

// Distinct locations of paired terminals and the pairs between distinct
// locations; collocated pairs need nothing.
inline void forest_locations(const Instance& inst, std::vector<Point>& locs, std::vector<std::pair<int, int>>& pairs) {
  std::map<Point, int> idx;
  auto id = [&](const Point& p) {
    auto [it, fresh] = idx.emplace(p, static_cast<int>(locs.size()));
    if (fresh) locs.push_back(p);
    return it->second;
  };
  std::set<std::pair<int, int>> seen;
  for (auto [a, b] : inst.pair_indices()) {
    const Point& pa = inst.terminals[a].location;
    const Point& pb = inst.terminals[b].location;
    if (pa == pb) continue;
    int x = id(pa), y = id(pb);
    if (x > y) std::swap(x, y);
    if (seen.insert({x, y}).second) pairs.push_back({x, y});
  }
}

inline ForestDP dp_sweep(const Dissection& diss, const Instance& inst, const Parameters& params, DPOptions opt = {}) {
  ForestDP out;
  forest_locations(inst, out.locations, out.location_pairs);
  opt.params = params;
  Dissection d = diss;
  d.set_m(params.m);
  DPContext ctx{d, out.locations, default_guides(out.locations)};
  out.engine = std::make_shared<DPEngine<ForestPolicy>>(ctx, ForestPolicy(out.locations, out.location_pairs), opt);
  out.engine->run();
  return out;
}

// Cheapest requirement-free root entry, in the coordinates of the swept instance.
inline std::optional<Forest> extract_solution(const ForestDP& dp) {
  auto roots = dp.engine->accepted_roots();
  if (roots.empty()) return std::nullopt;
  Forest f;
  for (const auto& s : dp.engine->extract(roots.front().second)) f.add_segment(s.a, s.b);
  return f;
}

inline double root_cost(const ForestDP& dp) {
  auto roots = dp.engine->accepted_roots();
  return roots.empty() ? std::numeric_limits<double>::infinity() : roots.front().first;
}

struct SolveOptions {
  std::uint64_t seed = 1;
  std::optional<double> epsilon;
  bool practical = true;
  int m = 8;
  int rho = 3;
  int gamma = 4;
  bool exhaustive = false;
  std::size_t beam = 4000;
  std::size_t bucket_keep = 24;
  int retries = 3;
  int shifts = 4;  // independent random shifts; the cheapest feasible forest wins
};

struct SolveResult {
  Forest forest;
  double cost = 0.0;
  bool feasible = false;
  Parameters params;
  DPStats stats;
  std::string message;
  std::uint64_t seed_used = 0;
};

inline DPOptions dp_options_for(const SolveOptions& so, const Parameters& params, int attempt) {
  DPOptions o;
  o.params = params;
  o.exhaustive = so.exhaustive;
  o.beam = so.beam << attempt;
  o.bucket_keep = so.bucket_keep << attempt;
  o.join_budget = o.join_budget << attempt;
  return o;
}

inline SolveResult solve_steiner_forest_once(const Instance& raw, const SolveOptions& so) {
  SolveResult res;
  Instance inst = raw;
  if (so.epsilon) inst.epsilon = *so.epsilon;
  std::vector<Point> required;
  for (auto [a, b] : inst.pair_indices()) {
    required.push_back(inst.terminals[a].location);
    required.push_back(inst.terminals[b].location);
  }
  bool trivial = true;
  for (auto [a, b] : inst.pair_indices())
    if (!(inst.terminals[a].location == inst.terminals[b].location)) trivial = false;
  if (trivial) {
    res.feasible = true;
    res.message = "empty forest";
    return res;
  }
  ScaledInstance si = normalize_forest_instance(inst);
  std::vector<std::size_t> used;
  for (auto [a, b] : inst.pair_indices()) {
    used.push_back(a);
    used.push_back(b);
  }
  for (int attempt = 0; attempt <= so.retries; ++attempt) {
    const std::uint64_t seed = so.seed + static_cast<std::uint64_t>(attempt);
    Dissection diss = build_dissection(si.extent(), seed, so.m);
    Parameters params = compute_parameters(inst.epsilon, diss.L(), so.practical, so.m, so.rho, so.gamma);
    res.params = params;
    if (!so.practical && params.gamma > 8) {
      res.message = "theoretical parameters exceed what the dp engine can hold (gamma > 8)";
      return res;
    }
    ForestDP dp = dp_sweep(diss, si.base, params, dp_options_for(so, params, attempt));
    res.stats = dp.engine->stats();
    auto f = extract_solution(dp);
    if (!f) continue;
    Forest restored = restore_forest(si, inst, f->segments(), used);
    res.forest = prune_forest(restored, required);
    res.cost = forest_length(res.forest);
    res.feasible = pairs_satisfied(inst, res.forest);
    res.seed_used = seed;
    res.message = params.warning;
    if (res.feasible) return res;
  }
  res.message = "no requirement-free root configuration; try larger m, rho or gamma";
  return res;
}

inline SolveResult solve_steiner_forest(const Instance& raw, const SolveOptions& so = {}) {
  SolveResult best;
  for (int k = 0; k < std::max(1, so.shifts); ++k) {
    SolveOptions one = so;
    one.seed = so.seed + 1000003ull * static_cast<std::uint64_t>(k);
    SolveResult r = solve_steiner_forest_once(raw, one);
    if (k == 0 || (r.feasible && (!best.feasible || r.cost < best.cost - 1e-12))) best = std::move(r);
  }
  return best;
}

}  // namespace esf
