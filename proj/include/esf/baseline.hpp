#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "esf/model.hpp"
#include "esf/util.hpp"

namespace esf {

// One dual variable: the member set of a moat and the amount it grew.
struct DualSet {
  std::vector<std::size_t> members;
  double y = 0.0;
};

struct DualState {
  std::vector<DualSet> sets;
  std::vector<std::pair<std::size_t, std::size_t>> tight_edges;  // in order of becoming tight
};

namespace detail {

inline double terminal_dist(const Instance& inst, std::size_t a, std::size_t b) {
  return dist(inst.terminals[a].location, inst.terminals[b].location);
}

inline Forest forest_from_edges(const Instance& inst, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  Forest f;
  for (auto [a, b] : edges) f.add_segment(inst.terminals[a].location, inst.terminals[b].location);
  return f;
}

// Moat growing on the complete terminal graph. active(c, grown) decides
// whether the moat with member list c (and total dual grown inside it) keeps
// growing. Returns the tight edges in order.
template <class Active>
std::vector<std::pair<std::size_t, std::size_t>> grow_moats(const Instance& inst, Active&& active, DualState* trace) {
  const std::size_t n = inst.terminals.size();
  UnionFind uf(n);
  std::vector<double> load(n, 0.0);
  std::vector<double> grown(n, 0.0);  // per root: total dual grown by sets inside the moat
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};
  std::vector<double> current_y(n, 0.0);
  auto flush = [&](std::size_t r) {
    if (trace && current_y[r] > 0) trace->sets.push_back({members[r], current_y[r]});
    current_y[r] = 0;
  };
  while (true) {
    std::vector<bool> act(n, false);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i)
      if (uf.find(i) == i && active(members[i], grown[i])) act[i] = any = true;
    if (!any) break;
    double best = std::numeric_limits<double>::infinity();
    std::pair<std::size_t, std::size_t> arg{n, n};
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = u + 1; v < n; ++v) {
        std::size_t ru = uf.find(u), rv = uf.find(v);
        if (ru == rv) continue;
        int rate = act[ru] + act[rv];
        if (!rate) continue;
        double slack = std::max(0.0, terminal_dist(inst, u, v) - load[u] - load[v]);
        double t = slack / rate;
        if (t < best - 1e-12) {
          best = t;
          arg = {u, v};
        }
      }
    // deactivation events of budget-limited moats
    double deact = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < n; ++r) {
      if (!act[r]) continue;
      double lim = active.limit(members[r]);
      if (std::isfinite(lim)) deact = std::min(deact, std::max(0.0, lim - grown[r]));
    }
    const double step = std::min(best, deact);
    if (!std::isfinite(step)) break;
    for (std::size_t i = 0; i < n; ++i)
      if (act[uf.find(i)]) load[i] += step;
    for (std::size_t r = 0; r < n; ++r)
      if (act[r]) {
        grown[r] += step;
        current_y[r] += step;
      }
    if (best <= deact && arg.first < n) {
      std::size_t ru = uf.find(arg.first), rv = uf.find(arg.second);
      flush(ru);
      flush(rv);
      double g = grown[ru] + grown[rv];
      std::vector<std::size_t> mem = members[ru];
      mem.insert(mem.end(), members[rv].begin(), members[rv].end());
      std::sort(mem.begin(), mem.end());
      uf.unite(ru, rv);
      std::size_t r = uf.find(ru);
      members[r] = std::move(mem);
      grown[r] = g;
      current_y[r] = 0;
      edges.push_back(arg);
      if (trace) trace->tight_edges.push_back(arg);
    }
  }
  if (trace)
    for (std::size_t r = 0; r < n; ++r)
      if (uf.find(r) == r) flush(r);
  return edges;
}

struct Unlimited {
  double limit(const std::vector<std::size_t>&) const { return std::numeric_limits<double>::infinity(); }
};

}  // namespace detail

// Primal-dual Steiner forest on the terminal-only metric with reverse delete.
inline Forest gw_steiner_forest(const Instance& inst, DualState* trace = nullptr) {
  const auto pairs = inst.pair_indices();
  const std::size_t n = inst.terminals.size();
  struct Act : detail::Unlimited {
    const std::vector<std::pair<std::size_t, std::size_t>>* pairs;
    std::size_t n;
    bool operator()(const std::vector<std::size_t>& mem, double) const {
      std::vector<bool> in(n, false);
      for (auto v : mem) in[v] = true;
      for (auto [a, b] : *pairs)
        if (in[a] != in[b]) return true;
      return false;
    }
  } act;
  act.pairs = &pairs;
  act.n = n;
  auto edges = detail::grow_moats(inst, act, trace);
  // reverse delete
  for (std::size_t k = edges.size(); k-- > 0;) {
    UnionFind uf(n);
    for (std::size_t j = 0; j < edges.size(); ++j)
      if (j != k) uf.unite(edges[j].first, edges[j].second);
    bool ok = true;
    for (auto [a, b] : pairs) ok = ok && uf.same(a, b);
    if (ok) edges.erase(edges.begin() + static_cast<long>(k));
  }
  return detail::forest_from_edges(inst, edges);
}

// Minimum spanning forest of the groups the pairs force together; in
// prize modes every terminal with positive weight forms one group.
inline Forest mst_forest(const Instance& inst) {
  const std::size_t n = inst.terminals.size();
  UnionFind group(n);
  if (has_pairs(inst.mode)) {
    for (auto [a, b] : inst.pair_indices()) group.unite(a, b);
  } else {
    std::size_t first = n;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& t = inst.terminals[i];
      if (t.weight + t.weight_s + t.weight_t <= 0) continue;
      if (first == n) first = i;
      else group.unite(first, i);
    }
  }
  std::vector<std::pair<double, std::pair<std::size_t, std::size_t>>> cand;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (group.same(u, v)) cand.push_back({detail::terminal_dist(inst, u, v), {u, v}});
  std::sort(cand.begin(), cand.end());
  UnionFind uf(n);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (const auto& [w, e] : cand)
    if (uf.unite(e.first, e.second)) edges.push_back(e);
  return detail::forest_from_edges(inst, edges);
}

namespace detail {

// Penalty of leaving u and v apart: the pair penalty in pcsf mode, the
// ordered-pair prize in the multiplicative modes.
inline std::vector<std::vector<double>> pair_penalties(const Instance& inst) {
  const std::size_t n = inst.terminals.size();
  std::vector<std::vector<double>> pen(n, std::vector<double>(n, 0.0));
  if (inst.mode == Mode::Pcsf) {
    auto idx = inst.pair_indices();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      auto [a, b] = idx[k];
      pen[a][b] += inst.pairs[k].penalty;
      pen[b][a] += inst.pairs[k].penalty;
    }
  } else {
    const bool asym = is_asymmetric(inst.mode);
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = 0; v < n; ++v) {
        if (u == v) continue;
        const auto& a = inst.terminals[u];
        const auto& b = inst.terminals[v];
        pen[u][v] = asym ? a.weight_s * b.weight_t + b.weight_s * a.weight_t : 2 * a.weight * b.weight;
      }
  }
  return pen;
}

inline double edge_objective(const Instance& inst, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  return objective(inst, forest_from_edges(inst, edges));
}

}  // namespace detail

struct BaselineResult {
  Forest forest;
  double omega = 0.0;
};

// Prize-collecting primal-dual with budget-limited moats: each terminal
// brings half the penalty of its pairs, and a moat stops once it has grown
// its members' budget. Every tight-edge prefix, the reverse-deleted forest
// and the empty forest are evaluated; omega is the best objective among them.
inline BaselineResult pcsf_baseline(const Instance& inst) {
  if (inst.mode == Mode::SteinerForest) throw InvalidArgument("pcsf_baseline needs a prize-collecting mode");
  const std::size_t n = inst.terminals.size();
  const auto pen = detail::pair_penalties(inst);
  std::vector<double> budget(n, 0.0);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v) budget[u] += pen[u][v] / 2;

  struct Act {
    const std::vector<std::vector<double>>* pen;
    const std::vector<double>* budget;
    std::size_t n;
    bool operator()(const std::vector<std::size_t>& mem, double grown) const {
      std::vector<bool> in(n, false);
      for (auto v : mem) in[v] = true;
      bool separated = false;
      for (auto u : mem)
        for (std::size_t v = 0; v < n && !separated; ++v)
          if (!in[v] && (*pen)[u][v] > 0) separated = true;
      return separated && grown < limit(mem) - 1e-12;
    }
    double limit(const std::vector<std::size_t>& mem) const {
      double s = 0;
      for (auto v : mem) s += (*budget)[v];
      return s;
    }
  } act{&pen, &budget, n};

  std::vector<std::pair<std::size_t, std::size_t>> edges = detail::grow_moats(inst, act, nullptr);

  BaselineResult best;
  best.omega = objective(inst, Forest{});
  auto offer = [&](const std::vector<std::pair<std::size_t, std::size_t>>& e) {
    double v = detail::edge_objective(inst, e);
    if (v < best.omega - 1e-12) {
      best.omega = v;
      best.forest = detail::forest_from_edges(inst, e);
    }
  };
  for (std::size_t k = 1; k <= edges.size(); ++k) offer({edges.begin(), edges.begin() + static_cast<long>(k)});
  // greedy reverse delete on the full moat forest
  auto cur = edges;
  double cur_v = detail::edge_objective(inst, cur);
  for (std::size_t k = cur.size(); k-- > 0;) {
    auto trial = cur;
    trial.erase(trial.begin() + static_cast<long>(k));
    double v = detail::edge_objective(inst, trial);
    if (v <= cur_v + 1e-12) {
      cur = std::move(trial);
      cur_v = v;
    }
  }
  offer(cur);
  // Kruskal prefixes
  std::vector<std::pair<double, std::pair<std::size_t, std::size_t>>> cand;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) cand.push_back({detail::terminal_dist(inst, u, v), {u, v}});
  std::sort(cand.begin(), cand.end());
  UnionFind uf(n);
  std::vector<std::pair<std::size_t, std::size_t>> kr;
  for (const auto& [w, e] : cand)
    if (uf.unite(e.first, e.second)) {
      kr.push_back(e);
      offer(kr);
    }
  return best;
}

}  // namespace esf
