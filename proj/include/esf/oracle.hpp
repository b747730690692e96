#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "esf/model.hpp"

namespace esf {

struct FermatResult {
  Point point;
  double length = 0.0;
};

// Exact 3-terminal Steiner tree. The junction is a vertex when that vertex
// carries an angle of at least 120 degrees.
inline FermatResult fermat_point(const Point& a, const Point& b, const Point& c) {
  const Point v[3] = {a, b, c};
  for (int i = 0; i < 3; ++i) {
    const Point& p = v[i];
    const Point& q = v[(i + 1) % 3];
    const Point& r = v[(i + 2) % 3];
    double dq = dist(p, q), dr = dist(p, r);
    if (dq == 0.0 || dr == 0.0) return {p, dq + dr};
    double dot = (q.x - p.x) * (r.x - p.x) + (q.y - p.y) * (r.y - p.y);
    if (dot <= -0.5 * dq * dr) return {p, dq + dr};
  }
  // apex of the equilateral triangle erected outward on side (p,q), away from r
  auto apex = [](const Point& p, const Point& q, const Point& r) {
    const double s = std::sqrt(3.0) / 2.0;
    Point m{(p.x + q.x) / 2, (p.y + q.y) / 2};
    Point n{-(q.y - p.y) * s, (q.x - p.x) * s};
    Point c1{m.x + n.x, m.y + n.y}, c2{m.x - n.x, m.y - n.y};
    return dist(c1, r) > dist(c2, r) ? c1 : c2;
  };
  Point ab = apex(a, b, c), bc = apex(b, c, a);
  // intersect line c->ab with line a->bc
  double d1x = ab.x - c.x, d1y = ab.y - c.y;
  double d2x = bc.x - a.x, d2y = bc.y - a.y;
  double den = d1x * d2y - d1y * d2x;
  double t = ((a.x - c.x) * d2y - (a.y - c.y) * d2x) / den;
  Point f{c.x + t * d1x, c.y + t * d1y};
  double area2 = std::abs((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
  double sq = (dist(a, b) * dist(a, b) + dist(b, c) * dist(b, c) + dist(c, a) * dist(c, a)) / 2.0 +
              std::sqrt(3.0) * area2;
  return {f, std::sqrt(sq)};
}

struct SteinerTree {
  double length = 0.0;
  std::vector<Segment> segments;
};

namespace detail {

// Full Steiner topologies on k terminals: terminals are 0..k-1, Steiner
// points k..2k-3. Each topology is an edge list.
inline void enumerate_full_topologies(int k, const std::function<void(const std::vector<std::pair<int, int>>&)>& fn) {
  std::vector<std::pair<int, int>> edges = {{0, k}, {1, k}, {2, k}};
  std::function<void(int)> rec = [&](int next_terminal) {
    if (next_terminal == k) {
      fn(edges);
      return;
    }
    const int s = k + next_terminal - 2;
    const std::size_t ne = edges.size();
    for (std::size_t e = 0; e < ne; ++e) {
      auto [u, v] = edges[e];
      edges[e] = {u, s};
      edges.push_back({s, v});
      edges.push_back({next_terminal, s});
      rec(next_terminal + 1);
      edges.pop_back();
      edges.pop_back();
      edges[e] = {u, v};
    }
  };
  rec(3);
}

// Smith's iteration for a fixed full topology. Returns the tree length and
// the optimized Steiner point coordinates.
inline double optimize_topology(const std::vector<Point>& terms, const std::vector<std::pair<int, int>>& edges,
                                std::vector<Point>& steiner) {
  const int k = static_cast<int>(terms.size());
  const int ns = k - 2;
  steiner.assign(ns, Point{});
  Point c{0, 0};
  for (const auto& p : terms) {
    c.x += p.x / k;
    c.y += p.y / k;
  }
  for (int i = 0; i < ns; ++i) steiner[i] = {c.x + 1e-3 * (i + 1), c.y - 1e-3 * (i + 1)};

  auto pos = [&](int v) -> const Point& { return v < k ? terms[v] : steiner[v - k]; };
  auto length = [&]() {
    double s = 0;
    for (auto [u, v] : edges) s += dist(pos(u), pos(v));
    return s;
  };

  double scale = 0;
  for (const auto& p : terms) scale = std::max(scale, dist(p, c));
  const double floor_len = std::max(scale, 1.0) * 1e-13;

  double prev = length();
  Eigen::MatrixXd A(ns, ns);
  Eigen::MatrixXd rhs(ns, 2);
  for (int iter = 0; iter < 10000; ++iter) {
    A.setZero();
    rhs.setZero();
    for (auto [u, v] : edges) {
      double w = 1.0 / std::max(dist(pos(u), pos(v)), floor_len);
      for (int side = 0; side < 2; ++side) {
        int a = side ? v : u, b = side ? u : v;
        if (a < k) continue;
        A(a - k, a - k) += w;
        if (b < k) {
          rhs(a - k, 0) += w * terms[b].x;
          rhs(a - k, 1) += w * terms[b].y;
        } else {
          A(a - k, b - k) -= w;
        }
      }
    }
    Eigen::MatrixXd sol = A.ldlt().solve(rhs);
    for (int i = 0; i < ns; ++i) steiner[i] = {sol(i, 0), sol(i, 1)};
    double cur = length();
    // a collapsing edge means the topology degenerates to one the split
    // recursion already covers
    bool collapsed = false;
    for (auto [u, v] : edges)
      if (dist(pos(u), pos(v)) < 1e-7 * std::max(scale, 1.0)) collapsed = true;
    if (collapsed) break;
    if (prev - cur <= 1e-14 * std::max(1.0, cur)) {
      prev = std::min(prev, cur);
      break;
    }
    prev = cur;
  }
  return length();
}

}  // namespace detail

// Exact Steiner minimal trees on subsets of a small point set, memoized by
// subset mask. Non-full trees are split at a terminal of degree >= 2.
class SteinerOracle {
 public:
  static constexpr std::size_t kMaxPoints = 7;

  explicit SteinerOracle(std::vector<Point> pts) : pts_(std::move(pts)) {}

  const std::vector<Point>& points() const { return pts_; }

  // Refuses subsets with more than kMaxPoints distinct locations.
  const SteinerTree& tree(std::uint32_t mask) {
    mask = canonical(mask);
    auto it = memo_.find(mask);
    if (it != memo_.end()) return it->second;
    SteinerTree t = compute(mask);
    return memo_.emplace(mask, std::move(t)).first->second;
  }

  double length(std::uint32_t mask) { return tree(mask).length; }

 private:
  // Drops duplicates of an earlier point from the mask.
  std::uint32_t canonical(std::uint32_t mask) const {
    std::uint32_t out = 0;
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      if (!(mask >> i & 1)) continue;
      bool dup = false;
      for (std::size_t j = 0; j < i && !dup; ++j)
        if ((out >> j & 1) && pts_[j] == pts_[i]) dup = true;
      if (!dup) out |= 1u << i;
    }
    return out;
  }

  SteinerTree compute(std::uint32_t mask) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < pts_.size(); ++i)
      if (mask >> i & 1) idx.push_back(static_cast<int>(i));
    const int k = static_cast<int>(idx.size());
    if (static_cast<std::size_t>(k) > kMaxPoints)
      throw InvalidArgument("steiner oracle refuses blocks with more than 7 distinct points");
    SteinerTree best;
    if (k <= 1) return best;
    if (k == 2) {
      best.length = dist(pts_[idx[0]], pts_[idx[1]]);
      best.segments.push_back({pts_[idx[0]], pts_[idx[1]]});
      return best;
    }
    best.length = std::numeric_limits<double>::infinity();

    // full topologies
    std::vector<Point> terms;
    for (int i : idx) terms.push_back(pts_[i]);
    if (k == 3) {
      auto f = fermat_point(terms[0], terms[1], terms[2]);
      best.length = f.length;
      for (const auto& p : terms)
        if (p != f.point) best.segments.push_back({f.point, p});
    } else {
      std::vector<Point> steiner;
      detail::enumerate_full_topologies(k, [&](const std::vector<std::pair<int, int>>& edges) {
        double len = detail::optimize_topology(terms, edges, steiner);
        if (len < best.length) {
          best.length = len;
          best.segments.clear();
          auto pos = [&](int v) { return v < k ? terms[v] : steiner[v - k]; };
          for (auto [u, v] : edges) best.segments.push_back({pos(u), pos(v)});
        }
      });
    }

    // splits at a shared terminal
    for (int vi = 0; vi < k; ++vi) {
      const std::uint32_t v = 1u << idx[vi];
      const std::uint32_t rest = mask & ~v;
      // enumerate proper non-empty submasks of rest, each unordered split once
      const std::uint32_t low = rest & (~rest + 1);
      for (std::uint32_t a = (rest - 1) & rest; a; a = (a - 1) & rest) {
        if (!(a & low)) continue;
        const std::uint32_t b = rest & ~a;
        double len = length(a | v) + length(b | v);
        if (len < best.length - 1e-12) {
          best.length = len;
          best.segments = tree(a | v).segments;
          const auto& sb = tree(b | v).segments;
          best.segments.insert(best.segments.end(), sb.begin(), sb.end());
        }
      }
    }
    return best;
  }

  std::vector<Point> pts_;
  std::unordered_map<std::uint32_t, SteinerTree> memo_;
};

inline SteinerTree steiner_minimal_tree(const std::vector<Point>& pts) {
  if (pts.size() > 31) throw InvalidArgument("too many points");
  SteinerOracle o(pts);
  return o.tree(pts.empty() ? 0 : static_cast<std::uint32_t>((1ull << pts.size()) - 1));
}

// Calls fn(block_of, block_count) for every set partition of {0..n-1}
// (restricted growth strings).
inline void for_each_partition(std::size_t n, const std::function<void(const std::vector<int>&, int)>& fn) {
  std::vector<int> rgs(n, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int blocks) {
    if (i == n) {
      fn(rgs, blocks);
      return;
    }
    for (int b = 0; b <= blocks; ++b) {
      rgs[i] = b;
      rec(i + 1, std::max(blocks, b + 1));
    }
  };
  rec(0, 0);
}

struct OracleResult {
  Forest forest;
  double cost = 0.0;
  double collected = 0.0;
  double objective = 0.0;
  bool feasible = true;
};

namespace detail {

inline Forest forest_of(const std::vector<Segment>& segs) {
  Forest f;
  for (const auto& s : segs) f.add_segment(s.a, s.b);
  return f;
}

inline std::vector<Point> locations(const Instance& inst) {
  std::vector<Point> out;
  for (const auto& t : inst.terminals) out.push_back(t.location);
  return out;
}

}  // namespace detail

// Optimal Steiner forest by enumerating partitions of the pair groups.
// Terminals that belong to no pair are ignored.
inline OracleResult brute_force_steiner_forest(const Instance& inst, std::size_t max_n = 6) {
  if (inst.terminals.size() > max_n) throw InvalidArgument("instance too large for the oracle");
  const std::size_t n = inst.terminals.size();
  UnionFind uf(n);
  std::vector<bool> used(n, false);
  for (auto [a, b] : inst.pair_indices()) {
    uf.unite(a, b);
    used[a] = used[b] = true;
  }
  std::vector<std::uint32_t> groups;
  {
    std::unordered_map<std::size_t, std::size_t> gid;
    for (std::size_t i = 0; i < n; ++i) {
      if (!used[i]) continue;
      auto [it, ins] = gid.emplace(uf.find(i), groups.size());
      if (ins) groups.push_back(0);
      groups[it->second] |= 1u << i;
    }
  }
  SteinerOracle oracle(detail::locations(inst));
  OracleResult best;
  best.cost = std::numeric_limits<double>::infinity();
  std::vector<std::uint32_t> best_blocks;
  for_each_partition(groups.size(), [&](const std::vector<int>& rgs, int nb) {
    std::vector<std::uint32_t> blocks(nb, 0);
    for (std::size_t g = 0; g < groups.size(); ++g) blocks[rgs[g]] |= groups[g];
    double c = 0;
    for (auto m : blocks) c += oracle.length(m);
    if (c < best.cost - 1e-12) {
      best.cost = c;
      best_blocks = blocks;
    }
  });
  for (auto m : best_blocks)
    for (const auto& s : oracle.tree(m).segments) best.forest.add_segment(s.a, s.b);
  for (const auto& t : inst.terminals) best.forest.add_point(t.location);
  best.objective = best.cost;
  return best;
}

// Exact multiplicative prize-collecting optimum over all partitions of the
// terminals. With a target S, returns the cheapest partition collecting >= S.
inline OracleResult brute_force_mpcsf(const Instance& inst, std::optional<double> S = std::nullopt,
                                      std::size_t max_n = 7) {
  const std::size_t n = inst.terminals.size();
  if (n > max_n) throw InvalidArgument("instance too large for the oracle");
  const bool asym = is_asymmetric(inst.mode);
  SteinerOracle oracle(detail::locations(inst));
  const double total = total_prize(inst);
  OracleResult best;
  best.feasible = false;
  best.objective = std::numeric_limits<double>::infinity();
  std::vector<std::uint32_t> best_blocks;
  for_each_partition(n, [&](const std::vector<int>& rgs, int nb) {
    std::vector<std::uint32_t> blocks(nb, 0);
    std::vector<double> ws(nb, 0), wt(nb, 0);
    for (std::size_t i = 0; i < n; ++i) {
      blocks[rgs[i]] |= 1u << i;
      ws[rgs[i]] += asym ? inst.terminals[i].weight_s : inst.terminals[i].weight;
      wt[rgs[i]] += asym ? inst.terminals[i].weight_t : inst.terminals[i].weight;
    }
    double collected = 0;
    for (int b = 0; b < nb; ++b) collected += ws[b] * wt[b];
    if (S && collected < *S) return;
    double cost = 0;
    for (auto m : blocks) cost += oracle.length(m);
    double obj = S ? cost : cost + total - collected;
    if (obj < best.objective - 1e-12) {
      best.objective = obj;
      best.cost = cost;
      best.collected = collected;
      best.feasible = true;
      best_blocks = blocks;
    }
  });
  for (auto m : best_blocks)
    for (const auto& s : oracle.tree(m).segments) best.forest.add_segment(s.a, s.b);
  for (const auto& t : inst.terminals) best.forest.add_point(t.location);
  return best;
}

// Cheapest Steiner tree spanning the root and at least k other points.
inline OracleResult brute_force_kmst(const std::vector<Point>& pts, std::size_t root, std::size_t k) {
  const std::size_t n = pts.size();
  if (n > SteinerOracle::kMaxPoints) throw InvalidArgument("instance too large for the oracle");
  SteinerOracle oracle(pts);
  OracleResult best;
  best.cost = std::numeric_limits<double>::infinity();
  std::uint32_t best_mask = 0;
  for (std::uint32_t m = 0; m < (1u << n); ++m) {
    if (!(m >> root & 1)) continue;
    if (static_cast<std::size_t>(__builtin_popcount(m)) != k + 1) continue;
    double c = oracle.length(m);
    if (c < best.cost - 1e-12) {
      best.cost = c;
      best_mask = m;
    }
  }
  best.feasible = best.cost < std::numeric_limits<double>::infinity();
  if (best.feasible)
    for (const auto& s : oracle.tree(best_mask).segments) best.forest.add_segment(s.a, s.b);
  best.objective = best.cost;
  return best;
}

// Optimal prize-collecting Steiner forest: forest length plus penalties of
// pairs left disconnected.
inline OracleResult brute_force_pcsf(const Instance& inst, std::size_t max_n = 6) {
  const std::size_t n = inst.terminals.size();
  if (n > max_n) throw InvalidArgument("instance too large for the oracle");
  auto idx = inst.pair_indices();
  SteinerOracle oracle(detail::locations(inst));
  OracleResult best;
  best.objective = std::numeric_limits<double>::infinity();
  std::vector<std::uint32_t> best_blocks;
  for_each_partition(n, [&](const std::vector<int>& rgs, int nb) {
    std::vector<std::uint32_t> blocks(nb, 0);
    for (std::size_t i = 0; i < n; ++i) blocks[rgs[i]] |= 1u << i;
    double pen = 0;
    for (std::size_t k = 0; k < idx.size(); ++k)
      if (rgs[idx[k].first] != rgs[idx[k].second]) pen += inst.pairs[k].penalty;
    if (pen >= best.objective) return;
    double cost = 0;
    for (auto m : blocks)
      if (__builtin_popcount(m) > 1) cost += oracle.length(m);
    if (cost + pen < best.objective - 1e-12) {
      best.objective = cost + pen;
      best.cost = cost;
      best_blocks = blocks;
    }
  });
  for (auto m : best_blocks)
    for (const auto& s : oracle.tree(m).segments) best.forest.add_segment(s.a, s.b);
  for (const auto& t : inst.terminals) best.forest.add_point(t.location);
  return best;
}

struct KForestInstance {
  std::vector<Point> points;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<long long> multiplicity;
  long long k = 0;
};

// Cheapest forest connecting pairs of total multiplicity at least k.
inline OracleResult brute_force_kforest(const KForestInstance& kf) {
  const std::size_t n = kf.points.size();
  if (n > SteinerOracle::kMaxPoints) throw InvalidArgument("instance too large for the oracle");
  SteinerOracle oracle(kf.points);
  OracleResult best;
  best.cost = std::numeric_limits<double>::infinity();
  best.feasible = false;
  std::vector<std::uint32_t> best_blocks;
  for_each_partition(n, [&](const std::vector<int>& rgs, int nb) {
    long long got = 0;
    for (std::size_t i = 0; i < kf.pairs.size(); ++i)
      if (rgs[kf.pairs[i].first] == rgs[kf.pairs[i].second]) got += kf.multiplicity[i];
    if (got < kf.k) return;
    std::vector<std::uint32_t> blocks(nb, 0);
    for (std::size_t i = 0; i < n; ++i) blocks[rgs[i]] |= 1u << i;
    double cost = 0;
    for (auto m : blocks)
      if (__builtin_popcount(m) > 1) cost += oracle.length(m);
    if (cost < best.cost - 1e-12) {
      best.cost = cost;
      best.feasible = true;
      best_blocks = blocks;
    }
  });
  for (auto m : best_blocks)
    for (const auto& s : oracle.tree(m).segments) best.forest.add_segment(s.a, s.b);
  for (const auto& p : kf.points) best.forest.add_point(p);
  best.objective = best.cost;
  return best;
}

}  // namespace esf
