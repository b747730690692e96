#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "esf/config.hpp"
#include "esf/dissection.hpp"
#include "esf/model.hpp"
#include "esf/oracle.hpp"
#include "esf/util.hpp"

namespace esf {

using PortalId = std::uint16_t;

struct DPOptions {
  Parameters params;
  // exhaustive: every admissible portal in every leaf and no state pruning
  bool exhaustive = false;
  std::size_t bucket_keep = 6;
  std::size_t beam = 1500;
  std::size_t join_budget = 6000;
  int leaf_terminal_portals = 2;
  double pending_weight = 0.5;
  double guide_weight = 1.0;
};

struct DPStats {
  std::vector<std::size_t> states_per_level;
  std::size_t leaves = 0;
  std::size_t squares = 0;
  std::size_t joins = 0;
  double seconds = 0;
};

// ---------------------------------------------------------------------------
// leaf geometry

struct LeafPiece {
  double cost = 0.0;
  std::vector<Segment> segments;
};

namespace detail {

inline bool along_side(const Square& sq, const Point& a, const Point& b) {
  return (a.x == b.x && (a.x == sq.x0() || a.x == sq.x1())) || (a.y == b.y && (a.y == sq.y0() || a.y == sq.y1()));
}

inline double odd_snap(double v, double lo, double hi) {
  double s = 2.0 * std::floor(v / 2.0) + 1.0;
  if (v - s > 1.0) s += 2.0;
  return std::min(std::max(s, lo + 1.0), hi - 1.0);
}

inline Point geometric_median(const std::vector<Point>& pts) {
  if (pts.size() == 3) return fermat_point(pts[0], pts[1], pts[2]).point;
  Point c{0, 0};
  for (const auto& p : pts) {
    c.x += p.x / pts.size();
    c.y += p.y / pts.size();
  }
  for (int it = 0; it < 100; ++it) {
    double wx = 0, wy = 0, w = 0;
    for (const auto& p : pts) {
      double d = std::max(dist(p, c), 1e-9);
      wx += p.x / d;
      wy += p.y / d;
      w += 1 / d;
    }
    c = {wx / w, wy / w};
  }
  return c;
}

}  // namespace detail

// Cheapest way to join the given portals (and the leaf's terminal point, if
// any) by straight segments inside the leaf. Interior junctions sit on odd
// lattice points; segments never run along the leaf boundary.
inline std::optional<LeafPiece> leaf_component(const Square& leaf, const std::vector<Point>& ports,
                                               std::optional<Point> t) {
  std::vector<Point> pts = ports;
  if (t) pts.push_back(*t);
  const std::size_t k = pts.size();
  if (k < 2) return std::nullopt;
  std::optional<LeafPiece> best;
  auto offer = [&](LeafPiece p) {
    if (!best || p.cost < best->cost - 1e-12) best = std::move(p);
  };

  if (t) {
    LeafPiece star;
    for (const auto& p : ports) {
      star.cost += dist(*t, p);
      star.segments.push_back({*t, p});
    }
    offer(std::move(star));
  }

  // spanning tree without boundary-running edges
  {
    std::vector<bool> in(k, false);
    std::vector<double> d(k, std::numeric_limits<double>::infinity());
    std::vector<int> from(k, -1);
    d[0] = 0;
    LeafPiece tree;
    bool ok = true;
    for (std::size_t it = 0; it < k; ++it) {
      int u = -1;
      for (std::size_t i = 0; i < k; ++i)
        if (!in[i] && (u < 0 || d[i] < d[u])) u = static_cast<int>(i);
      if (!std::isfinite(d[u])) {
        ok = false;
        break;
      }
      in[u] = true;
      if (from[u] >= 0) {
        tree.cost += d[u];
        tree.segments.push_back({pts[from[u]], pts[u]});
      }
      for (std::size_t i = 0; i < k; ++i) {
        if (in[i] || detail::along_side(leaf, pts[u], pts[i])) continue;
        double w = dist(pts[u], pts[i]);
        if (w < d[i]) {
          d[i] = w;
          from[i] = u;
        }
      }
    }
    if (ok) offer(std::move(tree));
  }

  // one interior junction
  if (k >= 3 || !t) {
    Point g = detail::geometric_median(pts);
    Point j{detail::odd_snap(g.x, leaf.x0(), leaf.x1()), detail::odd_snap(g.y, leaf.y0(), leaf.y1())};
    if (!(t && j == *t)) {
      LeafPiece star;
      for (const auto& p : pts) {
        star.cost += dist(j, p);
        star.segments.push_back({j, p});
      }
      offer(std::move(star));
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// states

template <class Policy>
struct DPState {
  using Payload = typename Policy::Payload;
  using Extra = typename Policy::Extra;

  std::vector<PortalId> port;        // sorted
  std::vector<std::uint8_t> comp;    // component of each port
  std::vector<Payload> data;         // per component
  std::vector<std::uint8_t> block;   // requirement block per component
  Extra extra{};
  std::uint8_t center = 0;           // components meeting at the cross center, capped at 2
  std::uint64_t hash = 0;
  std::uint64_t shape = 0;  // hash of everything except extra

  void rehash() {
    std::uint64_t h = 0x1234567;
    for (std::size_t i = 0; i < port.size(); ++i) {
      hash_mix(h, port[i]);
      hash_mix(h, comp[i]);
    }
    for (std::size_t c = 0; c < data.size(); ++c) {
      Policy::hash_payload(data[c], h);
      hash_mix(h, block[c]);
    }
    hash_mix(h, center);
    shape = h;
    Policy::hash_extra(extra, h);
    hash = h;
  }

  bool same_shape(const DPState& o) const {
    if (shape != o.shape || port != o.port || comp != o.comp || block != o.block || center != o.center) return false;
    for (std::size_t c = 0; c < data.size(); ++c)
      if (!(data[c] == o.data[c])) return false;
    return true;
  }

  bool same(const DPState& o) const {
    if (hash != o.hash || port != o.port || comp != o.comp || block != o.block || center != o.center) return false;
    if (!(extra == o.extra)) return false;
    for (std::size_t c = 0; c < data.size(); ++c)
      if (!(data[c] == o.data[c])) return false;
    return true;
  }
};

template <class Policy>
struct DPEntry {
  DPState<Policy> st;
  double cost = 0.0;
  double prio = 0.0;
  std::int32_t a = -1;
  std::int32_t b = -1;
};

struct Rect {
  double x0, y0, x1, y1;
  bool on_boundary(const Point& p) const {
    bool inx = p.x >= x0 && p.x <= x1, iny = p.y >= y0 && p.y <= y1;
    return inx && iny && (p.x == x0 || p.x == x1 || p.y == y0 || p.y == y1);
  }
  // side index of a boundary point; corners go to the first matching side
  int side_of(const Point& p) const {
    if (p.y == y0) return 0;
    if (p.x == x1) return 1;
    if (p.y == y1) return 2;
    return 3;
  }
  bool is_corner(const Point& p) const { return (p.x == x0 || p.x == x1) && (p.y == y0 || p.y == y1); }
};

inline Rect rect_of(const Square& s) { return {s.x0(), s.y0(), s.x1(), s.y1()}; }

// Geometry shared by the engine and its policies.
struct DPContext {
  Dissection diss;
  std::vector<Point> locs;  // distinct active locations
  std::vector<Segment> guides;
};

// ---------------------------------------------------------------------------
// engine

template <class Policy>
class DPEngine {
 public:
  using State = DPState<Policy>;
  using Entry = DPEntry<Policy>;
  using Payload = typename Policy::Payload;
  using Extra = typename Policy::Extra;

  struct Node {
    Square sq;
    int gamma = 1;
    std::uint64_t locs = 0;
    int loc = -1;  // location inside a leaf
    bool leaf = true;
    std::array<int, 4> kid{-1, -1, -1, -1};
    std::vector<Entry> table;
    std::array<std::vector<Entry>, 2> half;
    std::vector<std::vector<Segment>> leaf_geometry;
  };

  DPEngine(DPContext ctx, Policy policy, DPOptions opt)
      : ctx_(std::move(ctx)), policy_(std::move(policy)), opt_(opt) {
    if (opt_.params.gamma > 8) throw InvalidArgument("the dp engine packs bitmaps into one word; gamma must be <= 8");
    if (ctx_.locs.size() > 64) throw InvalidArgument("the dp engine supports at most 64 distinct locations");
  }

  const DPContext& context() const { return ctx_; }
  const Policy& policy() const { return policy_; }
  const DPStats& stats() const { return stats_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Point>& portal_points() const { return portal_pt_; }

  void run() {
    auto t0 = std::chrono::steady_clock::now();
    nodes_.clear();
    std::uint64_t all = ctx_.locs.size() == 64 ? ~0ull : ((1ull << ctx_.locs.size()) - 1);
    build(ctx_.diss.root(), all);
    stats_.states_per_level.assign(ctx_.diss.depth() + 2, 0);
    solve(0);
    stats_.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  const std::vector<Entry>& root_table() const { return nodes_[0].table; }

  // Root entries the policy accepts, with the policy's objective term added.
  std::vector<std::pair<double, std::size_t>> accepted_roots() const {
    std::vector<std::pair<double, std::size_t>> out;
    const auto& t = nodes_[0].table;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!t[i].st.data.empty()) continue;
      auto v = policy_.root_value(t[i].st.extra);
      if (v) out.push_back({t[i].cost + *v, i});
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<Segment> extract(std::size_t root_entry) const {
    std::vector<Segment> segs;
    walk(0, root_entry, segs, nullptr);
    return segs;
  }

  // Visits every square on the provenance path with its state and the
  // segments of its subsolution.
  using Visitor = std::function<void(const Node&, const State&, const std::vector<Segment>&)>;
  void audit(std::size_t root_entry, const Visitor& fn) const {
    std::vector<Segment> segs;
    walk(0, root_entry, segs, &fn);
  }

  PortalId portal_id(const Point& p) {
    auto it = portal_index_.find(p);
    if (it != portal_index_.end()) return it->second;
    if (portal_pt_.size() >= 65535) throw InvalidArgument("too many portals");
    PortalId id = static_cast<PortalId>(portal_pt_.size());
    portal_index_.emplace(p, id);
    portal_pt_.push_back(p);
    portal_dev_.push_back(guide_deviation(p));
    return id;
  }

  std::optional<PortalId> find_portal(const Point& p) const {
    auto it = portal_index_.find(p);
    if (it == portal_index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  // ---- tree construction

  int build(const Square& sq, std::uint64_t locs) {
    int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    nodes_[id].sq = sq;
    nodes_[id].gamma = std::max(1, std::min(opt_.params.gamma, static_cast<int>(sq.side / 2)));
    nodes_[id].locs = locs;
    if (__builtin_popcountll(locs) <= 1 || sq.side <= 2) {
      nodes_[id].leaf = true;
      nodes_[id].loc = locs ? __builtin_ctzll(locs) : -1;
      return id;
    }
    nodes_[id].leaf = false;
    std::array<std::uint64_t, 4> part{};
    Point c = sq.center();
    for (std::size_t i = 0; i < ctx_.locs.size(); ++i) {
      if (!(locs >> i & 1)) continue;
      const Point& p = ctx_.locs[i];
      part[(p.x > c.x ? 1 : 0) | (p.y > c.y ? 2 : 0)] |= 1ull << i;
    }
    for (int q = 0; q < 4; ++q) {
      int k = build(sq.child(q), part[q]);
      nodes_[id].kid[q] = k;
    }
    return id;
  }

  // ---- guides

  double guide_deviation(const Point& p) const {
    double best = std::numeric_limits<double>::infinity();
    const bool on_v = ctx_.diss.line_level(p.x, true) >= 0;
    const bool on_h = ctx_.diss.line_level(p.y, false) >= 0;
    for (const auto& g : ctx_.guides) {
      if (on_v && (g.a.x - p.x) * (g.b.x - p.x) <= 0 && g.a.x != g.b.x) {
        double t = (p.x - g.a.x) / (g.b.x - g.a.x);
        best = std::min(best, std::abs(g.a.y + t * (g.b.y - g.a.y) - p.y));
      }
      if (on_h && (g.a.y - p.y) * (g.b.y - p.y) <= 0 && g.a.y != g.b.y) {
        double t = (p.y - g.a.y) / (g.b.y - g.a.y);
        best = std::min(best, std::abs(g.a.x + t * (g.b.x - g.a.x) - p.x));
      }
    }
    return best;
  }

  // Points where guides cross the given side segment.
  std::vector<Point> guide_crossings(const Point& a, const Point& b) const {
    std::vector<Point> out;
    const bool vertical = a.x == b.x;
    for (const auto& g : ctx_.guides) {
      if (vertical) {
        if (g.a.x == g.b.x || (g.a.x - a.x) * (g.b.x - a.x) > 0) continue;
        double t = (a.x - g.a.x) / (g.b.x - g.a.x);
        double y = g.a.y + t * (g.b.y - g.a.y);
        if (y > std::min(a.y, b.y) && y < std::max(a.y, b.y)) out.push_back({a.x, y});
      } else {
        if (g.a.y == g.b.y || (g.a.y - a.y) * (g.b.y - a.y) > 0) continue;
        double t = (a.y - g.a.y) / (g.b.y - g.a.y);
        double x = g.a.x + t * (g.b.x - g.a.x);
        if (x > std::min(a.x, b.x) && x < std::max(a.x, b.x)) out.push_back({x, a.y});
      }
    }
    return out;
  }

  // ---- leaves

  struct LeafOption {
    std::vector<std::vector<PortalId>> comps;  // portal sets
    int t_comp = -1;                            // component holding the terminal, -1 when isolated
    LeafPiece piece;
  };

  static bool nearest_on_side(const std::vector<Point>& side_ports, const Point& x, bool vertical,
                              std::vector<Point>& out) {
    if (side_ports.empty()) return false;
    double key = vertical ? x.y : x.x;
    const Point* lo = nullptr;
    const Point* hi = nullptr;
    for (const auto& p : side_ports) {
      double v = vertical ? p.y : p.x;
      if (v <= key && (!lo || v > (vertical ? lo->y : lo->x))) lo = &p;
      if (v >= key && (!hi || v < (vertical ? hi->y : hi->x))) hi = &p;
    }
    if (lo) out.push_back(*lo);
    if (hi && (!lo || !(*hi == *lo))) out.push_back(*hi);
    return lo || hi;
  }

  void solve_leaf(Node& node) {
    const Square& sq = node.sq;
    std::array<std::vector<Point>, 4> side_ports;
    std::vector<Point> all_ports;
    for (int s = 0; s < 4; ++s) {
      side_ports[s] = ctx_.diss.admissible_portals(sq, s);
      for (const auto& p : side_ports[s])
        if (std::find(all_ports.begin(), all_ports.end(), p) == all_ports.end()) all_ports.push_back(p);
    }
    std::sort(all_ports.begin(), all_ports.end());

    std::optional<Point> t;
    if (node.loc >= 0) t = ctx_.locs[node.loc];

    // candidate portals and candidate chords
    std::vector<Point> cand;
    std::vector<std::pair<Point, Point>> chords;
    std::vector<std::array<Point, 3>> junctions;
    auto add_chord = [&](const Point& p, const Point& q) {
      if (p == q || detail::along_side(sq, p, q)) return;
      auto c = p < q ? std::make_pair(p, q) : std::make_pair(q, p);
      if (std::find(chords.begin(), chords.end(), c) == chords.end()) chords.push_back(c);
    };
    if (opt_.exhaustive) {
      cand = all_ports;
      for (std::size_t i = 0; i < cand.size(); ++i)
        for (std::size_t j = i + 1; j < cand.size(); ++j) add_chord(cand[i], cand[j]);
      for (std::size_t i = 0; i < cand.size(); ++i)
        for (std::size_t j = i + 1; j < cand.size(); ++j)
          for (std::size_t k = j + 1; k < cand.size(); ++k) junctions.push_back({cand[i], cand[j], cand[k]});
    } else {
      for (int s = 0; s < 4; ++s) {
        auto [a, b] = sq.side_segment(s);
        for (const auto& x : guide_crossings(a, b)) nearest_on_side(side_ports[s], x, a.x == b.x, cand);
      }
      std::sort(cand.begin(), cand.end());
      cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
      // guide segments passing through the leaf
      for (const auto& g : ctx_.guides) {
        auto [t0, t1] = detail::clip_interval(g.a, g.b, sq);
        if (!(t0 < t1) || t0 <= 0 || t1 >= 1) continue;
        Point e0{g.a.x + (g.b.x - g.a.x) * t0, g.a.y + (g.b.y - g.a.y) * t0};
        Point e1{g.a.x + (g.b.x - g.a.x) * t1, g.a.y + (g.b.y - g.a.y) * t1};
        std::vector<Point> n0, n1;
        near_boundary_point(sq, side_ports, e0, n0);
        near_boundary_point(sq, side_ports, e1, n1);
        for (const auto& p : n0)
          for (const auto& q : n1) add_chord(p, q);
      }
      if (cand.size() <= 12) {
        for (std::size_t i = 0; i < cand.size(); ++i)
          for (std::size_t j = i + 1; j < cand.size(); ++j)
            for (std::size_t k = j + 1; k < cand.size(); ++k) junctions.push_back({cand[i], cand[j], cand[k]});
      } else {
        fermat_junctions(sq, side_ports, junctions);
      }
    }

    std::vector<LeafOption> options;
    auto piece_for = [&](const std::vector<Point>& ps, bool with_t) -> std::optional<LeafPiece> {
      return leaf_component(sq, ps, with_t ? t : std::nullopt);
    };
    auto ids = [&](const std::vector<Point>& ps) {
      std::vector<PortalId> v;
      for (const auto& p : ps) v.push_back(portal_id(p));
      return v;
    };

    // terminal component choices
    std::vector<std::pair<std::vector<Point>, LeafPiece>> tchoices;
    if (t) {
      const int kmax = opt_.exhaustive ? std::max(opt_.leaf_terminal_portals, 3) : opt_.leaf_terminal_portals;
      std::vector<Point> cur;
      std::function<void(std::size_t)> rec = [&](std::size_t from) {
        if (!cur.empty()) {
          if (auto pc = piece_for(cur, true)) tchoices.push_back({cur, *pc});
        }
        if (static_cast<int>(cur.size()) == kmax) return;
        for (std::size_t i = from; i < cand.size(); ++i) {
          cur.push_back(cand[i]);
          rec(i + 1);
          cur.pop_back();
        }
      };
      rec(0);
    }

    auto disjoint = [](const std::vector<Point>& a, const std::vector<Point>& b) {
      for (const auto& p : a)
        if (std::find(b.begin(), b.end(), p) != b.end()) return false;
      return true;
    };

    std::vector<std::pair<std::vector<Point>, LeafPiece>> chord_pieces;
    for (const auto& [p, q] : chords)
      if (auto pc = piece_for({p, q}, false)) chord_pieces.push_back({{p, q}, *pc});

    auto push = [&](std::vector<std::pair<std::vector<Point>, LeafPiece>> parts, int tc) {
      LeafOption o;
      o.t_comp = tc;
      for (auto& [ps, pc] : parts) {
        o.comps.push_back(ids(ps));
        o.piece.cost += pc.cost;
        o.piece.segments.insert(o.piece.segments.end(), pc.segments.begin(), pc.segments.end());
      }
      options.push_back(std::move(o));
    };

    if (t) {
      push({}, -1);
      for (const auto& ch : chord_pieces) push({ch}, -1);
      for (const auto& tc : tchoices) {
        push({tc}, 0);
        for (const auto& ch : chord_pieces)
          if (disjoint(ch.first, tc.first)) push({tc, ch}, 0);
      }
    } else {
      push({}, -1);
      for (std::size_t i = 0; i < chord_pieces.size(); ++i) {
        push({chord_pieces[i]}, -1);
        for (std::size_t j = i + 1; j < chord_pieces.size(); ++j)
          if (disjoint(chord_pieces[i].first, chord_pieces[j].first))
            push({chord_pieces[i], chord_pieces[j]}, -1);
      }
      for (const auto& jn : junctions) {
        std::vector<Point> ps(jn.begin(), jn.end());
        if (detail::along_side(sq, ps[0], ps[1]) && detail::along_side(sq, ps[1], ps[2]) &&
            detail::along_side(sq, ps[0], ps[2]))
          continue;
        if (auto pc = piece_for(ps, false)) push({{ps, *pc}}, -1);
      }
    }

    // states
    std::vector<Entry> out;
    for (const auto& o : options) {
      State st;
      st.extra = node.loc >= 0 ? policy_.leaf_extra(node.loc) : Extra{};
      std::vector<std::pair<PortalId, std::uint8_t>> pc;
      std::vector<Payload> data;
      for (std::size_t c = 0; c < o.comps.size(); ++c) {
        for (auto p : o.comps[c]) pc.push_back({p, static_cast<std::uint8_t>(c)});
        data.push_back(static_cast<int>(c) == o.t_comp ? policy_.leaf_payload(node.loc, node) : policy_.empty_payload());
      }
      if (node.loc >= 0 && o.t_comp < 0) {
        Payload alone = policy_.leaf_payload(node.loc, node);
        if (!policy_.close(alone, st.extra)) continue;
      }
      std::sort(pc.begin(), pc.end());
      bool dup = false;
      for (std::size_t i = 1; i < pc.size(); ++i) dup = dup || pc[i].first == pc[i - 1].first;
      if (dup) continue;
      canonical_from(pc, data, std::vector<std::uint8_t>(data.size(), 0), true, st);
      if (!within_limits(st, rect_of(sq))) continue;
      Entry e;
      e.st = std::move(st);
      e.cost = o.piece.cost;
      e.a = static_cast<std::int32_t>(node.leaf_geometry.size());
      node.leaf_geometry.push_back(o.piece.segments);
      out.push_back(std::move(e));
    }
    node.table = dedupe(std::move(out));
    prune(node.table, rect_of(sq));
  }

  void near_boundary_point(const Square& sq, const std::array<std::vector<Point>, 4>& side_ports, const Point& e,
                           std::vector<Point>& out) const {
    for (int s = 0; s < 4; ++s) {
      auto [a, b] = sq.side_segment(s);
      bool vertical = a.x == b.x;
      bool on = vertical ? e.x == a.x : e.y == a.y;
      if (!on) {
        // tolerate rounding in the clip
        on = vertical ? std::abs(e.x - a.x) < 1e-9 : std::abs(e.y - a.y) < 1e-9;
      }
      if (on) nearest_on_side(side_ports[s], e, vertical, out);
    }
  }

  void fermat_junctions(const Square& sq, const std::array<std::vector<Point>, 4>& side_ports,
                        std::vector<std::array<Point, 3>>& out) const {
    const auto& L = ctx_.locs;
    for (std::size_t i = 0; i < L.size(); ++i)
      for (std::size_t j = i + 1; j < L.size(); ++j)
        for (std::size_t k = j + 1; k < L.size(); ++k) {
          auto f = fermat_point(L[i], L[j], L[k]);
          if (!sq.contains_strictly(f.point)) continue;
          std::array<std::vector<Point>, 3> exits;
          bool ok = true;
          for (int s = 0; s < 3 && ok; ++s) {
            const Point& v = s == 0 ? L[i] : s == 1 ? L[j] : L[k];
            auto [t0, t1] = detail::clip_interval(f.point, v, sq);
            if (t1 >= 1) {
              ok = false;
              break;
            }
            Point e{f.point.x + (v.x - f.point.x) * t1, f.point.y + (v.y - f.point.y) * t1};
            near_boundary_point(sq, side_ports, e, exits[s]);
            ok = !exits[s].empty();
          }
          if (!ok) continue;
          for (const auto& a : exits[0])
            for (const auto& b : exits[1])
              for (const auto& c : exits[2])
                if (!(a == b) && !(b == c) && !(a == c)) out.push_back({a, b, c});
        }
  }

  // ---- canonical form

  // pc: (portal, raw component) sorted by portal. Components are renumbered
  // by first appearance; blocks likewise.
  void canonical_from(const std::vector<std::pair<PortalId, std::uint8_t>>& pc, const std::vector<Payload>& data,
                      const std::vector<std::uint8_t>& raw_block, bool singleton_blocks, State& st) const {
    std::array<int, 256> remap;
    remap.fill(-1);
    st.port.clear();
    st.comp.clear();
    st.data.clear();
    st.block.clear();
    std::vector<std::uint8_t> order;
    for (auto [p, c] : pc) {
      if (remap[c] < 0) {
        remap[c] = static_cast<int>(order.size());
        order.push_back(c);
      }
      st.port.push_back(p);
      st.comp.push_back(static_cast<std::uint8_t>(remap[c]));
    }
    std::array<int, 256> bmap;
    bmap.fill(-1);
    int nb = 0;
    for (auto c : order) {
      st.data.push_back(data[c]);
      if (singleton_blocks) {
        st.block.push_back(static_cast<std::uint8_t>(nb++));
      } else {
        std::uint8_t rb = raw_block[c];
        if (bmap[rb] < 0) bmap[rb] = nb++;
        st.block.push_back(static_cast<std::uint8_t>(bmap[rb]));
      }
    }
    st.rehash();
  }

  bool within_limits(const State& st, const Rect& r) const {
    if (opt_.exhaustive) return true;
    if (static_cast<int>(st.port.size()) > opt_.params.lambda) return false;
    std::array<int, 4> per_side{};
    for (auto p : st.port) {
      const Point& pt = portal_pt_[p];
      if (r.is_corner(pt)) continue;
      if (++per_side[r.side_of(pt)] > opt_.params.rho) return false;
    }
    return true;
  }

  // ---- joins

  struct JoinSpec {
    Rect region;
    std::function<bool(const Point&)> interior;  // must be matched, then dropped
    std::optional<PortalId> center;
    bool final_join = false;
    int qa = -1, qb = -1;  // child quadrants when lifting
    const Node* parent = nullptr;
    std::uint64_t locs_a = 0, locs_b = 0;
    int gamma_child = 1;
  };

  std::optional<State> join(const State& A, const State& B, const JoinSpec& js) const {
    const std::size_t na = A.data.size(), nb = B.data.size(), n = na + nb;
    if (n > 250) return std::nullopt;
    std::vector<Payload> d;
    d.reserve(n);
    for (const auto& p : A.data) d.push_back(js.qa >= 0 ? policy_.lift(p, js.qa, js.gamma_child, js.parent->gamma) : p);
    for (const auto& p : B.data) d.push_back(js.qb >= 0 ? policy_.lift(p, js.qb, js.gamma_child, js.parent->gamma) : p);

    std::array<std::uint8_t, 256> cu, bu;
    for (std::size_t i = 0; i < n; ++i) cu[i] = bu[i] = static_cast<std::uint8_t>(i);
    auto find = [](std::array<std::uint8_t, 256>& uf, std::size_t x) {
      while (uf[x] != x) x = uf[x] = uf[uf[x]];
      return x;
    };
    auto unite = [&](std::array<std::uint8_t, 256>& uf, std::size_t a, std::size_t b) {
      a = find(uf, a);
      b = find(uf, b);
      if (a == b) return;
      if (a > b) std::swap(a, b);
      uf[b] = static_cast<std::uint8_t>(a);
    };
    // existing requirement blocks
    {
      std::array<int, 256> rep;
      rep.fill(-1);
      for (std::size_t i = 0; i < na; ++i) {
        if (rep[A.block[i]] < 0) rep[A.block[i]] = static_cast<int>(i);
        else unite(bu, rep[A.block[i]], i);
      }
      rep.fill(-1);
      for (std::size_t j = 0; j < nb; ++j) {
        if (rep[B.block[j]] < 0) rep[B.block[j]] = static_cast<int>(na + j);
        else unite(bu, rep[B.block[j]], na + j);
      }
    }

    // shared portals connect; collect the merged portal list
    std::vector<std::pair<PortalId, std::uint8_t>> merged;
    merged.reserve(A.port.size() + B.port.size());
    int center_users = 0;
    std::size_t i = 0, j = 0;
    while (i < A.port.size() || j < B.port.size()) {
      if (j == B.port.size() || (i < A.port.size() && A.port[i] < B.port[j])) {
        merged.push_back({A.port[i], A.comp[i]});
        if (js.center && A.port[i] == *js.center) ++center_users;
        ++i;
      } else if (i == A.port.size() || B.port[j] < A.port[i]) {
        merged.push_back({B.port[j], static_cast<std::uint8_t>(na + B.comp[j])});
        if (js.center && B.port[j] == *js.center) ++center_users;
        ++j;
      } else {
        unite(cu, A.comp[i], na + B.comp[j]);
        unite(bu, A.comp[i], na + B.comp[j]);
        merged.push_back({A.port[i], A.comp[i]});
        if (js.center && A.port[i] == *js.center) center_users += 2;
        ++i;
        ++j;
      }
    }
    int center_count = 0;
    if (js.final_join) {
      center_count = std::min(2, static_cast<int>(A.center) + static_cast<int>(B.center));
      if (center_count == 1) return std::nullopt;
    } else {
      center_count = std::min(2, center_users);
    }

    // requirements between the two sides
    bool ok = true;
    policy_.link(A.data, B.data, js.locs_a, js.locs_b, [&](std::size_t ca, std::size_t cb) {
      if (ca >= na || cb >= nb) {
        ok = false;
        return;
      }
      unite(bu, ca, na + cb);
    }, ok);
    if (!ok) return std::nullopt;

    State st;
    st.extra = policy_.join_extra(A.extra, B.extra);
    // fold payloads into component roots, in index order
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t r = find(cu, k);
      if (r != k) policy_.unite(d[r], d[k], st.extra);
    }
    const std::uint64_t region = js.locs_a | js.locs_b;

    // drop interior portals; close components left without portals
    std::vector<std::pair<PortalId, std::uint8_t>> kept;
    kept.reserve(merged.size());
    std::array<bool, 256> open{};
    for (auto [p, c] : merged) {
      if (js.interior(portal_pt_[p])) continue;
      std::uint8_t r = static_cast<std::uint8_t>(find(cu, c));
      kept.push_back({p, r});
      open[r] = true;
    }
    std::array<int, 256> roots_in_block{};
    for (std::size_t k = 0; k < n; ++k)
      if (find(cu, k) == k) ++roots_in_block[find(bu, k)];
    for (std::size_t k = 0; k < n; ++k) {
      if (find(cu, k) != k) continue;
      policy_.refresh(d[k], region);
      if (open[k]) continue;
      if (roots_in_block[find(bu, k)] > 1) return std::nullopt;
      if (!policy_.close(d[k], st.extra)) return std::nullopt;
    }
    std::vector<std::uint8_t> raw_block(n);
    for (std::size_t k = 0; k < n; ++k) raw_block[k] = static_cast<std::uint8_t>(find(bu, k));
    canonical_from(kept, d, raw_block, false, st);
    st.center = js.final_join ? 0 : static_cast<std::uint8_t>(center_count);
    st.rehash();
    return st;
  }

  std::vector<Entry> join_tables(const std::vector<Entry>& A, const std::vector<Entry>& B, const JoinSpec& js) {
    // signature: matched interior portals other than the center
    auto signature = [&](const State& s) {
      std::vector<PortalId> sig;
      for (auto p : s.port)
        if (js.interior(portal_pt_[p]) && !(js.center && p == *js.center)) sig.push_back(p);
      return sig;
    };
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> groups_b;
    std::vector<std::vector<PortalId>> sig_b(B.size());
    for (std::size_t j = 0; j < B.size(); ++j) {
      sig_b[j] = signature(B[j].st);
      std::uint64_t h = 77;
      for (auto p : sig_b[j]) hash_mix(h, p);
      groups_b[h].push_back(j);
    }
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> groups_a;
    std::vector<std::vector<PortalId>> sig_a(A.size());
    for (std::size_t i = 0; i < A.size(); ++i) {
      sig_a[i] = signature(A[i].st);
      std::uint64_t h = 77;
      for (auto p : sig_a[i]) hash_mix(h, p);
      groups_a[h].push_back(i);
    }
    std::vector<Entry> out;
    Deduper dd;
    for (auto& [h, ga] : groups_a) {
      auto it = groups_b.find(h);
      if (it == groups_b.end()) continue;
      const auto& gb = it->second;
      for (std::size_t ri = 0; ri < ga.size(); ++ri) {
        if (!opt_.exhaustive && (ri + 1) > opt_.join_budget) break;
        for (std::size_t rj = 0; rj < gb.size(); ++rj) {
          if (!opt_.exhaustive && (ri + 1) * (rj + 1) > opt_.join_budget) break;
          const Entry& ea = A[ga[ri]];
          const Entry& eb = B[gb[rj]];
          if (sig_a[ga[ri]] != sig_b[gb[rj]]) continue;
          ++stats_.joins;
          auto st = join(ea.st, eb.st, js);
          if (!st) continue;
          Entry e;
          e.st = std::move(*st);
          e.cost = ea.cost + eb.cost;
          e.a = static_cast<std::int32_t>(ga[ri]);
          e.b = static_cast<std::int32_t>(gb[rj]);
          dd.offer(out, std::move(e));
        }
      }
    }
    return out;
  }

  struct Deduper {
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> at;
    void offer(std::vector<Entry>& out, Entry e) {
      auto& v = at[e.st.hash];
      for (auto k : v)
        if (out[k].st.same(e.st)) {
          if (e.cost < out[k].cost - 1e-12) out[k] = std::move(e);
          return;
        }
      v.push_back(out.size());
      out.push_back(std::move(e));
    }
  };

  std::vector<Entry> dedupe(std::vector<Entry> in) {
    std::vector<Entry> out;
    Deduper dd;
    for (auto& e : in) dd.offer(out, std::move(e));
    return out;
  }

  // ---- pruning

  // Drops entries whose extra is dominated by a cheaper entry of the same shape.
  void drop_dominated(std::vector<Entry>& t) {
    std::vector<std::size_t> order(t.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (t[a].st.shape != t[b].st.shape) return t[a].st.shape < t[b].st.shape;
      if (t[a].cost != t[b].cost) return t[a].cost < t[b].cost;
      return t[a].st.hash < t[b].st.hash;
    });
    std::vector<bool> keep(t.size(), true);
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j < order.size() && t[order[j]].st.shape == t[order[i]].st.shape) ++j;
      std::vector<std::size_t> kept;
      for (std::size_t k = i; k < j; ++k) {
        const Entry& e = t[order[k]];
        bool dominated = false;
        for (auto q : kept)
          if (t[q].st.same_shape(e.st) && policy_.extra_dominates(t[q].st.extra, e.st.extra)) {
            dominated = true;
            break;
          }
        if (dominated) keep[order[k]] = false;
        else kept.push_back(order[k]);
      }
      i = j;
    }
    std::vector<Entry> out;
    out.reserve(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
      if (keep[i]) out.push_back(std::move(t[i]));
    t = std::move(out);
  }

  void prune(std::vector<Entry>& t, const Rect& r) {
    drop_dominated(t);
    for (auto& e : t) e.prio = e.cost + policy_.heuristic(e.st, r, *this);
    std::stable_sort(t.begin(), t.end(), [](const Entry& a, const Entry& b) {
      if (a.prio != b.prio) return a.prio < b.prio;
      return a.st.hash < b.st.hash;
    });
    if (opt_.exhaustive) return;
    std::unordered_map<std::uint64_t, std::size_t> seen;
    std::vector<Entry> keep;
    for (auto& e : t) {
      std::uint64_t h = 99;
      std::vector<std::array<std::uint8_t, 4>> counts(e.st.data.size(), {0, 0, 0, 0});
      for (std::size_t k = 0; k < e.st.port.size(); ++k)
        ++counts[e.st.comp[k]][r.side_of(portal_pt_[e.st.port[k]])];
      for (std::size_t c = 0; c < e.st.data.size(); ++c) {
        for (auto v : counts[c]) hash_mix(h, v);
        hash_mix(h, e.st.block[c]);
        Policy::hash_bucket(e.st.data[c], h);
      }
      Policy::hash_extra_bucket(e.st.extra, h);
      hash_mix(h, e.st.center);
      if (++seen[h] > opt_.bucket_keep) continue;
      keep.push_back(std::move(e));
      if (keep.size() >= opt_.beam) break;
    }
    t = std::move(keep);
  }

 public:
  double portal_guide_deviation(PortalId p) const { return portal_dev_[p]; }
  const Point& portal_point(PortalId p) const { return portal_pt_[p]; }
  const DPOptions& options() const { return opt_; }

 private:
  // ---- sweep

  void solve(int id) {
    Node& node = nodes_[id];
    if (node.leaf) {
      ++stats_.leaves;
      solve_leaf(nodes_[id]);
      stats_.states_per_level[std::min<int>(node.sq.level, stats_.states_per_level.size() - 1)] +=
          nodes_[id].table.size();
      return;
    }
    for (int q = 0; q < 4; ++q) solve(nodes_[id].kid[q]);
    ++stats_.squares;
    Node& nd = nodes_[id];
    const Square& sq = nd.sq;
    const Point c = sq.center();
    std::optional<PortalId> center;
    if (ctx_.diss.admissible(c)) center = portal_id(c);
    const int gamma_child = nodes_[nd.kid[0]].gamma;

    for (int h = 0; h < 2; ++h) {
      const int qa = 2 * h, qb = 2 * h + 1;
      const double ylo = h == 0 ? sq.y0() : c.y, yhi = h == 0 ? c.y : sq.y1();
      JoinSpec js;
      js.region = {sq.x0(), ylo, sq.x1(), yhi};
      js.interior = [c, ylo, yhi](const Point& p) { return p.x == c.x && p.y > ylo && p.y < yhi; };
      js.center = center;
      js.qa = qa;
      js.qb = qb;
      js.parent = &nd;
      js.locs_a = nodes_[nd.kid[qa]].locs;
      js.locs_b = nodes_[nd.kid[qb]].locs;
      js.gamma_child = gamma_child;
      nd.half[h] = join_tables(nodes_[nd.kid[qa]].table, nodes_[nd.kid[qb]].table, js);
      prune(nd.half[h], js.region);
    }
    JoinSpec js;
    js.region = rect_of(sq);
    js.interior = [c, sq](const Point& p) { return p.y == c.y && p.x > sq.x0() && p.x < sq.x1(); };
    js.center = center;
    js.final_join = true;
    js.parent = &nd;
    js.locs_a = nodes_[nd.kid[0]].locs | nodes_[nd.kid[1]].locs;
    js.locs_b = nodes_[nd.kid[2]].locs | nodes_[nd.kid[3]].locs;
    js.gamma_child = gamma_child;
    auto joined = join_tables(nd.half[0], nd.half[1], js);
    std::vector<Entry> fin;
    fin.reserve(joined.size());
    for (auto& e : joined) {
      if (!policy_.finalize(e.st, nd)) continue;
      if (!within_limits(e.st, rect_of(sq))) continue;
      e.st.rehash();
      fin.push_back(std::move(e));
    }
    nd.table = dedupe(std::move(fin));
    prune(nd.table, rect_of(sq));
    stats_.states_per_level[std::min<int>(sq.level, stats_.states_per_level.size() - 1)] += nd.table.size();
  }

  void walk(int id, std::size_t entry, std::vector<Segment>& segs, const Visitor* fn) const {
    const Node& node = nodes_[id];
    const Entry& e = node.table[entry];
    const std::size_t before = segs.size();
    if (node.leaf) {
      const auto& g = node.leaf_geometry[e.a];
      segs.insert(segs.end(), g.begin(), g.end());
    } else {
      const Entry& h0 = node.half[0][e.a];
      const Entry& h1 = node.half[1][e.b];
      walk(node.kid[0], h0.a, segs, fn);
      walk(node.kid[1], h0.b, segs, fn);
      walk(node.kid[2], h1.a, segs, fn);
      walk(node.kid[3], h1.b, segs, fn);
    }
    if (fn) {
      std::vector<Segment> mine(segs.begin() + before, segs.end());
      (*fn)(node, e.st, mine);
    }
  }

  DPContext ctx_;
  Policy policy_;
  DPOptions opt_;
  DPStats stats_;
  std::vector<Node> nodes_;
  std::map<Point, PortalId> portal_index_;
  std::vector<Point> portal_pt_;
  std::vector<double> portal_dev_;
};

// Guide deviation of the portals of components the predicate selects;
// portals no guide crosses cost a full side length.
template <class State, class Engine, class Pred>
double guide_penalty(const State& st, const Rect& r, const Engine& eng, Pred&& select) {
  double h = 0;
  for (std::size_t k = 0; k < st.port.size(); ++k) {
    if (!select(st.data[st.comp[k]])) continue;
    double dv = eng.portal_guide_deviation(st.port[k]);
    h += std::isfinite(dv) ? dv : (r.x1 - r.x0);
  }
  return eng.options().guide_weight * h;
}

// ---------------------------------------------------------------------------
// Steiner forest policy

struct ForestPayload {
  std::uint64_t pending = 0;  // locations whose mate lies outside the region
  std::uint64_t cells = 0;    // bitmap of terminal cells, row-major in the owner's grid
  friend bool operator==(const ForestPayload& a, const ForestPayload& b) {
    return a.pending == b.pending && a.cells == b.cells;
  }
};

struct ForestExtra {
  friend bool operator==(const ForestExtra&, const ForestExtra&) { return true; }
};

class ForestPolicy {
 public:
  using Payload = ForestPayload;
  using Extra = ForestExtra;

  ForestPolicy() = default;
  ForestPolicy(std::vector<Point> locs, std::vector<std::pair<int, int>> pairs) : locs_(std::move(locs)), pairs_(std::move(pairs)) {
    mates_.assign(locs_.size(), 0);
    for (auto [a, b] : pairs_) {
      mates_[a] |= 1ull << b;
      mates_[b] |= 1ull << a;
    }
  }

  const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }

  static void hash_payload(const Payload& p, std::uint64_t& h) {
    hash_mix(h, p.pending);
    hash_mix(h, p.cells);
  }
  static void hash_bucket(const Payload& p, std::uint64_t& h) { hash_mix(h, p.pending); }
  static void hash_extra(const Extra&, std::uint64_t&) {}
  static void hash_extra_bucket(const Extra&, std::uint64_t&) {}

  template <class Node>
  Payload leaf_payload(int loc, const Node& node) const {
    Payload p;
    p.pending = mates_[loc] ? (1ull << loc) : 0;
    CellIndex c = cell_of(locs_[loc], node.sq, node.gamma);
    p.cells = 1ull << (c.row * node.gamma + c.col);
    return p;
  }
  Payload empty_payload() const { return {}; }
  Extra leaf_extra(int) const { return {}; }

  Payload lift(const Payload& p, int quadrant, int gc, int gp) const {
    Payload out = p;
    out.cells = 0;
    const int shift = 2 * gc > gp ? 1 : 0;
    for (int r = 0; r < gc; ++r)
      for (int c = 0; c < gc; ++c) {
        if (!(p.cells >> (r * gc + c) & 1)) continue;
        int pr = (r + (quadrant & 2 ? gc : 0)) >> shift;
        int pc = (c + (quadrant & 1 ? gc : 0)) >> shift;
        out.cells |= 1ull << (pr * gp + pc);
      }
    return out;
  }

  void unite(Payload& into, const Payload& from, Extra&) const {
    into.pending |= from.pending;
    into.cells |= from.cells;
  }
  Extra join_extra(const Extra&, const Extra&) const { return {}; }

  void refresh(Payload& p, std::uint64_t region) const {
    std::uint64_t keep = 0;
    for (std::uint64_t m = p.pending; m; m &= m - 1) {
      int l = __builtin_ctzll(m);
      if (mates_[l] & ~region) keep |= 1ull << l;
    }
    p.pending = keep;
  }

  bool close(const Payload& p, Extra&) const { return p.pending == 0; }

  template <class Fn>
  void link(const std::vector<Payload>& A, const std::vector<Payload>& B, std::uint64_t ra, std::uint64_t rb, Fn&& fn,
            bool& ok) const {
    for (auto [a, b] : pairs_) {
      int x = a, y = b;
      if ((ra >> y & 1) && (rb >> x & 1)) std::swap(x, y);
      if (!((ra >> x & 1) && (rb >> y & 1))) continue;
      std::size_t ca = A.size(), cb = B.size();
      for (std::size_t i = 0; i < A.size(); ++i)
        if (A[i].pending >> x & 1) ca = i;
      for (std::size_t j = 0; j < B.size(); ++j)
        if (B[j].pending >> y & 1) cb = j;
      if (ca == A.size() || cb == B.size()) {
        ok = false;
        return;
      }
      fn(ca, cb);
    }
  }

  // Open components must not share a cell of the owner's grid.
  template <class State, class Node>
  bool finalize(State& st, const Node&) const {
    std::uint64_t seen = 0;
    for (const auto& p : st.data) {
      if (seen & p.cells) return false;
      seen |= p.cells;
    }
    return true;
  }

  std::optional<double> root_value(const Extra&) const { return 0.0; }
  bool extra_dominates(const Extra&, const Extra&) const { return true; }

  template <class State, class Engine>
  double heuristic(const State& st, const Rect& r, const Engine& eng) const {
    const auto& opt = eng.options();
    double h = 0;
    std::vector<double> comp_min(st.data.size(), std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < st.port.size(); ++k) {
      const std::size_t c = st.comp[k];
      const Point& pp = eng.portal_point(st.port[k]);
      if (st.data[c].pending) {
        for (std::uint64_t m = st.data[c].pending; m; m &= m - 1) {
          int l = __builtin_ctzll(m);
          for (std::uint64_t u = mates_[l]; u; u &= u - 1) {
            int v = __builtin_ctzll(u);
            const Point& q = locs_[v];
            bool inside = q.x > r.x0 && q.x < r.x1 && q.y > r.y0 && q.y < r.y1;
            if (!inside) comp_min[c] = std::min(comp_min[c], dist(pp, q));
          }
        }
      } else {
        double dv = eng.portal_guide_deviation(st.port[k]);
        if (std::isfinite(dv)) h += opt.guide_weight * dv;
        else h += opt.guide_weight * (r.x1 - r.x0);
      }
    }
    for (double v : comp_min)
      if (std::isfinite(v)) h += opt.pending_weight * v;
    return h;
  }

 private:
  std::vector<Point> locs_;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<std::uint64_t> mates_;
};

// Terminal-pair segments and the spokes of every triple's Fermat point.
inline std::vector<Segment> default_guides(const std::vector<Point>& locs) {
  std::vector<Segment> g;
  for (std::size_t i = 0; i < locs.size(); ++i)
    for (std::size_t j = i + 1; j < locs.size(); ++j) g.push_back({locs[i], locs[j]});
  for (std::size_t i = 0; i < locs.size(); ++i)
    for (std::size_t j = i + 1; j < locs.size(); ++j)
      for (std::size_t k = j + 1; k < locs.size(); ++k) {
        auto f = fermat_point(locs[i], locs[j], locs[k]);
        for (const Point* p : {&locs[i], &locs[j], &locs[k]})
          if (!(*p == f.point)) g.push_back({f.point, *p});
      }
  return g;
}

}  // namespace esf
