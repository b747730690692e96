#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "esf/dissection.hpp"
#include "esf/model.hpp"
#include "esf/util.hpp"

namespace esf {

// gamma x gamma 0-1 matrix. Row r, column c; rows grow with y.
class Bitmap {
 public:
  Bitmap() = default;
  explicit Bitmap(int gamma) : gamma_(gamma), words_((static_cast<std::size_t>(gamma) * gamma + 63) / 64, 0) {}

  int gamma() const { return gamma_; }
  bool get(int r, int c) const {
    std::size_t i = static_cast<std::size_t>(r) * gamma_ + c;
    return words_[i / 64] >> (i % 64) & 1;
  }
  void set(int r, int c, bool v = true) {
    std::size_t i = static_cast<std::size_t>(r) * gamma_ + c;
    if (v) words_[i / 64] |= std::uint64_t{1} << (i % 64);
    else words_[i / 64] &= ~(std::uint64_t{1} << (i % 64));
  }
  bool any() const {
    for (auto w : words_)
      if (w) return true;
    return false;
  }
  bool disjoint(const Bitmap& o) const {
    for (std::size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & o.words_[i]) return false;
    return true;
  }
  Bitmap& operator|=(const Bitmap& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
    return *this;
  }
  const std::vector<std::uint64_t>& words() const { return words_; }

  friend bool operator==(const Bitmap& a, const Bitmap& b) { return a.gamma_ == b.gamma_ && a.words_ == b.words_; }
  friend bool operator<(const Bitmap& a, const Bitmap& b) {
    return a.gamma_ != b.gamma_ ? a.gamma_ < b.gamma_ : a.words_ < b.words_;
  }

 private:
  int gamma_ = 0;
  std::vector<std::uint64_t> words_;
};

// Quadrant bit 0 selects the high columns, bit 1 the high rows. With rows
// growing with y this matches the child numbering SW, SE, NW, NE.
inline Bitmap expand_bitmap(const Bitmap& m, int quadrant) {
  const int g = m.gamma();
  Bitmap out(2 * g);
  const int r0 = quadrant & 2 ? g : 0, c0 = quadrant & 1 ? g : 0;
  for (int r = 0; r < g; ++r)
    for (int c = 0; c < g; ++c)
      if (m.get(r, c)) out.set(r0 + r, c0 + c);
  return out;
}

inline Bitmap shrink_bitmap(const Bitmap& m) {
  if (m.gamma() % 2) throw InvalidArgument("shrink_bitmap needs an even dimension");
  const int g = m.gamma() / 2;
  Bitmap out(g);
  for (int r = 0; r < m.gamma(); ++r)
    for (int c = 0; c < m.gamma(); ++c)
      if (m.get(r, c)) out.set(r / 2, c / 2);
  return out;
}

// Quantized weight sum: value = ticks * theta.
struct QuantizedSum {
  long long ticks = 0;
  friend bool operator==(const QuantizedSum& a, const QuantizedSum& b) { return a.ticks == b.ticks; }
};

// Quantized collected prize: value = ticks * theta^2.
struct QuantizedPrize {
  long long ticks = 0;
  friend bool operator==(const QuantizedPrize& a, const QuantizedPrize& b) { return a.ticks == b.ticks; }
};

// Variable-unit sum: value = coeff * eps1 * w(anchor) / n^2. anchor < 0 is zero.
struct FloatSum {
  int anchor = -1;
  long long coeff = 0;
  friend bool operator==(const FloatSum& a, const FloatSum& b) { return a.anchor == b.anchor && a.coeff == b.coeff; }
};

struct Component {
  std::vector<Point> portals;  // sorted
  Bitmap cells;
  std::optional<QuantizedSum> sum;
  std::optional<FloatSum> sum_s;
  std::optional<FloatSum> sum_t;
  std::optional<int> heavy_count;

  friend bool operator==(const Component& a, const Component& b) {
    return a.portals == b.portals && a.cells == b.cells && a.sum == b.sum && a.sum_s == b.sum_s &&
           a.sum_t == b.sum_t && a.heavy_count == b.heavy_count;
  }
};

struct Configuration {
  std::vector<Component> components;
  std::vector<int> block;  // requirement partition: block label per component
  std::optional<QuantizedPrize> prize;

  std::size_t portal_count() const {
    std::size_t s = 0;
    for (const auto& c : components) s += c.portals.size();
    return s;
  }

  // Components sorted by smallest portal (then bitmap); block labels renumbered
  // in order of first appearance.
  void canonicalize() {
    std::vector<std::size_t> order(components.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (auto& c : components) std::sort(c.portals.begin(), c.portals.end());
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const auto& ca = components[a];
      const auto& cb = components[b];
      if (ca.portals.empty() != cb.portals.empty()) return cb.portals.empty();
      if (!ca.portals.empty() && !(ca.portals[0] == cb.portals[0])) return ca.portals[0] < cb.portals[0];
      return ca.cells < cb.cells;
    });
    std::vector<Component> comps;
    std::vector<int> blocks;
    std::map<int, int> relabel;
    for (auto i : order) {
      comps.push_back(components[i]);
      int b = block.empty() ? static_cast<int>(i) : block[i];
      auto [it, ins] = relabel.emplace(b, static_cast<int>(relabel.size()));
      blocks.push_back(it->second);
    }
    components = std::move(comps);
    block = std::move(blocks);
  }

  friend bool operator==(const Configuration& a, const Configuration& b) {
    Configuration x = a, y = b;
    x.canonicalize();
    y.canonicalize();
    return x.components == y.components && x.block == y.block && x.prize == y.prize;
  }
};

struct MergeResult {
  Configuration config;
  bool consistent = true;
};

namespace detail {

inline void validate_config(const Configuration& c) {
  if (!c.block.empty() && c.block.size() != c.components.size())
    throw InvalidArgument("partition does not cover the components");
  std::set<Point> seen;
  for (std::size_t i = 0; i < c.components.size(); ++i) {
    for (const auto& p : c.components[i].portals)
      if (!seen.insert(p).second) throw InvalidArgument("portal sets overlap");
    for (std::size_t j = 0; j < i; ++j)
      if (!c.components[i].cells.disjoint(c.components[j].cells)) throw InvalidArgument("bitmaps overlap");
  }
}

inline int quadrant_of(const Square& r, const Point& p) {
  Point c = r.center();
  return (p.x > c.x ? 1 : 0) | (p.y > c.y ? 2 : 0);
}

}  // namespace detail

// One parent update from four child configurations. Children are given in
// quadrant order; gamma_parent is the grid size of R's bitmaps.
inline MergeResult merge_children(const std::array<Configuration, 4>& chi, const Square& R,
                                  const std::vector<std::pair<Point, Point>>& pairs, int gamma_parent) {
  MergeResult res;
  int gamma_child = 0;
  for (const auto& c : chi) {
    detail::validate_config(c);
    for (const auto& comp : c.components) {
      if (gamma_child && comp.cells.gamma() != gamma_child) throw InvalidArgument("mixed bitmap sizes");
      gamma_child = comp.cells.gamma();
    }
  }
  if (gamma_child == 0) gamma_child = std::max(1, gamma_parent / 2);

  // K1 and P'
  std::vector<Component> k1;
  std::vector<int> owner_child;
  std::vector<std::size_t> first(4);
  UnionFind blocks;
  for (int q = 0; q < 4; ++q) {
    first[q] = k1.size();
    std::map<int, std::size_t> block_rep;
    for (std::size_t i = 0; i < chi[q].components.size(); ++i) {
      Component c = chi[q].components[i];
      c.cells = expand_bitmap(c.cells, q);
      k1.push_back(c);
      owner_child.push_back(q);
      std::size_t id = blocks.add();
      int b = chi[q].block.empty() ? static_cast<int>(i) : chi[q].block[i];
      auto [it, ins] = block_rep.emplace(b, id);
      if (!ins) blocks.unite(it->second, id);
    }
  }

  // pairs split across children
  auto find_comp = [&](const Point& p) -> std::optional<std::size_t> {
    const int q = detail::quadrant_of(R, p);
    CellIndex cell = cell_of(p, R.child(q), gamma_child);
    for (std::size_t i = first[q]; i < k1.size() && owner_child[i] == q; ++i)
      if (chi[q].components[i - first[q]].cells.get(cell.row, cell.col)) return i;
    return std::nullopt;
  };
  for (const auto& [a, b] : pairs) {
    if (!R.contains_strictly(a) || !R.contains_strictly(b)) continue;
    if (detail::quadrant_of(R, a) == detail::quadrant_of(R, b)) continue;
    auto ca = find_comp(a), cb = find_comp(b);
    if (!ca || !cb) {
      res.consistent = false;
      return res;
    }
    blocks.unite(*ca, *cb);
  }

  // K2: components sharing a portal merge, and so do their blocks
  UnionFind comp_uf(k1.size());
  std::map<Point, std::size_t> portal_owner;
  for (std::size_t i = 0; i < k1.size(); ++i)
    for (const auto& p : k1[i].portals) {
      auto [it, ins] = portal_owner.emplace(p, i);
      if (!ins) {
        comp_uf.unite(it->second, i);
        blocks.unite(it->second, i);
      }
    }
  std::map<std::size_t, Component> merged;
  std::map<std::size_t, std::size_t> merged_block;
  for (std::size_t i = 0; i < k1.size(); ++i) {
    std::size_t r = comp_uf.find(i);
    auto [it, ins] = merged.emplace(r, Component{});
    if (ins) it->second.cells = Bitmap(2 * gamma_child);
    Component& m = it->second;
    m.cells |= k1[i].cells;
    for (const auto& p : k1[i].portals) m.portals.push_back(p);
    if (k1[i].sum) m.sum = QuantizedSum{(m.sum ? m.sum->ticks : 0) + k1[i].sum->ticks};
    if (k1[i].heavy_count) m.heavy_count = (m.heavy_count ? *m.heavy_count : 0) + *k1[i].heavy_count;
    merged_block[r] = blocks.find(i);
  }

  // K3: keep only portals on the boundary of R
  for (auto& [r, c] : merged) {
    std::vector<Point> keep;
    for (const auto& p : c.portals)
      if (R.on_boundary(p)) keep.push_back(p);
    std::sort(keep.begin(), keep.end());
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
    c.portals = std::move(keep);
  }

  // empty portal sets must not carry an outstanding requirement
  std::map<std::size_t, int> block_size;
  for (auto& [r, c] : merged) ++block_size[blocks.find(merged_block[r])];
  for (auto& [r, c] : merged)
    if (c.portals.empty() && block_size[blocks.find(merged_block[r])] > 1) {
      res.consistent = false;
      return res;
    }

  // K4
  Configuration out;
  std::map<std::size_t, int> label;
  for (auto& [r, c] : merged) {
    if (c.portals.empty()) continue;
    auto [it, ins] = label.emplace(blocks.find(merged_block[r]), static_cast<int>(label.size()));
    out.components.push_back(c);
    out.block.push_back(it->second);
  }

  // locality: a parent cell may meet at most one component reaching the boundary
  const int ge = 2 * gamma_child;
  const int factor = std::max(1, ge / std::max(1, gamma_parent));
  for (int r = 0; r < gamma_parent; ++r)
    for (int c = 0; c < gamma_parent; ++c) {
      int hits = 0;
      for (const auto& comp : out.components) {
        bool touched = false;
        for (int dr = 0; dr < factor && !touched; ++dr)
          for (int dc = 0; dc < factor && !touched; ++dc)
            if (r * factor + dr < ge && c * factor + dc < ge && comp.cells.get(r * factor + dr, c * factor + dc))
              touched = true;
        hits += touched;
      }
      if (hits >= 2) {
        res.consistent = false;
        return res;
      }
    }

  for (auto& comp : out.components)
    while (comp.cells.gamma() > gamma_parent) comp.cells = shrink_bitmap(comp.cells);
  out.canonicalize();
  res.config = std::move(out);
  return res;
}

// True when `merged` may be filed under `chi`: a bijection between components
// with chi's portals contained in merged's and equal bitmaps, and merged's
// partition refining chi's.
inline bool compatible(const Configuration& chi, const Configuration& merged) {
  const std::size_t n = chi.components.size();
  if (merged.components.size() != n) return false;
  std::vector<int> match(n, -1);
  std::vector<bool> used(n, false);
  auto block_of = [](const Configuration& c, std::size_t i) { return c.block.empty() ? static_cast<int>(i) : c.block[i]; };
  std::function<bool(std::size_t)> rec = [&](std::size_t i) -> bool {
    if (i == n) {
      // every merged block maps into a single chi block
      std::map<int, int> to_chi;
      for (std::size_t k = 0; k < n; ++k) {
        auto [it, ins] = to_chi.emplace(block_of(merged, k), block_of(chi, match[k]));
        if (!ins && it->second != block_of(chi, match[k])) return false;
      }
      return true;
    }
    const Component& mc = merged.components[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (used[j]) continue;
      const Component& cc = chi.components[j];
      if (!(cc.cells == mc.cells)) continue;
      if (!std::includes(mc.portals.begin(), mc.portals.end(), cc.portals.begin(), cc.portals.end())) continue;
      if (cc.sum != mc.sum || cc.heavy_count != mc.heavy_count) continue;
      used[j] = true;
      match[i] = static_cast<int>(j);
      if (rec(i + 1)) return true;
      used[j] = false;
    }
    return false;
  };
  return rec(0);
}

namespace detail {

// Parameter t in [0,1] of the intersection of segment ab with the square,
// as a (t0, t1) interval; empty when t0 > t1.
inline std::pair<double, double> clip_interval(const Point& a, const Point& b, const Square& sq) {
  double t0 = 0, t1 = 1;
  const double dx = b.x - a.x, dy = b.y - a.y;
  auto edge = [&](double p, double q) {
    if (p == 0) return q >= 0;
    double t = q / p;
    if (p < 0) t0 = std::max(t0, t);
    else t1 = std::min(t1, t);
    return true;
  };
  if (!edge(-dx, a.x - sq.x0()) || !edge(dx, sq.x1() - a.x) || !edge(-dy, a.y - sq.y0()) ||
      !edge(dy, sq.y1() - a.y))
    return {1, 0};
  return {t0, t1};
}

}  // namespace detail

// Pieces of f inside the closed square, as a forest whose boundary points
// are the crossing points.
inline Forest clip_forest(const Forest& f, const Square& sq) {
  Forest out;
  for (const auto& s : f.segments()) {
    auto [t0, t1] = detail::clip_interval(s.a, s.b, sq);
    if (t0 > t1) continue;
    auto at = [&](double t) {
      if (t == 0) return s.a;
      if (t == 1) return s.b;
      return Point{s.a.x + (s.b.x - s.a.x) * t, s.a.y + (s.b.y - s.a.y) * t};
    };
    out.add_segment(at(t0), at(t1));
  }
  for (const auto& p : f.points())
    if (sq.contains_closed(p)) out.add_point(p);
  return out;
}

// Intersection of a forest (already clipped to sq) with the boundary of sq,
// returned as closed intervals along the perimeter parameter in [0, 4 side).
inline double perimeter_param(const Square& sq, const Point& p) {
  const double s = sq.side;
  if (p.y == sq.y0()) return p.x - sq.x0();
  if (p.x == sq.x1()) return s + (p.y - sq.y0());
  if (p.y == sq.y1()) return 2 * s + (sq.x1() - p.x);
  return 3 * s + (sq.y1() - p.y);
}

struct CompatibilityContext {
  std::vector<Point> terminals;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  int gamma = 1;
};

// Checks the two-clause compatibility definition for a subsolution of sq.
inline bool check_compatibility_with_forest(const Forest& f, const Square& sq, const Configuration& chi,
                                            const CompatibilityContext& ctx) {
  Forest g = clip_forest(f, sq);
  UnionFind uf = g.components();
  const auto& pts = g.points();

  // boundary intervals per forest component
  std::map<std::size_t, std::vector<std::pair<double, double>>> touch;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (sq.on_boundary(pts[i])) {
      double t = perimeter_param(sq, pts[i]);
      touch[uf.find(i)].push_back({t, t});
    }
  for (const auto& s : g.segments()) {
    if (!sq.on_boundary(s.a) || !sq.on_boundary(s.b)) continue;
    bool same_side = (s.a.x == s.b.x && (s.a.x == sq.x0() || s.a.x == sq.x1())) ||
                     (s.a.y == s.b.y && (s.a.y == sq.y0() || s.a.y == sq.y1()));
    if (!same_side) continue;
    double ta = perimeter_param(sq, s.a), tb = perimeter_param(sq, s.b);
    touch[uf.find(*g.point_index(s.a))].push_back({std::min(ta, tb), std::max(ta, tb)});
  }

  // terminal cells per forest component
  std::map<std::size_t, Bitmap> cells;
  std::vector<std::optional<std::size_t>> comp_of(ctx.terminals.size());
  for (std::size_t i = 0; i < ctx.terminals.size(); ++i) {
    const Point& p = ctx.terminals[i];
    if (!sq.contains_strictly(p)) continue;
    auto k = g.point_index(p);
    if (!k) continue;
    std::size_t r = uf.find(*k);
    comp_of[i] = r;
    auto [it, ins] = cells.emplace(r, Bitmap(ctx.gamma));
    CellIndex c = cell_of(p, sq, ctx.gamma);
    it->second.set(c.row, c.col);
  }

  // match every boundary-reaching forest component to a chi component
  std::map<std::size_t, std::size_t> chi_of;
  std::vector<bool> used(chi.components.size(), false);
  for (auto& [r, iv] : touch) {
    std::sort(iv.begin(), iv.end());
    std::vector<std::pair<double, double>> merged;
    for (auto [a, b] : iv) {
      if (!merged.empty() && a <= merged.back().second) merged.back().second = std::max(merged.back().second, b);
      else merged.push_back({a, b});
    }
    Bitmap bm = cells.count(r) ? cells[r] : Bitmap(ctx.gamma);
    bool found = false;
    for (std::size_t j = 0; j < chi.components.size() && !found; ++j) {
      if (used[j]) continue;
      const Component& c = chi.components[j];
      if (!(c.cells == bm)) continue;
      bool ok = true;
      std::vector<bool> hit(merged.size(), false);
      for (const auto& p : c.portals) {
        if (!sq.on_boundary(p)) {
          ok = false;
          break;
        }
        double t = perimeter_param(sq, p);
        bool inside = false;
        for (std::size_t k = 0; k < merged.size(); ++k)
          if (t >= merged[k].first && t <= merged[k].second) inside = hit[k] = true;
        if (!inside) ok = false;
      }
      for (bool h : hit) ok = ok && h;
      if (ok) {
        used[j] = true;
        chi_of[r] = j;
        found = true;
      }
    }
    if (!found) return false;
  }
  for (bool u : used)
    if (!u) return false;

  // termination and partition clauses
  auto block_of = [&](std::size_t j) { return chi.block.empty() ? static_cast<int>(j) : chi.block[j]; };
  for (auto [a, b] : ctx.pairs) {
    const bool ina = sq.contains_strictly(ctx.terminals[a]);
    const bool inb = sq.contains_strictly(ctx.terminals[b]);
    if (!ina && !inb) continue;
    if (ina && inb && comp_of[a] && comp_of[b] && *comp_of[a] == *comp_of[b]) continue;
    if (ctx.terminals[a] == ctx.terminals[b]) continue;
    for (std::size_t t : {a, b}) {
      if (!sq.contains_strictly(ctx.terminals[t])) continue;
      if (!comp_of[t] || !chi_of.count(*comp_of[t])) return false;
    }
    if (ina && inb && block_of(chi_of[*comp_of[a]]) != block_of(chi_of[*comp_of[b]])) return false;
  }
  return true;
}

// log2 of the configuration count bound [(4m)^(lambda+1) 2^(gamma^2)]^lambda 2^(lambda^2):
// each of at most lambda components picks a portal subset and a bitmap, and
// the partition over components adds the last factor.
inline double log2_config_bound(int m, int lambda, int gamma) {
  const double l = lambda;
  return l * ((l + 1) * std::log2(4.0 * m) + static_cast<double>(gamma) * gamma) + l * l;
}

}  // namespace esf
