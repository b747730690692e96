#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "esf/util.hpp"

namespace esf {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point& a, const Point& b) { return a.x == b.x && a.y == b.y; }
  friend bool operator!=(const Point& a, const Point& b) { return !(a == b); }
  friend bool operator<(const Point& a, const Point& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  }
};

inline double dist(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

enum class Mode { SteinerForest, SMpcsf, Mpcsf, AsymSMpcsf, AsymMpcsf, Pcsf };

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::SteinerForest: return "steiner-forest";
    case Mode::SMpcsf: return "s-mpcsf";
    case Mode::Mpcsf: return "mpcsf";
    case Mode::AsymSMpcsf: return "asym-s-mpcsf";
    case Mode::AsymMpcsf: return "asym-mpcsf";
    case Mode::Pcsf: return "pcsf";
  }
  return "?";
}

inline std::optional<Mode> parse_mode(const std::string& s) {
  for (Mode m : {Mode::SteinerForest, Mode::SMpcsf, Mode::Mpcsf, Mode::AsymSMpcsf, Mode::AsymMpcsf,
                 Mode::Pcsf})
    if (s == mode_name(m)) return m;
  return std::nullopt;
}

inline bool is_multiplicative(Mode m) {
  return m == Mode::SMpcsf || m == Mode::Mpcsf || m == Mode::AsymSMpcsf || m == Mode::AsymMpcsf;
}
inline bool is_asymmetric(Mode m) { return m == Mode::AsymSMpcsf || m == Mode::AsymMpcsf; }
inline bool is_s_variant(Mode m) { return m == Mode::SMpcsf || m == Mode::AsymSMpcsf; }
inline bool has_pairs(Mode m) { return m == Mode::SteinerForest || m == Mode::Pcsf; }

struct Terminal {
  std::string id;
  Point location;
  double weight = 0.0;
  double weight_s = 0.0;
  double weight_t = 0.0;
};

struct DemandPair {
  std::string a;
  std::string b;
  double penalty = 0.0;
};

struct Instance {
  Mode mode = Mode::SteinerForest;
  std::vector<Terminal> terminals;
  std::vector<DemandPair> pairs;
  std::optional<double> prize_target;
  double epsilon = 0.5;
  double epsilon_prime = 0.1;

  std::optional<std::size_t> index_of(const std::string& id) const {
    for (std::size_t i = 0; i < terminals.size(); ++i)
      if (terminals[i].id == id) return i;
    return std::nullopt;
  }

  std::size_t require_index(const std::string& id) const {
    auto i = index_of(id);
    if (!i) throw InvalidArgument("unknown terminal id '" + id + "'");
    return *i;
  }

  // pairs as terminal index pairs
  std::vector<std::pair<std::size_t, std::size_t>> pair_indices() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.emplace_back(require_index(p.a), require_index(p.b));
    return out;
  }

  double total_weight() const {
    double s = 0;
    for (const auto& t : terminals) s += t.weight;
    return s;
  }
};

struct Segment {
  Point a;
  Point b;

  double length() const { return dist(a, b); }
  friend bool operator==(const Segment& u, const Segment& v) { return u.a == v.a && u.b == v.b; }
  friend bool operator<(const Segment& u, const Segment& v) {
    return u.a < v.a || (u.a == v.a && u.b < v.b);
  }
};

// A geometric forest. Points and segments are kept sorted and unique so that
// two forests describing the same geometry compare equal.
class Forest {
 public:
  const std::vector<Point>& points() const { return points_; }
  const std::vector<Segment>& segments() const { return segments_; }

  void add_point(const Point& p) {
    auto it = std::lower_bound(points_.begin(), points_.end(), p);
    if (it == points_.end() || *it != p) points_.insert(it, p);
  }

  // Zero-length segments degrade to a point.
  void add_segment(Point a, Point b) {
    add_point(a);
    add_point(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    Segment s{a, b};
    auto it = std::lower_bound(segments_.begin(), segments_.end(), s);
    if (it == segments_.end() || !(*it == s)) segments_.insert(it, s);
  }

  void merge(const Forest& other) {
    for (const auto& p : other.points_) add_point(p);
    for (const auto& s : other.segments_) add_segment(s.a, s.b);
  }

  bool contains(const Point& p) const {
    return std::binary_search(points_.begin(), points_.end(), p);
  }

  std::optional<std::size_t> point_index(const Point& p) const {
    auto it = std::lower_bound(points_.begin(), points_.end(), p);
    if (it == points_.end() || *it != p) return std::nullopt;
    return static_cast<std::size_t>(it - points_.begin());
  }

  bool empty() const { return segments_.empty(); }

  // Union-find over the endpoint graph.
  UnionFind components() const {
    UnionFind uf(points_.size());
    for (const auto& s : segments_) uf.unite(*point_index(s.a), *point_index(s.b));
    return uf;
  }

  friend bool operator==(const Forest& f, const Forest& g) {
    return f.points_ == g.points_ && f.segments_ == g.segments_;
  }

 private:
  std::vector<Point> points_;
  std::vector<Segment> segments_;
};

inline double forest_length(const Forest& f) {
  double total = 0.0;
  for (const auto& s : f.segments()) total += s.length();
  return total;
}

inline bool connected(const Forest& f, const Point& p, const Point& q) {
  auto i = f.point_index(p);
  auto j = f.point_index(q);
  if (!i || !j) return false;
  if (*i == *j) return true;
  UnionFind uf = f.components();
  return uf.same(*i, *j);
}

// Component label for every terminal. Terminals whose location is not a forest
// point get a fresh singleton label.
inline std::vector<std::size_t> terminal_components(const Instance& inst, const Forest& f) {
  UnionFind uf = f.components();
  std::vector<std::size_t> label(inst.terminals.size());
  std::size_t fresh = f.points().size();
  std::map<Point, std::size_t> isolated;
  for (std::size_t i = 0; i < inst.terminals.size(); ++i) {
    const Point& p = inst.terminals[i].location;
    if (auto k = f.point_index(p)) {
      label[i] = uf.find(*k);
    } else {
      auto [it, inserted] = isolated.emplace(p, fresh);
      if (inserted) ++fresh;
      label[i] = it->second;
    }
  }
  return label;
}

// Ordered-pair prize including self pairs: sum over components of (sum phi)^2,
// or (sum phi_s)(sum phi_t) in the asymmetric modes.
inline double collected_prize(const Instance& inst, const Forest& f) {
  auto label = terminal_components(inst, f);
  std::map<std::size_t, std::pair<double, double>> sums;
  const bool asym = is_asymmetric(inst.mode);
  for (std::size_t i = 0; i < inst.terminals.size(); ++i) {
    auto& s = sums[label[i]];
    const auto& t = inst.terminals[i];
    s.first += asym ? t.weight_s : t.weight;
    s.second += asym ? t.weight_t : t.weight;
  }
  double total = 0.0;
  for (const auto& [k, s] : sums) total += s.first * s.second;
  return total;
}

// Delta^2 (or Delta_s * Delta_t): the prize collected when everything is connected.
inline double total_prize(const Instance& inst) {
  double a = 0, b = 0;
  const bool asym = is_asymmetric(inst.mode);
  for (const auto& t : inst.terminals) {
    a += asym ? t.weight_s : t.weight;
    b += asym ? t.weight_t : t.weight;
  }
  return a * b;
}

inline bool pairs_satisfied(const Instance& inst, const Forest& f) {
  auto label = terminal_components(inst, f);
  for (auto [a, b] : inst.pair_indices())
    if (label[a] != label[b]) return false;
  return true;
}

// Sum of penalties of pairs left unconnected (pcsf mode).
inline double unpaid_penalty(const Instance& inst, const Forest& f) {
  auto label = terminal_components(inst, f);
  double total = 0.0;
  auto idx = inst.pair_indices();
  for (std::size_t k = 0; k < idx.size(); ++k)
    if (label[idx[k].first] != label[idx[k].second]) total += inst.pairs[k].penalty;
  return total;
}

// Objective of a prize-collecting solution: forest cost plus what it fails to
// collect (multiplicative modes) or the penalties of unconnected pairs (pcsf).
inline double objective(const Instance& inst, const Forest& f) {
  if (inst.mode == Mode::Pcsf) return forest_length(f) + unpaid_penalty(inst, f);
  if (is_multiplicative(inst.mode)) return forest_length(f) + total_prize(inst) - collected_prize(inst, f);
  return forest_length(f);
}

}  // namespace esf
