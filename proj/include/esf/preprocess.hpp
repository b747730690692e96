#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "esf/model.hpp"
#include "esf/util.hpp"

namespace esf {

// An instance moved onto the odd lattice, with the map back to raw
// coordinates: raw = (scaled - 1) / scale_factor + translation.
struct ScaledInstance {
  Instance base;
  double scale_factor = 1.0;
  std::pair<double, double> translation{0.0, 0.0};
  std::vector<Instance> subinstances;
  std::vector<std::vector<std::size_t>> subinstance_terminals;  // raw terminal indices of each subinstance
  double opt_guess = 0.0;
  bool empty_forest = false;

  Point to_raw(const Point& p) const {
    return {(p.x - 1.0) / scale_factor + translation.first, (p.y - 1.0) / scale_factor + translation.second};
  }
  Point to_scaled(const Point& p) const {
    return {(p.x - translation.first) * scale_factor + 1.0, (p.y - translation.second) * scale_factor + 1.0};
  }

  // Side of the smallest box [0, d'] x [0, d'] holding every scaled terminal.
  double extent() const {
    double e = 2.0;
    for (const auto& t : base.terminals) e = std::max({e, t.location.x + 1.0, t.location.y + 1.0});
    return e;
  }
};

inline double snap_odd(double v) { return 2.0 * std::floor(v / 2.0) + 1.0; }

inline Point snap_odd(const Point& p) { return {snap_odd(p.x), snap_odd(p.y)}; }

namespace detail {

inline ScaledInstance scale_and_snap(const Instance& inst, double scale) {
  ScaledInstance out;
  out.base = inst;
  out.scale_factor = scale;
  double mx = std::numeric_limits<double>::infinity(), my = mx;
  for (const auto& t : inst.terminals) {
    mx = std::min(mx, t.location.x);
    my = std::min(my, t.location.y);
  }
  if (inst.terminals.empty()) mx = my = 0;
  out.translation = {mx, my};
  for (auto& t : out.base.terminals) t.location = snap_odd(out.to_scaled(t.location));
  return out;
}

}  // namespace detail

// Scaled so the largest pair distance becomes 16*sqrt(2)*n/eps; the odd-lattice
// snap then moves each terminal by at most sqrt(2).
inline ScaledInstance normalize_forest_instance(const Instance& inst) {
  if (inst.mode != Mode::SteinerForest) throw InvalidArgument("normalize_forest_instance needs steiner-forest mode");
  if (inst.pairs.empty()) throw InvalidArgument("normalize_forest_instance needs at least one pair");
  double d = 0.0;
  for (auto [a, b] : inst.pair_indices()) d = std::max(d, dist(inst.terminals[a].location, inst.terminals[b].location));
  if (d == 0.0) {
    ScaledInstance out;
    out.base = inst;
    out.empty_forest = true;
    return out;
  }
  const double n = static_cast<double>(inst.terminals.size());
  const double target = 16.0 * std::sqrt(2.0) * n / inst.epsilon;
  return detail::scale_and_snap(inst, target / d);
}

// Components of the graph joining terminals at distance <= opt_guess, each
// scaled by 8n/(eps * opt_guess) and snapped.
inline ScaledInstance normalize_multiplicative(const Instance& inst, double opt_guess) {
  if (!is_multiplicative(inst.mode)) throw InvalidArgument("normalize_multiplicative needs a multiplicative mode");
  if (!(opt_guess > 0.0)) throw InvalidArgument("opt_guess must be positive");
  const std::size_t n = inst.terminals.size();
  const double scale = 8.0 * std::max<double>(1.0, static_cast<double>(n)) / (inst.epsilon * opt_guess);
  ScaledInstance out = detail::scale_and_snap(inst, scale);
  out.opt_guess = opt_guess;
  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (dist(inst.terminals[i].location, inst.terminals[j].location) <= opt_guess) uf.unite(i, j);
  std::map<std::size_t, std::size_t> slot;
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, fresh] = slot.emplace(uf.find(i), out.subinstances.size());
    if (fresh) {
      Instance sub = out.base;
      sub.terminals.clear();
      sub.pairs.clear();
      out.subinstances.push_back(std::move(sub));
      out.subinstance_terminals.emplace_back();
    }
    out.subinstances[it->second].terminals.push_back(out.base.terminals[i]);
    out.subinstance_terminals[it->second].push_back(i);
  }
  if (n <= 1) out.empty_forest = true;
  return out;
}

// Geometric grid omega/n * (1+eps)^j over [omega/n, omega], last value clamped.
inline std::vector<double> guess_opt_schedule(const Instance& inst, double baseline_value) {
  if (!(baseline_value > 0.0)) throw InvalidArgument("baseline value must be positive");
  const double n = std::max<double>(1.0, static_cast<double>(inst.terminals.size()));
  std::vector<double> out;
  double g = baseline_value / n;
  while (g < baseline_value * (1.0 - 1e-12)) {
    out.push_back(g);
    g *= 1.0 + inst.epsilon;
  }
  out.push_back(baseline_value);
  return out;
}

// Maps a forest on the scaled instance back to raw coordinates and joins every
// raw terminal to its snapped position.
inline Forest restore_forest(const ScaledInstance& si, const Instance& raw, const std::vector<Segment>& scaled_segments,
                             const std::vector<std::size_t>& terminals_used) {
  Forest f;
  for (const auto& s : scaled_segments) f.add_segment(si.to_raw(s.a), si.to_raw(s.b));
  for (auto i : terminals_used) {
    const Point& p = raw.terminals[i].location;
    Point q = si.to_raw(si.base.terminals[i].location);
    if (f.contains(q) && !(p == q)) f.add_segment(p, q);
  }
  return f;
}

}  // namespace esf
