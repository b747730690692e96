#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "esf/baseline.hpp"
#include "esf/config.hpp"
#include "esf/dp.hpp"
#include "esf/model.hpp"
#include "esf/preprocess.hpp"
#include "esf/steiner_forest.hpp"

namespace esf {

enum class Rounding { Down, Up };

inline long long quantize_ticks(double w, double theta, Rounding dir) {
  if (!(theta > 0.0)) throw InvalidArgument("quantization unit must be positive");
  const double q = w / theta;
  // absorb representation error when w is meant to be a multiple of theta
  const double r = std::nearbyint(q);
  if (std::abs(q - r) <= 1e-9 * std::max(1.0, std::abs(q))) return static_cast<long long>(r);
  return static_cast<long long>(dir == Rounding::Down ? std::floor(q) : std::ceil(q));
}

// Weights rounded to multiples of theta; exempt terminals keep their weight.
inline Instance quantize_weights(const Instance& inst, double theta, Rounding dir, const std::vector<bool>& exempt = {}) {
  Instance out = inst;
  for (std::size_t i = 0; i < out.terminals.size(); ++i) {
    if (i < exempt.size() && exempt[i]) continue;
    auto& t = out.terminals[i];
    t.weight = static_cast<double>(quantize_ticks(t.weight, theta, dir)) * theta;
    t.weight_s = static_cast<double>(quantize_ticks(t.weight_s, theta, dir)) * theta;
    t.weight_t = static_cast<double>(quantize_ticks(t.weight_t, theta, dir)) * theta;
  }
  return out;
}

namespace detail {

inline long long sat_add(long long a, long long b, long long cap) {
  return (a >= cap || b >= cap || a > cap - b) ? cap : a + b;
}

inline long long sat_mul(long long a, long long b, long long cap) {
  if (a == 0 || b == 0) return 0;
  return a > cap / b ? cap : std::min(cap, a * b);
}

// A handful of levels per octave; used to bucket states for the beam.
inline std::uint64_t coarse_level(long long v) {
  if (v < 8) return static_cast<std::uint64_t>(std::max(0LL, v));
  const int b = 64 - __builtin_clzll(static_cast<unsigned long long>(v));
  return static_cast<std::uint64_t>(b) * 4 + (static_cast<unsigned long long>(v) >> (b - 3) & 3);
}

}  // namespace detail

struct MergedPrize {
  QuantizedSum sum;
  QuantizedPrize prize;
};

// Joins two components: the sum is truncated at sqrt(S), the prize gains
// 2*s1*s2 from the untruncated sums and is capped at S (all in ticks).
inline MergedPrize merge_prize(QuantizedSum a, QuantizedSum b, QuantizedPrize pi, long long s_ticks) {
  const long long sigma_cap = static_cast<long long>(std::ceil(std::sqrt(static_cast<double>(s_ticks)) - 1e-9));
  MergedPrize out;
  const long long cross = detail::sat_mul(2 * a.ticks, b.ticks, s_ticks);
  out.prize.ticks = detail::sat_add(pi.ticks, cross, s_ticks);
  out.sum.ticks = std::min(sigma_cap, a.ticks + b.ticks);
  return out;
}

// Value of a float sum: coeff * eps1 * w(anchor) / n^2.
inline double float_value(const FloatSum& f, const std::vector<double>& weights, double n, double eps1) {
  if (f.anchor < 0) return 0.0;
  return static_cast<double>(f.coeff) * eps1 * weights[static_cast<std::size_t>(f.anchor)] / (n * n);
}

inline FloatSum float_leaf(int id, const std::vector<double>& weights, double n, double eps1) {
  if (!(weights[static_cast<std::size_t>(id)] > 0.0)) return {};
  return {id, static_cast<long long>(std::floor(n * n / eps1))};
}

inline FloatSum float_add(const FloatSum& a, const FloatSum& b, const std::vector<double>& weights) {
  if (a.anchor < 0 || a.coeff == 0) return b.anchor < 0 ? a : b;
  if (b.anchor < 0 || b.coeff == 0) return a;
  const double wa = weights[static_cast<std::size_t>(a.anchor)];
  const double wb = weights[static_cast<std::size_t>(b.anchor)];
  const int anchor = (wa > wb || (wa == wb && a.anchor < b.anchor)) ? a.anchor : b.anchor;
  const double w = std::max(wa, wb);
  if (a.anchor == b.anchor) return {anchor, a.coeff + b.coeff};
  const double x = (static_cast<double>(a.coeff) * wa + static_cast<double>(b.coeff) * wb) / w;
  return {anchor, static_cast<long long>(std::floor(x))};
}

namespace detail {

constexpr double kDeadState = 1e15;

inline bool strictly_inside(const Point& p, const Rect& r) { return p.x > r.x0 && p.x < r.x1 && p.y > r.y0 && p.y < r.y1; }

struct PrizePolicyBase {
  // Lattice length per unit of raw length; prize terms are converted with it
  // so they compare with dp costs.
  double cost_scale = 1.0;

  template <class P>
  P lift(const P& p, int, int, int) const {
    return p;
  }
  template <class P>
  void refresh(P&, std::uint64_t) const {}
  template <class P, class Fn>
  void link(const std::vector<P>&, const std::vector<P>&, std::uint64_t, std::uint64_t, Fn&&, bool&) const {}
  template <class State, class Node>
  bool finalize(State&, const Node&) const {
    return true;
  }
  template <class State, class Engine>
  double heuristic(const State& st, const Rect& r, const Engine& eng) const {
    return guide_penalty(st, r, eng, [](const auto&) { return true; });
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// S-MPCSF: components carry a truncated tick sum, states the collected prize.

struct SumPayload {
  long long sigma = 0;
  friend bool operator==(const SumPayload& a, const SumPayload& b) { return a.sigma == b.sigma; }
};

struct PrizeExtra {
  long long pi = 0;
  friend bool operator==(const PrizeExtra& a, const PrizeExtra& b) { return a.pi == b.pi; }
};

class SPrizePolicy : public detail::PrizePolicyBase {
 public:
  using Payload = SumPayload;
  using Extra = PrizeExtra;

  SPrizePolicy(std::vector<Point> locs, std::vector<long long> ticks, long long s_ticks, long long target)
      : locs_(std::move(locs)), ticks_(std::move(ticks)), s_ticks_(s_ticks), target_(target) {
    sigma_cap_ = static_cast<long long>(std::ceil(std::sqrt(static_cast<double>(s_ticks)) - 1e-9));
  }

  static void hash_payload(const Payload& p, std::uint64_t& h) { hash_mix(h, static_cast<std::uint64_t>(p.sigma)); }
  static void hash_bucket(const Payload& p, std::uint64_t& h) { hash_mix(h, detail::coarse_level(p.sigma)); }
  static void hash_extra(const Extra& e, std::uint64_t& h) { hash_mix(h, static_cast<std::uint64_t>(e.pi)); }
  static void hash_extra_bucket(const Extra& e, std::uint64_t& h) { hash_mix(h, detail::coarse_level(e.pi)); }

  template <class Node>
  Payload leaf_payload(int loc, const Node&) const {
    return {std::min(sigma_cap_, ticks_[static_cast<std::size_t>(loc)])};
  }
  Payload empty_payload() const { return {}; }
  Extra leaf_extra(int loc) const {
    const long long t = ticks_[static_cast<std::size_t>(loc)];
    return {detail::sat_mul(t, t, s_ticks_)};
  }

  void unite(Payload& into, const Payload& from, Extra& extra) const {
    auto m = merge_prize({into.sigma}, {from.sigma}, {extra.pi}, s_ticks_);
    into.sigma = m.sum.ticks;
    extra.pi = m.prize.ticks;
  }
  Extra join_extra(const Extra& a, const Extra& b) const { return {detail::sat_add(a.pi, b.pi, s_ticks_)}; }
  bool close(const Payload&, Extra&) const { return true; }

  std::optional<double> root_value(const Extra& e) const {
    if (e.pi >= target_) return 0.0;
    return std::nullopt;
  }
  bool extra_dominates(const Extra& a, const Extra& b) const { return a.pi >= b.pi; }

  // States that can no longer reach the target even if every open component
  // later joins everything outside the square go to the back of the beam.
  template <class State, class Engine>
  double heuristic(const State& st, const Rect& r, const Engine& eng) const {
    double h = PrizePolicyBase::heuristic(st, r, eng);
    if (st.extra.pi >= target_) return h;
    double out = 0, open = 0, own = 0;
    for (std::size_t l = 0; l < locs_.size(); ++l)
      if (!detail::strictly_inside(locs_[l], r)) out += static_cast<double>(ticks_[l]);
    for (const auto& p : st.data) {
      open += static_cast<double>(p.sigma);
      own += static_cast<double>(p.sigma) * static_cast<double>(p.sigma);
    }
    const double best = static_cast<double>(st.extra.pi) - own + (open + out) * (open + out);
    return best < static_cast<double>(target_) ? h + detail::kDeadState : h;
  }

  long long sigma_cap() const { return sigma_cap_; }

 private:
  std::vector<Point> locs_;
  std::vector<long long> ticks_;
  long long s_ticks_;
  long long target_;
  long long sigma_cap_;
};

// ---------------------------------------------------------------------------
// Asymmetric variant: two float sums per component, prize in units u.

struct AsymPayload {
  FloatSum s;
  FloatSum t;
  friend bool operator==(const AsymPayload& a, const AsymPayload& b) { return a.s == b.s && a.t == b.t; }
};

class AsymPrizePolicy : public detail::PrizePolicyBase {
 public:
  using Payload = AsymPayload;
  using Extra = PrizeExtra;

  // target: ticks the root must reach, or none to score roots by A - pi * unit.
  AsymPrizePolicy(std::vector<Point> locs, std::vector<double> ws, std::vector<double> wt, double n, double eps1,
                  double unit, double A, long long cap, std::optional<long long> target)
      : locs_(std::move(locs)), ws_(std::move(ws)), wt_(std::move(wt)), n_(n), eps1_(eps1), unit_(unit), A_(A), cap_(cap), target_(target) {}

  static void hash_payload(const Payload& p, std::uint64_t& h) {
    hash_mix(h, static_cast<std::uint64_t>(p.s.anchor + 1));
    hash_mix(h, static_cast<std::uint64_t>(p.s.coeff));
    hash_mix(h, static_cast<std::uint64_t>(p.t.anchor + 1));
    hash_mix(h, static_cast<std::uint64_t>(p.t.coeff));
  }
  static void hash_bucket(const Payload& p, std::uint64_t& h) {
    hash_mix(h, static_cast<std::uint64_t>(p.s.anchor + 1));
    hash_mix(h, static_cast<std::uint64_t>(p.t.anchor + 1));
  }
  static void hash_extra(const Extra& e, std::uint64_t& h) { hash_mix(h, static_cast<std::uint64_t>(e.pi)); }
  static void hash_extra_bucket(const Extra& e, std::uint64_t& h) { hash_mix(h, detail::coarse_level(e.pi)); }

  template <class Node>
  Payload leaf_payload(int loc, const Node&) const {
    return {float_leaf(loc, ws_, n_, eps1_), float_leaf(loc, wt_, n_, eps1_)};
  }
  Payload empty_payload() const { return {}; }
  Extra leaf_extra(int loc) const {
    Payload p{float_leaf(loc, ws_, n_, eps1_), float_leaf(loc, wt_, n_, eps1_)};
    return {ticks(vs(p) * vt(p))};
  }

  void unite(Payload& into, const Payload& from, Extra& extra) const {
    const long long gain = ticks(vs(into) * vt(from) + vs(from) * vt(into));
    extra.pi = detail::sat_add(extra.pi, gain, cap_);
    into.s = float_add(into.s, from.s, ws_);
    into.t = float_add(into.t, from.t, wt_);
  }
  Extra join_extra(const Extra& a, const Extra& b) const { return {detail::sat_add(a.pi, b.pi, cap_)}; }
  bool close(const Payload&, Extra&) const { return true; }

  std::optional<double> root_value(const Extra& e) const {
    if (target_) {
      if (e.pi >= *target_) return 0.0;
      return std::nullopt;
    }
    return cost_scale * std::max(0.0, A_ - static_cast<double>(e.pi) * unit_);
  }
  bool extra_dominates(const Extra& a, const Extra& b) const { return a.pi >= b.pi; }

  double vs(const Payload& p) const { return float_value(p.s, ws_, n_, eps1_); }
  double vt(const Payload& p) const { return float_value(p.t, wt_, n_, eps1_); }

  // Prize already lost: pairs split by a closed component stay split.
  template <class State, class Engine>
  double heuristic(const State& st, const Rect& r, const Engine& eng) const {
    double h = PrizePolicyBase::heuristic(st, r, eng);
    double out_s = 0, out_t = 0, open_s = 0, open_t = 0, own = 0;
    for (std::size_t l = 0; l < locs_.size(); ++l)
      if (!detail::strictly_inside(locs_[l], r)) {
        out_s += ws_[l];
        out_t += wt_[l];
      }
    for (const auto& p : st.data) {
      open_s += vs(p);
      open_t += vt(p);
      own += vs(p) * vt(p);
    }
    const double closed = std::max(0.0, static_cast<double>(st.extra.pi) * unit_ - own);
    const double best = closed + (open_s + out_s) * (open_t + out_t);
    if (target_) return best < static_cast<double>(*target_) * unit_ ? h + detail::kDeadState : h;
    return h + cost_scale * std::max(0.0, A_ - best);
  }

 private:
  std::vector<Point> locs_;
  long long ticks(double v) const {
    const double q = std::floor(v / unit_);
    return q >= static_cast<double>(cap_) ? cap_ : static_cast<long long>(q);
  }

  std::vector<double> ws_, wt_;
  double n_, eps1_, unit_, A_;
  long long cap_;
  std::optional<long long> target_;
};

// ---------------------------------------------------------------------------
// Heavy case of MPCSF: heavy terminals are counted, not weighed.

struct HeavyPayload {
  long long sigma = 0;
  int mu = 0;
  friend bool operator==(const HeavyPayload& a, const HeavyPayload& b) { return a.sigma == b.sigma && a.mu == b.mu; }
};

struct HeavyExtra {
  long long pi = 0;
  long long closed = -1;  // light ticks of the component holding every heavy terminal, once closed
  friend bool operator==(const HeavyExtra& a, const HeavyExtra& b) { return a.pi == b.pi && a.closed == b.closed; }
};

class HeavyPrizePolicy : public detail::PrizePolicyBase {
 public:
  using Payload = HeavyPayload;
  using Extra = HeavyExtra;

  HeavyPrizePolicy(std::vector<long long> ticks, std::vector<int> heavy, double theta, double heavy_weight)
      : ticks_(std::move(ticks)), heavy_(std::move(heavy)), theta_(theta), heavy_weight_(heavy_weight) {
    for (auto t : ticks_) light_ += t;
    for (auto h : heavy_) nb_ += h;
    cap_ = detail::sat_mul(light_, light_, std::numeric_limits<long long>::max() / 4);
  }

  static void hash_payload(const Payload& p, std::uint64_t& h) {
    hash_mix(h, static_cast<std::uint64_t>(p.sigma));
    hash_mix(h, static_cast<std::uint64_t>(p.mu));
  }
  static void hash_bucket(const Payload& p, std::uint64_t& h) {
    hash_mix(h, detail::coarse_level(p.sigma));
    hash_mix(h, static_cast<std::uint64_t>(p.mu));
  }
  static void hash_extra(const Extra& e, std::uint64_t& h) {
    hash_mix(h, static_cast<std::uint64_t>(e.pi));
    hash_mix(h, static_cast<std::uint64_t>(e.closed + 1));
  }
  static void hash_extra_bucket(const Extra& e, std::uint64_t& h) {
    hash_mix(h, detail::coarse_level(e.pi));
    hash_mix(h, e.closed >= 0 ? 1 : 0);
  }

  template <class Node>
  Payload leaf_payload(int loc, const Node&) const {
    return {ticks_[static_cast<std::size_t>(loc)], heavy_[static_cast<std::size_t>(loc)]};
  }
  Payload empty_payload() const { return {}; }
  Extra leaf_extra(int loc) const {
    const long long t = ticks_[static_cast<std::size_t>(loc)];
    return {detail::sat_mul(t, t, cap_), -1};
  }

  void unite(Payload& into, const Payload& from, Extra& extra) const {
    extra.pi = detail::sat_add(extra.pi, detail::sat_mul(2 * into.sigma, from.sigma, cap_), cap_);
    into.sigma += from.sigma;
    into.mu += from.mu;
  }
  Extra join_extra(const Extra& a, const Extra& b) const {
    return {detail::sat_add(a.pi, b.pi, cap_), std::max(a.closed, b.closed)};
  }

  // A closing component holds all heavy terminals or none.
  bool close(const Payload& p, Extra& extra) const {
    if (p.mu == 0) return true;
    if (p.mu < nb_) return false;
    extra.closed = p.sigma;
    return true;
  }

  // Penalty in rounded weights: 2 * heavy * (light outside) + light^2 - pi.
  std::optional<double> root_value(const Extra& e) const {
    if (nb_ > 0 && e.closed < 0) return std::nullopt;
    const double inside = nb_ > 0 ? static_cast<double>(e.closed) : 0.0;
    const double L = static_cast<double>(light_);
    return cost_scale * (2.0 * heavy_weight_ * theta_ * (L - inside) + theta_ * theta_ * (L * L - static_cast<double>(e.pi)));
  }
  bool extra_dominates(const Extra& a, const Extra& b) const {
    if ((a.closed < 0) != (b.closed < 0)) return false;
    return a.closed >= b.closed && a.pi >= b.pi;
  }

  int heavy_count() const { return nb_; }

 private:
  std::vector<long long> ticks_;
  std::vector<int> heavy_;
  double theta_;
  double heavy_weight_;
  long long light_ = 0;
  int nb_ = 0;
  long long cap_ = 0;
};

// ---------------------------------------------------------------------------
// drivers

struct PrizeOptions : SolveOptions {
  PrizeOptions() { shifts = 3; }
  std::size_t candidates = 6;    // root entries scored with the true objective
  std::optional<double> omega;   // overrides the baseline estimate in solve_mpcsf
  int sweep_points = 12;         // prize targets tried in the sweep case
};

struct PrizeResult {
  Forest forest;
  double cost = 0.0;
  double collected = 0.0;
  double penalty = 0.0;
  double objective = 0.0;
  bool feasible = false;
  std::string case_taken;
  std::string message;
  double omega = 0.0;
  double eps_prime = 0.0;
  std::vector<std::size_t> heavy;  // terminal indices of the heavy set
  DPStats stats;
};

namespace detail {

struct PrizeGeometry {
  ScaledInstance si;
  std::vector<Point> locs;
  std::vector<int> loc_of;  // per terminal; -1 for inactive ones
  std::vector<std::size_t> active;
  std::vector<bool> shared;  // per location: distinct raw points snapped together
};

inline PrizeGeometry prize_geometry(const Instance& inst, const std::vector<bool>& active) {
  PrizeGeometry g;
  std::vector<Point> pts;
  for (std::size_t i = 0; i < inst.terminals.size(); ++i)
    if (active[i]) pts.push_back(inst.terminals[i].location);
  double dmin = std::numeric_limits<double>::infinity(), dmax = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double d = dist(pts[i], pts[j]);
      if (d > 0) dmin = std::min(dmin, d);
      dmax = std::max(dmax, d);
    }
  double scale = 1.0;
  if (dmax > 0) {
    const double n = static_cast<double>(inst.terminals.size());
    scale = std::min(16.0 * std::sqrt(2.0) * n / (inst.epsilon * dmin), std::ldexp(1.0, 20) / dmax);
  }
  g.si = scale_and_snap(inst, scale);
  g.loc_of.assign(inst.terminals.size(), -1);
  std::map<Point, int> idx;
  std::map<Point, Point> first_raw;
  for (std::size_t i = 0; i < inst.terminals.size(); ++i) {
    if (!active[i]) continue;
    g.active.push_back(i);
    const Point& q = g.si.base.terminals[i].location;
    auto [it, fresh] = idx.emplace(q, static_cast<int>(g.locs.size()));
    if (fresh) {
      g.locs.push_back(q);
      g.shared.push_back(false);
      first_raw[q] = inst.terminals[i].location;
    } else if (!(first_raw[q] == inst.terminals[i].location)) {
      g.shared[static_cast<std::size_t>(it->second)] = true;
    }
    g.loc_of[i] = it->second;
  }
  return g;
}

inline Forest restore_prize(const PrizeGeometry& g, const Instance& raw, const std::vector<Segment>& segs) {
  Forest f = restore_forest(g.si, raw, segs, g.active);
  std::vector<Point> required;
  for (auto i : g.active) {
    const Point& p = raw.terminals[i].location;
    required.push_back(p);
    // distinct points that share a lattice point were counted as one location
    if (g.shared[static_cast<std::size_t>(g.loc_of[i])]) {
      Point q = g.si.to_raw(g.si.base.terminals[i].location);
      if (!(p == q)) f.add_segment(p, q);
    }
  }
  return prune_forest(f, required);
}

template <class Policy>
std::vector<Forest> prize_candidates(const Instance& inst, const PrizeGeometry& g, Policy pol,
                                     const PrizeOptions& po, DPStats* stats) {
  std::vector<Forest> out;
  pol.cost_scale = g.si.scale_factor;
  const double eps = po.epsilon ? *po.epsilon : inst.epsilon;
  const auto guides = default_guides(g.locs);
  for (int k = 0; k < std::max(1, po.shifts); ++k)
    for (int attempt = 0; attempt <= po.retries; ++attempt) {
      const std::uint64_t seed = po.seed + 1000003ull * static_cast<std::uint64_t>(k) + static_cast<std::uint64_t>(attempt);
      Dissection diss = build_dissection(g.si.extent(), seed, po.m);
      Parameters params = compute_parameters(eps, diss.L(), po.practical, po.m, po.rho, po.gamma);
      if (params.gamma > 8) throw InvalidArgument("theoretical parameters exceed what the dp engine can hold (gamma > 8)");
      diss.set_m(params.m);
      DPContext ctx{diss, g.locs, guides};
      DPEngine<Policy> eng(ctx, pol, dp_options_for(po, params, attempt));
      eng.run();
      if (stats) *stats = eng.stats();
      auto roots = eng.accepted_roots();
      if (roots.empty()) continue;
      for (std::size_t r = 0; r < std::min(po.candidates, roots.size()); ++r)
        out.push_back(restore_prize(g, inst, eng.extract(roots[r].second)));
      break;
    }
  return out;
}

inline void score(PrizeResult& res, const Instance& inst) {
  res.cost = forest_length(res.forest);
  res.collected = collected_prize(inst, res.forest);
  res.penalty = total_prize(inst) - res.collected;
  res.objective = res.cost + res.penalty;
}

inline PrizeResult empty_result(const Instance& inst, const std::string& why) {
  PrizeResult res;
  res.feasible = true;
  res.case_taken = why;
  score(res, inst);
  return res;
}

inline std::size_t distinct_locations(const Instance& inst, const std::vector<bool>& active) {
  std::vector<Point> pts;
  for (std::size_t i = 0; i < inst.terminals.size(); ++i)
    if (active[i]) pts.push_back(inst.terminals[i].location);
  std::sort(pts.begin(), pts.end());
  return static_cast<std::size_t>(std::unique(pts.begin(), pts.end()) - pts.begin());
}

inline double clamp_eps_prime(double e, const PrizeOptions& po, std::string& message) {
  if (!(e > 0.0)) throw InvalidArgument("eps_prime must be positive");
  if (po.practical && e < 1e-7) {
    message = "eps_prime clamped to 1e-7";
    return 1e-7;
  }
  return e;
}

}  // namespace detail

// Cheapest forest found collecting at least (1 - eps_prime) S.
inline PrizeResult solve_s_mpcsf(const Instance& inst, double S, double eps_prime, const PrizeOptions& po = {}) {
  if (inst.mode != Mode::SMpcsf && inst.mode != Mode::Mpcsf) throw InvalidArgument("solve_s_mpcsf needs a symmetric multiplicative mode");
  if (S < 0) throw InvalidArgument("prize target must be non-negative");
  std::string note;
  eps_prime = detail::clamp_eps_prime(eps_prime, po, note);
  if (S == 0) return detail::empty_result(inst, "target");
  const std::size_t n = inst.terminals.size();
  const double theta = eps_prime * std::sqrt(S) / (2.0 * static_cast<double>(n));
  const long long s_ticks = static_cast<long long>(std::ceil(S / (theta * theta) - 1e-9));
  const long long target = static_cast<long long>(std::ceil((1.0 - eps_prime) * S / (theta * theta) - 1e-9));

  std::vector<bool> active(n);
  std::vector<long long> tick(n, 0);
  long long total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    active[i] = inst.terminals[i].weight > 0;
    if (active[i]) tick[i] = quantize_ticks(inst.terminals[i].weight, theta, Rounding::Down);
    total += tick[i];
  }
  PrizeResult res;
  res.eps_prime = eps_prime;
  res.case_taken = "target";
  res.message = note;
  if (detail::sat_mul(total, total, s_ticks) < target) {
    res.message = "prize target exceeds the collectible prize";
    return res;
  }
  if (detail::distinct_locations(inst, active) < 2) {
    res = detail::empty_result(inst, "target");
    res.eps_prime = eps_prime;
    return res;
  }
  auto g = detail::prize_geometry(inst, active);
  std::vector<long long> loc_ticks(g.locs.size(), 0);
  for (auto i : g.active) loc_ticks[static_cast<std::size_t>(g.loc_of[i])] += tick[i];
  SPrizePolicy pol(g.locs, loc_ticks, s_ticks, target);
  auto cands = detail::prize_candidates(inst, g, pol, po, &res.stats);
  for (auto& f : cands) {
    const double c = forest_length(f);
    if (collected_prize(inst, f) < (1.0 - eps_prime) * S * (1 - 1e-12)) continue;
    if (!res.feasible || c < res.cost - 1e-12) {
      res.forest = std::move(f);
      res.feasible = true;
      detail::score(res, inst);
    }
  }
  if (!res.feasible) res.message = "no root state reached the prize target; try a larger beam";
  return res;
}

namespace detail {

inline PrizeResult run_asym(const Instance& inst, double eps_prime, double A, std::optional<double> S,
                            const PrizeOptions& po) {
  const std::size_t n = inst.terminals.size();
  const double nn = static_cast<double>(n);
  const double eps1 = eps_prime / 3, eps2 = eps_prime / 3;
  const double unit = eps2 * A / nn;
  PrizeResult res;
  res.eps_prime = eps_prime;
  res.case_taken = S ? "target" : "asymmetric";
  std::vector<bool> active(n);
  for (std::size_t i = 0; i < n; ++i) active[i] = inst.terminals[i].weight_s > 0 || inst.terminals[i].weight_t > 0;
  if (distinct_locations(inst, active) < 2) {
    res = empty_result(inst, res.case_taken);
    res.feasible = !S || res.collected >= (1 - eps_prime) * *S;
    return res;
  }
  auto g = prize_geometry(inst, active);
  std::vector<double> ws(g.locs.size(), 0), wt(g.locs.size(), 0);
  for (auto i : g.active) {
    ws[static_cast<std::size_t>(g.loc_of[i])] += inst.terminals[i].weight_s;
    wt[static_cast<std::size_t>(g.loc_of[i])] += inst.terminals[i].weight_t;
  }
  std::optional<long long> target;
  long long cap = static_cast<long long>(std::ceil(A / unit)) + 1;
  if (S) {
    target = static_cast<long long>(std::ceil((1.0 - eps_prime) * *S / unit - 1e-9));
    cap = *target;
  }
  AsymPrizePolicy pol(g.locs, ws, wt, nn, eps1, unit, A, cap, target);
  auto cands = prize_candidates(inst, g, pol, po, &res.stats);
  if (!S) cands.push_back(Forest{});
  for (auto& f : cands) {
    PrizeResult r;
    r.forest = std::move(f);
    score(r, inst);
    if (S && r.collected < (1.0 - eps_prime) * *S * (1 - 1e-12)) continue;
    const double key = S ? r.cost : r.objective;
    const double cur = S ? res.cost : res.objective;
    if (!res.feasible || key < cur - 1e-12) {
      r.feasible = true;
      r.case_taken = res.case_taken;
      r.eps_prime = eps_prime;
      r.stats = res.stats;
      res = std::move(r);
    }
  }
  if (!res.feasible) res.message = "no root state reached the prize target; try a larger beam";
  return res;
}

}  // namespace detail

inline PrizeResult solve_asym_s_mpcsf(const Instance& inst, double S, double eps_prime, const PrizeOptions& po = {}) {
  if (!is_asymmetric(inst.mode)) throw InvalidArgument("solve_asym_s_mpcsf needs an asymmetric mode");
  if (S < 0) throw InvalidArgument("prize target must be non-negative");
  std::string note;
  eps_prime = detail::clamp_eps_prime(eps_prime, po, note);
  if (S == 0) return detail::empty_result(inst, "target");
  if (total_prize(inst) < (1.0 - eps_prime) * S) {
    PrizeResult res;
    res.case_taken = "target";
    res.message = "prize target exceeds the collectible prize";
    return res;
  }
  auto res = detail::run_asym(inst, eps_prime, S, S, po);
  if (!note.empty()) res.message = note;
  return res;
}

// Prize-collecting asymmetric variant: roots are scored by cost + (A - collected).
inline PrizeResult solve_asym_mpcsf(const Instance& inst, const PrizeOptions& po = {}) {
  if (!is_asymmetric(inst.mode)) throw InvalidArgument("solve_asym_mpcsf needs an asymmetric mode");
  std::string note;
  const double eps_prime = detail::clamp_eps_prime(inst.epsilon_prime, po, note);
  const double A = total_prize(inst);
  if (A <= 0) return detail::empty_result(inst, "asymmetric");
  auto res = detail::run_asym(inst, eps_prime, A, std::nullopt, po);
  if (!note.empty()) res.message = note;
  return res;
}

struct HeavySet {
  std::vector<std::size_t> members;
  double threshold = 0.0;  // n * omega / Delta
};

inline HeavySet heavy_set(const Instance& inst, double omega) {
  HeavySet h;
  const double delta = inst.total_weight();
  if (!(delta > 0)) return h;
  h.threshold = static_cast<double>(inst.terminals.size()) * omega / delta;
  for (std::size_t i = 0; i < inst.terminals.size(); ++i)
    if (inst.terminals[i].weight > h.threshold) h.members.push_back(i);
  return h;
}

// Light weights rounded up to multiples of theta = eps' omega / Delta with eps' = 1/(24n).
inline Instance heavy_rounded_instance(const Instance& inst, double omega, double* theta_out = nullptr) {
  const double n = static_cast<double>(inst.terminals.size());
  const double theta = omega / (24.0 * n * inst.total_weight());
  std::vector<bool> exempt(inst.terminals.size(), false);
  for (auto i : heavy_set(inst, omega).members) exempt[i] = true;
  if (theta_out) *theta_out = theta;
  return quantize_weights(inst, theta, Rounding::Up, exempt);
}

inline PrizeResult solve_mpcsf(const Instance& inst, const PrizeOptions& po = {}) {
  if (inst.mode != Mode::SMpcsf && inst.mode != Mode::Mpcsf) throw InvalidArgument("solve_mpcsf needs a symmetric multiplicative mode");
  const std::size_t n = inst.terminals.size();
  const double nn = static_cast<double>(n);
  const double delta = inst.total_weight();
  const double D2 = delta * delta;
  if (!(D2 > 0)) return detail::empty_result(inst, "empty");

  BaselineResult base;
  if (po.omega) {
    base.omega = *po.omega;
  } else {
    base = pcsf_baseline(inst);
  }
  const double omega = base.omega;
  PrizeResult res;
  if (D2 <= omega / 3) {
    res = detail::empty_result(inst, "empty");
    res.omega = omega;
    return res;
  }
  if (omega <= 0) {
    // the baseline already pays nothing
    res.forest = base.forest;
    res.feasible = true;
    res.case_taken = "baseline";
    res.omega = omega;
    detail::score(res, inst);
    return res;
  }

  if (omega / D2 > 1.0 / (nn * nn)) {
    const double eps = po.epsilon ? *po.epsilon : inst.epsilon;
    const double ep = std::min(eps / 3, 1.0) / (6 * nn * nn);
    const double lo = (1 - ep) * D2 - omega;
    const long long count = static_cast<long long>(std::floor((D2 - lo) / (ep * D2) + 1e-9)) + 1;
    std::vector<long long> picks;
    if (count <= po.sweep_points) {
      for (long long j = 0; j < count; ++j) picks.push_back(j);
    } else {
      for (int k = 0; k < po.sweep_points; ++k)
        picks.push_back(static_cast<long long>(std::llround(static_cast<double>(k) * static_cast<double>(count - 1) / (po.sweep_points - 1))));
      picks.erase(std::unique(picks.begin(), picks.end()), picks.end());
    }
    res.feasible = false;
    for (auto j : picks) {
      const double S = std::max(0.0, lo + static_cast<double>(j) * ep * D2);
      PrizeResult r = solve_s_mpcsf(inst, std::min(S, D2), ep, po);
      if (!r.feasible) continue;
      if (!res.feasible || r.objective < res.objective - 1e-12) res = std::move(r);
    }
    if (!res.feasible) res = detail::empty_result(inst, "sweep");
    res.case_taken = "sweep";
    res.omega = omega;
    res.eps_prime = ep;
    return res;
  }

  // heavy case
  const double ep = 1.0 / (24 * nn);
  const double theta = ep * omega / delta;
  HeavySet hs = heavy_set(inst, omega);
  std::vector<bool> heavy(n, false), active(n, false);
  double heavy_weight = 0;
  for (auto i : hs.members) {
    heavy[i] = true;
    heavy_weight += inst.terminals[i].weight;
  }
  for (std::size_t i = 0; i < n; ++i) active[i] = inst.terminals[i].weight > 0;
  res.case_taken = "heavy";
  res.omega = omega;
  res.eps_prime = ep;
  res.heavy = hs.members;
  if (detail::distinct_locations(inst, active) < 2) {
    auto r = detail::empty_result(inst, "heavy");
    r.omega = omega;
    r.eps_prime = ep;
    r.heavy = hs.members;
    return r;
  }
  auto g = detail::prize_geometry(inst, active);
  std::vector<long long> ticks(g.locs.size(), 0);
  std::vector<int> hcount(g.locs.size(), 0);
  for (auto i : g.active) {
    const auto l = static_cast<std::size_t>(g.loc_of[i]);
    if (heavy[i]) ++hcount[l];
    else ticks[l] += quantize_ticks(inst.terminals[i].weight, theta, Rounding::Up);
  }
  HeavyPrizePolicy pol(ticks, hcount, theta, heavy_weight);
  auto cands = detail::prize_candidates(inst, g, pol, po, &res.stats);
  for (auto& f : cands) {
    PrizeResult r;
    r.forest = std::move(f);
    detail::score(r, inst);
    if (!res.feasible || r.objective < res.objective - 1e-12) {
      res.forest = std::move(r.forest);
      res.feasible = true;
      detail::score(res, inst);
    }
  }
  if (!res.feasible) res.message = "no root state holds the whole heavy set; try a larger beam";
  return res;
}

}  // namespace esf
