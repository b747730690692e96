#pragma once

#include <charconv>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "esf/model.hpp"

namespace esf {

class ParseError : public InvalidArgument {
 public:
  ParseError(std::size_t line, const std::string& msg)
      : InvalidArgument("line " + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Shortest text that reads back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace detail {

inline std::vector<std::string> split_words(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

inline double parse_number(const std::string& s, std::size_t line, const char* what) {
  double v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v))
    throw ParseError(line, std::string("bad ") + what + " '" + s + "'");
  return v;
}

inline std::string strip_comment(const std::string& line) {
  auto h = line.find('#');
  return h == std::string::npos ? line : line.substr(0, h);
}

}  // namespace detail

inline Instance parse_instance(const std::string& text) {
  Instance inst;
  bool have_mode = false;
  std::istringstream in(text);
  std::string raw;
  std::size_t ln = 0;
  std::vector<std::size_t> pair_lines;
  while (std::getline(in, raw)) {
    ++ln;
    auto w = detail::split_words(detail::strip_comment(raw));
    if (w.empty()) continue;
    const std::string& key = w[0];
    auto need = [&](std::size_t n) {
      if (w.size() != n) throw ParseError(ln, "'" + key + "' takes " + std::to_string(n - 1) + " argument(s)");
    };
    if (key == "mode") {
      need(2);
      if (have_mode) throw ParseError(ln, "mode given twice");
      auto m = parse_mode(w[1]);
      if (!m) throw ParseError(ln, "unknown mode '" + w[1] + "'");
      inst.mode = *m;
      have_mode = true;
    } else if (key == "epsilon") {
      need(2);
      inst.epsilon = detail::parse_number(w[1], ln, "epsilon");
    } else if (key == "eps-prime") {
      need(2);
      inst.epsilon_prime = detail::parse_number(w[1], ln, "eps-prime");
    } else if (key == "prize-target") {
      need(2);
      inst.prize_target = detail::parse_number(w[1], ln, "prize target");
    } else if (key == "terminal") {
      if (w.size() < 4) throw ParseError(ln, "terminal needs an id and two coordinates");
      Terminal t;
      t.id = w[1];
      if (inst.index_of(t.id)) throw ParseError(ln, "duplicate terminal id '" + t.id + "'");
      t.location = {detail::parse_number(w[2], ln, "coordinate"), detail::parse_number(w[3], ln, "coordinate")};
      for (std::size_t i = 4; i < w.size(); i += 2) {
        if (i + 1 >= w.size()) throw ParseError(ln, "'" + w[i] + "' needs a value");
        const double v = detail::parse_number(w[i + 1], ln, "weight");
        if (w[i] == "w") t.weight = v;
        else if (w[i] == "ws") t.weight_s = v;
        else if (w[i] == "wt") t.weight_t = v;
        else throw ParseError(ln, "unknown terminal field '" + w[i] + "'");
      }
      inst.terminals.push_back(t);
    } else if (key == "pair") {
      if (w.size() != 3 && w.size() != 5) throw ParseError(ln, "pair takes two ids and an optional penalty");
      DemandPair p{w[1], w[2]};
      if (w.size() == 5) {
        if (w[3] != "penalty") throw ParseError(ln, "unknown pair field '" + w[3] + "'");
        p.penalty = detail::parse_number(w[4], ln, "penalty");
      }
      inst.pairs.push_back(p);
      pair_lines.push_back(ln);
    } else {
      throw ParseError(ln, "unknown directive '" + key + "'");
    }
  }
  if (!have_mode) throw ParseError(ln == 0 ? 1 : ln, "missing mode directive");
  // pairs may name terminals declared further down
  for (std::size_t i = 0; i < inst.pairs.size(); ++i)
    for (const auto& id : {inst.pairs[i].a, inst.pairs[i].b})
      if (!inst.index_of(id)) throw ParseError(pair_lines[i], "pair references unknown terminal '" + id + "'");
  return inst;
}

inline std::string serialize_instance(const Instance& inst) {
  std::ostringstream os;
  os << "mode " << mode_name(inst.mode) << "\n";
  os << "epsilon " << format_number(inst.epsilon) << "\n";
  os << "eps-prime " << format_number(inst.epsilon_prime) << "\n";
  if (inst.prize_target) os << "prize-target " << format_number(*inst.prize_target) << "\n";
  for (const auto& t : inst.terminals) {
    os << "terminal " << t.id << " " << format_number(t.location.x) << " " << format_number(t.location.y);
    if (t.weight != 0) os << " w " << format_number(t.weight);
    if (t.weight_s != 0 || t.weight_t != 0)
      os << " ws " << format_number(t.weight_s) << " wt " << format_number(t.weight_t);
    os << "\n";
  }
  for (const auto& p : inst.pairs) {
    os << "pair " << p.a << " " << p.b;
    if (p.penalty != 0) os << " penalty " << format_number(p.penalty);
    os << "\n";
  }
  return os.str();
}

inline bool same_instance(const Instance& a, const Instance& b) {
  if (a.mode != b.mode || a.epsilon != b.epsilon || a.epsilon_prime != b.epsilon_prime ||
      a.prize_target != b.prize_target || a.terminals.size() != b.terminals.size() || a.pairs.size() != b.pairs.size())
    return false;
  for (std::size_t i = 0; i < a.terminals.size(); ++i) {
    const auto& s = a.terminals[i];
    const auto& t = b.terminals[i];
    if (s.id != t.id || s.location != t.location || s.weight != t.weight || s.weight_s != t.weight_s ||
        s.weight_t != t.weight_t)
      return false;
  }
  for (std::size_t i = 0; i < a.pairs.size(); ++i)
    if (a.pairs[i].a != b.pairs[i].a || a.pairs[i].b != b.pairs[i].b || a.pairs[i].penalty != b.pairs[i].penalty)
      return false;
  return true;
}

struct SolutionFile {
  Mode mode = Mode::SteinerForest;
  double cost = 0.0;
  double collected = 0.0;
  double penalty = 0.0;
  std::uint64_t seed = 0;
  double epsilon = 0.5;
  int m = 8;
  int rho = 3;
  int gamma = 4;
  bool practical = true;
  std::vector<Segment> segments;

  Forest forest() const {
    Forest f;
    for (const auto& s : segments) f.add_segment(s.a, s.b);
    return f;
  }
};

inline SolutionFile make_solution_file(const Instance& inst, const Forest& f, std::uint64_t seed, double epsilon,
                                       int m, int rho, int gamma, bool practical) {
  SolutionFile s;
  s.mode = inst.mode;
  s.segments = f.segments();
  s.cost = forest_length(f);
  s.collected = is_multiplicative(inst.mode) ? collected_prize(inst, f) : 0.0;
  s.penalty = inst.mode == Mode::Pcsf ? unpaid_penalty(inst, f)
              : is_multiplicative(inst.mode) ? total_prize(inst) - s.collected
                                             : 0.0;
  s.seed = seed;
  s.epsilon = epsilon;
  s.m = m;
  s.rho = rho;
  s.gamma = gamma;
  s.practical = practical;
  return s;
}

// Header cost agrees with the segments it lists.
inline bool self_consistent(const SolutionFile& s) {
  double len = 0;
  for (const auto& seg : s.segments) len += seg.length();
  return std::abs(len - s.cost) <= 1e-9 * std::max(1.0, len);
}

inline std::string serialize_solution(const SolutionFile& s) {
  if (!self_consistent(s)) throw InvalidArgument("solution header cost disagrees with its segments");
  std::ostringstream os;
  os << "mode " << mode_name(s.mode) << "\n";
  os << "cost " << format_number(s.cost) << "\n";
  os << "collected " << format_number(s.collected) << "\n";
  os << "penalty " << format_number(s.penalty) << "\n";
  os << "seed " << s.seed << "\n";
  os << "params epsilon " << format_number(s.epsilon) << " m " << s.m << " rho " << s.rho << " gamma " << s.gamma
     << (s.practical ? " practical" : " theoretical") << "\n";
  for (const auto& seg : s.segments)
    os << "segment " << format_number(seg.a.x) << " " << format_number(seg.a.y) << " " << format_number(seg.b.x) << " "
       << format_number(seg.b.y) << "\n";
  return os.str();
}

inline SolutionFile parse_solution(const std::string& text) {
  SolutionFile s;
  std::istringstream in(text);
  std::string raw;
  std::size_t ln = 0;
  bool have_mode = false;
  while (std::getline(in, raw)) {
    ++ln;
    auto w = detail::split_words(detail::strip_comment(raw));
    if (w.empty()) continue;
    const std::string& key = w[0];
    auto num = [&](std::size_t i) {
      if (i >= w.size()) throw ParseError(ln, "'" + key + "' is missing a value");
      return detail::parse_number(w[i], ln, key.c_str());
    };
    if (key == "mode") {
      auto m = w.size() == 2 ? parse_mode(w[1]) : std::nullopt;
      if (!m) throw ParseError(ln, "bad mode");
      s.mode = *m;
      have_mode = true;
    } else if (key == "cost") {
      s.cost = num(1);
    } else if (key == "collected") {
      s.collected = num(1);
    } else if (key == "penalty") {
      s.penalty = num(1);
    } else if (key == "seed") {
      if (w.size() != 2) throw ParseError(ln, "seed takes one value");
      auto r = std::from_chars(w[1].data(), w[1].data() + w[1].size(), s.seed);
      if (r.ec != std::errc() || r.ptr != w[1].data() + w[1].size()) throw ParseError(ln, "bad seed");
    } else if (key == "params") {
      for (std::size_t i = 1; i < w.size(); ++i) {
        if (w[i] == "practical") s.practical = true;
        else if (w[i] == "theoretical") s.practical = false;
        else if (w[i] == "epsilon") s.epsilon = num(++i);
        else if (w[i] == "m") s.m = static_cast<int>(num(++i));
        else if (w[i] == "rho") s.rho = static_cast<int>(num(++i));
        else if (w[i] == "gamma") s.gamma = static_cast<int>(num(++i));
        else throw ParseError(ln, "unknown parameter '" + w[i] + "'");
      }
    } else if (key == "segment") {
      if (w.size() != 5) throw ParseError(ln, "segment takes four coordinates");
      s.segments.push_back({{num(1), num(2)}, {num(3), num(4)}});
    } else {
      throw ParseError(ln, "unknown directive '" + key + "'");
    }
  }
  if (!have_mode) throw ParseError(ln == 0 ? 1 : ln, "missing mode directive");
  if (!self_consistent(s)) throw InvalidArgument("solution header cost disagrees with its segments");
  return s;
}

}  // namespace esf
