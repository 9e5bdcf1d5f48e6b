#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fkj/petrify.hpp"

namespace fkj {

// Forward reachability over the product of a 1-safe net with its data state.
// A product state is a marking plus one value per table variable; transitions
// fire under their label: an assumption gates the step, an assignment updates
// the data. Exploration is breadth first with a fixed successor order, so the
// first violation found is a shortest one and runs are reproducible.

struct ReachLimits {
  size_t max_states = 1'000'000;
  size_t max_depth = 0;  // firing-sequence length cap; 0 means unbounded
};

struct Counterexample {
  // transitions[i] leads from (markings[i], data[i]) to (markings[i+1],
  // data[i+1]); the final marking contains every place in `violated`.
  std::vector<uint32_t> transitions;
  std::vector<Marking> markings;
  std::vector<std::vector<Value>> data;
  std::vector<LocId> violated;  // sorted; the bad places hit
};

struct Verdict {
  enum class Status : uint8_t { Satisfied, Violated, Unknown } status;
  size_t states_explored = 0;
  std::string limit;  // what gave out, when status is Unknown
  std::optional<Counterexample> cex;
};

// Runs one label against a data state: nullopt when an assumption fails,
// otherwise the (possibly updated) data.
inline std::optional<std::vector<Value>> apply_label(
    const PetriProgram& n, const Stmt& s, const std::vector<Value>& data) {
  auto env = [&](const InstVar& v) -> Value {
    return data[n.vars->index_of(v)];
  };
  if (s.kind == Stmt::Kind::Assume) {
    if (!eval(s.expr, env).as_bool()) return std::nullopt;
    return data;
  }
  Value v = eval(s.expr, env);
  std::vector<Value> out = data;
  out[n.vars->index_of(s.lhs)] = std::move(v);
  return out;
}

inline std::vector<Value> initial_data(const PetriProgram& n) {
  std::vector<Value> d;
  d.reserve(n.vars->size());
  for (Type t : n.vars->types) d.push_back(Value::zero(t));
  return d;
}

namespace detail {

struct ValueVecHash {
  size_t operator()(const std::vector<Value>& v) const {
    size_t h = hash_all(v.size());
    for (const Value& x : v) hash_combine(h, x.hash());
    return h;
  }
};

struct MarkingVecHash {
  size_t operator()(const Marking& m) const {
    size_t h = hash_all(m.size());
    for (LocId p : m) hash_combine(h, p);
    return h;
  }
};

// Interns markings and data vectors for the duration of one search, so
// product states compare and hash as two pointers. unordered_set never moves
// its elements, which keeps the pointers stable.
class ProductPool {
 public:
  const Marking* marking(Marking m) {
    return &*markings_.insert(std::move(m)).first;
  }
  const std::vector<Value>* data(std::vector<Value> d) {
    return &*data_.insert(std::move(d)).first;
  }

 private:
  std::unordered_set<Marking, MarkingVecHash> markings_;
  std::unordered_set<std::vector<Value>, ValueVecHash> data_;
};

struct ProductState {
  const Marking* marking;
  const std::vector<Value>* data;
  friend bool operator==(const ProductState&, const ProductState&) = default;
};

struct ProductStateHash {
  size_t operator()(const ProductState& s) const {
    return hash_all(s.marking, s.data);
  }
};

}  // namespace detail

inline Verdict check(const PetriProgram& n, const Specification& spec,
                     const ReachLimits& limits = {}) {
  using detail::ProductState;
  detail::ProductPool pool;
  ProductState start{pool.marking(n.initial), pool.data(initial_data(n))};

  auto bad_in = [&](const Marking& m) {
    std::vector<LocId> hit;
    for (LocId b : spec.bad)
      if (marking_contains(m, b)) hit.push_back(b);
    return hit;
  };

  std::unordered_set<ProductState, detail::ProductStateHash> seen{start};
  std::unordered_map<ProductState, std::pair<ProductState, uint32_t>,
                     detail::ProductStateHash>
      parent;
  std::deque<std::pair<ProductState, size_t>> queue{{start, 0}};
  bool clipped = false;

  auto reconstruct = [&](ProductState s, std::vector<LocId> violated) {
    Counterexample cex;
    cex.violated = std::move(violated);
    while (s != start) {
      auto [prev, ti] = parent.at(s);
      cex.transitions.push_back(ti);
      cex.markings.push_back(*s.marking);
      cex.data.push_back(*s.data);
      s = prev;
    }
    cex.markings.push_back(*s.marking);
    cex.data.push_back(*s.data);
    std::reverse(cex.transitions.begin(), cex.transitions.end());
    std::reverse(cex.markings.begin(), cex.markings.end());
    std::reverse(cex.data.begin(), cex.data.end());
    return cex;
  };

  Verdict v;
  if (auto b = bad_in(*start.marking); !b.empty()) {
    v.status = Verdict::Status::Violated;
    v.states_explored = 1;
    v.cex = reconstruct(start, std::move(b));
    return v;
  }

  while (!queue.empty()) {
    auto [cur, depth] = queue.front();
    queue.pop_front();
    bool at_depth = limits.max_depth > 0 && depth >= limits.max_depth;
    for (uint32_t ti : enabled(n, *cur.marking)) {
      const Transition& t = n.transitions[ti];
      auto data = apply_label(n, t.label, *cur.data);
      if (!data) continue;
      ProductState nxt{pool.marking(fire(n, *cur.marking, ti)),
                       pool.data(std::move(*data))};
      if (at_depth) {
        if (!seen.count(nxt)) clipped = true;
        continue;
      }
      if (!seen.insert(nxt).second) continue;
      parent.emplace(nxt, std::pair(cur, ti));
      if (auto b = bad_in(*nxt.marking); !b.empty()) {
        v.status = Verdict::Status::Violated;
        v.states_explored = seen.size();
        v.cex = reconstruct(nxt, std::move(b));
        return v;
      }
      if (seen.size() >= limits.max_states) {
        v.status = Verdict::Status::Unknown;
        v.states_explored = seen.size();
        v.limit = "product state limit (" + std::to_string(limits.max_states) +
                  " states)";
        return v;
      }
      queue.push_back({nxt, depth + 1});
    }
  }
  if (clipped) {
    v.status = Verdict::Status::Unknown;
    v.states_explored = seen.size();
    v.limit = "depth limit (" + std::to_string(limits.max_depth) + " steps)";
    return v;
  }
  v.status = Verdict::Status::Satisfied;
  v.states_explored = seen.size();
  return v;
}

// Full product closure, for cross-checking against direct interpretation.
struct ProductExploration {
  std::vector<std::pair<Marking, std::vector<Value>>> states;  // BFS order
  bool exhausted = true;
};

inline ProductExploration explore_product(const PetriProgram& n,
                                          const ReachLimits& limits = {}) {
  using detail::ProductState;
  detail::ProductPool pool;
  ProductState start{pool.marking(n.initial), pool.data(initial_data(n))};
  std::unordered_set<ProductState, detail::ProductStateHash> seen{start};
  std::deque<std::pair<ProductState, size_t>> queue{{start, 0}};
  ProductExploration out;
  out.states.emplace_back(*start.marking, *start.data);
  while (!queue.empty()) {
    auto [cur, depth] = queue.front();
    queue.pop_front();
    bool at_depth = limits.max_depth > 0 && depth >= limits.max_depth;
    for (uint32_t ti : enabled(n, *cur.marking)) {
      const Transition& t = n.transitions[ti];
      auto data = apply_label(n, t.label, *cur.data);
      if (!data) continue;
      ProductState nxt{pool.marking(fire(n, *cur.marking, ti)),
                       pool.data(std::move(*data))};
      if (at_depth) {
        if (!seen.count(nxt)) out.exhausted = false;
        continue;
      }
      if (!seen.insert(nxt).second) continue;
      if (out.states.size() >= limits.max_states) {
        out.exhausted = false;
        return out;
      }
      out.states.emplace_back(*nxt.marking, *nxt.data);
      queue.push_back({nxt, depth + 1});
    }
  }
  return out;
}

// One line per step: who moved, what they did, where in the source.
inline std::string render_counterexample(const PetriProgram& n,
                                         const Counterexample& cex) {
  std::string out;
  for (size_t i = 0; i < cex.transitions.size(); ++i) {
    const Transition& t = n.transitions[cex.transitions[i]];
    const ControlLocation& actor = loc_of(t.actor);
    Statement stmt = deinstantiate_label(t.label);
    out += "  " + std::to_string(i + 1) + ". [" +
           slot_suffix(actor.tmpl, actor.slot) + "] " + to_string(stmt);
    if (t.head && t.head->span.known())
      out += "  (line " + std::to_string(t.head->span.line) + ")";
    out += "\n";
  }
  if (!n.source->globals.empty()) {
    out += "  final globals:";
    const std::vector<Value>& data = cex.data.back();
    for (const auto& g : n.source->globals)
      out += " " + g + "=" +
             data[n.vars->index_of(InstVar::global(g))].to_string();
    out += "\n";
  }
  out += "  reached:";
  for (LocId p : cex.violated) out += " " + n.place_name(p);
  out += "\n";
  return out;
}

}  // namespace fkj
