#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "fkj/location.hpp"

namespace fkj {

// 1-safe place/transition nets whose places are control locations and whose
// transitions carry an atomic statement. Markings are sets of places,
// represented as sorted id vectors.

using Marking = std::vector<LocId>;

inline Marking make_marking(std::vector<LocId> locs) {
  std::sort(locs.begin(), locs.end());
  locs.erase(std::unique(locs.begin(), locs.end()), locs.end());
  return locs;
}

inline bool marking_contains(const Marking& m, LocId p) {
  return std::binary_search(m.begin(), m.end(), p);
}

inline bool subset_of(const Marking& a, const Marking& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

struct Transition {
  Marking pre;
  Stmt label;
  Marking post;

  // Provenance, not identity: which control location acted, under which
  // construction rule, and the source command behind the label.
  enum class Rule : uint8_t { Local, Fork, Insufficiency, Join, Other };
  LocId actor = UINT32_MAX;
  Rule rule = Rule::Other;
  std::string peer_tmpl;  // fork/insufficiency/join target template
  int peer_slot = 0;      // fork/join target slot
  Cmd head = nullptr;     // source command (span, rendering)

  friend bool operator==(const Transition& a, const Transition& b) {
    return a.pre == b.pre && a.label == b.label && a.post == b.post;
  }
};

// The variable universe of one net with a dense index per variable, used by
// the checker's data states.
struct VarTable {
  std::vector<InstVar> vars;       // sorted
  std::vector<Type> types;         // parallel to vars

  int index_of(const InstVar& v) const {
    auto it = std::lower_bound(vars.begin(), vars.end(), v);
    if (it == vars.end() || !(*it == v))
      throw internal_error("unknown net variable " + to_string(v));
    return static_cast<int>(it - vars.begin());
  }
  size_t size() const { return vars.size(); }
};

struct PetriProgram {
  std::vector<LocId> places;          // canonical order
  std::vector<Transition> transitions;  // canonical order
  Marking initial;
  std::shared_ptr<const VarTable> vars;

  // Context carried along for rendering and de-instantiation.
  std::shared_ptr<const Program> source;
  int beta = 0;
  std::map<LocId, std::string> place_names;

  // actor place -> transition indices; every construction-rule transition
  // has its acting program location in its preset, so scanning the program
  // places of a marking finds every enabled transition.
  std::unordered_map<LocId, std::vector<uint32_t>> by_actor;
  bool indexed = false;

  void build_index() {
    by_actor.clear();
    indexed = true;
    for (uint32_t i = 0; i < transitions.size(); ++i) {
      const Transition& t = transitions[i];
      if (t.actor == UINT32_MAX || !marking_contains(t.pre, t.actor)) {
        indexed = false;
        by_actor.clear();
        return;
      }
      by_actor[t.actor].push_back(i);
    }
  }

  std::string place_name(LocId p) const {
    auto it = place_names.find(p);
    if (it != place_names.end()) return it->second;
    const ControlLocation& loc = loc_of(p);
    switch (loc.kind) {
      case ControlLocation::Kind::InUse:
        return "inUse(" + loc.tmpl + "," + std::to_string(loc.slot) + ")";
      case ControlLocation::Kind::NotInUse:
        return "notInUse(" + loc.tmpl + "," + std::to_string(loc.slot) + ")";
      case ControlLocation::Kind::Insufficient:
        return "insufficient(" + loc.tmpl + ")";
      case ControlLocation::Kind::Prog:
        return slot_suffix(loc.tmpl, loc.slot) + ":" + to_string(loc.rem);
    }
    return "?";
  }
};

// Indices of all transitions whose preset is covered by m, ascending.
inline std::vector<uint32_t> enabled(const PetriProgram& n, const Marking& m) {
  std::vector<uint32_t> out;
  if (n.indexed) {
    for (LocId p : m) {
      auto it = n.by_actor.find(p);
      if (it == n.by_actor.end()) continue;
      for (uint32_t ti : it->second)
        if (subset_of(n.transitions[ti].pre, m)) out.push_back(ti);
    }
    std::sort(out.begin(), out.end());
    return out;
  }
  for (uint32_t i = 0; i < n.transitions.size(); ++i)
    if (subset_of(n.transitions[i].pre, m)) out.push_back(i);
  return out;
}

// Fires transition ti in m. Throws if ti is not enabled or if the firing
// would put a second token on a place (the nets here are 1-safe; a violation
// is a construction bug, not an input error).
inline Marking fire(const PetriProgram& n, const Marking& m, uint32_t ti) {
  if (ti >= n.transitions.size())
    throw internal_error("fire: no such transition");
  const Transition& t = n.transitions[ti];
  if (!subset_of(t.pre, m)) throw internal_error("fire: transition not enabled");
  Marking rest;
  rest.reserve(m.size());
  std::set_difference(m.begin(), m.end(), t.pre.begin(), t.pre.end(),
                      std::back_inserter(rest));
  for (LocId p : t.post)
    if (marking_contains(rest, p))
      throw internal_error("fire: marking not 1-safe at place " +
                           n.place_name(p));
  Marking out;
  out.reserve(rest.size() + t.post.size());
  std::set_union(rest.begin(), rest.end(), t.post.begin(), t.post.end(),
                 std::back_inserter(out));
  return out;
}

// Structural sanity: all referenced places exist, presets and postsets are
// nonempty, and every label variable is in the net's variable table.
inline std::vector<std::string> validate(const PetriProgram& n) {
  std::vector<std::string> problems;
  std::set<LocId> known(n.places.begin(), n.places.end());
  auto check_places = [&](const Marking& m, const std::string& what) {
    for (LocId p : m)
      if (!known.count(p))
        problems.push_back(what + " references unknown place " +
                           n.place_name(p));
  };
  check_places(n.initial, "initial marking");
  for (size_t i = 0; i < n.transitions.size(); ++i) {
    const Transition& t = n.transitions[i];
    std::string name = "transition " + std::to_string(i) + " (" +
                       to_string(t.label) + ")";
    if (t.pre.empty()) problems.push_back(name + " has an empty preset");
    if (t.post.empty()) problems.push_back(name + " has an empty postset");
    check_places(t.pre, name);
    check_places(t.post, name);
    if (!std::is_sorted(t.pre.begin(), t.pre.end()) ||
        !std::is_sorted(t.post.begin(), t.post.end()))
      problems.push_back(name + " has an unsorted marking");
    std::vector<InstVar> vars;
    if (t.label.kind == Stmt::Kind::Assign) vars.push_back(t.label.lhs);
    for_each_var(t.label.expr, [&](const InstVar& v) { vars.push_back(v); });
    for (const InstVar& v : vars) {
      auto it = std::lower_bound(n.vars->vars.begin(), n.vars->vars.end(), v);
      if (it == n.vars->vars.end() || !(*it == v))
        problems.push_back(name + " mentions unknown variable " +
                           to_string(v));
    }
  }
  return problems;
}

namespace detail {

inline std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace detail

// GraphViz rendering. Places are circles (double circle: reachable failure
// and overflow places; filled: initially marked), transitions are boxes
// labeled with their statement.
inline std::string to_dot(const PetriProgram& n) {
  std::string out = "digraph net {\n  rankdir=LR;\n";
  std::map<LocId, size_t> place_index;
  for (size_t i = 0; i < n.places.size(); ++i) {
    LocId p = n.places[i];
    place_index[p] = i;
    const ControlLocation& loc = loc_of(p);
    bool bad = loc.kind == ControlLocation::Kind::Insufficient ||
               (loc.kind == ControlLocation::Kind::Prog && loc.rem.is_failed());
    bool marked = marking_contains(n.initial, p);
    out += "  p" + std::to_string(i) + " [shape=" +
           (bad ? "doublecircle" : "circle") + (marked ? ", style=filled" : "") +
           ", label=\"" + detail::dot_escape(n.place_name(p)) + "\"];\n";
  }
  for (size_t i = 0; i < n.transitions.size(); ++i) {
    const Transition& t = n.transitions[i];
    out += "  t" + std::to_string(i) + " [shape=box, label=\"" +
           detail::dot_escape(to_string(t.label)) + "\"];\n";
    for (LocId p : t.pre)
      out += "  p" + std::to_string(place_index.at(p)) + " -> t" +
             std::to_string(i) + ";\n";
    for (LocId p : t.post)
      out += "  t" + std::to_string(i) + " -> p" +
             std::to_string(place_index.at(p)) + ";\n";
  }
  out += "}\n";
  return out;
}

}  // namespace fkj
