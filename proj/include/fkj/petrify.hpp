#pragma once

#include <deque>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "fkj/petri.hpp"

namespace fkj {

// Translation of a program into a finite 1-safe net that simulates every
// execution using at most `beta` simultaneous threads per template. Each
// template gets beta thread slots with private copies of its locals; forks
// claim the lowest free slot of the target template, joins release it, and a
// fork that finds no free slot moves to a designated overflow place
// ("insufficient"). Checking the overflow places tells whether beta slots
// suffice; checking the failure places decides assertion safety.

// Templates that can ever be spawned: fork targets occurring in templates
// reachable from main through fork edges.
inline std::set<std::string> fork_targets(const Program& p) {
  std::map<std::string, std::set<std::string>> mentions;
  for (const auto& [name, body] : p.templates) {
    std::set<std::string>& out = mentions[name];
    // Walk the body for fork commands.
    std::vector<Cmd> stack{body};
    while (!stack.empty()) {
      Cmd c = stack.back();
      stack.pop_back();
      if (!c) continue;
      if (c->kind == CmdKind::Fork && p.has_template(c->target))
        out.insert(c->target);
      stack.push_back(c->a);
      stack.push_back(c->b);
    }
  }
  std::set<std::string> reachable{"main"};
  std::deque<std::string> queue{"main"};
  std::set<std::string> targets;
  while (!queue.empty()) {
    std::string t = queue.front();
    queue.pop_front();
    for (const auto& next : mentions[t]) {
      targets.insert(next);
      if (reachable.insert(next).second) queue.push_back(next);
    }
  }
  return targets;
}

// Control points of one template: every remainder reachable from the body by
// control flow alone, in discovery order. Shared by all slots.
inline std::vector<Remainder> control_points(const Program& p,
                                             const std::string& tmpl) {
  Cmd body = p.body(tmpl);
  if (!body) throw internal_error("control_points: unknown template " + tmpl);
  std::vector<Remainder> order;
  std::set<Remainder> seen;
  std::deque<Remainder> queue;
  auto push = [&](const Remainder& r) {
    if (seen.insert(r).second) {
      order.push_back(r);
      queue.push_back(r);
    }
  };
  push(Remainder::of(body));
  while (!queue.empty()) {
    Remainder r = queue.front();
    queue.pop_front();
    if (!r.is_cmd()) continue;
    auto [head, rest] = front(r);
    switch (head->kind) {
      case CmdKind::Assign:
      case CmdKind::Assume:
      case CmdKind::Fork:
      case CmdKind::Join: push(rest); break;
      case CmdKind::Assert:
        push(rest);
        push(Remainder::failed());
        break;
      case CmdKind::If:
        push(seq(head->a, rest));
        push(seq(head->b, rest));
        break;
      case CmdKind::While:
        push(seq(head->a, seq(head, rest)));
        push(rest);
        break;
      case CmdKind::Seq:
        throw internal_error("control_points: remainder not normalized");
    }
  }
  return order;
}

// The outgoing transitions of one program place. Straight-line statements
// step the slot's own control token; forks additionally claim the lowest
// free slot of the target (or overflow when all beta are taken); joins
// consume a terminated slot of any spawnable template whose id variable
// matches the join expression.
inline std::vector<Transition> control_successors(const Program& p, int beta,
                                                  const ControlLocation& loc) {
  std::vector<Transition> out;
  if (loc.kind != ControlLocation::Kind::Prog || !loc.rem.is_cmd()) return out;
  const TypeInfo& info = p.info;
  const std::string& tmpl = loc.tmpl;
  const int slot = loc.slot;
  auto [head, rest] = front(loc.rem);
  LocId self = loc_id(loc);

  auto inst = [&](SExpr e) { return instantiate_expr(e, info, tmpl, slot); };
  auto prog = [&](const Remainder& r) {
    return loc_id(ControlLocation::prog(r, tmpl, slot));
  };

  auto local_step = [&](Stmt label, LocId to) {
    Transition t;
    t.pre = {self};
    t.label = std::move(label);
    t.post = {to};
    t.actor = self;
    t.rule = Transition::Rule::Local;
    t.head = head;
    out.push_back(std::move(t));
  };

  switch (head->kind) {
    case CmdKind::Assign: {
      InstVar lhs = info.is_global(head->var)
                        ? InstVar::global(head->var)
                        : InstVar::local(head->var, tmpl, slot);
      local_step(Stmt::assign(std::move(lhs), inst(head->expr)), prog(rest));
      break;
    }
    case CmdKind::Assume:
      local_step(Stmt::assume(inst(head->expr)), prog(rest));
      break;
    case CmdKind::Assert:
      local_step(Stmt::assume(inst(head->expr)), prog(rest));
      local_step(Stmt::assume(inst(make_not(head->expr))),
                 prog(Remainder::failed()));
      break;
    case CmdKind::If:
      local_step(Stmt::assume(inst(head->expr)), prog(seq(head->a, rest)));
      local_step(Stmt::assume(inst(make_not(head->expr))),
                 prog(seq(head->b, rest)));
      break;
    case CmdKind::While:
      local_step(Stmt::assume(inst(head->expr)),
                 prog(seq(head->a, seq(head, rest))));
      local_step(Stmt::assume(inst(make_not(head->expr))), prog(rest));
      break;
    case CmdKind::Fork: {
      const std::string& target = head->target;
      Cmd body = p.body(target);
      if (!body) throw internal_error("control_successors: unknown fork target");
      for (int k = 1; k <= beta; ++k) {
        Transition t;
        t.pre = {self};
        for (int j = 1; j < k; ++j)
          t.pre.push_back(loc_id(ControlLocation::in_use(target, j)));
        t.pre.push_back(loc_id(ControlLocation::not_in_use(target, k)));
        t.label = Stmt::assign(InstVar::id(target, k), inst(head->expr));
        t.post = {prog(rest),
                  loc_id(ControlLocation::prog(Remainder::of(body), target, k))};
        for (int j = 1; j <= k; ++j)
          t.post.push_back(loc_id(ControlLocation::in_use(target, j)));
        t.pre = make_marking(std::move(t.pre));
        t.post = make_marking(std::move(t.post));
        t.actor = self;
        t.rule = Transition::Rule::Fork;
        t.peer_tmpl = target;
        t.peer_slot = k;
        t.head = head;
        out.push_back(std::move(t));
      }
      // All slots taken: the fork cannot be simulated at this beta.
      Transition t;
      t.pre = {self};
      for (int j = 1; j <= beta; ++j)
        t.pre.push_back(loc_id(ControlLocation::in_use(target, j)));
      t.label = Stmt::assume(make_bool<InstVar>(true));
      t.post = {loc_id(ControlLocation::insufficient(target))};
      t.pre = make_marking(std::move(t.pre));
      t.actor = self;
      t.rule = Transition::Rule::Insufficiency;
      t.peer_tmpl = target;
      t.head = head;
      out.push_back(std::move(t));
      break;
    }
    case CmdKind::Join: {
      for (const auto& target : fork_targets(p)) {
        for (int k = 1; k <= beta; ++k) {
          Transition t;
          t.pre = make_marking(
              {self,
               loc_id(ControlLocation::prog(Remainder::done(), target, k)),
               loc_id(ControlLocation::in_use(target, k))});
          t.label = Stmt::assume(
              make_binary(ExprOp::Eq,
                          make_var<InstVar>(InstVar::id(target, k)),
                          inst(head->expr)));
          t.post = make_marking(
              {prog(rest), loc_id(ControlLocation::not_in_use(target, k))});
          t.actor = self;
          t.rule = Transition::Rule::Join;
          t.peer_tmpl = target;
          t.peer_slot = k;
          t.head = head;
          out.push_back(std::move(t));
        }
      }
      break;
    }
    case CmdKind::Seq:
      throw internal_error("control_successors: remainder not normalized");
  }
  return out;
}

namespace detail {

struct PlaceKey {
  int kind_rank;
  std::string tmpl;
  int slot;
  int cp_index;

  friend bool operator<(const PlaceKey& a, const PlaceKey& b) {
    return std::tie(a.kind_rank, a.tmpl, a.slot, a.cp_index) <
           std::tie(b.kind_rank, b.tmpl, b.slot, b.cp_index);
  }
};

}  // namespace detail

inline PetriProgram petrify(const Program& p, int beta) {
  if (beta < 1) throw std::invalid_argument("petrify: beta must be >= 1");
  if (!p.has_template("main"))
    throw std::invalid_argument("petrify: program has no main template");

  std::set<std::string> targets = fork_targets(p);

  // Per-template control point numbering, shared across slots; drives both
  // canonical ordering and place names.
  std::map<std::string, std::map<Remainder, int>> cp_index;
  std::set<std::string> live{"main"};
  for (const auto& t : targets) live.insert(t);
  for (const auto& t : live) {
    if (!p.has_template(t)) continue;
    std::map<Remainder, int>& idx = cp_index[t];
    int i = 0;
    for (const Remainder& r : control_points(p, t)) idx[r] = i++;
  }

  PetriProgram net;
  net.beta = beta;
  net.source = std::make_shared<Program>(p);

  // Seed: the start thread's control token plus one free marker per slot.
  std::vector<LocId> init{
      loc_id(ControlLocation::prog(Remainder::of(p.body("main")), "main", 0))};
  for (const auto& [name, body] : p.templates)
    for (int k = 1; k <= beta; ++k)
      init.push_back(loc_id(ControlLocation::not_in_use(name, k)));
  net.initial = make_marking(init);

  // Close the control-reachable fragment.
  std::set<LocId> seen;
  std::deque<LocId> queue;
  std::set<LocId> all_places(net.initial.begin(), net.initial.end());
  auto enqueue = [&](LocId id) {
    all_places.insert(id);
    if (loc_of(id).kind != ControlLocation::Kind::Prog) return;
    if (seen.insert(id).second) queue.push_back(id);
  };
  for (LocId id : net.initial) enqueue(id);
  while (!queue.empty()) {
    LocId id = queue.front();
    queue.pop_front();
    for (Transition& t : control_successors(p, beta, loc_of(id))) {
      for (LocId q : t.pre) enqueue(q);
      for (LocId q : t.post) enqueue(q);
      net.transitions.push_back(std::move(t));
    }
  }
  net.places.assign(all_places.begin(), all_places.end());

  // Canonical order, independent of discovery history.
  auto place_key = [&](LocId id) {
    const ControlLocation& loc = loc_of(id);
    detail::PlaceKey k;
    k.kind_rank = static_cast<int>(loc.kind);
    k.tmpl = loc.tmpl;
    k.slot = loc.slot;
    k.cp_index = 0;
    if (loc.kind == ControlLocation::Kind::Prog) {
      auto ti = cp_index.find(loc.tmpl);
      if (ti != cp_index.end()) {
        auto ri = ti->second.find(loc.rem);
        k.cp_index = ri == ti->second.end() ? -1 : ri->second;
      }
    }
    return k;
  };
  std::sort(net.places.begin(), net.places.end(),
            [&](LocId a, LocId b) { return place_key(a) < place_key(b); });
  std::sort(
      net.transitions.begin(), net.transitions.end(),
      [&](const Transition& a, const Transition& b) {
        auto key = [&](const Transition& t) {
          return std::tuple(place_key(t.actor), static_cast<int>(t.rule),
                            t.peer_tmpl, t.peer_slot, to_string(t.label));
        };
        return key(a) < key(b);
      });

  // Short stable names for rendering: per-template control point numbers.
  for (LocId id : net.places) {
    const ControlLocation& loc = loc_of(id);
    if (loc.kind != ControlLocation::Kind::Prog) continue;
    std::string base = slot_suffix(loc.tmpl, loc.slot);
    std::string tail;
    if (loc.rem.is_done()) {
      tail = "end";
    } else if (loc.rem.is_failed()) {
      tail = "err";
    } else {
      tail = "l" + std::to_string(cp_index[loc.tmpl][loc.rem]);
    }
    net.place_names[id] = base + ":" + tail;
  }

  // Variable universe: all globals, each instantiated slot's locals, and the
  // id variable of every spawnable slot.
  auto table = std::make_shared<VarTable>();
  std::map<InstVar, Type> vars;
  for (const auto& g : p.globals) vars[InstVar::global(g)] = p.info.type_of(g);
  std::vector<std::pair<std::string, int>> slots{{"main", 0}};
  for (const auto& t : targets)
    for (int k = 1; k <= beta; ++k) slots.emplace_back(t, k);
  for (const auto& [tmpl, slot] : slots) {
    for (const auto& v : p.info.locals_of(tmpl))
      vars[InstVar::local(v, tmpl, slot)] = p.info.type_of(v);
    if (slot > 0) vars[InstVar::id(tmpl, slot)] = Type::Int;
  }
  for (const auto& [v, t] : vars) {
    table->vars.push_back(v);
    table->types.push_back(t);
  }
  net.vars = std::move(table);

  net.build_index();
  return net;
}

// What to look for in the net: assertion failures, slot overflow, or both.
struct Specification {
  enum class Kind : uint8_t { Safety, Bound, Union } kind;
  std::vector<LocId> bad;  // sorted
};

struct Specifications {
  Specification safety;
  Specification bound;
  Specification united;
};

inline Specifications specifications(const PetriProgram& n) {
  Specifications s;
  s.safety.kind = Specification::Kind::Safety;
  s.bound.kind = Specification::Kind::Bound;
  s.united.kind = Specification::Kind::Union;
  for (LocId p : n.places) {
    const ControlLocation& loc = loc_of(p);
    if (loc.kind == ControlLocation::Kind::Prog && loc.rem.is_failed())
      s.safety.bad.push_back(p);
    if (loc.kind == ControlLocation::Kind::Insufficient)
      s.bound.bad.push_back(p);
  }
  std::sort(s.safety.bad.begin(), s.safety.bad.end());
  std::sort(s.bound.bad.begin(), s.bound.bad.end());
  s.united.bad = s.safety.bad;
  s.united.bad.insert(s.united.bad.end(), s.bound.bad.begin(),
                      s.bound.bad.end());
  std::sort(s.united.bad.begin(), s.united.bad.end());
  return s;
}

// Bookkeeping consistency of a reachable marking. Per template and slot,
// exactly one of inUse/notInUse carries the token; an occupied slot has
// exactly one control token and a free slot none. The conditions only
// constrain markings that still simulate a configuration: the overflow
// transition consumes the acting thread's control token together with the
// target template's whole bookkeeping row, so once any overflow place is
// marked the run is a terminated report and nothing below applies.
inline std::vector<std::string> coherence_violations(const PetriProgram& n,
                                                     const Marking& m) {
  std::vector<std::string> out;
  if (!n.source) throw internal_error("coherence_violations: no source program");
  for (const auto& [tmpl, body] : n.source->templates)
    if (marking_contains(m, loc_id(ControlLocation::insufficient(tmpl))))
      return out;
  std::map<std::pair<std::string, int>, int> prog_tokens;
  for (LocId p : m) {
    const ControlLocation& loc = loc_of(p);
    if (loc.kind == ControlLocation::Kind::Prog)
      ++prog_tokens[{loc.tmpl, loc.slot}];
  }
  for (const auto& [count_key, count] : prog_tokens) {
    if (count > 1)
      out.push_back("slot " + slot_suffix(count_key.first, count_key.second) +
                    " holds " + std::to_string(count) + " control tokens");
  }
  for (const auto& [tmpl, body] : n.source->templates) {
    for (int k = 1; k <= n.beta; ++k) {
      bool in_use = marking_contains(m, loc_id(ControlLocation::in_use(tmpl, k)));
      bool not_in_use =
          marking_contains(m, loc_id(ControlLocation::not_in_use(tmpl, k)));
      if (in_use == not_in_use)
        out.push_back("slot " + slot_suffix(tmpl, k) + ": " +
                      std::to_string((in_use ? 1 : 0) + (not_in_use ? 1 : 0)) +
                      " bookkeeping tokens");
      bool occupied = prog_tokens.count({tmpl, k}) > 0;
      if (in_use != occupied)
        out.push_back("slot " + slot_suffix(tmpl, k) +
                      (in_use ? " marked in use but has no control token"
                              : " has a control token but is not in use"));
    }
  }
  return out;
}

// Reads a product state of the net back as an interpreter configuration:
// every control token becomes a thread whose id and locals are read off the
// slot's variables, and the shared state is the restriction to globals.
inline GlobalConfig conf(const PetriProgram& n, const Marking& m,
                         const std::vector<Value>& data) {
  for (const auto& [tmpl, body] : n.source->templates)
    if (marking_contains(m, loc_id(ControlLocation::insufficient(tmpl))))
      throw internal_error(
          "conf: marking contains an overflow place and simulates no "
          "configuration");
  std::vector<std::string> bad = coherence_violations(n, m);
  if (!bad.empty())
    throw internal_error("conf: incoherent marking: " + bad.front());
  if (data.size() != n.vars->size())
    throw internal_error("conf: data state has wrong arity");
  const Program& p = *n.source;
  GlobalConfig c;
  for (LocId pl : m) {
    const ControlLocation& loc = loc_of(pl);
    if (loc.kind != ControlLocation::Kind::Prog) continue;
    LocalConfig th;
    th.rem = loc.rem;
    th.tmpl = loc.tmpl;
    if (loc.slot != 0)
      th.tid = data[n.vars->index_of(InstVar::id(loc.tmpl, loc.slot))].as_int();
    for (const auto& v : p.info.locals_of(loc.tmpl))
      th.locals.emplace_back(
          v, data[n.vars->index_of(InstVar::local(v, loc.tmpl, loc.slot))]);
    c.threads.push_back(std::move(th));
  }
  for (const auto& g : p.globals)
    c.globals.emplace_back(g, data[n.vars->index_of(InstVar::global(g))]);
  std::sort(c.globals.begin(), c.globals.end());
  c.canonicalize();
  return c;
}

// Every fork place must offer exactly one transition per target slot plus
// the overflow transition.
inline std::vector<std::string> fork_arity_violations(const PetriProgram& n) {
  std::vector<std::string> out;
  for (LocId p : n.places) {
    const ControlLocation& loc = loc_of(p);
    if (loc.kind != ControlLocation::Kind::Prog || !loc.rem.is_cmd()) continue;
    if (front(loc.rem).first->kind != CmdKind::Fork) continue;
    int outgoing = 0;
    for (const Transition& t : n.transitions)
      if (marking_contains(t.pre, p)) ++outgoing;
    if (outgoing != n.beta + 1)
      out.push_back("fork place " + n.place_name(p) + " has " +
                    std::to_string(outgoing) + " outgoing transitions, want " +
                    std::to_string(n.beta + 1));
  }
  return out;
}

// No fork transition to slot k may be enabled while a lower slot of the same
// template is still free.
inline std::vector<std::string> minimal_slot_violations(const PetriProgram& n,
                                                        const Marking& m) {
  std::vector<std::string> out;
  for (uint32_t ti : enabled(n, m)) {
    const Transition& t = n.transitions[ti];
    if (t.rule != Transition::Rule::Fork) continue;
    for (int j = 1; j < t.peer_slot; ++j) {
      if (marking_contains(m,
                           loc_id(ControlLocation::not_in_use(t.peer_tmpl, j))))
        out.push_back("fork into slot " + slot_suffix(t.peer_tmpl, t.peer_slot) +
                      " enabled while slot " + std::to_string(j) + " is free");
    }
  }
  return out;
}

}  // namespace fkj
