#pragma once

#include <algorithm>
#include <deque>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fkj/program.hpp"

namespace fkj {

// Direct small-step execution of programs with unboundedly many threads.
// A global configuration is a multiset of thread states plus the shared
// variables; it is the reference semantics that the net-based checker is
// validated against.

// A simple statement: the label of one execution step. Control-flow steps
// (if/while/assert) are labeled with the assume of the taken guard.
struct Statement {
  enum class Kind : uint8_t { Assign, Assume, Fork, Join } kind;
  std::string var;          // Assign target
  SExpr expr = nullptr;     // rhs, guard, or thread id expression
  std::string target;       // Fork template

  friend bool operator==(const Statement&, const Statement&) = default;
};

inline std::string to_string(const Statement& s) {
  switch (s.kind) {
    case Statement::Kind::Assign: return s.var + " := " + to_string(s.expr);
    case Statement::Kind::Assume: return "assume " + to_string(s.expr);
    case Statement::Kind::Fork:
      return "fork " + to_string(s.expr) + " " + s.target + "()";
    case Statement::Kind::Join: return "join " + to_string(s.expr);
  }
  return "?";
}

// One running (or terminated) thread: what is left to execute, which
// template it was spawned from, its id, and its locals. The start thread is
// the only one without an id.
struct LocalConfig {
  Remainder rem;
  std::string tmpl;
  std::optional<Int> tid;
  std::vector<std::pair<std::string, Value>> locals;  // sorted by name

  friend bool operator==(const LocalConfig&, const LocalConfig&) = default;
  friend bool operator<(const LocalConfig& a, const LocalConfig& b) {
    if (a.tmpl != b.tmpl) return a.tmpl < b.tmpl;
    if (a.tid.has_value() != b.tid.has_value()) return !a.tid.has_value();
    if (a.tid != b.tid) return *a.tid < *b.tid;
    if (!(a.rem == b.rem)) return a.rem < b.rem;
    return a.locals < b.locals;
  }
};

struct GlobalConfig {
  std::vector<LocalConfig> threads;                    // canonically sorted
  std::vector<std::pair<std::string, Value>> globals;  // sorted by name
  std::size_t cached_hash = 0;

  void canonicalize() {
    std::sort(threads.begin(), threads.end());
    cached_hash = compute_hash();
  }

  bool erroneous() const {
    for (const auto& t : threads)
      if (t.rem.is_failed()) return true;
    return false;
  }

  // Largest number of threads sharing one template.
  int width() const {
    int best = 0, run = 0;
    const std::string* prev = nullptr;
    for (const auto& t : threads) {
      if (prev && *prev == t.tmpl) {
        ++run;
      } else {
        run = 1;
        prev = &t.tmpl;
      }
      best = std::max(best, run);
    }
    return best;
  }

  friend bool operator==(const GlobalConfig& a, const GlobalConfig& b) {
    return a.cached_hash == b.cached_hash && a.threads == b.threads &&
           a.globals == b.globals;
  }

 private:
  std::size_t compute_hash() const {
    std::size_t h = 0x51ed2701;
    for (const auto& t : threads) {
      detail::hash_combine(h, t.rem.hash());
      detail::hash_combine(h, std::hash<std::string>{}(t.tmpl));
      detail::hash_combine(h, t.tid ? std::hash<Int>{}(*t.tid) : 0xb07f);
      for (const auto& [k, v] : t.locals) {
        detail::hash_combine(h, std::hash<std::string>{}(k));
        detail::hash_combine(h, v.hash());
      }
    }
    for (const auto& [k, v] : globals) {
      detail::hash_combine(h, std::hash<std::string>{}(k));
      detail::hash_combine(h, v.hash());
    }
    return h;
  }
};

struct GlobalConfigHash {
  std::size_t operator()(const GlobalConfig& c) const { return c.cached_hash; }
};

// One step: the statement executed, which thread moved (index into the
// canonical thread order of the predecessor), and for join which thread was
// collected.
struct Step {
  Statement stmt;
  int actor = 0;
  std::optional<int> partner;
};

namespace detail {

inline std::vector<std::pair<std::string, Value>> zero_locals(
    const Program& p, const std::string& tmpl) {
  std::vector<std::pair<std::string, Value>> out;
  for (const auto& v : p.info.locals_of(tmpl))
    out.emplace_back(v, Value::zero(p.info.type_of(v)));
  return out;
}

inline const Value* lookup(
    const std::vector<std::pair<std::string, Value>>& env,
    const std::string& name) {
  auto it = std::lower_bound(
      env.begin(), env.end(), name,
      [](const auto& kv, const std::string& n) { return kv.first < n; });
  if (it == env.end() || it->first != name) return nullptr;
  return &it->second;
}

inline void put(std::vector<std::pair<std::string, Value>>& env,
                const std::string& name, Value v) {
  auto it = std::lower_bound(
      env.begin(), env.end(), name,
      [](const auto& kv, const std::string& n) { return kv.first < n; });
  if (it == env.end() || it->first != name)
    throw internal_error("assignment to unknown variable " + name);
  it->second = std::move(v);
}

}  // namespace detail

inline GlobalConfig initial_config(const Program& p) {
  Cmd main_body = p.body("main");
  if (!main_body) throw internal_error("initial_config: no main template");
  GlobalConfig c;
  LocalConfig start;
  start.rem = Remainder::of(main_body);
  start.tmpl = "main";
  start.locals = detail::zero_locals(p, "main");
  c.threads.push_back(std::move(start));
  for (const auto& g : p.globals)
    c.globals.emplace_back(g, Value::zero(p.info.type_of(g)));
  std::sort(c.globals.begin(), c.globals.end());
  c.canonicalize();
  return c;
}

// All successor configurations, in a canonical order: threads in the
// configuration's sorted order; for one thread, the rule order is fixed and
// join partners are enumerated in thread order.
inline std::vector<std::pair<Step, GlobalConfig>> successors(
    const Program& p, const GlobalConfig& cfg) {
  std::vector<std::pair<Step, GlobalConfig>> out;

  for (int i = 0; i < static_cast<int>(cfg.threads.size()); ++i) {
    const LocalConfig& th = cfg.threads[i];
    if (!th.rem.is_cmd()) continue;
    auto [head, rest] = front(th.rem);

    auto env = [&](const std::string& v) -> Value {
      if (const Value* val = detail::lookup(th.locals, v)) return *val;
      if (const Value* val = detail::lookup(cfg.globals, v)) return *val;
      throw internal_error("unbound variable " + v);
    };

    auto emit = [&](Statement stmt, GlobalConfig next,
                    std::optional<int> partner = std::nullopt) {
      next.canonicalize();
      out.emplace_back(Step{std::move(stmt), i, partner}, std::move(next));
    };

    auto with_remainder = [&](Remainder r) {
      GlobalConfig next = cfg;
      next.threads[i].rem = std::move(r);
      return next;
    };

    switch (head->kind) {
      case CmdKind::Assign: {
        Value v = eval(head->expr, env);
        GlobalConfig next = with_remainder(rest);
        if (p.info.is_global(head->var)) {
          detail::put(next.globals, head->var, std::move(v));
        } else {
          detail::put(next.threads[i].locals, head->var, std::move(v));
        }
        emit({Statement::Kind::Assign, head->var, head->expr, {}},
             std::move(next));
        break;
      }
      case CmdKind::Assume:
        if (eval(head->expr, env).as_bool())
          emit({Statement::Kind::Assume, {}, head->expr, {}},
               with_remainder(rest));
        break;
      case CmdKind::Assert:
        if (eval(head->expr, env).as_bool()) {
          emit({Statement::Kind::Assume, {}, head->expr, {}},
               with_remainder(rest));
        } else {
          emit({Statement::Kind::Assume, {}, make_not(head->expr), {}},
               with_remainder(Remainder::failed()));
        }
        break;
      case CmdKind::If:
        if (eval(head->expr, env).as_bool()) {
          emit({Statement::Kind::Assume, {}, head->expr, {}},
               with_remainder(seq(head->a, rest)));
        } else {
          emit({Statement::Kind::Assume, {}, make_not(head->expr), {}},
               with_remainder(seq(head->b, rest)));
        }
        break;
      case CmdKind::While:
        if (eval(head->expr, env).as_bool()) {
          // Unfold one iteration: body, then the loop again.
          emit({Statement::Kind::Assume, {}, head->expr, {}},
               with_remainder(seq(head->a, seq(head, rest))));
        } else {
          emit({Statement::Kind::Assume, {}, make_not(head->expr), {}},
               with_remainder(rest));
        }
        break;
      case CmdKind::Fork: {
        Cmd body = p.body(head->target);
        if (!body) throw internal_error("fork of unknown template");
        GlobalConfig next = with_remainder(rest);
        LocalConfig spawned;
        spawned.rem = Remainder::of(body);
        spawned.tmpl = head->target;
        spawned.tid = eval(head->expr, env).as_int();
        spawned.locals = detail::zero_locals(p, head->target);
        next.threads.push_back(std::move(spawned));
        emit({Statement::Kind::Fork, {}, head->expr, head->target},
             std::move(next));
        break;
      }
      case CmdKind::Join: {
        Int want = eval(head->expr, env).as_int();
        for (int j = 0; j < static_cast<int>(cfg.threads.size()); ++j) {
          if (j == i) continue;
          const LocalConfig& other = cfg.threads[j];
          if (!other.rem.is_done() || !other.tid || *other.tid != want)
            continue;
          GlobalConfig next = with_remainder(rest);
          next.threads.erase(next.threads.begin() + j);
          emit({Statement::Kind::Join, {}, head->expr, {}}, std::move(next),
               j);
        }
        break;
      }
      case CmdKind::Seq:
        throw internal_error("successors: remainder not normalized");
    }
  }
  return out;
}

struct ExploreLimits {
  uint64_t max_configs = 1'000'000;
  uint64_t max_depth = 0;  // 0 = unbounded
};

struct Exploration {
  std::vector<GlobalConfig> reachable;  // discovery (breadth-first) order
  bool erroneous = false;
  int max_width = 0;
  bool exhausted = true;
};

inline Exploration explore(const Program& p,
                           const ExploreLimits& limits = {}) {
  Exploration result;
  std::unordered_map<GlobalConfig, uint32_t, GlobalConfigHash> seen;
  std::deque<std::pair<uint32_t, uint64_t>> queue;  // (index, depth)

  auto add = [&](GlobalConfig c, uint64_t depth) -> bool {
    auto it = seen.find(c);
    if (it != seen.end()) return true;
    if (result.reachable.size() >= limits.max_configs) {
      result.exhausted = false;
      return false;
    }
    uint32_t idx = static_cast<uint32_t>(result.reachable.size());
    result.erroneous = result.erroneous || c.erroneous();
    result.max_width = std::max(result.max_width, c.width());
    result.reachable.push_back(std::move(c));
    seen.emplace(result.reachable[idx], idx);
    queue.emplace_back(idx, depth);
    return true;
  };

  add(initial_config(p), 0);
  while (!queue.empty()) {
    auto [idx, depth] = queue.front();
    queue.pop_front();
    GlobalConfig cfg = result.reachable[idx];
    auto succs = successors(p, cfg);
    if (limits.max_depth != 0 && depth == limits.max_depth) {
      for (auto& [step, next] : succs) {
        if (!seen.count(next)) result.exhausted = false;
      }
      continue;
    }
    for (auto& [step, next] : succs) add(std::move(next), depth + 1);
  }
  return result;
}

// Width of a single execution: the widest configuration along it.
inline int width_of_execution(const std::vector<GlobalConfig>& trace) {
  int w = 0;
  for (const auto& c : trace) w = std::max(w, c.width());
  return w;
}

}  // namespace fkj
