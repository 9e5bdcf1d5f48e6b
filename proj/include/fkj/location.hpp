#pragma once

#include <deque>
#include <mutex>
#include <set>
#include <string>
#include <unordered_map>

#include "fkj/interp.hpp"
#include "fkj/program.hpp"

namespace fkj {

// Variables of the net, where each thread slot k of a template owns a
// private copy of that template's locals plus one id variable holding the
// thread id it was forked with. Globals are shared unchanged. Slot 0 is the
// start thread's slot; only the main template uses it.
struct InstVar {
  enum class Kind : uint8_t { Global, Local, Id } kind = Kind::Global;
  std::string name;  // base variable; empty for Id
  std::string tmpl;  // owning template; empty for Global
  int slot = 0;      // Local: 0 or 1..beta; Id: 1..beta

  static InstVar global(std::string n) {
    return {Kind::Global, std::move(n), {}, 0};
  }
  static InstVar local(std::string n, std::string tmpl, int slot) {
    return {Kind::Local, std::move(n), std::move(tmpl), slot};
  }
  static InstVar id(std::string tmpl, int slot) {
    return {Kind::Id, {}, std::move(tmpl), slot};
  }

  friend bool operator==(const InstVar&, const InstVar&) = default;
  friend bool operator<(const InstVar& a, const InstVar& b) {
    if (a.kind != b.kind) return a.kind < b.kind;
    if (a.name != b.name) return a.name < b.name;
    if (a.tmpl != b.tmpl) return a.tmpl < b.tmpl;
    return a.slot < b.slot;
  }
};

inline std::string to_string(const InstVar& v) {
  switch (v.kind) {
    case InstVar::Kind::Global: return v.name;
    case InstVar::Kind::Local:
      return v.name + "@" + v.tmpl +
             (v.slot == 0 ? std::string() : "#" + std::to_string(v.slot));
    case InstVar::Kind::Id: return "id@" + v.tmpl + "#" + std::to_string(v.slot);
  }
  return "?";
}

}  // namespace fkj

template <>
struct std::hash<fkj::InstVar> {
  std::size_t operator()(const fkj::InstVar& v) const {
    return fkj::detail::hash_all(static_cast<uint8_t>(v.kind), v.name, v.tmpl,
                                 v.slot);
  }
};

namespace fkj {

using IExpr = Expr<InstVar>;

// An instantiated atomic statement: what labels a net transition.
struct Stmt {
  enum class Kind : uint8_t { Assign, Assume } kind = Stmt::Kind::Assume;
  InstVar lhs;             // Assign only
  IExpr expr = nullptr;    // rhs or guard

  static Stmt assign(InstVar v, IExpr rhs) {
    return {Kind::Assign, std::move(v), rhs};
  }
  static Stmt assume(IExpr guard) { return {Kind::Assume, {}, guard}; }

  friend bool operator==(const Stmt&, const Stmt&) = default;

  std::size_t hash() const {
    return detail::hash_all(static_cast<uint8_t>(kind), to_string(lhs),
                            expr ? expr->id : UINT32_MAX);
  }
};

inline std::string to_string(const Stmt& s) {
  if (s.kind == Stmt::Kind::Assign)
    return to_string(s.lhs) + " := " + to_string(s.expr);
  return "assume " + to_string(s.expr);
}

// Rewrites a surface expression for one thread slot: globals stay, every
// other variable becomes that slot's private copy.
inline IExpr instantiate_expr(SExpr e, const TypeInfo& info,
                              const std::string& tmpl, int slot) {
  switch (e->op) {
    case ExprOp::IntLit: return make_int<InstVar>(e->literal, e->span);
    case ExprOp::BoolLit: return make_bool<InstVar>(e->flag, e->span);
    case ExprOp::Var:
      return make_var<InstVar>(info.is_global(e->var)
                                   ? InstVar::global(e->var)
                                   : InstVar::local(e->var, tmpl, slot),
                               e->span);
    case ExprOp::Neg:
    case ExprOp::Not:
      return make_unary(e->op, instantiate_expr(e->a, info, tmpl, slot),
                        e->span);
    case ExprOp::Select:
      return make_select(instantiate_expr(e->a, info, tmpl, slot),
                         instantiate_expr(e->b, info, tmpl, slot), e->span);
    case ExprOp::Store:
      return make_store(instantiate_expr(e->a, info, tmpl, slot),
                        instantiate_expr(e->b, info, tmpl, slot),
                        instantiate_expr(e->c, info, tmpl, slot), e->span);
    default:
      return make_binary(e->op, instantiate_expr(e->a, info, tmpl, slot),
                         instantiate_expr(e->b, info, tmpl, slot), e->span);
  }
}

// Inverse of instantiation on expressions: drops slot decorations.
inline SExpr strip_instantiation(IExpr e) {
  switch (e->op) {
    case ExprOp::IntLit: return make_int<std::string>(e->literal, e->span);
    case ExprOp::BoolLit: return make_bool<std::string>(e->flag, e->span);
    case ExprOp::Var: {
      if (e->var.kind == InstVar::Kind::Id)
        throw internal_error("strip_instantiation: bare id variable");
      return svar(e->var.name, e->span);
    }
    case ExprOp::Neg:
    case ExprOp::Not:
      return make_unary(e->op, strip_instantiation(e->a), e->span);
    case ExprOp::Select:
      return make_select(strip_instantiation(e->a), strip_instantiation(e->b),
                         e->span);
    case ExprOp::Store:
      return make_store(strip_instantiation(e->a), strip_instantiation(e->b),
                        strip_instantiation(e->c), e->span);
    default:
      return make_binary(e->op, strip_instantiation(e->a),
                         strip_instantiation(e->b), e->span);
  }
}

// Recovers the source-level simple statement behind a transition label:
// an assignment to an id variable was a fork, a guard comparing an id
// variable was a join, anything else maps field by field.
inline Statement deinstantiate_label(const Stmt& s) {
  if (s.kind == Stmt::Kind::Assign) {
    if (s.lhs.kind == InstVar::Kind::Id)
      return {Statement::Kind::Fork, {}, strip_instantiation(s.expr),
              s.lhs.tmpl};
    return {Statement::Kind::Assign, s.lhs.name, strip_instantiation(s.expr),
            {}};
  }
  const ExprNode<InstVar>* e = s.expr;
  if (e->op == ExprOp::Eq && e->a && e->a->op == ExprOp::Var &&
      e->a->var.kind == InstVar::Kind::Id)
    return {Statement::Kind::Join, {}, strip_instantiation(e->b), {}};
  return {Statement::Kind::Assume, {}, strip_instantiation(e), {}};
}

// A place of the net: either a control point of one thread slot, or a
// bookkeeping place tracking whether a slot is occupied, or the overflow
// place reached when a fork finds every slot of the target template taken.
struct ControlLocation {
  enum class Kind : uint8_t { Prog, InUse, NotInUse, Insufficient } kind =
      Kind::Prog;
  std::string tmpl;
  int slot = 0;     // Prog: 0 or 1..beta; InUse/NotInUse: 1..beta
  Remainder rem{};  // Prog only

  static ControlLocation prog(Remainder r, std::string tmpl, int slot) {
    return {Kind::Prog, std::move(tmpl), slot, std::move(r)};
  }
  static ControlLocation in_use(std::string tmpl, int slot) {
    return {Kind::InUse, std::move(tmpl), slot, {}};
  }
  static ControlLocation not_in_use(std::string tmpl, int slot) {
    return {Kind::NotInUse, std::move(tmpl), slot, {}};
  }
  static ControlLocation insufficient(std::string tmpl) {
    return {Kind::Insufficient, std::move(tmpl), 0, {}};
  }

  friend bool operator==(const ControlLocation&, const ControlLocation&) =
      default;
};

inline std::string slot_suffix(const std::string& tmpl, int slot) {
  return slot == 0 ? tmpl : tmpl + "#" + std::to_string(slot);
}

// Dense process-wide ids for control locations; structural equality becomes
// id equality and markings become sorted id vectors.
using LocId = uint32_t;

namespace detail {

struct LocKey {
  uint8_t kind;
  std::string tmpl;
  int slot;
  uint8_t tag;
  uint32_t cmd;

  friend bool operator==(const LocKey&, const LocKey&) = default;
};

struct LocKeyHash {
  std::size_t operator()(const LocKey& k) const {
    return hash_all(k.kind, k.tmpl, k.slot, k.tag, k.cmd);
  }
};

class LocPool {
 public:
  static LocPool& instance() {
    static LocPool pool;
    return pool;
  }

  LocId get(const ControlLocation& loc) {
    LocKey key{static_cast<uint8_t>(loc.kind), loc.tmpl, loc.slot,
               static_cast<uint8_t>(loc.rem.tag),
               loc.rem.cmd ? loc.rem.cmd->id : UINT32_MAX};
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(key);
    if (it != map_.end()) return it->second;
    LocId id = static_cast<LocId>(arena_.size());
    arena_.push_back(loc);
    map_.emplace(std::move(key), id);
    return id;
  }

  const ControlLocation& at(LocId id) {
    std::lock_guard<std::mutex> lock(mu_);
    return arena_[id];
  }

 private:
  std::mutex mu_;
  std::unordered_map<LocKey, LocId, LocKeyHash> map_;
  std::deque<ControlLocation> arena_;
};

}  // namespace detail

inline LocId loc_id(const ControlLocation& loc) {
  return detail::LocPool::instance().get(loc);
}

inline const ControlLocation& loc_of(LocId id) {
  return detail::LocPool::instance().at(id);
}

}  // namespace fkj
