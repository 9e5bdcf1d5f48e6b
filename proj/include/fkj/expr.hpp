#pragma once

#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <unordered_map>

#include "fkj/source.hpp"
#include "fkj/value.hpp"

namespace fkj {

// Expression trees are hash-consed: structurally equal expressions are the
// same node, so pointer equality is structural equality and node ids give a
// cheap deterministic total order. The variable type V is a template
// parameter because the same expression language is used twice: over plain
// variable names in program text, and over instantiated variables in nets.
// V needs operator==, operator<, std::hash, and an ADL-visible to_string.

enum class ExprOp : uint8_t {
  IntLit,
  BoolLit,
  Var,
  Neg,
  Not,
  Add,
  Sub,
  Mul,
  Eq,
  Ne,
  Lt,
  Le,
  Gt,
  Ge,
  And,
  Or,
  Select,
  Store,
};

template <typename V>
struct ExprNode {
  ExprOp op;
  uint32_t id;
  Int literal;
  bool flag = false;
  V var{};
  const ExprNode* a = nullptr;
  const ExprNode* b = nullptr;
  const ExprNode* c = nullptr;
  SourceSpan span{};
};

template <typename V>
using Expr = const ExprNode<V>*;

namespace detail {

template <typename V>
struct ExprKey {
  ExprOp op = ExprOp::IntLit;
  Int literal;
  bool flag = false;
  V var{};
  uint32_t a = UINT32_MAX;
  uint32_t b = UINT32_MAX;
  uint32_t c = UINT32_MAX;

  friend bool operator==(const ExprKey&, const ExprKey&) = default;
};

template <typename V>
struct ExprKeyHash {
  std::size_t operator()(const ExprKey<V>& k) const {
    return hash_all(static_cast<uint8_t>(k.op), k.literal, k.flag, k.var, k.a,
                    k.b, k.c);
  }
};

template <typename V>
class ExprPool {
 public:
  static ExprPool& instance() {
    static ExprPool pool;
    return pool;
  }

  Expr<V> get(ExprKey<V> key, SourceSpan span) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(key);
    if (it != map_.end()) return it->second;
    ExprNode<V>& n = arena_.emplace_back();
    n.op = key.op;
    n.id = static_cast<uint32_t>(arena_.size() - 1);
    n.literal = key.literal;
    n.flag = key.flag;
    n.var = key.var;
    n.a = key.a == UINT32_MAX ? nullptr : &arena_[key.a];
    n.b = key.b == UINT32_MAX ? nullptr : &arena_[key.b];
    n.c = key.c == UINT32_MAX ? nullptr : &arena_[key.c];
    n.span = span;
    map_.emplace(std::move(key), &n);
    return &n;
  }

 private:
  std::mutex mu_;
  std::unordered_map<ExprKey<V>, Expr<V>, ExprKeyHash<V>> map_;
  std::deque<ExprNode<V>> arena_;
};

}  // namespace detail

// Negative literals are normalized to Neg(|n|) so that every expression the
// printer emits re-parses to the identical node.
template <typename V>
Expr<V> make_int(Int v, SourceSpan span = {}) {
  detail::ExprKey<V> k;
  if (v < 0) {
    k.op = ExprOp::Neg;
    k.a = make_int<V>(-v, span)->id;
  } else {
    k.op = ExprOp::IntLit;
    k.literal = std::move(v);
  }
  return detail::ExprPool<V>::instance().get(std::move(k), span);
}

template <typename V>
Expr<V> make_bool(bool b, SourceSpan span = {}) {
  detail::ExprKey<V> k;
  k.op = ExprOp::BoolLit;
  k.flag = b;
  return detail::ExprPool<V>::instance().get(std::move(k), span);
}

template <typename V>
Expr<V> make_var(V v, SourceSpan span = {}) {
  detail::ExprKey<V> k;
  k.op = ExprOp::Var;
  k.var = std::move(v);
  return detail::ExprPool<V>::instance().get(std::move(k), span);
}

template <typename V>
Expr<V> make_unary(ExprOp op, Expr<V> a, SourceSpan span = {}) {
  if (op != ExprOp::Neg && op != ExprOp::Not)
    throw internal_error("make_unary: not a unary operator");
  detail::ExprKey<V> k;
  k.op = op;
  k.a = a->id;
  return detail::ExprPool<V>::instance().get(std::move(k), span);
}

template <typename V>
Expr<V> make_binary(ExprOp op, Expr<V> a, Expr<V> b, SourceSpan span = {}) {
  switch (op) {
    case ExprOp::Add:
    case ExprOp::Sub:
    case ExprOp::Mul:
    case ExprOp::Eq:
    case ExprOp::Ne:
    case ExprOp::Lt:
    case ExprOp::Le:
    case ExprOp::Gt:
    case ExprOp::Ge:
    case ExprOp::And:
    case ExprOp::Or: break;
    default: throw internal_error("make_binary: not a binary operator");
  }
  detail::ExprKey<V> k;
  k.op = op;
  k.a = a->id;
  k.b = b->id;
  return detail::ExprPool<V>::instance().get(std::move(k), span);
}

template <typename V>
Expr<V> make_select(Expr<V> arr, Expr<V> idx, SourceSpan span = {}) {
  detail::ExprKey<V> k;
  k.op = ExprOp::Select;
  k.a = arr->id;
  k.b = idx->id;
  return detail::ExprPool<V>::instance().get(std::move(k), span);
}

template <typename V>
Expr<V> make_store(Expr<V> arr, Expr<V> idx, Expr<V> val, SourceSpan span = {}) {
  detail::ExprKey<V> k;
  k.op = ExprOp::Store;
  k.a = arr->id;
  k.b = idx->id;
  k.c = val->id;
  return detail::ExprPool<V>::instance().get(std::move(k), span);
}

template <typename V>
Expr<V> make_not(Expr<V> a, SourceSpan span = {}) {
  return make_unary(ExprOp::Not, a, span);
}

// Evaluation. Env is a callable V -> Value. The checker guarantees
// well-typedness; a kind mismatch here is an internal error.
template <typename V, typename Env>
Value eval(Expr<V> e, const Env& env) {
  switch (e->op) {
    case ExprOp::IntLit: return Value::of_int(e->literal);
    case ExprOp::BoolLit: return Value::of_bool(e->flag);
    case ExprOp::Var: return env(e->var);
    case ExprOp::Neg: return Value::of_int(-eval(e->a, env).as_int());
    case ExprOp::Not: return Value::of_bool(!eval(e->a, env).as_bool());
    case ExprOp::Add:
      return Value::of_int(eval(e->a, env).as_int() + eval(e->b, env).as_int());
    case ExprOp::Sub:
      return Value::of_int(eval(e->a, env).as_int() - eval(e->b, env).as_int());
    case ExprOp::Mul:
      return Value::of_int(eval(e->a, env).as_int() * eval(e->b, env).as_int());
    case ExprOp::Eq:
      return Value::of_bool(eval(e->a, env).as_int() ==
                            eval(e->b, env).as_int());
    case ExprOp::Ne:
      return Value::of_bool(eval(e->a, env).as_int() !=
                            eval(e->b, env).as_int());
    case ExprOp::Lt:
      return Value::of_bool(eval(e->a, env).as_int() <
                            eval(e->b, env).as_int());
    case ExprOp::Le:
      return Value::of_bool(eval(e->a, env).as_int() <=
                            eval(e->b, env).as_int());
    case ExprOp::Gt:
      return Value::of_bool(eval(e->a, env).as_int() >
                            eval(e->b, env).as_int());
    case ExprOp::Ge:
      return Value::of_bool(eval(e->a, env).as_int() >=
                            eval(e->b, env).as_int());
    case ExprOp::And:
      return Value::of_bool(eval(e->a, env).as_bool() &&
                            eval(e->b, env).as_bool());
    case ExprOp::Or:
      return Value::of_bool(eval(e->a, env).as_bool() ||
                            eval(e->b, env).as_bool());
    case ExprOp::Select:
      return Value::of_int(
          eval(e->a, env).select(eval(e->b, env).as_int()));
    case ExprOp::Store:
      return eval(e->a, env)
          .store(eval(e->b, env).as_int(), eval(e->c, env).as_int());
  }
  throw internal_error("eval: bad expression node");
}

template <typename V, typename F>
void for_each_var(Expr<V> e, const F& f) {
  if (!e) return;
  if (e->op == ExprOp::Var) {
    f(e->var);
    return;
  }
  for_each_var(e->a, f);
  for_each_var(e->b, f);
  for_each_var(e->c, f);
}

inline std::string to_string(const std::string& s) { return s; }

namespace detail {

inline int precedence(ExprOp op) {
  switch (op) {
    case ExprOp::Or: return 1;
    case ExprOp::And: return 2;
    case ExprOp::Eq:
    case ExprOp::Ne:
    case ExprOp::Lt:
    case ExprOp::Le:
    case ExprOp::Gt:
    case ExprOp::Ge: return 3;
    case ExprOp::Add:
    case ExprOp::Sub: return 4;
    case ExprOp::Mul: return 5;
    case ExprOp::Neg:
    case ExprOp::Not: return 6;
    case ExprOp::Select: return 7;
    default: return 8;
  }
}

inline const char* op_token(ExprOp op) {
  switch (op) {
    case ExprOp::Add: return " + ";
    case ExprOp::Sub: return " - ";
    case ExprOp::Mul: return " * ";
    case ExprOp::Eq: return " == ";
    case ExprOp::Ne: return " != ";
    case ExprOp::Lt: return " < ";
    case ExprOp::Le: return " <= ";
    case ExprOp::Gt: return " > ";
    case ExprOp::Ge: return " >= ";
    case ExprOp::And: return " && ";
    case ExprOp::Or: return " || ";
    default: return "?";
  }
}

template <typename V>
void print_expr(std::string& out, Expr<V> e, int min_prec) {
  using fkj::to_string;
  int prec = precedence(e->op);
  bool paren = prec < min_prec;
  if (paren) out += '(';
  switch (e->op) {
    case ExprOp::IntLit: out += e->literal.str(); break;
    case ExprOp::BoolLit: out += e->flag ? "true" : "false"; break;
    case ExprOp::Var: out += to_string(e->var); break;
    case ExprOp::Neg:
      out += '-';
      print_expr(out, e->a, prec);
      break;
    case ExprOp::Not:
      out += '!';
      print_expr(out, e->a, prec);
      break;
    case ExprOp::Select:
      print_expr(out, e->a, prec);
      out += '[';
      print_expr(out, e->b, 0);
      out += ']';
      break;
    case ExprOp::Store:
      out += "store(";
      print_expr(out, e->a, 0);
      out += ", ";
      print_expr(out, e->b, 0);
      out += ", ";
      print_expr(out, e->c, 0);
      out += ')';
      break;
    default:
      // Binary operators associate left; the right operand needs one more
      // level so a - (b - c) keeps its parentheses.
      print_expr(out, e->a, prec);
      out += op_token(e->op);
      print_expr(out, e->b, prec + 1);
      break;
  }
  if (paren) out += ')';
}

}  // namespace detail

template <typename V>
std::string to_string(Expr<V> e) {
  std::string out;
  detail::print_expr(out, e, 0);
  return out;
}

// Shorthand for expressions over plain variable names.
using SExpr = Expr<std::string>;

inline SExpr svar(std::string_view name, SourceSpan span = {}) {
  return make_var<std::string>(std::string(name), span);
}
inline SExpr sint(Int v, SourceSpan span = {}) {
  return make_int<std::string>(std::move(v), span);
}
inline SExpr sbool(bool b, SourceSpan span = {}) {
  return make_bool<std::string>(b, span);
}

}  // namespace fkj
