#pragma once

#include <deque>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>

#include "fkj/expr.hpp"
#include "fkj/source.hpp"

namespace fkj {

// Commands are hash-consed like expressions. Sequencing is kept right-nested
// (a Seq node's head is never itself a Seq), so a remainder is always
// "first statement; rest" and control points with identical remaining code
// coincide.

enum class CmdKind : uint8_t {
  Assign,
  Assume,
  Assert,
  If,
  While,
  Fork,
  Join,
  Seq,
};

struct CmdNode {
  CmdKind kind;
  uint32_t id;
  std::string var;         // Assign target
  SExpr expr = nullptr;    // rhs, guard, or thread id expression
  const CmdNode* a = nullptr;  // Seq head, If then-branch, While body
  const CmdNode* b = nullptr;  // Seq tail, If else-branch
  std::string target;      // Fork template name
  SourceSpan span{};
};

using Cmd = const CmdNode*;

namespace detail {

struct CmdKey {
  CmdKind kind = CmdKind::Assume;
  std::string var;
  uint32_t expr = UINT32_MAX;
  uint32_t a = UINT32_MAX;
  uint32_t b = UINT32_MAX;
  std::string target;

  friend bool operator==(const CmdKey&, const CmdKey&) = default;
};

struct CmdKeyHash {
  std::size_t operator()(const CmdKey& k) const {
    return hash_all(static_cast<uint8_t>(k.kind), k.var, k.expr, k.a, k.b,
                    k.target);
  }
};

class CmdPool {
 public:
  static CmdPool& instance() {
    static CmdPool pool;
    return pool;
  }

  Cmd get(CmdKey key, SExpr expr, Cmd a, Cmd b, SourceSpan span) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(key);
    if (it != map_.end()) return it->second;
    CmdNode& n = arena_.emplace_back();
    n.kind = key.kind;
    n.id = static_cast<uint32_t>(arena_.size() - 1);
    n.var = key.var;
    n.expr = expr;
    n.a = a;
    n.b = b;
    n.target = key.target;
    n.span = span;
    map_.emplace(std::move(key), &n);
    return &n;
  }

 private:
  std::mutex mu_;
  std::unordered_map<CmdKey, Cmd, CmdKeyHash> map_;
  std::deque<CmdNode> arena_;
};

inline Cmd intern_cmd(CmdKind kind, std::string var, SExpr expr, Cmd a, Cmd b,
                      std::string target, SourceSpan span) {
  CmdKey key;
  key.kind = kind;
  key.var = std::move(var);
  key.expr = expr ? expr->id : UINT32_MAX;
  key.a = a ? a->id : UINT32_MAX;
  key.b = b ? b->id : UINT32_MAX;
  key.target = std::move(target);
  return CmdPool::instance().get(std::move(key), expr, a, b, span);
}

}  // namespace detail

inline Cmd make_assign(std::string var, SExpr rhs, SourceSpan span = {}) {
  return detail::intern_cmd(CmdKind::Assign, std::move(var), rhs, nullptr,
                            nullptr, {}, span);
}
inline Cmd make_assume(SExpr guard, SourceSpan span = {}) {
  return detail::intern_cmd(CmdKind::Assume, {}, guard, nullptr, nullptr, {},
                            span);
}
inline Cmd make_assert(SExpr guard, SourceSpan span = {}) {
  return detail::intern_cmd(CmdKind::Assert, {}, guard, nullptr, nullptr, {},
                            span);
}
inline Cmd make_if(SExpr guard, Cmd then_branch, Cmd else_branch,
                   SourceSpan span = {}) {
  if (!then_branch || !else_branch)
    throw internal_error("make_if: both branches are required");
  return detail::intern_cmd(CmdKind::If, {}, guard, then_branch, else_branch,
                            {}, span);
}
inline Cmd make_while(SExpr guard, Cmd body, SourceSpan span = {}) {
  if (!body) throw internal_error("make_while: body is required");
  return detail::intern_cmd(CmdKind::While, {}, guard, body, nullptr, {}, span);
}
inline Cmd make_fork(SExpr id, std::string target, SourceSpan span = {}) {
  return detail::intern_cmd(CmdKind::Fork, {}, id, nullptr, nullptr,
                            std::move(target), span);
}
inline Cmd make_join(SExpr id, SourceSpan span = {}) {
  return detail::intern_cmd(CmdKind::Join, {}, id, nullptr, nullptr, {}, span);
}

// Right-nesting is restored on construction, so the head of a Seq is never a
// Seq.
inline Cmd make_seq(Cmd a, Cmd b, SourceSpan span = {}) {
  if (a->kind == CmdKind::Seq)
    return make_seq(a->a, make_seq(a->b, b, span), span);
  SourceSpan s = span.known() ? span : cover(a->span, b->span);
  return detail::intern_cmd(CmdKind::Seq, {}, nullptr, a, b, {}, s);
}

inline bool is_normalized(Cmd c) {
  if (!c) return true;
  if (c->kind == CmdKind::Seq) {
    if (c->a->kind == CmdKind::Seq) return false;
    return is_normalized(c->a) && is_normalized(c->b);
  }
  return is_normalized(c->a) && is_normalized(c->b);
}

// What is left for one thread to run: a command, normal termination, or a
// failed assertion.
struct Remainder {
  enum class Tag : uint8_t { Done, Failed, Cmd } tag = Tag::Done;
  Cmd cmd = nullptr;

  static Remainder done() { return {}; }
  static Remainder failed() { return {Tag::Failed, nullptr}; }
  static Remainder of(Cmd c) { return {Tag::Cmd, c}; }

  bool is_done() const { return tag == Tag::Done; }
  bool is_failed() const { return tag == Tag::Failed; }
  bool is_cmd() const { return tag == Tag::Cmd; }

  friend bool operator==(const Remainder&, const Remainder&) = default;
  friend bool operator<(const Remainder& a, const Remainder& b) {
    if (a.tag != b.tag) return a.tag < b.tag;
    uint32_t ia = a.cmd ? a.cmd->id : 0, ib = b.cmd ? b.cmd->id : 0;
    return ia < ib;
  }

  std::size_t hash() const {
    return detail::hash_all(static_cast<uint8_t>(tag),
                            cmd ? cmd->id : UINT32_MAX);
  }
};

// Splits "first statement; rest". Pre: r.is_cmd().
inline std::pair<Cmd, Remainder> front(const Remainder& r) {
  if (!r.is_cmd()) throw internal_error("front: remainder has no command");
  Cmd c = r.cmd;
  if (c->kind == CmdKind::Seq) return {c->a, Remainder::of(c->b)};
  return {c, Remainder::done()};
}

// Prepends a command; "c then nothing" is just c.
inline Remainder seq(Cmd c, const Remainder& rest) {
  switch (rest.tag) {
    case Remainder::Tag::Done: return Remainder::of(c);
    case Remainder::Tag::Cmd: return Remainder::of(make_seq(c, rest.cmd));
    case Remainder::Tag::Failed:
      throw internal_error("seq: cannot continue after failure");
  }
  throw internal_error("seq: bad remainder");
}

namespace detail {

void print_block(std::string& out, Cmd c, int indent);

inline void print_stmt(std::string& out, Cmd c, int indent) {
  std::string pad(static_cast<size_t>(indent) * 2, ' ');
  switch (c->kind) {
    case CmdKind::Assign:
      // Array writes round-trip through their surface form.
      if (c->expr->op == ExprOp::Store && c->expr->a->op == ExprOp::Var &&
          c->expr->a->var == c->var) {
        out += pad + c->var + "[" + to_string(c->expr->b) +
               "] := " + to_string(c->expr->c) + ";\n";
      } else {
        out += pad + c->var + " := " + to_string(c->expr) + ";\n";
      }
      break;
    case CmdKind::Assume:
      out += pad + "assume " + to_string(c->expr) + ";\n";
      break;
    case CmdKind::Assert:
      out += pad + "assert " + to_string(c->expr) + ";\n";
      break;
    case CmdKind::If:
      out += pad + "if (" + to_string(c->expr) + ") {\n";
      print_block(out, c->a, indent + 1);
      if (c->b->kind == CmdKind::Assume && c->b->expr->op == ExprOp::BoolLit &&
          c->b->expr->flag) {
        out += pad + "}\n";
      } else {
        out += pad + "} else {\n";
        print_block(out, c->b, indent + 1);
        out += pad + "}\n";
      }
      break;
    case CmdKind::While:
      out += pad + "while (" + to_string(c->expr) + ") {\n";
      print_block(out, c->a, indent + 1);
      out += pad + "}\n";
      break;
    case CmdKind::Fork:
      out += pad + "fork " + to_string(c->expr) + " " + c->target + "();\n";
      break;
    case CmdKind::Join:
      out += pad + "join " + to_string(c->expr) + ";\n";
      break;
    case CmdKind::Seq:
      throw internal_error("print_stmt: unexpected sequence node");
  }
}

inline void print_block(std::string& out, Cmd c, int indent) {
  while (c->kind == CmdKind::Seq) {
    print_stmt(out, c->a, indent);
    c = c->b;
  }
  print_stmt(out, c, indent);
}

inline void print_inline(std::string& out, Cmd c) {
  switch (c->kind) {
    case CmdKind::Assign:
      out += c->var + " := " + to_string(c->expr);
      break;
    case CmdKind::Assume: out += "assume " + to_string(c->expr); break;
    case CmdKind::Assert: out += "assert " + to_string(c->expr); break;
    case CmdKind::If:
      out += "if (" + to_string(c->expr) + ") { ";
      print_inline(out, c->a);
      out += " } else { ";
      print_inline(out, c->b);
      out += " }";
      break;
    case CmdKind::While:
      out += "while (" + to_string(c->expr) + ") { ";
      print_inline(out, c->a);
      out += " }";
      break;
    case CmdKind::Fork:
      out += "fork " + to_string(c->expr) + " " + c->target + "()";
      break;
    case CmdKind::Join: out += "join " + to_string(c->expr); break;
    case CmdKind::Seq:
      print_inline(out, c->a);
      out += "; ";
      print_inline(out, c->b);
      break;
  }
}

}  // namespace detail

// Multi-line rendering at the given indent depth, one statement per line.
inline std::string to_block_string(Cmd c, int indent = 0) {
  std::string out;
  detail::print_block(out, c, indent);
  return out;
}

// Single-line rendering, used in place names and traces.
inline std::string to_inline_string(Cmd c) {
  std::string out;
  detail::print_inline(out, c);
  return out;
}

inline std::string to_string(const Remainder& r) {
  switch (r.tag) {
    case Remainder::Tag::Done: return "<done>";
    case Remainder::Tag::Failed: return "<failed>";
    case Remainder::Tag::Cmd: return to_inline_string(r.cmd);
  }
  return "?";
}

}  // namespace fkj

template <>
struct std::hash<fkj::Remainder> {
  std::size_t operator()(const fkj::Remainder& r) const { return r.hash(); }
};
