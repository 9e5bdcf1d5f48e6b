#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fkj/command.hpp"

namespace fkj {

// Per-variable types plus the variable layout: which names are global and
// which locals occur in each template body. Filled in by typecheck.
struct TypeInfo {
  std::map<std::string, Type> var_types;
  std::set<std::string> globals;
  std::map<std::string, std::vector<std::string>> locals_by_template;

  Type type_of(const std::string& v) const {
    auto it = var_types.find(v);
    if (it == var_types.end())
      throw internal_error("type_of: unknown variable " + v);
    return it->second;
  }
  bool is_global(const std::string& v) const { return globals.count(v) > 0; }
  const std::vector<std::string>& locals_of(const std::string& tmpl) const {
    static const std::vector<std::string> none;
    auto it = locals_by_template.find(tmpl);
    return it == locals_by_template.end() ? none : it->second;
  }
};

// A program is a set of named thread templates with one distinguished entry
// template "main", plus the list of globally shared variables. Variables are
// implicitly declared by use; any name not in the globals list is local to
// the thread using it.
struct Program {
  std::vector<std::string> globals;                     // declaration order
  std::vector<std::pair<std::string, Cmd>> templates;   // declaration order
  TypeInfo info;

  Cmd body(const std::string& tmpl) const {
    for (const auto& [name, cmd] : templates)
      if (name == tmpl) return cmd;
    return nullptr;
  }
  bool has_template(const std::string& tmpl) const {
    return body(tmpl) != nullptr;
  }
};

namespace detail {

// Union-find over variable names with an optional ground type per class.
class TypeSolver {
 public:
  explicit TypeSolver(std::vector<Diagnostic>& diags) : diags_(diags) {}

  void bind(const std::string& v, Type t, SourceSpan span) {
    const std::string& r = find(v);
    auto it = bound_.find(r);
    if (it == bound_.end()) {
      bound_.emplace(r, t);
    } else if (it->second != t) {
      diags_.push_back({"variable '" + v + "' is used both as " +
                            std::string(to_string(it->second)) + " and as " +
                            std::string(to_string(t)),
                        span});
    }
  }

  void unite(const std::string& a, const std::string& b, SourceSpan span) {
    std::string ra = find(a), rb = find(b);
    if (ra == rb) return;
    auto ia = bound_.find(ra), ib = bound_.find(rb);
    if (ia != bound_.end() && ib != bound_.end() && ia->second != ib->second) {
      diags_.push_back({"variable '" + a + "' (" +
                            std::string(to_string(ia->second)) +
                            ") is assigned from '" + b + "' (" +
                            std::string(to_string(ib->second)) + ")",
                        span});
      return;
    }
    if (ib != bound_.end()) bound_.emplace(ra, ib->second);
    parent_[rb] = ra;
    bound_.erase(rb);
  }

  Type resolved(const std::string& v) {
    auto it = bound_.find(find(v));
    return it == bound_.end() ? Type::Int : it->second;
  }

  bool has_binding(const std::string& v) {
    return bound_.count(find(v)) > 0;
  }

 private:
  const std::string& find(const std::string& v) {
    auto it = parent_.find(v);
    if (it == parent_.end()) {
      parent_.emplace(v, v);
      return parent_.find(v)->first;
    }
    if (it->second == v) return it->second;
    const std::string& root = find(it->second);
    it->second = root;
    return root;
  }

  std::map<std::string, std::string> parent_;
  std::map<std::string, Type> bound_;
  std::vector<Diagnostic>& diags_;
};

class TypeChecker {
 public:
  TypeChecker(const Program& p, std::vector<Diagnostic>& diags)
      : prog_(p), diags_(diags), solver_(diags) {}

  void run() {
    check_structure();
    for (const auto& [name, body] : prog_.templates) visit(body);
  }

  TypeInfo build_info() {
    TypeInfo info;
    for (const auto& g : prog_.globals) {
      info.globals.insert(g);
      info.var_types[g] = solver_.resolved(g);
    }
    for (const auto& [name, body] : prog_.templates) {
      std::set<std::string> seen;
      collect_vars(body, seen);
      std::vector<std::string> locals;
      for (const auto& v : seen) {
        info.var_types[v] = solver_.resolved(v);
        if (!info.globals.count(v)) locals.push_back(v);
      }
      std::sort(locals.begin(), locals.end());
      info.locals_by_template[name] = std::move(locals);
    }
    return info;
  }

 private:
  void check_structure() {
    if (!prog_.has_template("main"))
      diags_.push_back({"program has no main template", {}});
    std::set<std::string> names;
    for (const auto& [name, body] : prog_.templates) {
      if (!names.insert(name).second)
        diags_.push_back({"duplicate template '" + name + "'",
                          body ? body->span : SourceSpan{}});
    }
    std::set<std::string> globals;
    for (const auto& g : prog_.globals) {
      if (!globals.insert(g).second)
        diags_.push_back({"duplicate global '" + g + "'", {}});
    }
  }

  void collect_vars(Cmd c, std::set<std::string>& out) {
    if (!c) return;
    if (c->kind == CmdKind::Assign) out.insert(c->var);
    if (c->expr) for_each_var(c->expr, [&](const std::string& v) { out.insert(v); });
    collect_vars(c->a, out);
    collect_vars(c->b, out);
  }

  void constrain(SExpr e, Type want) {
    switch (e->op) {
      case ExprOp::IntLit:
        if (want != Type::Int) mismatch(e, want, Type::Int);
        break;
      case ExprOp::BoolLit:
        if (want != Type::Bool) mismatch(e, want, Type::Bool);
        break;
      case ExprOp::Var: solver_.bind(e->var, want, e->span); break;
      case ExprOp::Neg:
        if (want != Type::Int) mismatch(e, want, Type::Int);
        constrain(e->a, Type::Int);
        break;
      case ExprOp::Not:
        if (want != Type::Bool) mismatch(e, want, Type::Bool);
        constrain(e->a, Type::Bool);
        break;
      case ExprOp::Add:
      case ExprOp::Sub:
      case ExprOp::Mul:
        if (want != Type::Int) mismatch(e, want, Type::Int);
        constrain(e->a, Type::Int);
        constrain(e->b, Type::Int);
        break;
      case ExprOp::Eq:
      case ExprOp::Ne:
      case ExprOp::Lt:
      case ExprOp::Le:
      case ExprOp::Gt:
      case ExprOp::Ge:
        if (want != Type::Bool) mismatch(e, want, Type::Bool);
        constrain(e->a, Type::Int);
        constrain(e->b, Type::Int);
        break;
      case ExprOp::And:
      case ExprOp::Or:
        if (want != Type::Bool) mismatch(e, want, Type::Bool);
        constrain(e->a, Type::Bool);
        constrain(e->b, Type::Bool);
        break;
      case ExprOp::Select:
        if (want != Type::Int) mismatch(e, want, Type::Int);
        constrain(e->a, Type::Array);
        constrain(e->b, Type::Int);
        break;
      case ExprOp::Store:
        if (want != Type::Array) mismatch(e, want, Type::Array);
        constrain(e->a, Type::Array);
        constrain(e->b, Type::Int);
        constrain(e->c, Type::Int);
        break;
    }
  }

  void mismatch(SExpr e, Type want, Type got) {
    diags_.push_back({"expression has type " + std::string(to_string(got)) +
                          " but " + std::string(to_string(want)) +
                          " is required",
                      e->span});
  }

  void visit(Cmd c) {
    switch (c->kind) {
      case CmdKind::Assign:
        if (c->expr->op == ExprOp::Var) {
          if (solver_.has_binding(c->expr->var)) {
            solver_.bind(c->var, solver_.resolved(c->expr->var), c->span);
          } else if (solver_.has_binding(c->var)) {
            solver_.bind(c->expr->var, solver_.resolved(c->var), c->span);
          } else {
            solver_.unite(c->var, c->expr->var, c->span);
          }
        } else {
          Type t = shape_type(c->expr);
          solver_.bind(c->var, t, c->span);
          constrain(c->expr, t);
        }
        break;
      case CmdKind::Assume:
      case CmdKind::Assert: constrain(c->expr, Type::Bool); break;
      case CmdKind::If:
      case CmdKind::While:
        constrain(c->expr, Type::Bool);
        visit(c->a);
        if (c->b) visit(c->b);
        break;
      case CmdKind::Fork:
        constrain(c->expr, Type::Int);
        if (!prog_.has_template(c->target))
          diags_.push_back(
              {"fork targets unknown template '" + c->target + "'", c->span});
        break;
      case CmdKind::Join: constrain(c->expr, Type::Int); break;
      case CmdKind::Seq:
        visit(c->a);
        visit(c->b);
        break;
    }
  }

  // The type an expression's outermost operator dictates; variables have no
  // inherent shape and fall back to whatever the solver already knows.
  Type shape_type(SExpr e) {
    switch (e->op) {
      case ExprOp::BoolLit:
      case ExprOp::Not:
      case ExprOp::Eq:
      case ExprOp::Ne:
      case ExprOp::Lt:
      case ExprOp::Le:
      case ExprOp::Gt:
      case ExprOp::Ge:
      case ExprOp::And:
      case ExprOp::Or: return Type::Bool;
      case ExprOp::Store: return Type::Array;
      case ExprOp::Var: return solver_.resolved(e->var);
      default: return Type::Int;
    }
  }

  const Program& prog_;
  std::vector<Diagnostic>& diags_;
  TypeSolver solver_;
};

}  // namespace detail

// Validates the program and fills p.info. Returns all found problems; the
// info is only meaningful when the result is empty.
inline std::vector<Diagnostic> typecheck(Program& p) {
  std::vector<Diagnostic> diags;
  detail::TypeChecker tc(p, diags);
  tc.run();
  if (diags.empty()) p.info = tc.build_info();
  return diags;
}

// Canonical program text; parse of the output yields a structurally
// identical program.
inline std::string to_string(const Program& p) {
  std::string out;
  if (!p.globals.empty()) {
    out += "globals ";
    for (size_t i = 0; i < p.globals.size(); ++i) {
      if (i) out += ", ";
      out += p.globals[i];
    }
    out += ";\n\n";
  }
  for (const auto& [name, body] : p.templates) {
    out += name == "main" ? "main {\n" : "thread " + name + " {\n";
    out += to_block_string(body, 1);
    out += "}\n\n";
  }
  if (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

}  // namespace fkj
