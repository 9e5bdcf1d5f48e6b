#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fkj/program.hpp"

namespace fkj {

// Hand-written lexer and recursive-descent parser for the surface syntax:
//
//   program := decl*
//   decl    := "globals" ident ("," ident)* ";" | "main" block
//            | "thread" ident block
//   block   := "{" cmd* "}"
//   cmd     := ident ":=" expr ";" | ident "[" expr "]" ":=" expr ";"
//            | "assume" expr ";" | "assert" expr ";"
//            | "if" "(" expr ")" block ("else" block)?
//            | "while" "(" expr ")" block
//            | "fork" expr ident "(" ")" ";" | "join" expr ";"
//
// Expressions use C-like precedence: || < && < comparisons < +,- < * <
// unary !,- < postfix [] . "store(a, i, v)" and "select(a, i)" are primary
// forms. "//" starts a line comment. An omitted else branch is filled with
// "assume true;", as is an empty block.

struct ParseResult {
  std::optional<Program> program;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return program.has_value() && diagnostics.empty(); }
};

namespace detail {

enum class Tok : uint8_t {
  End,
  Ident,
  Number,
  KwGlobals,
  KwMain,
  KwThread,
  KwAssume,
  KwAssert,
  KwIf,
  KwElse,
  KwWhile,
  KwFork,
  KwJoin,
  KwTrue,
  KwFalse,
  KwStore,
  KwSelect,
  LBrace,
  RBrace,
  LParen,
  RParen,
  LBracket,
  RBracket,
  Semi,
  Comma,
  Walrus,  // :=
  Bang,
  EqEq,
  NotEq,
  Le,
  Ge,
  Lt,
  Gt,
  Plus,
  Minus,
  Star,
  AndAnd,
  OrOr,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  Int number;
  SourceSpan span;
};

class Lexer {
 public:
  Lexer(std::string_view src, std::vector<Diagnostic>& diags)
      : src_(src), diags_(diags) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '\n') {
        advance();
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
        continue;
      }
      if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        out.push_back(ident());
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c))) {
        out.push_back(number());
        continue;
      }
      out.push_back(symbol());
    }
    Token end;
    end.span = here(0);
    out.push_back(end);
    return out;
  }

 private:
  SourceSpan here(size_t len) const {
    SourceSpan s;
    s.line = line_;
    s.col = col_;
    s.end_line = line_;
    s.end_col = col_ + static_cast<uint32_t>(len);
    return s;
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  Token ident() {
    size_t start = pos_;
    SourceSpan span = here(0);
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
            src_[pos_] == '_'))
      advance();
    span.end_col = col_;
    std::string text(src_.substr(start, pos_ - start));
    Token t;
    t.text = text;
    t.span = span;
    if (text == "globals") t.kind = Tok::KwGlobals;
    else if (text == "main") t.kind = Tok::KwMain;
    else if (text == "thread") t.kind = Tok::KwThread;
    else if (text == "assume") t.kind = Tok::KwAssume;
    else if (text == "assert") t.kind = Tok::KwAssert;
    else if (text == "if") t.kind = Tok::KwIf;
    else if (text == "else") t.kind = Tok::KwElse;
    else if (text == "while") t.kind = Tok::KwWhile;
    else if (text == "fork") t.kind = Tok::KwFork;
    else if (text == "join") t.kind = Tok::KwJoin;
    else if (text == "true") t.kind = Tok::KwTrue;
    else if (text == "false") t.kind = Tok::KwFalse;
    else if (text == "store") t.kind = Tok::KwStore;
    else if (text == "select") t.kind = Tok::KwSelect;
    else t.kind = Tok::Ident;
    return t;
  }

  Token number() {
    size_t start = pos_;
    SourceSpan span = here(0);
    while (pos_ < src_.size() &&
           std::isdigit(static_cast<unsigned char>(src_[pos_])))
      advance();
    span.end_col = col_;
    Token t;
    t.kind = Tok::Number;
    t.text = std::string(src_.substr(start, pos_ - start));
    t.number = Int(t.text);
    t.span = span;
    return t;
  }

  Token symbol() {
    auto two = [&](char a, char b) {
      return src_[pos_] == a && pos_ + 1 < src_.size() && src_[pos_ + 1] == b;
    };
    Token t;
    if (two(':', '=')) t.kind = Tok::Walrus;
    else if (two('=', '=')) t.kind = Tok::EqEq;
    else if (two('!', '=')) t.kind = Tok::NotEq;
    else if (two('<', '=')) t.kind = Tok::Le;
    else if (two('>', '=')) t.kind = Tok::Ge;
    else if (two('&', '&')) t.kind = Tok::AndAnd;
    else if (two('|', '|')) t.kind = Tok::OrOr;
    else {
      switch (src_[pos_]) {
        case '{': t.kind = Tok::LBrace; break;
        case '}': t.kind = Tok::RBrace; break;
        case '(': t.kind = Tok::LParen; break;
        case ')': t.kind = Tok::RParen; break;
        case '[': t.kind = Tok::LBracket; break;
        case ']': t.kind = Tok::RBracket; break;
        case ';': t.kind = Tok::Semi; break;
        case ',': t.kind = Tok::Comma; break;
        case '!': t.kind = Tok::Bang; break;
        case '<': t.kind = Tok::Lt; break;
        case '>': t.kind = Tok::Gt; break;
        case '+': t.kind = Tok::Plus; break;
        case '-': t.kind = Tok::Minus; break;
        case '*': t.kind = Tok::Star; break;
        default: {
          t.span = here(1);
          diags_.push_back({std::string("unexpected character '") +
                                src_[pos_] + "'",
                            t.span});
          advance();
          t.kind = Tok::End;  // placeholder, dropped by caller check below
          t.text = "?";
          return t;
        }
      }
      t.span = here(1);
      advance();
      return t;
    }
    t.span = here(2);
    advance();
    advance();
    return t;
  }

  std::string_view src_;
  std::vector<Diagnostic>& diags_;
  size_t pos_ = 0;
  uint32_t line_ = 1;
  uint32_t col_ = 1;
};

class Parser {
 public:
  Parser(std::vector<Token> toks, std::vector<Diagnostic>& diags)
      : toks_(std::move(toks)), diags_(diags) {}

  Program run() {
    Program p;
    while (!at(Tok::End)) {
      if (at(Tok::KwGlobals)) {
        next();
        do {
          if (!at(Tok::Ident)) {
            error("expected variable name in globals declaration");
            break;
          }
          p.globals.push_back(cur().text);
          next();
        } while (eat(Tok::Comma));
        expect(Tok::Semi, "';'");
      } else if (at(Tok::KwMain)) {
        SourceSpan sp = cur().span;
        next();
        p.templates.emplace_back("main", block(sp));
      } else if (at(Tok::KwThread)) {
        next();
        std::string name = "?";
        SourceSpan sp = cur().span;
        if (at(Tok::Ident)) {
          name = cur().text;
          next();
        } else {
          error("expected template name after 'thread'");
        }
        p.templates.emplace_back(name, block(sp));
      } else {
        error("expected 'globals', 'main', or 'thread'");
        next();
      }
    }
    return p;
  }

 private:
  static constexpr int kMaxDepth = 200;

  const Token& cur() const { return toks_[idx_]; }
  bool at(Tok k) const { return cur().kind == k; }
  void next() {
    if (idx_ + 1 < toks_.size()) ++idx_;
  }
  bool eat(Tok k) {
    if (!at(k)) return false;
    next();
    return true;
  }
  void expect(Tok k, const char* what) {
    if (!eat(k)) error(std::string("expected ") + what);
  }
  void error(std::string msg) {
    diags_.push_back({std::move(msg), cur().span});
  }

  // Skip to a statement boundary after an error.
  void sync_stmt() {
    while (!at(Tok::End) && !at(Tok::RBrace)) {
      if (eat(Tok::Semi)) return;
      next();
    }
  }

  Cmd block(SourceSpan open) {
    ++depth_;
    if (depth_ > kMaxDepth) {
      error("nesting too deep");
      // Unwind without consuming further so the caller's recovery runs.
      --depth_;
      return make_assume(sbool(true, open), open);
    }
    expect(Tok::LBrace, "'{'");
    std::vector<Cmd> cmds;
    while (!at(Tok::RBrace) && !at(Tok::End)) {
      size_t before = idx_;
      if (Cmd c = statement()) cmds.push_back(c);
      if (idx_ == before) next();  // always make progress
    }
    SourceSpan close = cur().span;
    expect(Tok::RBrace, "'}'");
    --depth_;
    if (cmds.empty()) return make_assume(sbool(true, open), cover(open, close));
    Cmd out = cmds.back();
    for (size_t i = cmds.size() - 1; i-- > 0;) out = make_seq(cmds[i], out);
    return out;
  }

  Cmd statement() {
    SourceSpan sp = cur().span;
    switch (cur().kind) {
      case Tok::Ident: {
        std::string name = cur().text;
        next();
        if (eat(Tok::LBracket)) {
          SExpr idx = expression();
          expect(Tok::RBracket, "']'");
          expect(Tok::Walrus, "':='");
          SExpr val = expression();
          SourceSpan end = cur().span;
          expect(Tok::Semi, "';'");
          SourceSpan full = cover(sp, end);
          // a[i] := v  desugars to  a := store(a, i, v)
          return make_assign(
              name, make_store(svar(name, sp), idx, val, full), full);
        }
        expect(Tok::Walrus, "':='");
        SExpr rhs = expression();
        SourceSpan end = cur().span;
        expect(Tok::Semi, "';'");
        return make_assign(name, rhs, cover(sp, end));
      }
      case Tok::KwAssume: {
        next();
        SExpr g = expression();
        SourceSpan end = cur().span;
        expect(Tok::Semi, "';'");
        return make_assume(g, cover(sp, end));
      }
      case Tok::KwAssert: {
        next();
        SExpr g = expression();
        SourceSpan end = cur().span;
        expect(Tok::Semi, "';'");
        return make_assert(g, cover(sp, end));
      }
      case Tok::KwIf: {
        next();
        expect(Tok::LParen, "'('");
        SExpr g = expression();
        expect(Tok::RParen, "')'");
        Cmd then_branch = block(sp);
        Cmd else_branch = eat(Tok::KwElse) ? block(sp)
                                           : make_assume(sbool(true, sp), sp);
        return make_if(g, then_branch, else_branch, sp);
      }
      case Tok::KwWhile: {
        next();
        expect(Tok::LParen, "'('");
        SExpr g = expression();
        expect(Tok::RParen, "')'");
        Cmd body = block(sp);
        return make_while(g, body, sp);
      }
      case Tok::KwFork: {
        next();
        SExpr id = expression();
        std::string target = "?";
        if (at(Tok::Ident)) {
          target = cur().text;
          next();
        } else {
          error("expected template name in fork");
          sync_stmt();
          return nullptr;
        }
        expect(Tok::LParen, "'('");
        expect(Tok::RParen, "')'");
        SourceSpan end = cur().span;
        expect(Tok::Semi, "';'");
        return make_fork(id, target, cover(sp, end));
      }
      case Tok::KwJoin: {
        next();
        SExpr id = expression();
        SourceSpan end = cur().span;
        expect(Tok::Semi, "';'");
        return make_join(id, cover(sp, end));
      }
      default:
        error("expected a statement");
        sync_stmt();
        return nullptr;
    }
  }

  SExpr expression() { return or_expr(); }

  SExpr or_expr() {
    SExpr e = and_expr();
    while (at(Tok::OrOr)) {
      SourceSpan sp = cur().span;
      next();
      e = make_binary(ExprOp::Or, e, and_expr(), cover(e->span, sp));
    }
    return e;
  }

  SExpr and_expr() {
    SExpr e = cmp_expr();
    while (at(Tok::AndAnd)) {
      SourceSpan sp = cur().span;
      next();
      e = make_binary(ExprOp::And, e, cmp_expr(), cover(e->span, sp));
    }
    return e;
  }

  SExpr cmp_expr() {
    SExpr e = add_expr();
    for (;;) {
      ExprOp op;
      switch (cur().kind) {
        case Tok::EqEq: op = ExprOp::Eq; break;
        case Tok::NotEq: op = ExprOp::Ne; break;
        case Tok::Lt: op = ExprOp::Lt; break;
        case Tok::Le: op = ExprOp::Le; break;
        case Tok::Gt: op = ExprOp::Gt; break;
        case Tok::Ge: op = ExprOp::Ge; break;
        default: return e;
      }
      SourceSpan sp = cur().span;
      next();
      e = make_binary(op, e, add_expr(), cover(e->span, sp));
    }
  }

  SExpr add_expr() {
    SExpr e = mul_expr();
    for (;;) {
      ExprOp op;
      if (at(Tok::Plus)) op = ExprOp::Add;
      else if (at(Tok::Minus)) op = ExprOp::Sub;
      else return e;
      SourceSpan sp = cur().span;
      next();
      e = make_binary(op, e, mul_expr(), cover(e->span, sp));
    }
  }

  SExpr mul_expr() {
    SExpr e = unary_expr();
    while (at(Tok::Star)) {
      SourceSpan sp = cur().span;
      next();
      e = make_binary(ExprOp::Mul, e, unary_expr(), cover(e->span, sp));
    }
    return e;
  }

  SExpr unary_expr() {
    ++depth_;
    if (depth_ > kMaxDepth) {
      error("expression nesting too deep");
      --depth_;
      // Consume one token so the enclosing loops terminate.
      SExpr dead = sint(0, cur().span);
      next();
      return dead;
    }
    SExpr e;
    if (at(Tok::Minus)) {
      SourceSpan sp = cur().span;
      next();
      e = make_unary(ExprOp::Neg, unary_expr(), sp);
    } else if (at(Tok::Bang)) {
      SourceSpan sp = cur().span;
      next();
      e = make_unary(ExprOp::Not, unary_expr(), sp);
    } else {
      e = postfix_expr();
    }
    --depth_;
    return e;
  }

  SExpr postfix_expr() {
    SExpr e = primary();
    while (eat(Tok::LBracket)) {
      SExpr idx = expression();
      expect(Tok::RBracket, "']'");
      e = make_select(e, idx, e->span);
    }
    return e;
  }

  SExpr primary() {
    SourceSpan sp = cur().span;
    switch (cur().kind) {
      case Tok::Number: {
        Int v = cur().number;
        next();
        return sint(std::move(v), sp);
      }
      case Tok::KwTrue: next(); return sbool(true, sp);
      case Tok::KwFalse: next(); return sbool(false, sp);
      case Tok::Ident: {
        std::string name = cur().text;
        next();
        return svar(name, sp);
      }
      case Tok::LParen: {
        next();
        SExpr e = expression();
        expect(Tok::RParen, "')'");
        return e;
      }
      case Tok::KwStore: {
        next();
        expect(Tok::LParen, "'('");
        SExpr a = expression();
        expect(Tok::Comma, "','");
        SExpr i = expression();
        expect(Tok::Comma, "','");
        SExpr v = expression();
        expect(Tok::RParen, "')'");
        return make_store(a, i, v, sp);
      }
      case Tok::KwSelect: {
        next();
        expect(Tok::LParen, "'('");
        SExpr a = expression();
        expect(Tok::Comma, "','");
        SExpr i = expression();
        expect(Tok::RParen, "')'");
        return make_select(a, i, sp);
      }
      default:
        error("expected an expression");
        next();
        return sint(0, sp);
    }
  }

  std::vector<Token> toks_;
  std::vector<Diagnostic>& diags_;
  size_t idx_ = 0;
  int depth_ = 0;
};

}  // namespace detail

// Parses and typechecks. The returned Program is present only when there are
// no diagnostics at all.
inline ParseResult parse_program(std::string_view source) {
  ParseResult res;
  detail::Lexer lexer(source, res.diagnostics);
  std::vector<detail::Token> toks = lexer.run();
  // Drop placeholder tokens the lexer emitted for bad characters.
  std::vector<detail::Token> clean;
  clean.reserve(toks.size());
  for (size_t i = 0; i + 1 < toks.size(); ++i)
    if (toks[i].kind != detail::Tok::End) clean.push_back(toks[i]);
  clean.push_back(toks.back());
  detail::Parser parser(std::move(clean), res.diagnostics);
  Program p = parser.run();
  if (!res.diagnostics.empty()) return res;
  std::vector<Diagnostic> tc = typecheck(p);
  res.diagnostics.insert(res.diagnostics.end(), tc.begin(), tc.end());
  if (res.diagnostics.empty()) res.program = std::move(p);
  return res;
}

}  // namespace fkj
