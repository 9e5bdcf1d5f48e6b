#pragma once

#include <cstddef>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fkj {

// Raised on broken internal invariants and contract violations (firing a
// disabled transition, evaluating an ill-typed expression, ...). User-input
// problems are reported as Diagnostic values instead.
struct internal_error : std::logic_error {
  using std::logic_error::logic_error;
};

// Half-open source range, 1-based. Line 0 means "no location" (synthesized
// nodes). Spans are advisory metadata: structurally equal AST nodes are
// shared, and the span of the first construction wins.
struct SourceSpan {
  uint32_t line = 0;
  uint32_t col = 0;
  uint32_t end_line = 0;
  uint32_t end_col = 0;

  bool known() const { return line != 0; }
};

inline SourceSpan cover(SourceSpan a, SourceSpan b) {
  if (!a.known()) return b;
  if (!b.known()) return a;
  SourceSpan s = a;
  if (b.line < s.line || (b.line == s.line && b.col < s.col)) {
    s.line = b.line;
    s.col = b.col;
  }
  if (b.end_line > s.end_line ||
      (b.end_line == s.end_line && b.end_col > s.end_col)) {
    s.end_line = b.end_line;
    s.end_col = b.end_col;
  }
  return s;
}

struct Diagnostic {
  std::string message;
  SourceSpan span;
};

inline std::string to_string(const Diagnostic& d) {
  std::ostringstream os;
  if (d.span.known()) os << d.span.line << ":" << d.span.col << ": ";
  os << d.message;
  return os.str();
}

inline std::string render_diagnostics(const std::vector<Diagnostic>& ds) {
  std::string out;
  for (const auto& d : ds) {
    out += to_string(d);
    out += '\n';
  }
  return out;
}

namespace detail {

inline void hash_combine(std::size_t& h, std::size_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
}

inline std::size_t hash_all() { return 0x84222325ULL; }

template <typename T, typename... Rest>
std::size_t hash_all(const T& t, const Rest&... rest) {
  std::size_t h = hash_all(rest...);
  hash_combine(h, std::hash<T>{}(t));
  return h;
}

}  // namespace detail

}  // namespace fkj
