#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <map>
#include <string>
#include <variant>

#include "fkj/source.hpp"

namespace fkj {

// Arbitrary-precision integer; the language has no machine-width semantics.
using Int = boost::multiprecision::cpp_int;

enum class Type : uint8_t { Int, Bool, Array };

inline const char* to_string(Type t) {
  switch (t) {
    case Type::Int: return "int";
    case Type::Bool: return "bool";
    case Type::Array: return "int array";
  }
  return "?";
}

// Total map int -> int with a default. INVARIANT: no stored entry equals the
// default, so structural equality coincides with extensional equality.
struct ArrayValue {
  Int def = 0;
  std::map<Int, Int> entries;

  friend bool operator==(const ArrayValue& a, const ArrayValue& b) = default;
  friend bool operator<(const ArrayValue& a, const ArrayValue& b) {
    if (a.def != b.def) return a.def < b.def;
    return a.entries < b.entries;
  }
};

class Value {
 public:
  Value() : v_(Int(0)) {}

  static Value of_int(Int i) { return Value(std::move(i)); }
  static Value of_bool(bool b) {
    Value v;
    v.v_ = b;
    return v;
  }
  static Value of_array(ArrayValue a) {
    Value v;
    v.v_ = std::move(a);
    return v;
  }
  static Value zero(Type t) {
    switch (t) {
      case Type::Int: return of_int(0);
      case Type::Bool: return of_bool(false);
      case Type::Array: return of_array({});
    }
    throw internal_error("Value::zero: bad type");
  }

  Type type() const {
    switch (v_.index()) {
      case 0: return Type::Int;
      case 1: return Type::Bool;
      default: return Type::Array;
    }
  }

  const Int& as_int() const {
    if (auto* p = std::get_if<Int>(&v_)) return *p;
    throw internal_error("value is not an int");
  }
  bool as_bool() const {
    if (auto* p = std::get_if<bool>(&v_)) return *p;
    throw internal_error("value is not a bool");
  }
  const ArrayValue& as_array() const {
    if (auto* p = std::get_if<ArrayValue>(&v_)) return *p;
    throw internal_error("value is not an array");
  }

  Int select(const Int& idx) const {
    const ArrayValue& a = as_array();
    auto it = a.entries.find(idx);
    return it == a.entries.end() ? a.def : it->second;
  }

  Value store(const Int& idx, Int val) const {
    ArrayValue a = as_array();
    if (val == a.def) {
      a.entries.erase(idx);
    } else {
      a.entries[idx] = std::move(val);
    }
    return of_array(std::move(a));
  }

  friend bool operator==(const Value& a, const Value& b) = default;

  // Total order: by type rank, then content. Used for canonical sorting of
  // configurations; unrelated to the language's (int-only) comparisons.
  friend bool operator<(const Value& a, const Value& b) {
    if (a.v_.index() != b.v_.index()) return a.v_.index() < b.v_.index();
    return a.v_ < b.v_;
  }

  std::size_t hash() const {
    std::size_t h = v_.index();
    switch (v_.index()) {
      case 0:
        detail::hash_combine(h, std::hash<Int>{}(std::get<Int>(v_)));
        break;
      case 1:
        detail::hash_combine(h, std::get<bool>(v_) ? 0x9e37u : 0x79b9u);
        break;
      default: {
        const ArrayValue& a = std::get<ArrayValue>(v_);
        detail::hash_combine(h, std::hash<Int>{}(a.def));
        for (const auto& [k, v] : a.entries) {
          detail::hash_combine(h, std::hash<Int>{}(k));
          detail::hash_combine(h, std::hash<Int>{}(v));
        }
        break;
      }
    }
    return h;
  }

  std::string to_string() const {
    switch (v_.index()) {
      case 0: return std::get<Int>(v_).str();
      case 1: return std::get<bool>(v_) ? "true" : "false";
      default: {
        const ArrayValue& a = std::get<ArrayValue>(v_);
        std::string s = "[default " + a.def.str();
        for (const auto& [k, v] : a.entries)
          s += ", " + k.str() + " -> " + v.str();
        s += "]";
        return s;
      }
    }
  }

 private:
  explicit Value(Int i) : v_(std::move(i)) {}
  std::variant<Int, bool, ArrayValue> v_;
};

}  // namespace fkj

template <>
struct std::hash<fkj::Value> {
  std::size_t operator()(const fkj::Value& v) const { return v.hash(); }
};
