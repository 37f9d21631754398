#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hinet/errors.hpp"

namespace hinet {

enum class ValueKind : std::uint8_t { Bool, Int, Real, Text, List };

const char* value_kind_name(ValueKind kind);

// Scalar value or one-level homogeneous list. Lists carry an `ordered` flag;
// nested lists are rejected at construction.
class Value {
 public:
  Value() : kind_(ValueKind::Int), int_(0) {}

  static Value boolean(bool b);
  static Value integer(std::int64_t i);
  static Value real(double r);
  static Value text(std::string t);
  static Value list(ValueKind element_kind, std::vector<Value> items,
                    bool ordered = false);

  ValueKind kind() const { return kind_; }
  bool is_numeric() const {
    return kind_ == ValueKind::Int || kind_ == ValueKind::Real;
  }
  bool is_scalar() const { return kind_ != ValueKind::List; }

  bool as_bool() const;
  std::int64_t as_int() const;
  double as_real() const;  // Int promotes to Real
  const std::string& as_text() const;
  const std::vector<Value>& items() const;
  ValueKind element_kind() const;
  bool ordered() const { return ordered_; }

  // Equality with Int/Real promotion; lists compare element-wise.
  bool equals(const Value& other) const;
  // Strict structural equality (kind must match exactly). Used by plan
  // comparison and round-trip tests.
  bool strict_equals(const Value& other) const;

  // Display form: Bool -> true/false, Real -> shortest round-trip decimal,
  // lists joined with ';'.
  std::string to_display() const;

 private:
  ValueKind kind_;
  bool bool_ = false;
  std::int64_t int_ = 0;
  double real_ = 0.0;
  std::string text_;
  std::vector<Value> list_;
  ValueKind element_kind_ = ValueKind::Text;
  bool ordered_ = false;
};

enum class Cmp { Eq, Ne, Lt, Le, Gt, Ge };

const char* cmp_name(Cmp cmp);

// Evaluates `lhs CMP rhs` with numeric promotion. Text compares
// lexicographically, Bool supports only Eq/Ne. A list lhs with a scalar rhs
// turns Eq/Ne into membership tests. Kind-incompatible pairs raise
// KindMismatch.
bool compare_values(const Value& lhs, Cmp cmp, const Value& rhs);

// Shortest round-trip formatting of a double; integral results keep a ".0"
// suffix so they re-lex as reals.
std::string format_real(double v);

}  // namespace hinet
