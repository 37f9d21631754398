#include "hinet/value.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace hinet {

const char* value_kind_name(ValueKind kind) {
  switch (kind) {
    case ValueKind::Bool: return "Bool";
    case ValueKind::Int: return "Int";
    case ValueKind::Real: return "Real";
    case ValueKind::Text: return "Text";
    case ValueKind::List: return "List";
  }
  return "?";
}

const char* cmp_name(Cmp cmp) {
  switch (cmp) {
    case Cmp::Eq: return "==";
    case Cmp::Ne: return "!=";
    case Cmp::Lt: return "<";
    case Cmp::Le: return "<=";
    case Cmp::Gt: return ">";
    case Cmp::Ge: return ">=";
  }
  return "?";
}

Value Value::boolean(bool b) {
  Value v;
  v.kind_ = ValueKind::Bool;
  v.bool_ = b;
  return v;
}

Value Value::integer(std::int64_t i) {
  Value v;
  v.kind_ = ValueKind::Int;
  v.int_ = i;
  return v;
}

Value Value::real(double r) {
  Value v;
  v.kind_ = ValueKind::Real;
  v.real_ = r;
  return v;
}

Value Value::text(std::string t) {
  Value v;
  v.kind_ = ValueKind::Text;
  v.text_ = std::move(t);
  return v;
}

Value Value::list(ValueKind element_kind, std::vector<Value> items,
                  bool ordered) {
  if (element_kind == ValueKind::List)
    raise(ErrorCode::KindMismatch, "nested lists are not supported");
  for (const Value& item : items) {
    if (item.kind() != element_kind)
      raise(ErrorCode::KindMismatch,
            std::string("list element kind ") + value_kind_name(item.kind()) +
                " does not match declared " + value_kind_name(element_kind));
  }
  Value v;
  v.kind_ = ValueKind::List;
  v.list_ = std::move(items);
  v.element_kind_ = element_kind;
  v.ordered_ = ordered;
  return v;
}

bool Value::as_bool() const {
  if (kind_ != ValueKind::Bool)
    raise(ErrorCode::KindMismatch, "value is not Bool");
  return bool_;
}

std::int64_t Value::as_int() const {
  if (kind_ != ValueKind::Int)
    raise(ErrorCode::KindMismatch, "value is not Int");
  return int_;
}

double Value::as_real() const {
  if (kind_ == ValueKind::Real) return real_;
  if (kind_ == ValueKind::Int) return static_cast<double>(int_);
  raise(ErrorCode::KindMismatch, "value is not numeric");
}

const std::string& Value::as_text() const {
  if (kind_ != ValueKind::Text)
    raise(ErrorCode::KindMismatch, "value is not Text");
  return text_;
}

const std::vector<Value>& Value::items() const {
  if (kind_ != ValueKind::List)
    raise(ErrorCode::KindMismatch, "value is not a List");
  return list_;
}

ValueKind Value::element_kind() const {
  if (kind_ != ValueKind::List)
    raise(ErrorCode::KindMismatch, "value is not a List");
  return element_kind_;
}

bool Value::equals(const Value& other) const {
  if (is_numeric() && other.is_numeric()) {
    if (kind_ == ValueKind::Int && other.kind_ == ValueKind::Int)
      return int_ == other.int_;
    return as_real() == other.as_real();
  }
  if (kind_ != other.kind_) return false;
  switch (kind_) {
    case ValueKind::Bool: return bool_ == other.bool_;
    case ValueKind::Text: return text_ == other.text_;
    case ValueKind::List: {
      if (list_.size() != other.list_.size()) return false;
      for (std::size_t i = 0; i < list_.size(); ++i)
        if (!list_[i].equals(other.list_[i])) return false;
      return true;
    }
    default: return false;
  }
}

bool Value::strict_equals(const Value& other) const {
  if (kind_ != other.kind_) return false;
  switch (kind_) {
    case ValueKind::Bool: return bool_ == other.bool_;
    case ValueKind::Int: return int_ == other.int_;
    case ValueKind::Real: return real_ == other.real_;
    case ValueKind::Text: return text_ == other.text_;
    case ValueKind::List: {
      if (element_kind_ != other.element_kind_ || ordered_ != other.ordered_ ||
          list_.size() != other.list_.size())
        return false;
      for (std::size_t i = 0; i < list_.size(); ++i)
        if (!list_[i].strict_equals(other.list_[i])) return false;
      return true;
    }
  }
  return false;
}

std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string out(buf, end);
  if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
  return out;
}

std::string Value::to_display() const {
  switch (kind_) {
    case ValueKind::Bool: return bool_ ? "true" : "false";
    case ValueKind::Int: return std::to_string(int_);
    case ValueKind::Real: return format_real(real_);
    case ValueKind::Text: return text_;
    case ValueKind::List: {
      std::string out;
      for (std::size_t i = 0; i < list_.size(); ++i) {
        if (i) out += ';';
        out += list_[i].to_display();
      }
      return out;
    }
  }
  return {};
}

namespace {

int order_of(double diff) { return diff < 0 ? -1 : (diff > 0 ? 1 : 0); }

bool apply_order(Cmp cmp, int ord) {
  switch (cmp) {
    case Cmp::Eq: return ord == 0;
    case Cmp::Ne: return ord != 0;
    case Cmp::Lt: return ord < 0;
    case Cmp::Le: return ord <= 0;
    case Cmp::Gt: return ord > 0;
    case Cmp::Ge: return ord >= 0;
  }
  return false;
}

}  // namespace

bool compare_values(const Value& lhs, Cmp cmp, const Value& rhs) {
  if (lhs.kind() == ValueKind::List) {
    // Membership test: list CMP scalar supports ==/!= only.
    if (rhs.kind() == ValueKind::List)
      raise(ErrorCode::KindMismatch, "cannot compare two lists");
    if (cmp != Cmp::Eq && cmp != Cmp::Ne)
      raise(ErrorCode::KindMismatch,
            "lists support only ==/!= (membership) comparisons");
    bool found = std::any_of(lhs.items().begin(), lhs.items().end(),
                             [&](const Value& v) { return v.equals(rhs); });
    return cmp == Cmp::Eq ? found : !found;
  }
  if (rhs.kind() == ValueKind::List)
    raise(ErrorCode::KindMismatch, "scalar vs list comparison");
  if (lhs.is_numeric() && rhs.is_numeric()) {
    if (lhs.kind() == ValueKind::Int && rhs.kind() == ValueKind::Int) {
      std::int64_t a = lhs.as_int(), b = rhs.as_int();
      return apply_order(cmp, a < b ? -1 : (a > b ? 1 : 0));
    }
    double a = lhs.as_real(), b = rhs.as_real();
    return apply_order(cmp, order_of(a - b));
  }
  if (lhs.kind() == ValueKind::Text && rhs.kind() == ValueKind::Text) {
    int ord = lhs.as_text().compare(rhs.as_text());
    return apply_order(cmp, ord < 0 ? -1 : (ord > 0 ? 1 : 0));
  }
  if (lhs.kind() == ValueKind::Bool && rhs.kind() == ValueKind::Bool) {
    if (cmp != Cmp::Eq && cmp != Cmp::Ne)
      raise(ErrorCode::KindMismatch, "Bool supports only ==/!=");
    return cmp == Cmp::Eq ? lhs.as_bool() == rhs.as_bool()
                          : lhs.as_bool() != rhs.as_bool();
  }
  raise(ErrorCode::KindMismatch,
        std::string("cannot compare ") + value_kind_name(lhs.kind()) +
            " with " + value_kind_name(rhs.kind()));
}

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::UnknownNodeType: return "UnknownNodeType";
    case ErrorCode::UnknownEdgeType: return "UnknownEdgeType";
    case ErrorCode::UnknownProperty: return "UnknownProperty";
    case ErrorCode::UnknownSensor: return "UnknownSensor";
    case ErrorCode::KindMismatch: return "KindMismatch";
    case ErrorCode::ModeMismatch: return "ModeMismatch";
    case ErrorCode::SignatureMismatch: return "SignatureMismatch";
    case ErrorCode::SchemaFrozen: return "SchemaFrozen";
    case ErrorCode::SchemaNotFrozen: return "SchemaNotFrozen";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::DuplicateInstanceId: return "DuplicateInstanceId";
    case ErrorCode::GenerationDepthExceeded: return "GenerationDepthExceeded";
    case ErrorCode::OwnerMismatch: return "OwnerMismatch";
    case ErrorCode::SensorFailure: return "SensorFailure";
    case ErrorCode::UnknownInstance: return "UnknownInstance";
    case ErrorCode::EmptyAggregate: return "EmptyAggregate";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::PlanError: return "PlanError";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::EmptyTestSet: return "EmptyTestSet";
    case ErrorCode::DuplicateParameter: return "DuplicateParameter";
    case ErrorCode::EmptyFamily: return "EmptyFamily";
    case ErrorCode::UnboundVariable: return "UnboundVariable";
    case ErrorCode::UntrainedClassifier: return "UntrainedClassifier";
    case ErrorCode::RaggedRow: return "RaggedRow";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::ParseFailure: return "ParseFailure";
    case ErrorCode::ParameterOutOfRange: return "ParameterOutOfRange";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Error";
}

}  // namespace hinet
