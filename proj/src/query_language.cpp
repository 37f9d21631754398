#include "hinet/query_language.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>

namespace hinet {

namespace {

enum class TokenKind {
  Ident,
  IntLit,
  RealLit,
  StringLit,
  Arrow,     // ~>
  Dash,      // -
  LParen,
  RParen,
  LBracket,
  RBracket,
  Comma,
  CmpOp,
  End,
};

struct Token {
  TokenKind kind;
  std::string text;   // ident name, decoded string, number text
  Cmp cmp = Cmp::Eq;  // CmpOp
  std::int64_t int_value = 0;
  double real_value = 0.0;
  TextPosition pos;
};

class Lexer {
 public:
  explicit Lexer(const std::string& text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> tokens;
    while (true) {
      skip_ws();
      Token t = next();
      bool end = t.kind == TokenKind::End;
      tokens.push_back(std::move(t));
      if (end) break;
    }
    return tokens;
  }

 private:
  void skip_ws() {
    while (offset_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[offset_])))
      advance();
  }

  void advance() {
    if (text_[offset_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++offset_;
  }

  TextPosition here() const { return TextPosition{line_, column_, offset_}; }

  char peek(std::size_t ahead = 0) const {
    return offset_ + ahead < text_.size() ? text_[offset_ + ahead] : '\0';
  }

  Token next() {
    TextPosition pos = here();
    if (offset_ >= text_.size()) return Token{TokenKind::End, "", Cmp::Eq, 0, 0, pos};
    char c = peek();
    if (c == '~' && peek(1) == '>') {
      advance();
      advance();
      return Token{TokenKind::Arrow, "~>", Cmp::Eq, 0, 0, pos};
    }
    if (c == '(') { advance(); return Token{TokenKind::LParen, "(", Cmp::Eq, 0, 0, pos}; }
    if (c == ')') { advance(); return Token{TokenKind::RParen, ")", Cmp::Eq, 0, 0, pos}; }
    if (c == '[') { advance(); return Token{TokenKind::LBracket, "[", Cmp::Eq, 0, 0, pos}; }
    if (c == ']') { advance(); return Token{TokenKind::RBracket, "]", Cmp::Eq, 0, 0, pos}; }
    if (c == ',') { advance(); return Token{TokenKind::Comma, ",", Cmp::Eq, 0, 0, pos}; }
    if (c == '=' && peek(1) == '=') { advance(); advance(); return cmp_token(Cmp::Eq, pos); }
    if (c == '!' && peek(1) == '=') { advance(); advance(); return cmp_token(Cmp::Ne, pos); }
    if (c == '<') {
      advance();
      if (peek() == '=') { advance(); return cmp_token(Cmp::Le, pos); }
      return cmp_token(Cmp::Lt, pos);
    }
    if (c == '>') {
      advance();
      if (peek() == '=') { advance(); return cmp_token(Cmp::Ge, pos); }
      return cmp_token(Cmp::Gt, pos);
    }
    if (c == '"') return lex_string(pos);
    if (c == '-') {
      if (std::isdigit(static_cast<unsigned char>(peek(1)))) return lex_number(pos);
      advance();
      return Token{TokenKind::Dash, "-", Cmp::Eq, 0, 0, pos};
    }
    if (std::isdigit(static_cast<unsigned char>(c))) return lex_number(pos);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
      return lex_ident(pos);
    raise(ErrorCode::ParseError,
          std::string("unexpected character '") + c + "'", pos);
  }

  Token cmp_token(Cmp cmp, TextPosition pos) {
    return Token{TokenKind::CmpOp, cmp_name(cmp), cmp, 0, 0, pos};
  }

  Token lex_string(TextPosition pos) {
    advance();  // opening quote
    std::string out;
    while (true) {
      if (offset_ >= text_.size())
        raise(ErrorCode::ParseError, "unterminated string literal", pos);
      char c = peek();
      if (c == '"') {
        advance();
        return Token{TokenKind::StringLit, std::move(out), Cmp::Eq, 0, 0, pos};
      }
      if (c == '\\') {
        advance();
        if (offset_ >= text_.size())
          raise(ErrorCode::ParseError, "unterminated escape", here());
        char esc = peek();
        switch (esc) {
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          default:
            raise(ErrorCode::ParseError,
                  std::string("unknown escape '\\") + esc + "'", here());
        }
        advance();
        continue;
      }
      out += c;
      advance();
    }
  }

  Token lex_number(TextPosition pos) {
    std::size_t start = offset_;
    if (peek() == '-') advance();
    while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
    bool real = false;
    if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
      real = true;
      advance();
      while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
    }
    if (peek() == 'e' || peek() == 'E') {
      std::size_t save_offset = offset_;
      std::size_t save_line = line_, save_column = column_;
      advance();
      if (peek() == '+' || peek() == '-') advance();
      if (std::isdigit(static_cast<unsigned char>(peek()))) {
        real = true;
        while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
      } else {
        // 'e' belongs to a following identifier
        offset_ = save_offset;
        line_ = save_line;
        column_ = save_column;
      }
    }
    std::string text = text_.substr(start, offset_ - start);
    Token t{real ? TokenKind::RealLit : TokenKind::IntLit, text, Cmp::Eq, 0, 0, pos};
    if (real) {
      t.real_value = std::strtod(text.c_str(), nullptr);
    } else {
      auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(),
                                     t.int_value);
      if (ec != std::errc())
        raise(ErrorCode::ParseError, "integer literal out of range", pos);
    }
    return t;
  }

  Token lex_ident(TextPosition pos) {
    std::size_t start = offset_;
    while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')
      advance();
    return Token{TokenKind::Ident, text_.substr(start, offset_ - start),
                 Cmp::Eq, 0, 0, pos};
  }

  const std::string& text_;
  std::size_t offset_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  QueryPlan run() {
    QueryPlan plan;
    plan.source = parse_source();
    while (!at(TokenKind::End)) plan.stages.push_back(parse_stage());
    return plan;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& get() { return tokens_[pos_++]; }
  bool at(TokenKind k) const { return peek().kind == k; }

  const Token& expect(TokenKind k, const char* what) {
    if (!at(k))
      raise(ErrorCode::ParseError,
            std::string("expected ") + what + ", found '" +
                (peek().kind == TokenKind::End ? "end of input" : peek().text) +
                "'",
            peek().pos);
    return get();
  }

  plan::SourceStage parse_source() {
    const Token& name = expect(TokenKind::Ident, "node type name");
    plan::SourceStage src;
    src.node = name.text;
    src.pos = name.pos;
    expect(TokenKind::LParen, "'('");
    if (at(TokenKind::StringLit)) src.instance_id = get().text;
    expect(TokenKind::RParen, "')'");
    return src;
  }

  plan::Stage parse_stage() {
    if (at(TokenKind::Arrow)) {
      TextPosition pos = get().pos;
      plan::TraverseStage t;
      t.pos = pos;
      if (at(TokenKind::Dash)) {
        get();
        t.reverse = true;
      }
      t.edge = expect(TokenKind::Ident, "edge name").text;
      return t;
    }
    const Token& word = expect(TokenKind::Ident, "stage keyword");
    const std::string& kw = word.text;
    if (kw == "prop") {
      plan::PropStage s;
      s.pos = word.pos;
      s.property = expect(TokenKind::Ident, "property name").text;
      return s;
    }
    if (kw == "filter") return parse_filter(word.pos);
    if (kw == "neighborAt" || kw == "neighborWithin")
      return parse_neighbor(kw == "neighborWithin", word.pos);
    if (kw == "path") return parse_path(word.pos);
    if (kw == "groupBy") return parse_group_by(word.pos);
    if (kw == "count") return agg(AggregateFn::Count, word.pos);
    if (kw == "sum") return agg(AggregateFn::Sum, word.pos);
    if (kw == "product") return agg(AggregateFn::Product, word.pos);
    if (kw == "max") return agg(AggregateFn::Max, word.pos);
    if (kw == "min") return agg(AggregateFn::Min, word.pos);
    if (kw == "distinct") return agg(AggregateFn::Distinct, word.pos);
    if (kw == "mkString") {
      expect(TokenKind::LParen, "'('");
      const Token& sep = expect(TokenKind::StringLit, "separator string");
      expect(TokenKind::RParen, "')'");
      plan::AggregateStage s;
      s.fn = AggregateFn::MkString;
      s.separator = sep.text;
      s.pos = word.pos;
      return s;
    }
    raise(ErrorCode::ParseError, "unknown stage '" + kw + "'", word.pos);
  }

  plan::Stage agg(AggregateFn fn, TextPosition pos) {
    plan::AggregateStage s;
    s.fn = fn;
    s.pos = pos;
    return s;
  }

  plan::Stage parse_filter(TextPosition pos) {
    expect(TokenKind::LParen, "'('");
    plan::FilterStage s;
    s.pos = pos;
    s.property = expect(TokenKind::Ident, "property name").text;
    const Token& op = expect(TokenKind::CmpOp, "comparison operator");
    s.cmp = op.cmp;
    s.literal = parse_literal();
    expect(TokenKind::RParen, "')'");
    return s;
  }

  Value parse_literal() {
    if (at(TokenKind::StringLit)) return Value::text(get().text);
    if (at(TokenKind::IntLit)) return Value::integer(get().int_value);
    if (at(TokenKind::RealLit)) return Value::real(get().real_value);
    if (at(TokenKind::Ident)) {
      if (peek().text == "true") { get(); return Value::boolean(true); }
      if (peek().text == "false") { get(); return Value::boolean(false); }
    }
    raise(ErrorCode::ParseError, "expected literal", peek().pos);
  }

  plan::Stage parse_neighbor(bool within, TextPosition pos) {
    expect(TokenKind::LParen, "'('");
    plan::NeighborStage s;
    s.within = within;
    s.pos = pos;
    s.distance = expect(TokenKind::IntLit, "distance").int_value;
    if (at(TokenKind::Comma)) {
      get();
      expect(TokenKind::LBracket, "'['");
      s.edges.push_back(expect(TokenKind::Ident, "edge name").text);
      while (at(TokenKind::Comma)) {
        get();
        s.edges.push_back(expect(TokenKind::Ident, "edge name").text);
      }
      expect(TokenKind::RBracket, "']'");
    }
    expect(TokenKind::RParen, "')'");
    return s;
  }

  plan::Stage parse_path(TextPosition pos) {
    expect(TokenKind::LParen, "'('");
    plan::PathStage s;
    s.pos = pos;
    s.target = expect(TokenKind::StringLit, "target instance id").text;
    if (at(TokenKind::Comma)) {
      get();
      s.max_len = expect(TokenKind::IntLit, "maximum length").int_value;
    }
    expect(TokenKind::RParen, "')'");
    return s;
  }

  plan::Stage parse_group_by(TextPosition pos) {
    expect(TokenKind::LParen, "'('");
    plan::GroupByStage s;
    s.pos = pos;
    s.key = expect(TokenKind::Ident, "key property").text;
    expect(TokenKind::Comma, "','");
    s.value = expect(TokenKind::Ident, "value property").text;
    expect(TokenKind::RParen, "')'");
    return s;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

std::string print_literal(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Bool: return v.as_bool() ? "true" : "false";
    case ValueKind::Int: return std::to_string(v.as_int());
    case ValueKind::Real: return format_real(v.as_real());
    case ValueKind::Text: return quote(v.as_text());
    case ValueKind::List:
      raise(ErrorCode::PlanError, "list literals have no textual form");
  }
  return {};
}

}  // namespace

namespace plan {

bool operator==(const QueryPlan& a, const QueryPlan& b) {
  if (a.source.node != b.source.node ||
      a.source.instance_id != b.source.instance_id ||
      a.stages.size() != b.stages.size())
    return false;
  for (std::size_t i = 0; i < a.stages.size(); ++i) {
    const Stage& x = a.stages[i];
    const Stage& y = b.stages[i];
    if (x.index() != y.index()) return false;
    bool same = std::visit(
        [&](const auto& xs) {
          using T = std::decay_t<decltype(xs)>;
          const T& ys = std::get<T>(y);
          if constexpr (std::is_same_v<T, TraverseStage>) {
            return xs.edge == ys.edge && xs.reverse == ys.reverse;
          } else if constexpr (std::is_same_v<T, PropStage>) {
            return xs.property == ys.property;
          } else if constexpr (std::is_same_v<T, FilterStage>) {
            return xs.property == ys.property && xs.cmp == ys.cmp &&
                   xs.literal.strict_equals(ys.literal);
          } else if constexpr (std::is_same_v<T, NeighborStage>) {
            return xs.within == ys.within && xs.distance == ys.distance &&
                   xs.edges == ys.edges;
          } else if constexpr (std::is_same_v<T, PathStage>) {
            return xs.target == ys.target && xs.max_len == ys.max_len;
          } else if constexpr (std::is_same_v<T, GroupByStage>) {
            return xs.key == ys.key && xs.value == ys.value;
          } else if constexpr (std::is_same_v<T, AggregateStage>) {
            return xs.fn == ys.fn && xs.separator == ys.separator;
          } else {
            static_assert(std::is_same_v<T, JoinStage>);
            const JoinStage& xj = xs;
            const JoinStage& yj = std::get<JoinStage>(y);
            return xj.matching_sensor == yj.matching_sensor &&
                   xj.name == yj.name &&
                   ((xj.other == nullptr) == (yj.other == nullptr)) &&
                   (xj.other == nullptr || *xj.other == *yj.other);
          }
        },
        x);
    if (!same) return false;
  }
  return true;
}

}  // namespace plan

QueryPlan parse_query(const std::string& text) {
  Lexer lexer(text);
  Parser parser(lexer.run());
  return parser.run();
}

std::string print_query(const QueryPlan& plan) {
  std::string out = plan.source.node + "(";
  if (plan.source.instance_id) out += quote(*plan.source.instance_id);
  out += ")";
  for (const plan::Stage& stage : plan.stages) {
    out += ' ';
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, plan::TraverseStage>) {
            out += "~> ";
            if (s.reverse) out += '-';
            out += s.edge;
          } else if constexpr (std::is_same_v<T, plan::PropStage>) {
            out += "prop " + s.property;
          } else if constexpr (std::is_same_v<T, plan::FilterStage>) {
            out += "filter(" + s.property + " " + cmp_name(s.cmp) + " " +
                   print_literal(s.literal) + ")";
          } else if constexpr (std::is_same_v<T, plan::NeighborStage>) {
            out += s.within ? "neighborWithin(" : "neighborAt(";
            out += std::to_string(s.distance);
            if (!s.edges.empty()) {
              out += ", [";
              for (std::size_t i = 0; i < s.edges.size(); ++i) {
                if (i) out += ", ";
                out += s.edges[i];
              }
              out += "]";
            }
            out += ")";
          } else if constexpr (std::is_same_v<T, plan::PathStage>) {
            out += "path(" + quote(s.target);
            if (s.max_len) out += ", " + std::to_string(*s.max_len);
            out += ")";
          } else if constexpr (std::is_same_v<T, plan::GroupByStage>) {
            out += "groupBy(" + s.key + ", " + s.value + ")";
          } else if constexpr (std::is_same_v<T, plan::AggregateStage>) {
            switch (s.fn) {
              case AggregateFn::Count: out += "count"; break;
              case AggregateFn::Sum: out += "sum"; break;
              case AggregateFn::Product: out += "product"; break;
              case AggregateFn::Max: out += "max"; break;
              case AggregateFn::Min: out += "min"; break;
              case AggregateFn::Distinct: out += "distinct"; break;
              case AggregateFn::MkString:
                out += "mkString(" + quote(s.separator) + ")";
                break;
            }
          } else {
            static_assert(std::is_same_v<T, plan::JoinStage>);
            raise(ErrorCode::PlanError,
                  "explicit joins have no textual form", s.pos);
          }
        },
        stage);
  }
  return out;
}

namespace {

// Kinds a comparison literal may meet for each property kind.
void check_filter_kinds(const InstanceGraph::PropertyInfo& info,
                        const plan::FilterStage& s) {
  ValueKind pk = info.kind;
  ValueKind lk = s.literal.kind();
  auto fail = [&] {
    raise(ErrorCode::PlanError,
          std::string("filter: cannot compare ") + value_kind_name(pk) +
              " property '" + s.property + "' with " + value_kind_name(lk) +
              " literal",
          s.pos);
  };
  if (pk == ValueKind::List) {
    if (s.cmp != Cmp::Eq && s.cmp != Cmp::Ne)
      raise(ErrorCode::PlanError,
            "filter: list properties support only ==/!= (membership)", s.pos);
    ValueKind ek = info.element_kind;
    bool ok = (ek == lk) ||
              (ek == ValueKind::Int && lk == ValueKind::Real) ||
              (ek == ValueKind::Real && lk == ValueKind::Int);
    if (!ok) fail();
    return;
  }
  bool numeric_pair = (pk == ValueKind::Int || pk == ValueKind::Real) &&
                      (lk == ValueKind::Int || lk == ValueKind::Real);
  if (numeric_pair) return;
  if (pk != lk) fail();
  if (pk == ValueKind::Bool && s.cmp != Cmp::Eq && s.cmp != Cmp::Ne)
    raise(ErrorCode::PlanError, "filter: Bool supports only ==/!=", s.pos);
}

}  // namespace

TypedPlan typecheck(const QueryPlan& plan, const InstanceGraph& graph) {
  const SchemaGraph& schema = graph.schema();
  TypedPlan typed;
  typed.plan = &plan;

  auto node = schema.find_node(plan.source.node);
  if (!node)
    raise(ErrorCode::PlanError,
          "unknown node type '" + plan.source.node + "'", plan.source.pos);
  StageType current;
  current.kind = ResultKind::Instances;
  current.set_type = SetType::uniform(schema, *node);
  typed.source_type = current;

  auto require_instances = [&](TextPosition pos, const char* what) {
    if (current.kind != ResultKind::Instances)
      raise(ErrorCode::PlanError,
            std::string(what) + " applies to instance collections", pos);
  };

  for (const plan::Stage& stage : plan.stages) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, plan::TraverseStage>) {
            require_instances(s.pos, "traversal");
            auto edge = schema.find_edge(s.edge);
            if (!edge)
              raise(ErrorCode::PlanError, "unknown edge '" + s.edge + "'",
                    s.pos);
            const auto& def = schema.edge(*edge);
            NodeTypeId expected = s.reverse ? def.destination : def.source;
            NodeTypeId produced = s.reverse ? def.source : def.destination;
            if (current.set_type &&
                current.set_type->tag == SetType::Tag::Uniform &&
                !(current.set_type->type == expected))
              raise(ErrorCode::PlanError,
                    "edge '" + s.edge + "' expects '" +
                        schema.node(expected).name + "', collection is '" +
                        current.set_type->name + "'",
                    s.pos);
            if (current.set_type &&
                current.set_type->tag == SetType::Tag::Composed)
              raise(ErrorCode::PlanError,
                    "cannot traverse from join results", s.pos);
            current.set_type = SetType::uniform(schema, produced);
          } else if constexpr (std::is_same_v<T, plan::PropStage>) {
            require_instances(s.pos, "prop");
            std::optional<ValueKind> vk;
            if (current.set_type &&
                current.set_type->tag != SetType::Tag::Mixed) {
              auto info = resolve_property(graph, *current.set_type, s.property);
              if (!info)
                raise(ErrorCode::PlanError,
                      "no property '" + s.property + "' on '" +
                          current.set_type->name + "'",
                      s.pos);
              vk = info->kind;
            }
            current = StageType{ResultKind::Values, std::nullopt, vk};
          } else if constexpr (std::is_same_v<T, plan::FilterStage>) {
            require_instances(s.pos, "filter");
            if (current.set_type &&
                current.set_type->tag != SetType::Tag::Mixed) {
              auto info = resolve_property(graph, *current.set_type, s.property);
              if (!info)
                raise(ErrorCode::PlanError,
                      "no property '" + s.property + "' on '" +
                          current.set_type->name + "'",
                      s.pos);
              check_filter_kinds(*info, s);
            }
          } else if constexpr (std::is_same_v<T, plan::NeighborStage>) {
            require_instances(s.pos, "neighborhood");
            if (s.distance < 0)
              raise(ErrorCode::PlanError, "distance must be non-negative",
                    s.pos);
            for (const std::string& e : s.edges)
              if (!schema.find_edge(e))
                raise(ErrorCode::PlanError, "unknown edge '" + e + "'", s.pos);
            // Neighborhoods may cross node types.
            current = StageType{ResultKind::Instances, std::nullopt,
                                std::nullopt};
          } else if constexpr (std::is_same_v<T, plan::PathStage>) {
            require_instances(s.pos, "path");
            if (s.max_len && *s.max_len < 0)
              raise(ErrorCode::PlanError, "maximum length must be non-negative",
                    s.pos);
            current = StageType{ResultKind::Path, std::nullopt, std::nullopt};
          } else if constexpr (std::is_same_v<T, plan::GroupByStage>) {
            require_instances(s.pos, "groupBy");
            if (current.set_type &&
                current.set_type->tag != SetType::Tag::Mixed) {
              if (!resolve_property(graph, *current.set_type, s.key))
                raise(ErrorCode::PlanError,
                      "no property '" + s.key + "' on '" +
                          current.set_type->name + "'",
                      s.pos);
              if (!resolve_property(graph, *current.set_type, s.value))
                raise(ErrorCode::PlanError,
                      "no property '" + s.value + "' on '" +
                          current.set_type->name + "'",
                      s.pos);
            }
            current = StageType{ResultKind::Grouping, std::nullopt,
                                std::nullopt};
          } else if constexpr (std::is_same_v<T, plan::AggregateStage>) {
            switch (s.fn) {
              case AggregateFn::Count:
                if (current.kind == ResultKind::Scalar)
                  raise(ErrorCode::PlanError, "count applies to collections",
                        s.pos);
                current = StageType{ResultKind::Scalar, std::nullopt,
                                    ValueKind::Int};
                break;
              case AggregateFn::Sum:
              case AggregateFn::Product:
              case AggregateFn::Max:
              case AggregateFn::Min:
                if (current.kind != ResultKind::Values)
                  raise(ErrorCode::PlanError,
                        "numeric aggregations apply to value sequences", s.pos);
                if (current.value_kind &&
                    *current.value_kind != ValueKind::Int &&
                    *current.value_kind != ValueKind::Real &&
                    *current.value_kind != ValueKind::List)
                  raise(ErrorCode::PlanError,
                        std::string("cannot aggregate ") +
                            value_kind_name(*current.value_kind) + " values",
                        s.pos);
                current = StageType{ResultKind::Scalar, std::nullopt,
                                    current.value_kind == ValueKind::Int
                                        ? ValueKind::Int
                                        : std::optional<ValueKind>{}};
                break;
              case AggregateFn::Distinct:
                if (current.kind != ResultKind::Values)
                  raise(ErrorCode::PlanError,
                        "distinct applies to value sequences", s.pos);
                current = StageType{ResultKind::Values, std::nullopt,
                                    std::nullopt};
                break;
              case AggregateFn::MkString:
                if (current.kind != ResultKind::Values)
                  raise(ErrorCode::PlanError,
                        "mkString applies to value sequences", s.pos);
                current = StageType{ResultKind::Scalar, std::nullopt,
                                    ValueKind::Text};
                break;
            }
          } else {
            static_assert(std::is_same_v<T, plan::JoinStage>);
            require_instances(s.pos, "join");
            if (!s.other)
              raise(ErrorCode::PlanError, "join stage missing operand", s.pos);
            TypedPlan other = typecheck(*s.other, graph);
            StageType rt = other.result();
            if (rt.kind != ResultKind::Instances || !rt.set_type ||
                rt.set_type->tag != SetType::Tag::Uniform)
              raise(ErrorCode::PlanError,
                    "join operand must produce a single-typed collection",
                    s.pos);
            if (!current.set_type ||
                current.set_type->tag != SetType::Tag::Uniform)
              raise(ErrorCode::PlanError,
                    "join input must be a single-typed collection", s.pos);
            if (!graph.registry().known(s.matching_sensor) ||
                graph.registry().mode_of(s.matching_sensor) !=
                    SensorMode::Matching)
              raise(ErrorCode::PlanError,
                    "join predicate '" + s.matching_sensor +
                        "' is not a matching sensor",
                    s.pos);
            current.set_type =
                SetType::composed(schema, current.set_type->type,
                                  rt.set_type->type, s.name);
          }
        },
        stage);
    typed.stage_types.push_back(current);
  }
  return typed;
}

namespace {

const InstanceSet& as_instances(const QueryResult& r, TextPosition pos) {
  if (const InstanceSet* s = std::get_if<InstanceSet>(&r)) return *s;
  raise(ErrorCode::PlanError, "stage requires an instance collection", pos);
}

}  // namespace

QueryResult evaluate(const QueryPlan& plan, const InstanceGraph& graph,
                     const NodeInstance* pivot) {
  typecheck(plan, graph);
  const SchemaGraph& schema = graph.schema();
  NodeTypeId source_type = schema.node_id_or_throw(plan.source.node);

  QueryResult current;
  if (plan.source.instance_id) {
    const NodeInstance* inst =
        graph.find_instance(source_type, *plan.source.instance_id);
    if (!inst)
      raise(ErrorCode::UnknownInstance,
            "no instance '" + *plan.source.instance_id + "' of node type '" +
                plan.source.node + "'");
    current = singleton(graph, inst);
  } else if (pivot && pivot->type == source_type) {
    current = singleton(graph, pivot);
  } else {
    current = all_instances(graph, source_type);
  }

  for (const plan::Stage& stage : plan.stages) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, plan::TraverseStage>) {
            EdgeTypeId edge = schema.edge_id_or_throw(s.edge);
            current = traverse(graph, as_instances(current, s.pos), edge,
                               s.reverse ? Direction::Reverse
                                         : Direction::Forward);
          } else if constexpr (std::is_same_v<T, plan::PropStage>) {
            current = project(graph, as_instances(current, s.pos), s.property);
          } else if constexpr (std::is_same_v<T, plan::FilterStage>) {
            current = filter(graph, as_instances(current, s.pos), s.property,
                             s.cmp, s.literal);
          } else if constexpr (std::is_same_v<T, plan::NeighborStage>) {
            NeighborOptions options;
            for (const std::string& e : s.edges)
              options.edges.push_back(schema.edge_id_or_throw(e));
            const InstanceSet& input = as_instances(current, s.pos);
            current = s.within
                          ? neighbor_within(graph, input, s.distance, options)
                          : neighbor_at(graph, input, s.distance, options);
          } else if constexpr (std::is_same_v<T, plan::PathStage>) {
            const InstanceSet& input = as_instances(current, s.pos);
            if (input.size() != 1)
              raise(ErrorCode::PlanError,
                    "path requires exactly one source instance, have " +
                        std::to_string(input.size()),
                    s.pos);
            const NodeInstance* target = graph.resolve_instance(s.target);
            current =
                shortest_path(graph, *input.members[0], *target, s.max_len);
          } else if constexpr (std::is_same_v<T, plan::GroupByStage>) {
            current = group_by(graph, as_instances(current, s.pos), s.key,
                               s.value);
          } else if constexpr (std::is_same_v<T, plan::AggregateStage>) {
            if (s.fn == AggregateFn::Count) {
              if (const InstanceSet* set = std::get_if<InstanceSet>(&current)) {
                current = Value::integer(static_cast<std::int64_t>(set->size()));
                return;
              }
              if (const Grouping* g = std::get_if<Grouping>(&current)) {
                current =
                    Value::integer(static_cast<std::int64_t>(g->groups.size()));
                return;
              }
              if (const EdgePath* p = std::get_if<EdgePath>(&current)) {
                if (!p->found)
                  raise(ErrorCode::EmptyAggregate,
                        "count of a missing path");
                current = Value::integer(static_cast<std::int64_t>(p->length()));
                return;
              }
            }
            const ValueSequence* seq = std::get_if<ValueSequence>(&current);
            if (!seq)
              raise(ErrorCode::PlanError,
                    "aggregation requires a value sequence", s.pos);
            AggregateOutcome out = aggregate(*seq, s.fn, s.separator);
            if (out.is_sequence)
              current = std::move(out.sequence);
            else
              current = std::move(out.scalar);
          } else {
            static_assert(std::is_same_v<T, plan::JoinStage>);
            QueryResult other = evaluate(*s.other, graph, pivot);
            const InstanceSet& right = as_instances(other, s.pos);
            const MatchingSensor& sensor =
                graph.registry().matching(s.matching_sensor);
            current = join(graph, as_instances(current, s.pos), right,
                           sensor.fn, s.name);
          }
        },
        stage);
  }
  return current;
}

std::string format_result(const QueryResult& result,
                          const InstanceGraph& graph) {
  return std::visit(
      [&graph](const auto& r) -> std::string {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, InstanceSet>) {
          std::string out;
          for (std::size_t i = 0; i < r.members.size(); ++i) {
            if (i) out += ' ';
            out += r.members[i]->id;
          }
          return out;
        } else if constexpr (std::is_same_v<T, ValueSequence>) {
          std::string out;
          for (std::size_t i = 0; i < r.values.size(); ++i) {
            if (i) out += '\n';
            out += r.values[i].to_display();
          }
          return out;
        } else if constexpr (std::is_same_v<T, Value>) {
          return r.to_display();
        } else if constexpr (std::is_same_v<T, Grouping>) {
          std::vector<std::pair<std::string, const std::vector<Value>*>> lines;
          lines.reserve(r.groups.size());
          for (const auto& [k, vs] : r.groups)
            lines.push_back({k.to_display(), &vs});
          std::sort(lines.begin(), lines.end(),
                    [](const auto& a, const auto& b) { return a.first < b.first; });
          std::string out;
          for (std::size_t i = 0; i < lines.size(); ++i) {
            if (i) out += '\n';
            out += lines[i].first + ": ";
            const auto& vs = *lines[i].second;
            for (std::size_t j = 0; j < vs.size(); ++j) {
              if (j) out += ',';
              out += vs[j].to_display();
            }
          }
          return out;
        } else {
          static_assert(std::is_same_v<T, EdgePath>);
          if (!r.found) return "<no path>";
          if (r.steps.empty()) return "<self>";
          std::string out;
          for (std::size_t i = 0; i < r.steps.size(); ++i) {
            if (i) out += ' ';
            out += graph.schema().edge(r.steps[i].edge).name;
            out += r.steps[i].forward ? '+' : '-';
          }
          return out;
        }
      },
      result);
}

}  // namespace hinet
