#include "hinet/constrained.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "hinet/rng.hpp"

namespace hinet {

namespace constraint {

namespace {

struct CToken {
  enum Kind { Word, String, LParen, RParen, Colon, Implies, End } kind;
  std::string text;
  TextPosition pos;
};

class CLexer {
 public:
  explicit CLexer(const std::string& text) : text_(text) {}

  // The collection query of a forall is scanned as raw text up to the
  // matching close paren, so the query grammar stays self-contained.
  std::string balanced_parens() {
    skip_ws();
    if (peek() != '(')
      raise(ErrorCode::ParseError, "expected '(' before collection query",
            here());
    advance();
    std::size_t depth = 1;
    std::string out;
    while (offset_ < text_.size()) {
      char c = peek();
      if (c == '"') {
        out += c;
        advance();
        while (offset_ < text_.size() && peek() != '"') {
          if (peek() == '\\') { out += peek(); advance(); }
          if (offset_ < text_.size()) { out += peek(); advance(); }
        }
        if (offset_ < text_.size()) { out += peek(); advance(); }
        continue;
      }
      if (c == '(') ++depth;
      if (c == ')') {
        --depth;
        if (depth == 0) {
          advance();
          return out;
        }
      }
      out += c;
      advance();
    }
    raise(ErrorCode::ParseError, "unbalanced parentheses in collection query",
          here());
  }

  CToken next() {
    skip_ws();
    TextPosition pos = here();
    if (offset_ >= text_.size()) return CToken{CToken::End, "", pos};
    char c = peek();
    if (c == '(') { advance(); return CToken{CToken::LParen, "(", pos}; }
    if (c == ')') { advance(); return CToken{CToken::RParen, ")", pos}; }
    if (c == ':') { advance(); return CToken{CToken::Colon, ":", pos}; }
    if (c == '=' && offset_ + 2 < text_.size() && text_[offset_ + 1] == '=' &&
        text_[offset_ + 2] == '>') {
      advance(); advance(); advance();
      return CToken{CToken::Implies, "==>", pos};
    }
    if (c == '"') {
      advance();
      std::string out;
      while (offset_ < text_.size() && peek() != '"') {
        if (peek() == '\\') advance();
        if (offset_ < text_.size()) { out += peek(); advance(); }
      }
      if (offset_ >= text_.size())
        raise(ErrorCode::ParseError, "unterminated string", pos);
      advance();
      return CToken{CToken::String, std::move(out), pos};
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string out;
      while (offset_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) {
        out += peek();
        advance();
      }
      return CToken{CToken::Word, std::move(out), pos};
    }
    raise(ErrorCode::ParseError,
          std::string("unexpected character '") + c + "' in constraint", pos);
  }

  void push_back(CToken t) { pushed_ = std::move(t); }

  CToken take() {
    if (pushed_) {
      CToken t = std::move(*pushed_);
      pushed_.reset();
      return t;
    }
    return next();
  }

 private:
  void skip_ws() {
    while (offset_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[offset_])))
      advance();
  }
  void advance() {
    if (text_[offset_] == '\n') { ++line_; column_ = 1; }
    else ++column_;
    ++offset_;
  }
  char peek() const { return offset_ < text_.size() ? text_[offset_] : '\0'; }
  TextPosition here() const { return TextPosition{line_, column_, offset_}; }

  const std::string& text_;
  std::size_t offset_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
  std::optional<CToken> pushed_;
};

class CParser {
 public:
  explicit CParser(const std::string& text) : lexer_(text) {}

  ExprPtr run() {
    ExprPtr e = parse_expr();
    CToken t = lexer_.take();
    if (t.kind != CToken::End)
      raise(ErrorCode::ParseError, "trailing input after constraint", t.pos);
    return e;
  }

 private:
  ExprPtr parse_expr() {
    CToken t = lexer_.take();
    if (t.kind == CToken::Word && t.text == "forall") {
      ForAll fa;
      CToken var = lexer_.take();
      if (var.kind != CToken::Word)
        raise(ErrorCode::ParseError, "expected variable after forall", var.pos);
      fa.variable = var.text;
      CToken in = lexer_.take();
      if (in.kind != CToken::Word || in.text != "in")
        raise(ErrorCode::ParseError, "expected 'in'", in.pos);
      fa.collection = parse_query(lexer_.balanced_parens());
      CToken colon = lexer_.take();
      if (colon.kind != CToken::Colon)
        raise(ErrorCode::ParseError, "expected ':' after collection", colon.pos);
      fa.body = parse_expr();
      auto e = std::make_shared<Expr>();
      e->node = std::move(fa);
      return e;
    }
    lexer_.push_back(std::move(t));
    ExprPtr lhs = parse_or();
    CToken next = lexer_.take();
    if (next.kind == CToken::Implies) {
      Implies imp{std::move(lhs), parse_expr()};
      auto e = std::make_shared<Expr>();
      e->node = std::move(imp);
      return e;
    }
    lexer_.push_back(std::move(next));
    return lhs;
  }

  ExprPtr parse_or() {
    ExprPtr lhs = parse_and();
    while (true) {
      CToken t = lexer_.take();
      if (t.kind == CToken::Word && t.text == "or") {
        Or o{std::move(lhs), parse_and()};
        lhs = std::make_shared<Expr>();
        lhs->node = std::move(o);
        continue;
      }
      lexer_.push_back(std::move(t));
      return lhs;
    }
  }

  ExprPtr parse_and() {
    ExprPtr lhs = parse_unit();
    while (true) {
      CToken t = lexer_.take();
      if (t.kind == CToken::Word && t.text == "and") {
        And a{std::move(lhs), parse_unit()};
        lhs = std::make_shared<Expr>();
        lhs->node = std::move(a);
        continue;
      }
      lexer_.push_back(std::move(t));
      return lhs;
    }
  }

  ExprPtr parse_unit() {
    CToken t = lexer_.take();
    if (t.kind == CToken::Word && t.text == "not") {
      Not n{parse_unit()};
      auto e = std::make_shared<Expr>();
      e->node = std::move(n);
      return e;
    }
    if (t.kind == CToken::LParen) {
      ExprPtr inner = parse_expr();
      CToken close = lexer_.take();
      if (close.kind != CToken::RParen)
        raise(ErrorCode::ParseError, "expected ')'", close.pos);
      return inner;
    }
    if (t.kind == CToken::Word && t.text == "forall") {
      lexer_.push_back(std::move(t));
      return parse_expr();
    }
    if (t.kind != CToken::Word)
      raise(ErrorCode::ParseError, "expected atom", t.pos);
    Atom atom;
    atom.classifier = t.text;
    CToken on = lexer_.take();
    if (on.kind != CToken::Word || on.text != "on")
      raise(ErrorCode::ParseError, "expected 'on'", on.pos);
    CToken var = lexer_.take();
    if (var.kind != CToken::Word)
      raise(ErrorCode::ParseError, "expected variable", var.pos);
    atom.variable = var.text;
    CToken rel = lexer_.take();
    if (rel.kind != CToken::Word || (rel.text != "is" && rel.text != "isNot"))
      raise(ErrorCode::ParseError, "expected 'is' or 'isNot'", rel.pos);
    atom.negated = rel.text == "isNot";
    CToken label = lexer_.take();
    if (label.kind != CToken::String)
      raise(ErrorCode::ParseError, "expected quoted label", label.pos);
    atom.label = label.text;
    auto e = std::make_shared<Expr>();
    e->node = std::move(atom);
    return e;
  }

  CLexer lexer_;
};

}  // namespace

ExprPtr parse(const std::string& text) { return CParser(text).run(); }

std::string print(const Expr& expr) {
  return std::visit(
      [](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Atom>) {
          return n.classifier + " on " + n.variable +
                 (n.negated ? " isNot \"" : " is \"") + n.label + "\"";
        } else if constexpr (std::is_same_v<T, Not>) {
          return "not (" + print(*n.body) + ")";
        } else if constexpr (std::is_same_v<T, And>) {
          return "(" + print(*n.lhs) + " and " + print(*n.rhs) + ")";
        } else if constexpr (std::is_same_v<T, Or>) {
          return "(" + print(*n.lhs) + " or " + print(*n.rhs) + ")";
        } else if constexpr (std::is_same_v<T, Implies>) {
          return "(" + print(*n.lhs) + " ==> " + print(*n.rhs) + ")";
        } else {
          static_assert(std::is_same_v<T, ForAll>);
          return "forall " + n.variable + " in (" + print_query(n.collection) +
                 ") : " + print(*n.body);
        }
      },
      expr.node);
}

}  // namespace constraint

void ConstrainedClassifier::add_classifier(
    std::shared_ptr<LabelScorer> classifier) {
  classifiers_.push_back(std::move(classifier));
}

void ConstrainedClassifier::add_constraint(ConstraintExpr expr) {
  constraints_.push_back(std::move(expr));
}

const LabelScorer* ConstrainedClassifier::classifier_named(
    std::string_view name) const {
  for (const auto& c : classifiers_)
    if (c->name() == name) return c.get();
  return nullptr;
}

namespace {

using constraint::Expr;

using Env = std::map<std::string, const NodeInstance*>;

bool eval_expr(const Expr& expr, const Assignment& assignment,
               const ConstrainedClassifier& cc, const InstanceGraph& graph,
               const NodeInstance& scope, Env& env) {
  return std::visit(
      [&](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, constraint::Atom>) {
          auto it = env.find(n.variable);
          if (it == env.end())
            raise(ErrorCode::UnboundVariable,
                  "variable '" + n.variable + "' is not bound");
          const LabelScorer* classifier = cc.classifier_named(n.classifier);
          if (!classifier)
            raise(ErrorCode::UnboundVariable,
                  "classifier '" + n.classifier + "' is not registered");
          const std::string* label = assignment.label_of(classifier, it->second);
          if (!label)
            raise(ErrorCode::UnboundVariable,
                  "assignment does not cover (" + n.classifier + ", " +
                      it->second->id + ")");
          bool eq = *label == n.label;
          return n.negated ? !eq : eq;
        } else if constexpr (std::is_same_v<T, constraint::Not>) {
          return !eval_expr(*n.body, assignment, cc, graph, scope, env);
        } else if constexpr (std::is_same_v<T, constraint::And>) {
          return eval_expr(*n.lhs, assignment, cc, graph, scope, env) &&
                 eval_expr(*n.rhs, assignment, cc, graph, scope, env);
        } else if constexpr (std::is_same_v<T, constraint::Or>) {
          return eval_expr(*n.lhs, assignment, cc, graph, scope, env) ||
                 eval_expr(*n.rhs, assignment, cc, graph, scope, env);
        } else if constexpr (std::is_same_v<T, constraint::Implies>) {
          return !eval_expr(*n.lhs, assignment, cc, graph, scope, env) ||
                 eval_expr(*n.rhs, assignment, cc, graph, scope, env);
        } else {
          static_assert(std::is_same_v<T, constraint::ForAll>);
          QueryResult result = evaluate(n.collection, graph, &scope);
          const InstanceSet* set = std::get_if<InstanceSet>(&result);
          if (!set)
            raise(ErrorCode::PlanError,
                  "forall collection query must produce instances");
          for (const NodeInstance* member : set->members) {
            env[n.variable] = member;
            bool ok = eval_expr(*n.body, assignment, cc, graph, scope, env);
            env.erase(n.variable);
            if (!ok) return false;
          }
          return true;  // vacuous over the empty collection
        }
      },
      expr.node);
}

// Compiled form for the inner optimization loops: foralls expanded against
// the materialized collections, atoms resolved to (variable, label) indices.
struct CompiledNode {
  enum class Kind { Const, Atom, Not, And, Or, Implies } kind = Kind::Const;
  bool constant = true;
  std::size_t var = 0;
  std::size_t label = 0;
  bool negated = false;
  std::vector<CompiledNode> children;

  bool eval(const std::vector<std::size_t>& assignment) const {
    switch (kind) {
      case Kind::Const: return constant;
      case Kind::Atom: {
        bool eq = assignment[var] == label;
        return negated ? !eq : eq;
      }
      case Kind::Not: return !children[0].eval(assignment);
      case Kind::And:
        return children[0].eval(assignment) && children[1].eval(assignment);
      case Kind::Or:
        return children[0].eval(assignment) || children[1].eval(assignment);
      case Kind::Implies:
        return !children[0].eval(assignment) || children[1].eval(assignment);
    }
    return true;
  }
};

struct Problem {
  std::vector<DecisionVar> vars;
  std::map<DecisionVar, std::size_t> var_index;
  std::vector<std::vector<double>> log_scores;  // per var, per label
  std::vector<std::size_t> domain;              // labels per var
  std::vector<CompiledNode> constraints;

  bool feasible(const std::vector<std::size_t>& a) const {
    for (const CompiledNode& c : constraints)
      if (!c.eval(a)) return false;
    return true;
  }
  double objective(const std::vector<std::size_t>& a) const {
    double acc = 0;
    for (std::size_t v = 0; v < vars.size(); ++v) acc += log_scores[v][a[v]];
    return acc;
  }
};

std::vector<double> log_softmax(std::vector<double> scores) {
  double m = *std::max_element(scores.begin(), scores.end());
  double z = 0;
  for (double s : scores) z += std::exp(s - m);
  double log_z = m + std::log(z);
  for (double& s : scores) s -= log_z;
  return scores;
}

CompiledNode compile_expr(const Expr& expr, const ConstrainedClassifier& cc,
                          const InstanceGraph& graph, const NodeInstance& scope,
                          const Problem& problem, Env& env) {
  return std::visit(
      [&](const auto& n) -> CompiledNode {
        using T = std::decay_t<decltype(n)>;
        CompiledNode out;
        if constexpr (std::is_same_v<T, constraint::Atom>) {
          auto it = env.find(n.variable);
          if (it == env.end())
            raise(ErrorCode::UnboundVariable,
                  "variable '" + n.variable + "' is not bound");
          const LabelScorer* classifier = cc.classifier_named(n.classifier);
          if (!classifier)
            raise(ErrorCode::UnboundVariable,
                  "classifier '" + n.classifier + "' is not registered");
          auto vi = problem.var_index.find(DecisionVar{classifier, it->second});
          if (vi == problem.var_index.end())
            raise(ErrorCode::UnboundVariable,
                  "constraint touches instance '" + it->second->id +
                      "' outside the decision set");
          const auto& labels = classifier->labels();
          auto li = std::find(labels.begin(), labels.end(), n.label);
          if (li == labels.end()) {
            // A label the classifier can never produce: `is` is always
            // false, `isNot` always true.
            out.kind = CompiledNode::Kind::Const;
            out.constant = n.negated;
            return out;
          }
          out.kind = CompiledNode::Kind::Atom;
          out.var = vi->second;
          out.label = static_cast<std::size_t>(li - labels.begin());
          out.negated = n.negated;
          return out;
        } else if constexpr (std::is_same_v<T, constraint::Not>) {
          out.kind = CompiledNode::Kind::Not;
          out.children.push_back(
              compile_expr(*n.body, cc, graph, scope, problem, env));
          return out;
        } else if constexpr (std::is_same_v<T, constraint::And>) {
          out.kind = CompiledNode::Kind::And;
          out.children.push_back(
              compile_expr(*n.lhs, cc, graph, scope, problem, env));
          out.children.push_back(
              compile_expr(*n.rhs, cc, graph, scope, problem, env));
          return out;
        } else if constexpr (std::is_same_v<T, constraint::Or>) {
          out.kind = CompiledNode::Kind::Or;
          out.children.push_back(
              compile_expr(*n.lhs, cc, graph, scope, problem, env));
          out.children.push_back(
              compile_expr(*n.rhs, cc, graph, scope, problem, env));
          return out;
        } else if constexpr (std::is_same_v<T, constraint::Implies>) {
          out.kind = CompiledNode::Kind::Implies;
          out.children.push_back(
              compile_expr(*n.lhs, cc, graph, scope, problem, env));
          out.children.push_back(
              compile_expr(*n.rhs, cc, graph, scope, problem, env));
          return out;
        } else {
          static_assert(std::is_same_v<T, constraint::ForAll>);
          QueryResult result = evaluate(n.collection, graph, &scope);
          const InstanceSet* set = std::get_if<InstanceSet>(&result);
          if (!set)
            raise(ErrorCode::PlanError,
                  "forall collection query must produce instances");
          out.kind = CompiledNode::Kind::And;
          out.children.clear();
          std::vector<CompiledNode> parts;
          for (const NodeInstance* member : set->members) {
            env[n.variable] = member;
            parts.push_back(
                compile_expr(*n.body, cc, graph, scope, problem, env));
            env.erase(n.variable);
          }
          if (parts.empty()) {
            out.kind = CompiledNode::Kind::Const;
            out.constant = true;
            return out;
          }
          // Fold the conjunction into a binary tree.
          CompiledNode acc = std::move(parts[0]);
          for (std::size_t i = 1; i < parts.size(); ++i) {
            CompiledNode conj;
            conj.kind = CompiledNode::Kind::And;
            conj.children.push_back(std::move(acc));
            conj.children.push_back(std::move(parts[i]));
            acc = std::move(conj);
          }
          return acc;
        }
      },
      expr.node);
}

constexpr std::uint64_t kEnumerationLimit = 1u << 20;
constexpr std::size_t kRestarts = 50;

std::vector<std::size_t> unconstrained_argmax(const Problem& problem) {
  std::vector<std::size_t> a(problem.vars.size(), 0);
  for (std::size_t v = 0; v < problem.vars.size(); ++v) {
    const auto& scores = problem.log_scores[v];
    a[v] = static_cast<std::size_t>(
        std::max_element(scores.begin(), scores.end()) - scores.begin());
  }
  return a;
}

// First-improvement hill climbing over single-variable moves that stay
// feasible.
void climb(const Problem& problem, std::vector<std::size_t>& a) {
  bool improved = true;
  while (improved) {
    improved = false;
    double current = problem.objective(a);
    for (std::size_t v = 0; v < problem.vars.size() && !improved; ++v) {
      std::size_t original = a[v];
      for (std::size_t l = 0; l < problem.domain[v]; ++l) {
        if (l == original) continue;
        a[v] = l;
        if (problem.objective(a) > current && problem.feasible(a)) {
          improved = true;
          break;
        }
        a[v] = original;
      }
    }
  }
}

}  // namespace

bool evaluate_constraint(const constraint::Expr& expr,
                         const Assignment& assignment,
                         const ConstrainedClassifier& cc,
                         const InstanceGraph& graph,
                         const NodeInstance& scope) {
  Env env;
  env["scope"] = &scope;  // the scope binding
  return eval_expr(expr, assignment, cc, graph, scope, env);
}

Assignment joint_predict(const ConstrainedClassifier& cc,
                         const InstanceGraph& graph,
                         const NodeInstance& scope) {
  if (cc.classifiers().empty())
    raise(ErrorCode::UntrainedClassifier, "no classifiers registered");
  for (const auto& c : cc.classifiers())
    if (!c->is_trained())
      raise(ErrorCode::UntrainedClassifier,
            "classifier '" + c->name() + "' is not trained");

  QueryResult result = evaluate(cc.decision_query(), graph, &scope);
  const InstanceSet* decisions = std::get_if<InstanceSet>(&result);
  if (!decisions)
    raise(ErrorCode::PlanError, "decision query must produce instances");

  Problem problem;
  for (const auto& c : cc.classifiers()) {
    for (const NodeInstance* inst : decisions->members) {
      DecisionVar var{c.get(), inst};
      problem.var_index.emplace(var, problem.vars.size());
      problem.vars.push_back(var);
      problem.log_scores.push_back(log_softmax(c->scores(graph, *inst)));
      problem.domain.push_back(c->labels().size());
    }
  }

  for (const ConstraintExpr& expr : cc.constraints()) {
    Env env;
    env["scope"] = &scope;
    problem.constraints.push_back(
        compile_expr(*expr, cc, graph, scope, problem, env));
  }

  auto finish = [&](const std::vector<std::size_t>& a, bool feasible) {
    Assignment out;
    out.feasible = feasible;
    out.objective = problem.objective(a);
    for (std::size_t v = 0; v < problem.vars.size(); ++v) {
      const DecisionVar& var = problem.vars[v];
      out.labels[var] = var.classifier->labels()[a[v]];
    }
    return out;
  };

  if (problem.vars.empty()) {
    Assignment out;
    out.feasible = true;
    return out;
  }

  std::uint64_t space = 1;
  bool enumerable = true;
  for (std::size_t d : problem.domain) {
    if (d == 0) raise(ErrorCode::UntrainedClassifier, "empty label set");
    if (space > kEnumerationLimit / d) {
      enumerable = false;
      break;
    }
    space *= d;
  }

  if (enumerable && space <= kEnumerationLimit) {
    std::vector<std::size_t> a(problem.vars.size(), 0);
    std::optional<std::vector<std::size_t>> best;
    double best_obj = -std::numeric_limits<double>::infinity();
    while (true) {
      if (problem.feasible(a)) {
        double obj = problem.objective(a);
        if (obj > best_obj) {
          best_obj = obj;
          best = a;
        }
      }
      std::size_t v = 0;
      for (; v < a.size(); ++v) {
        if (++a[v] < problem.domain[v]) break;
        a[v] = 0;
      }
      if (v == a.size()) break;
    }
    if (best) return finish(*best, true);
    return finish(unconstrained_argmax(problem), false);
  }

  // Local search: seeded restarts, first-improvement moves within the
  // feasible region.
  Rng rng(cc.seed());
  std::optional<std::vector<std::size_t>> best;
  double best_obj = -std::numeric_limits<double>::infinity();
  for (std::size_t restart = 0; restart < kRestarts; ++restart) {
    std::vector<std::size_t> a;
    if (restart == 0) {
      a = unconstrained_argmax(problem);
    } else {
      a.resize(problem.vars.size());
      for (std::size_t v = 0; v < a.size(); ++v)
        a[v] = static_cast<std::size_t>(rng.below(problem.domain[v]));
    }
    if (!problem.feasible(a)) continue;
    climb(problem, a);
    double obj = problem.objective(a);
    if (obj > best_obj) {
      best_obj = obj;
      best = a;
    }
  }
  if (best) return finish(*best, true);
  return finish(unconstrained_argmax(problem), false);
}

void bind_constrained_property(InstanceGraph& graph,
                               std::shared_ptr<ConstrainedClassifier> cc,
                               NodeTypeId node, const std::string& name,
                               const std::string& classifier) {
  if (!cc->classifier_named(classifier))
    raise(ErrorCode::UnboundVariable,
          "classifier '" + classifier + "' is not registered in '" +
              cc->name() + "'");
  std::string classifier_name = classifier;
  graph.add_runtime_property(
      node, name, ValueKind::Text,
      [cc, classifier_name, name](const InstanceGraph& g,
                                  const NodeInstance& x) -> Value {
        const NodeInstance* scope = nullptr;
        if (const QueryPlan* plan = cc->scope_query()) {
          QueryResult r = evaluate(*plan, g, &x);
          const InstanceSet* set = std::get_if<InstanceSet>(&r);
          if (!set || set->size() != 1)
            raise(ErrorCode::SensorFailure,
                  "scope query for '" + name +
                      "' must produce exactly one instance");
          scope = set->members[0];
        } else if (x.type == cc->scope_type()) {
          scope = &x;
        } else {
          raise(ErrorCode::SensorFailure,
                "no scope query configured for '" + name + "'");
        }
        Assignment a = joint_predict(*cc, g, *scope);
        const LabelScorer* c = cc->classifier_named(classifier_name);
        const std::string* label = a.label_of(c, &x);
        if (!label)
          raise(ErrorCode::SensorFailure,
                "instance '" + x.id + "' is not part of the decision set");
        return Value::text(*label);
      },
      /*dynamic=*/true);
}

}  // namespace hinet
