#pragma once

#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "hinet/feature_learning.hpp"

namespace hinet {

// First-order constraints over classifier outputs.
//
// Textual form (used by learner configuration documents):
//
//   cexpr  := "forall" IDENT "in" "(" query ")" ":" cexpr
//           | cor [ "==>" cexpr ]
//   cor    := cand { "or" cand }
//   cand   := cunit { "and" cunit }
//   cunit  := "not" cunit | "(" cexpr ")" | atom
//   atom   := IDENT "on" IDENT ("is" | "isNot") STRING
//
// The forall collection query is pivoted at the scope instance; atom
// variables must be bound by an enclosing forall.

namespace constraint {

struct Expr;
using ExprPtr = std::shared_ptr<Expr>;

struct Atom {
  std::string classifier;
  std::string variable;
  bool negated = false;  // isNot
  std::string label;
};

struct Not {
  ExprPtr body;
};

struct And {
  ExprPtr lhs, rhs;
};

struct Or {
  ExprPtr lhs, rhs;
};

struct Implies {
  ExprPtr lhs, rhs;
};

struct ForAll {
  std::string variable;
  QueryPlan collection;  // pivoted at the scope instance
  ExprPtr body;
};

struct Expr {
  std::variant<Atom, Not, And, Or, Implies, ForAll> node;
};

ExprPtr parse(const std::string& text);
std::string print(const Expr& expr);

}  // namespace constraint

using ConstraintExpr = constraint::ExprPtr;

// Decision variable: one classifier's label for one instance.
struct DecisionVar {
  const LabelScorer* classifier;
  const NodeInstance* instance;

  friend bool operator<(const DecisionVar& a, const DecisionVar& b) {
    if (a.classifier != b.classifier) return a.classifier < b.classifier;
    return a.instance < b.instance;
  }
  friend bool operator==(const DecisionVar& a, const DecisionVar& b) = default;
};

struct Assignment {
  std::map<DecisionVar, std::string> labels;
  bool feasible = false;
  double objective = 0.0;  // sum of per-variable log-probabilities

  const std::string* label_of(const LabelScorer* classifier,
                              const NodeInstance* instance) const {
    auto it = labels.find(DecisionVar{classifier, instance});
    return it == labels.end() ? nullptr : &it->second;
  }
};

// Joint prediction setup: base classifiers, the scope's decision query, and
// hard constraints. `scope_query` maps a decision instance back to its scope
// for property binding.
class ConstrainedClassifier {
 public:
  ConstrainedClassifier(std::string name, NodeTypeId scope_type,
                        QueryPlan decision_query, std::uint64_t seed = 42)
      : name_(std::move(name)),
        scope_type_(scope_type),
        decision_query_(std::move(decision_query)),
        seed_(seed) {}

  void add_classifier(std::shared_ptr<LabelScorer> classifier);
  void add_constraint(ConstraintExpr expr);
  void set_scope_query(QueryPlan plan) { scope_query_ = std::move(plan); }

  const std::string& name() const { return name_; }
  NodeTypeId scope_type() const { return scope_type_; }
  const std::vector<std::shared_ptr<LabelScorer>>& classifiers() const {
    return classifiers_;
  }
  const LabelScorer* classifier_named(std::string_view name) const;
  const std::vector<ConstraintExpr>& constraints() const { return constraints_; }
  const QueryPlan& decision_query() const { return decision_query_; }
  const QueryPlan* scope_query() const {
    return scope_query_ ? &*scope_query_ : nullptr;
  }
  std::uint64_t seed() const { return seed_; }

 private:
  std::string name_;
  NodeTypeId scope_type_;
  QueryPlan decision_query_;
  std::optional<QueryPlan> scope_query_;
  std::vector<std::shared_ptr<LabelScorer>> classifiers_;
  std::vector<ConstraintExpr> constraints_;
  std::uint64_t seed_;
};

// Boolean semantics of a constraint under a full assignment. A forall over an
// empty collection is true; atoms over variables or pairs the assignment does
// not cover raise UnboundVariable.
bool evaluate_constraint(const constraint::Expr& expr,
                         const Assignment& assignment,
                         const ConstrainedClassifier& cc,
                         const InstanceGraph& graph,
                         const NodeInstance& scope);

// Maximizes the sum of per-variable log-softmax scores subject to all
// constraints. Exact enumeration when the assignment space is at most 2^20,
// seeded first-improvement local search with restarts otherwise. When no
// feasible assignment exists the unconstrained argmax is returned with
// feasible = false.
Assignment joint_predict(const ConstrainedClassifier& cc,
                         const InstanceGraph& graph,
                         const NodeInstance& scope);

// Registers a property on `node` whose value is the label joint_predict
// assigns to the instance under `classifier`. Recomputed on every read, so
// retraining is reflected immediately.
void bind_constrained_property(InstanceGraph& graph,
                               std::shared_ptr<ConstrainedClassifier> cc,
                               NodeTypeId node, const std::string& name,
                               const std::string& classifier);

}  // namespace hinet
