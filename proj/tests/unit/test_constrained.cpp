#include <cmath>

#include "doctest.h"

#include "../support/builders.hpp"
#include "../support/oracles.hpp"

using namespace hinet;
using namespace hinet::testing;

namespace {

// Sentence/phrase fixture mirroring the predicate-argument setup: one scope
// with two binary classifiers over its phrases.
struct SrlFixture {
  DecisionFixture fx = decision_fixture(1);
  std::shared_ptr<FakeScorer> is_predicate;
  std::shared_ptr<FakeScorer> is_argument;
  std::shared_ptr<ConstrainedClassifier> cc;

  explicit SrlFixture(std::vector<double> pred_scores,
                      std::vector<double> arg_scores) {
    is_predicate = std::make_shared<FakeScorer>(
        "isPredicate", std::vector<std::string>{"False", "True"});
    is_argument = std::make_shared<FakeScorer>(
        "isArgument", std::vector<std::string>{"False", "True"});
    is_predicate->set_scores("i0", std::move(pred_scores));
    is_argument->set_scores("i0", std::move(arg_scores));
    cc = std::make_shared<ConstrainedClassifier>(
        "srl", fx.scope_type, parse_query("scopes() ~> scopeToItem"));
    cc->add_classifier(is_predicate);
    cc->add_classifier(is_argument);
  }

  void add_mutual_exclusion() {
    cc->add_constraint(constraint::parse(
        "forall x in (scopes() ~> scopeToItem) : "
        "isPredicate on x is \"True\" ==> isArgument on x isNot \"True\""));
  }
};

}  // namespace

TEST_CASE("constraint text parses and prints back") {
  ConstraintExpr e = constraint::parse(
      "forall x in (scopes() ~> scopeToItem) : "
      "isPredicate on x is \"True\" ==> isArgument on x isNot \"True\"");
  std::string printed = constraint::print(*e);
  ConstraintExpr again = constraint::parse(printed);
  CHECK(constraint::print(*again) == printed);

  ConstraintExpr ops = constraint::parse(
      "not (a on x is \"1\") and (b on x is \"2\" or c on x isNot \"3\")");
  CHECK(constraint::print(*constraint::parse(constraint::print(*ops))) ==
        constraint::print(*ops));

  CHECK_THROWS_AS(constraint::parse("forall x : broken"), Error);
  CHECK_THROWS_AS(constraint::parse("a on x equals \"1\""), Error);
}

TEST_CASE("constraint evaluation semantics") {
  SrlFixture srl({0.0, 1.0}, {0.0, 1.0});
  srl.add_mutual_exclusion();
  const auto& expr = *srl.cc->constraints()[0];

  auto assign = [&](const char* pred, const char* arg) {
    Assignment a;
    a.labels[{srl.is_predicate.get(), srl.fx.items[0]}] = pred;
    a.labels[{srl.is_argument.get(), srl.fx.items[0]}] = arg;
    return a;
  };
  CHECK_FALSE(evaluate_constraint(expr, assign("True", "True"), *srl.cc,
                                  srl.fx.graph(), *srl.fx.scope));
  CHECK(evaluate_constraint(expr, assign("True", "False"), *srl.cc,
                            srl.fx.graph(), *srl.fx.scope));
  CHECK(evaluate_constraint(expr, assign("False", "True"), *srl.cc,
                            srl.fx.graph(), *srl.fx.scope));

  SUBCASE("forall over an empty collection is vacuously true") {
    ConstraintExpr vacuous = constraint::parse(
        "forall x in (scopes() ~> scopeToItem filter(idx == 99)) : "
        "isPredicate on x is \"True\"");
    CHECK(evaluate_constraint(*vacuous, assign("False", "False"), *srl.cc,
                              srl.fx.graph(), *srl.fx.scope));
  }
  SUBCASE("unbound variables raise") {
    ConstraintExpr loose = constraint::parse("isPredicate on z is \"True\"");
    try {
      evaluate_constraint(*loose, assign("True", "False"), *srl.cc,
                          srl.fx.graph(), *srl.fx.scope);
      FAIL("expected UnboundVariable");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnboundVariable);
    }
  }
  SUBCASE("the scope itself is bound as 'scope'") {
    // Scope-level atoms refer to the scope instance directly; the scope is
    // not part of the decision set here, so the assignment cannot cover it.
    ConstraintExpr scoped =
        constraint::parse("isPredicate on scope is \"True\"");
    try {
      evaluate_constraint(*scoped, assign("True", "False"), *srl.cc,
                          srl.fx.graph(), *srl.fx.scope);
      FAIL("expected UnboundVariable (scope not in decision set)");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnboundVariable);
    }
  }
}

TEST_CASE("joint prediction flips the weaker of two conflicting scores") {
  // Both classifiers prefer "True" but predicate prefers it more strongly.
  SrlFixture srl({0.0, 2.0}, {0.0, 1.0});
  srl.add_mutual_exclusion();
  Assignment a = joint_predict(*srl.cc, srl.fx.graph(), *srl.fx.scope);
  CHECK(a.feasible);
  CHECK(*a.label_of(srl.is_predicate.get(), srl.fx.items[0]) == "True");
  CHECK(*a.label_of(srl.is_argument.get(), srl.fx.items[0]) == "False");
}

TEST_CASE("without constraints joint prediction is the per-variable argmax") {
  SrlFixture srl({0.0, 2.0}, {3.0, 1.0});
  Assignment a = joint_predict(*srl.cc, srl.fx.graph(), *srl.fx.scope);
  CHECK(a.feasible);
  CHECK(*a.label_of(srl.is_predicate.get(), srl.fx.items[0]) == "True");
  CHECK(*a.label_of(srl.is_argument.get(), srl.fx.items[0]) == "False");
}

TEST_CASE("unsatisfiable constraints fall back to the unconstrained argmax") {
  SrlFixture srl({0.0, 2.0}, {0.0, 1.0});
  srl.cc->add_constraint(constraint::parse(
      "forall x in (scopes() ~> scopeToItem) : "
      "isPredicate on x is \"True\" and isPredicate on x isNot \"True\""));
  Assignment a = joint_predict(*srl.cc, srl.fx.graph(), *srl.fx.scope);
  CHECK_FALSE(a.feasible);
  CHECK(*a.label_of(srl.is_predicate.get(), srl.fx.items[0]) == "True");
  CHECK(*a.label_of(srl.is_argument.get(), srl.fx.items[0]) == "True");
}

TEST_CASE("untrained classifiers are rejected") {
  SrlFixture srl({0.0, 1.0}, {0.0, 1.0});
  srl.is_argument->set_trained(false);
  try {
    joint_predict(*srl.cc, srl.fx.graph(), *srl.fx.scope);
    FAIL("expected UntrainedClassifier");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UntrainedClassifier);
  }
}

TEST_CASE("enumeration matches the brute-force constrained maximum") {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    std::size_t k = 2 + rng.below(6);
    std::size_t n_labels = 2 + rng.below(2);
    DecisionFixture fx = decision_fixture(k);
    std::vector<std::string> labels;
    for (std::size_t l = 0; l < n_labels; ++l)
      labels.push_back(std::string(1, static_cast<char>('A' + l)));
    auto scorer = std::make_shared<FakeScorer>("c", labels);
    std::vector<std::vector<double>> raw(k);
    for (std::size_t v = 0; v < k; ++v) {
      raw[v].resize(n_labels);
      for (double& s : raw[v]) s = rng.normal() * 2;
      scorer->set_scores("i" + std::to_string(v), raw[v]);
    }
    auto cc = std::make_shared<ConstrainedClassifier>(
        "rand", fx.scope_type, parse_query("scopes() ~> scopeToItem"));
    cc->add_classifier(scorer);

    std::vector<PairConstraint> pairs;
    std::size_t n_constraints = rng.below(k + 1);
    for (std::size_t c = 0; c < n_constraints; ++c) {
      PairConstraint pc;
      pc.var_a = rng.below(k);
      pc.var_b = rng.below(k);
      pc.label_a = rng.below(n_labels);
      pc.label_b = rng.below(n_labels);
      pc.implication = rng.uniform() < 0.5;
      pairs.push_back(pc);
      cc->add_constraint(pair_constraint_expr(pc, "c", labels));
    }

    Assignment a = joint_predict(*cc, fx.graph(), *fx.scope);

    std::vector<std::vector<double>> log_scores;
    for (std::size_t v = 0; v < k; ++v)
      log_scores.push_back(log_softmax_reference(raw[v]));
    BruteForceJoint brute = brute_force_joint(log_scores, n_labels, pairs);

    if (!brute.best) {
      CHECK_FALSE(a.feasible);
      continue;
    }
    REQUIRE(a.feasible);
    CHECK(std::abs(a.objective - brute.objective) <= 1e-9);
    // Feasibility soundness via the independent pair checker.
    std::vector<std::size_t> chosen(k);
    for (std::size_t v = 0; v < k; ++v) {
      const std::string* label = a.label_of(scorer.get(), fx.items[v]);
      REQUIRE(label);
      chosen[v] = static_cast<std::size_t>(
          std::find(labels.begin(), labels.end(), *label) - labels.begin());
    }
    CHECK(pair_feasible(chosen, pairs));
  }
}

TEST_CASE("adding a constant to one variable's scores keeps the argmax") {
  SrlFixture base({0.3, 1.1}, {0.9, 0.4});
  base.add_mutual_exclusion();
  Assignment before = joint_predict(*base.cc, base.fx.graph(), *base.fx.scope);

  SrlFixture shifted({0.3 + 5.0, 1.1 + 5.0}, {0.9, 0.4});
  shifted.add_mutual_exclusion();
  Assignment after =
      joint_predict(*shifted.cc, shifted.fx.graph(), *shifted.fx.scope);

  CHECK(*before.label_of(base.is_predicate.get(), base.fx.items[0]) ==
        *after.label_of(shifted.is_predicate.get(), shifted.fx.items[0]));
  CHECK(*before.label_of(base.is_argument.get(), base.fx.items[0]) ==
        *after.label_of(shifted.is_argument.get(), shifted.fx.items[0]));
  CHECK(std::abs(before.objective - after.objective) <= 1e-9);
}

TEST_CASE("local search regime is deterministic and feasible") {
  // 14 binary variables x 2 classifiers = 2^28 assignments, beyond the
  // enumeration bound.
  std::size_t k = 14;
  DecisionFixture fx = decision_fixture(k);
  std::vector<std::string> labels{"False", "True"};
  auto c1 = std::make_shared<FakeScorer>("c1", labels);
  auto c2 = std::make_shared<FakeScorer>("c2", labels);
  Rng rng(5);
  for (std::size_t v = 0; v < k; ++v) {
    c1->set_scores("i" + std::to_string(v), {rng.normal(), rng.normal()});
    c2->set_scores("i" + std::to_string(v), {rng.normal(), rng.normal()});
  }
  auto cc = std::make_shared<ConstrainedClassifier>(
      "big", fx.scope_type, parse_query("scopes() ~> scopeToItem"), 99);
  cc->add_classifier(c1);
  cc->add_classifier(c2);
  cc->add_constraint(constraint::parse(
      "forall x in (scopes() ~> scopeToItem) : "
      "c1 on x is \"True\" ==> c2 on x isNot \"True\""));

  Assignment a = joint_predict(*cc, fx.graph(), *fx.scope);
  Assignment b = joint_predict(*cc, fx.graph(), *fx.scope);
  REQUIRE(a.feasible);
  CHECK(a.objective == b.objective);
  CHECK(a.labels == b.labels);
  for (const ConstraintExpr& e : cc->constraints())
    CHECK(evaluate_constraint(*e, a, *cc, fx.graph(), *fx.scope));
}

TEST_CASE("bound constrained properties answer through joint inference") {
  SrlFixture srl({0.0, 2.0}, {0.0, 1.0});
  srl.add_mutual_exclusion();
  srl.cc->set_scope_query(parse_query("items() ~> -scopeToItem"));

  InstanceGraph& g = srl.fx.graph();
  bind_constrained_property(g, srl.cc, srl.fx.item_type, "predicateJoint",
                            "isPredicate");
  bind_constrained_property(g, srl.cc, srl.fx.item_type, "argumentJoint",
                            "isArgument");

  QueryResult r = evaluate(parse_query("items() prop predicateJoint"), g);
  CHECK(std::get<ValueSequence>(r).values[0].as_text() == "True");
  QueryResult r2 = evaluate(parse_query("items() prop argumentJoint"), g);
  CHECK(std::get<ValueSequence>(r2).values[0].as_text() == "False");

  SUBCASE("queries before training raise") {
    srl.is_predicate->set_trained(false);
    try {
      evaluate(parse_query("items() prop predicateJoint"), g);
      FAIL("expected UntrainedClassifier");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UntrainedClassifier);
    }
  }
  SUBCASE("changed scores are reflected on re-query") {
    srl.is_argument->set_scores("i0", {0.0, 10.0});
    QueryResult updated = evaluate(parse_query("items() prop argumentJoint"), g);
    CHECK(std::get<ValueSequence>(updated).values[0].as_text() == "True");
    QueryResult pred = evaluate(parse_query("items() prop predicateJoint"), g);
    CHECK(std::get<ValueSequence>(pred).values[0].as_text() == "False");
  }
  SUBCASE("duplicate property names are rejected") {
    CHECK_THROWS_AS(bind_constrained_property(g, srl.cc, srl.fx.item_type,
                                              "predicateJoint", "isPredicate"),
                    Error);
  }
}
