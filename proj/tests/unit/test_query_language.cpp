#include "doctest.h"

#include "../support/corpus.hpp"

using namespace hinet;
using namespace hinet::testing;

TEST_CASE("parsing the traversal query shape") {
  QueryPlan plan =
      parse_query("phrases(\"x\") ~> phraseToRelation ~> -phraseToRelation");
  CHECK(plan.source.node == "phrases");
  REQUIRE(plan.source.instance_id);
  CHECK(*plan.source.instance_id == "x");
  REQUIRE(plan.stages.size() == 2);
  const auto& t0 = std::get<plan::TraverseStage>(plan.stages[0]);
  CHECK(t0.edge == "phraseToRelation");
  CHECK_FALSE(t0.reverse);
  const auto& t1 = std::get<plan::TraverseStage>(plan.stages[1]);
  CHECK(t1.reverse);
}

TEST_CASE("parsing groupBy and aggregations") {
  QueryPlan plan = parse_query("genes() groupBy(KEGG, geneName)");
  REQUIRE(plan.stages.size() == 1);
  const auto& g = std::get<plan::GroupByStage>(plan.stages[0]);
  CHECK(g.key == "KEGG");
  CHECK(g.value == "geneName");

  QueryPlan counted = parse_query("words() filter(posTag == \"NN\") count");
  REQUIRE(counted.stages.size() == 2);
  const auto& f = std::get<plan::FilterStage>(counted.stages[0]);
  CHECK(f.cmp == Cmp::Eq);
  CHECK(f.literal.strict_equals(Value::text("NN")));
  CHECK(std::get<plan::AggregateStage>(counted.stages[1]).fn ==
        AggregateFn::Count);
}

TEST_CASE("incomplete stages are positioned parse errors") {
  try {
    parse_query("genes() ~>");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    REQUIRE(e.position());
    CHECK(e.position()->offset == 10);
  }
}

TEST_CASE("malformed corpus yields positioned errors") {
  for (const std::string& text : malformed_corpus()) {
    CAPTURE(text);
    try {
      parse_query(text);
      FAIL_CHECK("expected ParseError for: " << text);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ParseError);
      REQUIRE(e.position());
      CHECK(e.position()->offset <= text.size());
    }
  }
  CHECK(malformed_corpus().size() >= 10);
}

TEST_CASE("print-parse round trip over the corpus") {
  CHECK(query_corpus().size() >= 30);
  for (const CorpusEntry& entry : query_corpus()) {
    CAPTURE(entry.text);
    QueryPlan plan = parse_query(entry.text);
    std::string printed = print_query(plan);
    QueryPlan reparsed = parse_query(printed);
    CHECK(plan == reparsed);
    CHECK(print_query(reparsed) == printed);
  }
}

TEST_CASE("round trip preserves literal kinds and escapes") {
  QueryPlan p1 = parse_query("words() filter(weight == 1.0)");
  QueryPlan p2 = parse_query("words() filter(length == 1)");
  CHECK_FALSE(p1 == p2);
  CHECK(parse_query(print_query(p1)) == p1);
  CHECK(parse_query(print_query(p2)) == p2);

  QueryPlan esc = parse_query("words() prop text mkString(\"a\\\"b\\\\c\\n\")");
  CHECK(parse_query(print_query(esc)) == esc);

  QueryPlan neg = parse_query("words() filter(length == -3)");
  CHECK(parse_query(print_query(neg)) == neg);
}

TEST_CASE("typecheck resolves names and stage chaining") {
  GraphFixture fx = corpus_fixture();
  const InstanceGraph& g = *fx.graph;

  auto plan_error = [&](const std::string& text) {
    try {
      typecheck(parse_query(text), g);
      return false;
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::PlanError);
      return true;
    }
  };

  CHECK(plan_error("nowhere() count"));
  CHECK(plan_error("words() ~> nosuchedge"));
  CHECK(plan_error("words() prop nosuchprop"));
  CHECK(plan_error("sentences() ~> follows count"));  // edge source mismatch
  CHECK(plan_error("words() prop posTag sum"));       // text into sum
  CHECK(plan_error("words() count count"));           // count of a scalar
  CHECK(plan_error("words() filter(posTag == 3)"));   // kind mismatch
  CHECK(plan_error("words() filter(isStop < true)")); // bool ordering
  CHECK(plan_error("words() neighborAt(-1)"));
  CHECK(plan_error("words() neighborAt(1, [nosuchedge])"));
  CHECK(plan_error("words() prop posTag ~> follows"));

  TypedPlan typed =
      typecheck(parse_query("words() filter(posTag == \"NN\") count"), g);
  CHECK(typed.result().kind == ResultKind::Scalar);
  CHECK(typed.result().value_kind == ValueKind::Int);

  TypedPlan values = typecheck(parse_query("words() prop weight"), g);
  CHECK(values.result().kind == ResultKind::Values);
  CHECK(values.result().value_kind == ValueKind::Real);
}

TEST_CASE("evaluate matches hand-composed engine calls on the corpus") {
  GraphFixture fx = corpus_fixture();
  const InstanceGraph& g = *fx.graph;
  for (const CorpusEntry& entry : query_corpus()) {
    CAPTURE(entry.text);
    QueryResult from_text = evaluate(parse_query(entry.text), g);
    QueryResult direct = entry.direct(g);
    CHECK(results_equal(from_text, direct));
  }
}

TEST_CASE("evaluate basics") {
  GraphFixture fx = corpus_fixture();
  const InstanceGraph& g = *fx.graph;
  QueryResult r = evaluate(parse_query("sentences() count"), g);
  CHECK(std::get<Value>(r).as_int() == 2);

  SUBCASE("unknown source instance") {
    try {
      evaluate(parse_query("words(\"nope\") count"), g);
      FAIL("expected UnknownInstance");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnknownInstance);
    }
  }
  SUBCASE("identical queries give identical ordered results") {
    QueryResult a = evaluate(parse_query("words() ~> -sentenceToWord"), g);
    QueryResult b = evaluate(parse_query("words() ~> -sentenceToWord"), g);
    CHECK(results_equal(a, b));
  }
}

TEST_CASE("pivoted evaluation binds the bare source to the root") {
  GraphFixture fx = corpus_fixture();
  const InstanceGraph& g = *fx.graph;
  const NodeInstance* w4 =
      g.find_instance(fx.schema->node_id_or_throw("words"), "w4");
  QueryResult r = evaluate(parse_query("words() prop text"), g, w4);
  const ValueSequence& seq = std::get<ValueSequence>(r);
  REQUIRE(seq.size() == 1);
  CHECK(seq.values[0].as_text() == "dog");

  // A pivot of a different node type leaves the source unbound.
  QueryResult all = evaluate(parse_query("sentences() count"), g, w4);
  CHECK(std::get<Value>(all).as_int() == 2);
}

namespace {

// Random grammar-valid plans over the corpus schema, built by walking the
// same typing rules the checker enforces. Exercises chaining closure plus
// determinism and round-trip on plans nobody wrote by hand.
std::string random_query(Rng& rng) {
  struct PropPick {
    const char* name;
    const char* filter;  // ready-made filter stage text
    bool numeric;
  };
  static const std::vector<PropPick> word_props{
      {"posTag", "filter(posTag == \"NN\")", false},
      {"length", "filter(length > 2)", true},
      {"weight", "filter(weight < 1.5)", true},
      {"isStop", "filter(isStop == true)", false},
      {"tags", "filter(tags == \"det\")", false},
      {"vals", "filter(vals == 2.0)", true},
  };

  std::string node = rng.below(2) ? "words" : "sentences";
  std::string text = node + "()";
  enum class State { WordSet, SentenceSet, TokenSet, UnknownSet, Values, Done };
  State state = node == "words" ? State::WordSet : State::SentenceSet;
  bool numeric_values = false;
  std::size_t steps = 1 + rng.below(5);
  for (std::size_t s = 0; s < steps && state != State::Done; ++s) {
    switch (state) {
      case State::WordSet:
        switch (rng.below(6)) {
          case 0: text += " ~> -sentenceToWord"; state = State::SentenceSet; break;
          case 1: text += " ~> follows"; break;
          case 2: text += " " + std::string(word_props[rng.below(word_props.size())].filter); break;
          case 3: {
            const PropPick& p = word_props[rng.below(word_props.size())];
            text += std::string(" prop ") + p.name;
            numeric_values = p.numeric;
            state = State::Values;
            break;
          }
          case 4:
            text += " neighborWithin(" + std::to_string(rng.below(3)) + ")";
            state = State::UnknownSet;
            break;
          default: text += " count"; state = State::Done;
        }
        break;
      case State::SentenceSet:
        switch (rng.below(4)) {
          case 0: text += " ~> sentenceToWord"; state = State::WordSet; break;
          case 1: text += " ~> sentenceToToken"; state = State::TokenSet; break;
          case 2: text += " prop text"; numeric_values = false; state = State::Values; break;
          default: text += " count"; state = State::Done;
        }
        break;
      case State::TokenSet:
        switch (rng.below(3)) {
          case 0: text += " prop position"; numeric_values = true; state = State::Values; break;
          case 1: text += " ~> -sentenceToToken"; state = State::SentenceSet; break;
          default: text += " count"; state = State::Done;
        }
        break;
      case State::UnknownSet:
        switch (rng.below(3)) {
          case 0:
            text += " neighborAt(" + std::to_string(rng.below(3)) +
                    ", [follows, sentenceToWord])";
            break;
          case 1: text += " neighborWithin(1)"; break;
          default: text += " count"; state = State::Done;
        }
        break;
      case State::Values:
        switch (rng.below(4)) {
          case 0: text += " distinct count"; state = State::Done; break;
          case 1: text += " mkString(\"|\")"; state = State::Done; break;
          case 2:
            text += numeric_values ? " sum" : " count";
            state = State::Done;
            break;
          default: text += " count"; state = State::Done;
        }
        break;
      case State::Done: break;
    }
  }
  return text;
}

struct Outcome {
  bool ok = false;
  std::string rendering;  // formatted result or error code
};

Outcome outcome_of(const std::string& text, const InstanceGraph& g) {
  Outcome out;
  try {
    QueryResult r = evaluate(parse_query(text), g);
    out.ok = true;
    out.rendering = format_result(r, g);
  } catch (const Error& e) {
    out.rendering = error_code_name(e.code());
  }
  return out;
}

}  // namespace

TEST_CASE("random chained plans evaluate deterministically and round-trip") {
  GraphFixture fx = corpus_fixture();
  const InstanceGraph& g = *fx.graph;
  Rng rng(20250810);
  std::size_t evaluated = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::string text = random_query(rng);
    CAPTURE(text);
    Outcome first = outcome_of(text, g);
    Outcome second = outcome_of(text, g);
    CHECK(first.ok == second.ok);
    CHECK(first.rendering == second.rendering);

    QueryPlan plan = parse_query(text);
    std::string printed = print_query(plan);
    CHECK(parse_query(printed) == plan);
    Outcome reprinted = outcome_of(printed, g);
    CHECK(reprinted.rendering == first.rendering);
    if (first.ok) ++evaluated;
  }
  // The generator follows the typing rules, so most plans must evaluate.
  CHECK(evaluated >= 250);
}

TEST_CASE("format_result fixed shapes") {
  GraphFixture fx = corpus_fixture();
  const InstanceGraph& g = *fx.graph;
  CHECK(format_result(evaluate(parse_query("words() filter(posTag == \"NN\")"), g),
                      g) == "w2 w4");
  CHECK(format_result(evaluate(parse_query("sentences() count"), g), g) == "2");
  CHECK(format_result(evaluate(parse_query("words(\"w1\") prop vals"), g), g) ==
        "1.0;2.0");
  CHECK(format_result(evaluate(parse_query("words() groupBy(posTag, text)"), g),
                      g) == "DT: the,a\nNN: cat,dog\nVB: runs");
  // w3-s2-w5 and w3-w4-w5 tie at length two; the sentence edge is declared
  // first, so BFS settles on it.
  CHECK(format_result(evaluate(parse_query("words(\"w3\") path(\"w5\")"), g),
                      g) == "sentenceToWord- sentenceToWord+");
  CHECK(format_result(evaluate(parse_query("words(\"w3\") path(\"w3\")"), g),
                      g) == "<self>");
  CHECK(format_result(
            evaluate(parse_query("words(\"w3\") path(\"w5\", 1)"), g), g) ==
        "<no path>");
}
