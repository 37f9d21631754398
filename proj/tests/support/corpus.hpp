#pragma once

// Query corpus for the round-trip and front-end/back-end equivalence checks:
// every grammar production appears at least once, and each entry carries the
// equivalent hand-composed engine calls.

#include <functional>
#include <string>
#include <vector>

#include "builders.hpp"
#include "hinet/query_language.hpp"

namespace hinet::testing {

// Two sentences, five words with attributes of every kind, a follows-chain,
// and whitespace tokens generated from the sentence text.
inline GraphFixture corpus_fixture() {
  GraphFixture fx;
  SchemaGraph& s = *fx.schema;
  NodeTypeId sentences = s.declare_node("sentences");
  NodeTypeId words = s.declare_node("words");
  NodeTypeId tokens = s.declare_node("tokens");
  s.declare_property(sentences, "text", ValueKind::Text, false, "attr(text)");
  s.declare_property(words, "text", ValueKind::Text, false, "attr(text)");
  s.declare_property(words, "posTag", ValueKind::Text, false, "attr(posTag)");
  s.declare_property(words, "length", ValueKind::Int, false, "attr(length)");
  s.declare_property(words, "weight", ValueKind::Real, false, "attr(weight)");
  s.declare_property(words, "isStop", ValueKind::Bool, false, "attr(isStop)");
  s.declare_property(words, "tags", ValueKind::List, false, "attr(tags)",
                     ValueKind::Text);
  s.declare_property(words, "vals", ValueKind::List, true, "attr(vals)",
                     ValueKind::Real);
  s.declare_property(tokens, "text", ValueKind::Text, false, "attr(text)");
  s.declare_property(tokens, "position", ValueKind::Int, false,
                     "attr(position)");
  EdgeTypeId s2w = s.declare_edge("sentenceToWord", sentences, words);
  s.add_edge_sensor(s2w, "key_eq(id,sid)");
  EdgeTypeId follows = s.declare_edge("follows", words, words);
  s.add_edge_sensor(follows, "key_eq(next,id)");
  EdgeTypeId s2t = s.declare_edge("sentenceToToken", sentences, tokens);
  s.add_edge_sensor(s2t, "tokenize_ws(text)");
  fx.freeze();

  auto text_list = [](std::vector<std::string> items) {
    std::vector<Value> vs;
    for (auto& i : items) vs.push_back(Value::text(std::move(i)));
    return Value::list(ValueKind::Text, std::move(vs));
  };
  auto real_list = [](std::vector<double> items) {
    std::vector<Value> vs;
    for (double i : items) vs.push_back(Value::real(i));
    return Value::list(ValueKind::Real, std::move(vs), true);
  };
  auto word = [&](std::string id, std::string sid, std::string text,
                  std::string pos, std::int64_t length, double weight,
                  bool stop, Value tags, Value vals, std::string next) {
    return make_instance(std::move(id),
                         {{"sid", Value::text(std::move(sid))},
                          {"text", Value::text(std::move(text))},
                          {"posTag", Value::text(std::move(pos))},
                          {"length", Value::integer(length)},
                          {"weight", Value::real(weight)},
                          {"isStop", Value::boolean(stop)},
                          {"tags", std::move(tags)},
                          {"vals", std::move(vals)},
                          {"next", Value::text(std::move(next))}});
  };

  fx.graph->populate(
      sentences, {make_instance("s1", {{"text", Value::text("the cat")}}),
                  make_instance("s2", {{"text", Value::text("a dog runs")}})});
  fx.graph->populate(
      words,
      {word("w1", "s1", "the", "DT", 3, 0.5, true, text_list({"det", "stop"}),
            real_list({1.0, 2.0}), "w2"),
       word("w2", "s1", "cat", "NN", 3, 1.5, false, text_list({"noun"}),
            real_list({0.5}), ""),
       word("w3", "s2", "a", "DT", 1, 0.2, true, text_list({"det", "stop"}),
            real_list({2.0}), "w4"),
       word("w4", "s2", "dog", "NN", 3, 1.0, false, text_list({"noun"}),
            real_list({1.5, 0.5}), "w5"),
       word("w5", "s2", "runs", "VB", 4, 2.5, false, text_list({"verb"}),
            real_list({3.0}), "")});
  fx.graph->seal();
  return fx;
}

struct CorpusEntry {
  std::string text;
  std::function<QueryResult(const InstanceGraph&)> direct;
};

inline std::vector<CorpusEntry> query_corpus() {
  auto node = [](const InstanceGraph& g, const char* name) {
    return all_instances(g, g.schema().node_id_or_throw(name));
  };
  auto one = [](const InstanceGraph& g, const char* type, const char* id) {
    return singleton(g, g.find_instance(g.schema().node_id_or_throw(type), id));
  };
  auto edge = [](const InstanceGraph& g, const char* name) {
    return g.schema().edge_id_or_throw(name);
  };
  auto agg = [](const ValueSequence& seq, AggregateFn fn,
                const std::string& sep = {}) -> QueryResult {
    AggregateOutcome out = aggregate(seq, fn, sep);
    if (out.is_sequence) return out.sequence;
    return out.scalar;
  };
  auto count_of = [](const InstanceSet& set) -> QueryResult {
    return Value::integer(static_cast<std::int64_t>(set.size()));
  };
  using G = const InstanceGraph&;

  return {
      {"words() count", [=](G g) { return count_of(node(g, "words")); }},
      {"words(\"w2\") prop text",
       [=](G g) { return project(g, one(g, "words", "w2"), "text"); }},
      {"sentences(\"s1\") ~> sentenceToWord",
       [=](G g) {
         return traverse(g, one(g, "sentences", "s1"), edge(g, "sentenceToWord"),
                         Direction::Forward);
       }},
      {"words(\"w2\") ~> -sentenceToWord",
       [=](G g) {
         return traverse(g, one(g, "words", "w2"), edge(g, "sentenceToWord"),
                         Direction::Reverse);
       }},
      {"sentences(\"s1\") ~> sentenceToWord prop posTag",
       [=](G g) {
         return project(g,
                        traverse(g, one(g, "sentences", "s1"),
                                 edge(g, "sentenceToWord"), Direction::Forward),
                        "posTag");
       }},
      {"words() filter(posTag == \"NN\")",
       [=](G g) {
         return filter(g, node(g, "words"), "posTag", Cmp::Eq,
                       Value::text("NN"));
       }},
      {"words() filter(length != 3)",
       [=](G g) {
         return filter(g, node(g, "words"), "length", Cmp::Ne,
                       Value::integer(3));
       }},
      {"words() filter(weight < 1.0)",
       [=](G g) {
         return filter(g, node(g, "words"), "weight", Cmp::Lt, Value::real(1.0));
       }},
      {"words() filter(weight <= 0.5)",
       [=](G g) {
         return filter(g, node(g, "words"), "weight", Cmp::Le, Value::real(0.5));
       }},
      {"words() filter(length > 3)",
       [=](G g) {
         return filter(g, node(g, "words"), "length", Cmp::Gt,
                       Value::integer(3));
       }},
      {"words() filter(weight >= 1.5)",
       [=](G g) {
         return filter(g, node(g, "words"), "weight", Cmp::Ge, Value::real(1.5));
       }},
      {"words() filter(isStop == true)",
       [=](G g) {
         return filter(g, node(g, "words"), "isStop", Cmp::Eq,
                       Value::boolean(true));
       }},
      {"words() filter(isStop != false)",
       [=](G g) {
         return filter(g, node(g, "words"), "isStop", Cmp::Ne,
                       Value::boolean(false));
       }},
      {"words() filter(tags == \"det\")",
       [=](G g) {
         return filter(g, node(g, "words"), "tags", Cmp::Eq, Value::text("det"));
       }},
      {"words() filter(weight == 0.2)",
       [=](G g) {
         return filter(g, node(g, "words"), "weight", Cmp::Eq, Value::real(0.2));
       }},
      {"words() prop length sum",
       [=](G g) {
         return agg(project(g, node(g, "words"), "length"), AggregateFn::Sum);
       }},
      {"words() prop length max",
       [=](G g) {
         return agg(project(g, node(g, "words"), "length"), AggregateFn::Max);
       }},
      {"words() prop weight min",
       [=](G g) {
         return agg(project(g, node(g, "words"), "weight"), AggregateFn::Min);
       }},
      {"words() prop length product",
       [=](G g) {
         return agg(project(g, node(g, "words"), "length"),
                    AggregateFn::Product);
       }},
      {"words() prop tags distinct",
       [=](G g) {
         return agg(project(g, node(g, "words"), "tags"), AggregateFn::Distinct);
       }},
      {"words() prop posTag mkString(\", \")",
       [=](G g) {
         return agg(project(g, node(g, "words"), "posTag"),
                    AggregateFn::MkString, ", ");
       }},
      {"words() prop vals sum",
       [=](G g) {
         return agg(project(g, node(g, "words"), "vals"), AggregateFn::Sum);
       }},
      {"words() groupBy(posTag, text)",
       [=](G g) { return group_by(g, node(g, "words"), "posTag", "text"); }},
      {"words() groupBy(tags, text) count",
       [=](G g) {
         Grouping grouping = group_by(g, node(g, "words"), "tags", "text");
         return Value::integer(static_cast<std::int64_t>(grouping.groups.size()));
       }},
      {"words(\"w1\") neighborAt(1)",
       [=](G g) {
         return neighbor_at(g, one(g, "words", "w1"), 1, NeighborOptions{});
       }},
      {"words(\"w1\") neighborAt(1, [follows])",
       [=](G g) {
         NeighborOptions opt;
         opt.edges = {edge(g, "follows")};
         return neighbor_at(g, one(g, "words", "w1"), 1, opt);
       }},
      {"words(\"w3\") neighborAt(2, [follows, sentenceToWord])",
       [=](G g) {
         NeighborOptions opt;
         opt.edges = {edge(g, "follows"), edge(g, "sentenceToWord")};
         return neighbor_at(g, one(g, "words", "w3"), 2, opt);
       }},
      {"words(\"w3\") neighborWithin(2, [follows])",
       [=](G g) {
         NeighborOptions opt;
         opt.edges = {edge(g, "follows")};
         return neighbor_within(g, one(g, "words", "w3"), 2, opt);
       }},
      {"words(\"w1\") neighborWithin(0)",
       [=](G g) {
         return neighbor_within(g, one(g, "words", "w1"), 0, NeighborOptions{});
       }},
      {"words(\"w3\") path(\"w5\")",
       [=](G g) {
         return shortest_path(g, *one(g, "words", "w3").members[0],
                              *one(g, "words", "w5").members[0]);
       }},
      {"words(\"w3\") path(\"w5\", 1)",
       [=](G g) {
         return shortest_path(g, *one(g, "words", "w3").members[0],
                              *one(g, "words", "w5").members[0], 1);
       }},
      {"words(\"w3\") path(\"w3\")",
       [=](G g) {
         return shortest_path(g, *one(g, "words", "w3").members[0],
                              *one(g, "words", "w3").members[0]);
       }},
      {"words(\"w3\") path(\"w5\", 2) count",
       [=](G g) -> QueryResult {
         EdgePath p = shortest_path(g, *one(g, "words", "w3").members[0],
                                    *one(g, "words", "w5").members[0], 2);
         return Value::integer(static_cast<std::int64_t>(p.length()));
       }},
      {"sentences() ~> sentenceToToken",
       [=](G g) {
         return traverse(g, node(g, "sentences"), edge(g, "sentenceToToken"),
                         Direction::Forward);
       }},
      {"tokens() prop position max",
       [=](G g) {
         return agg(project(g, node(g, "tokens"), "position"), AggregateFn::Max);
       }},
      {"sentences(\"s2\") ~> sentenceToToken prop text mkString(\"-\")",
       [=](G g) {
         return agg(project(g,
                            traverse(g, one(g, "sentences", "s2"),
                                     edge(g, "sentenceToToken"),
                                     Direction::Forward),
                            "text"),
                    AggregateFn::MkString, "-");
       }},
      {"words() prop weight distinct count",
       [=](G g) {
         AggregateOutcome d = aggregate(project(g, node(g, "words"), "weight"),
                                        AggregateFn::Distinct);
         return Value::integer(static_cast<std::int64_t>(d.sequence.size()));
       }},
  };
}

// Malformed inputs; each must raise ParseError with a position inside the
// text.
inline std::vector<std::string> malformed_corpus() {
  return {
      "",
      "words(",
      "words() ~>",
      "words() prop",
      "words() filter(posTag = \"NN\")",
      "words() filter(posTag == )",
      "words() neighborAt()",
      "words() neighborAt(1, [])",
      "words() path(w5)",
      "words() groupBy(posTag)",
      "words() bogus",
      "words() mkString(3)",
      "words() filter(text == \"abc)",
      "12()",
  };
}

inline bool results_equal(const QueryResult& a, const QueryResult& b) {
  if (a.index() != b.index()) return false;
  if (const InstanceSet* sa = std::get_if<InstanceSet>(&a)) {
    const InstanceSet& sb = std::get<InstanceSet>(b);
    if (sa->size() != sb.size()) return false;
    for (std::size_t i = 0; i < sa->size(); ++i)
      if (sa->members[i]->id != sb.members[i]->id ||
          !(sa->members[i]->type == sb.members[i]->type))
        return false;
    return true;
  }
  if (const ValueSequence* va = std::get_if<ValueSequence>(&a)) {
    const ValueSequence& vb = std::get<ValueSequence>(b);
    if (va->size() != vb.size()) return false;
    for (std::size_t i = 0; i < va->size(); ++i)
      if (!va->values[i].strict_equals(vb.values[i])) return false;
    return true;
  }
  if (const Value* va = std::get_if<Value>(&a))
    return va->strict_equals(std::get<Value>(b));
  if (const Grouping* ga = std::get_if<Grouping>(&a)) {
    const Grouping& gb = std::get<Grouping>(b);
    if (ga->groups.size() != gb.groups.size()) return false;
    for (std::size_t i = 0; i < ga->groups.size(); ++i) {
      if (!ga->groups[i].first.strict_equals(gb.groups[i].first)) return false;
      const auto& va = ga->groups[i].second;
      const auto& vb = gb.groups[i].second;
      if (va.size() != vb.size()) return false;
      for (std::size_t j = 0; j < va.size(); ++j)
        if (!va[j].strict_equals(vb[j])) return false;
    }
    return true;
  }
  const EdgePath& pa = std::get<EdgePath>(a);
  const EdgePath& pb = std::get<EdgePath>(b);
  if (pa.found != pb.found || pa.steps.size() != pb.steps.size()) return false;
  for (std::size_t i = 0; i < pa.steps.size(); ++i)
    if (!(pa.steps[i].edge == pb.steps[i].edge) ||
        pa.steps[i].forward != pb.steps[i].forward ||
        pa.steps[i].to->id != pb.steps[i].to->id)
      return false;
  return true;
}

}  // namespace hinet::testing
