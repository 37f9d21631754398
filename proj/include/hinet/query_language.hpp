#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hinet/query_engine.hpp"

namespace hinet {

// Textual query surface. Grammar:
//
//   query    := source { stage }
//   source   := IDENT "(" [ STRING ] ")"
//   stage    := "~>" [ "-" ] IDENT
//             | "prop" IDENT
//             | "filter" "(" IDENT CMP literal ")"
//             | "neighborAt"     "(" INT [ "," edges ] ")"
//             | "neighborWithin" "(" INT [ "," edges ] ")"
//             | "path" "(" STRING [ "," INT ] ")"
//             | "groupBy" "(" IDENT "," IDENT ")"
//             | agg
//   agg      := "count" | "sum" | "product" | "max" | "min" | "distinct"
//             | "mkString" "(" STRING ")"
//   CMP      := "==" | "!=" | "<" | "<=" | ">" | ">="
//   edges    := "[" IDENT { "," IDENT } "]"
//   literal  := STRING | INT | REAL | "true" | "false"
//
// `count` is the textual name of the `size` aggregation.

namespace plan {

struct SourceStage {
  std::string node;
  std::optional<std::string> instance_id;
  TextPosition pos;
};

struct TraverseStage {
  std::string edge;
  bool reverse = false;
  TextPosition pos;
};

struct PropStage {
  std::string property;
  TextPosition pos;
};

struct FilterStage {
  std::string property;
  Cmp cmp = Cmp::Eq;
  Value literal;
  TextPosition pos;
};

struct NeighborStage {
  bool within = false;
  std::int64_t distance = 0;
  std::vector<std::string> edges;
  TextPosition pos;
};

struct PathStage {
  std::string target;
  std::optional<std::int64_t> max_len;
  TextPosition pos;
};

struct GroupByStage {
  std::string key;
  std::string value;
  TextPosition pos;
};

struct AggregateStage {
  AggregateFn fn = AggregateFn::Count;
  std::string separator;
  TextPosition pos;
};

struct QueryPlan;

// Builder-only stage: explicit joins are declared through the API, not the
// inline grammar, so this stage has no textual form.
struct JoinStage {
  std::shared_ptr<QueryPlan> other;
  std::string matching_sensor;
  std::string name;
  TextPosition pos;
};

using Stage = std::variant<TraverseStage, PropStage, FilterStage, NeighborStage,
                           PathStage, GroupByStage, AggregateStage, JoinStage>;

struct QueryPlan {
  SourceStage source;
  std::vector<Stage> stages;
};

bool operator==(const QueryPlan& a, const QueryPlan& b);

}  // namespace plan

using plan::QueryPlan;

QueryPlan parse_query(const std::string& text);

// Canonical text; parse_query(print_query(p)) reproduces p for every
// grammar-expressible plan. Plans containing builder-only stages have no
// textual form and raise PlanError.
std::string print_query(const QueryPlan& plan);

// Kind of a (partial) query result.
enum class ResultKind { Instances, Values, Scalar, Grouping, Path };

struct StageType {
  ResultKind kind = ResultKind::Instances;
  // For Instances when statically known; neighborhood results are unknown.
  std::optional<SetType> set_type;
  // For Values/Scalar when statically known.
  std::optional<ValueKind> value_kind;
};

struct TypedPlan {
  const QueryPlan* plan = nullptr;
  StageType source_type;
  std::vector<StageType> stage_types;  // type AFTER each stage
  StageType result() const {
    return stage_types.empty() ? source_type : stage_types.back();
  }
};

// Resolves names against the schema and checks stage chaining; positions in
// raised PlanErrors point into the original text.
TypedPlan typecheck(const QueryPlan& plan, const InstanceGraph& graph);

using QueryResult =
    std::variant<InstanceSet, ValueSequence, Value, Grouping, EdgePath>;

// Evaluates a plan. When `pivot` is given, a source with no instance id and
// the pivot's node type binds to {pivot} instead of all instances.
QueryResult evaluate(const QueryPlan& plan, const InstanceGraph& graph,
                     const NodeInstance* pivot = nullptr);

// Fixed display format used by the CLI and REPL: instance sets as one line of
// ids, value sequences one value per line, scalars bare, groupings as
// "key: v1,v2,..." sorted by key, paths as signed edge names.
std::string format_result(const QueryResult& result,
                          const InstanceGraph& graph);

}  // namespace hinet
