#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hinet/instance_graph.hpp"

namespace hinet {

// Static type of an instance collection. Join results carry the two member
// types; neighborhood results may mix node types.
struct SetType {
  enum class Tag { Uniform, Composed, Mixed };
  Tag tag = Tag::Uniform;
  NodeTypeId type;          // Uniform
  NodeTypeId left, right;   // Composed
  std::string name;

  static SetType uniform(const SchemaGraph& schema, NodeTypeId t) {
    return SetType{Tag::Uniform, t, {}, {}, schema.node(t).name};
  }
  static SetType composed(const SchemaGraph& schema, NodeTypeId l, NodeTypeId r,
                          std::string name) {
    if (name.empty())
      name = schema.node(l).name + "×" + schema.node(r).name;
    return SetType{Tag::Composed, {}, l, r, std::move(name)};
  }
  static SetType mixed() { return SetType{Tag::Mixed, {}, {}, {}, "<mixed>"}; }
};

// Ordered, duplicate-free collection of instances. Composed instances made by
// joins live in the shared arena so the set stays cheap to copy.
struct InstanceSet {
  SetType type;
  std::vector<const NodeInstance*> members;
  std::shared_ptr<std::deque<NodeInstance>> arena;

  std::size_t size() const { return members.size(); }
  bool empty() const { return members.empty(); }
};

// Ordered value collection; duplicates are kept.
struct ValueSequence {
  std::vector<Value> values;

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
};

enum class Direction { Forward, Reverse };

struct PathStep {
  EdgeTypeId edge;
  bool forward;
  const NodeInstance* to;
};

// Shortest edge sequence between two instances. `found` distinguishes an
// empty path at distance zero from "no path".
struct EdgePath {
  bool found = false;
  std::vector<PathStep> steps;

  std::size_t length() const { return steps.size(); }
};

// group_by result; groups keep first-encounter key order.
struct Grouping {
  std::vector<std::pair<Value, std::vector<Value>>> groups;

  const std::vector<Value>* find(const Value& key) const {
    for (const auto& [k, vs] : groups)
      if (k.equals(key)) return &vs;
    return nullptr;
  }
};

enum class AggregateFn { Count, Sum, Product, Max, Min, Distinct, MkString };

struct AggregateOutcome {
  bool is_sequence = false;
  Value scalar;
  ValueSequence sequence;
};

struct NeighborOptions {
  // Empty means every edge type participates.
  std::vector<EdgeTypeId> edges;
  // The data model indexes both directions, so the default view is
  // undirected; set false for directed distance.
  bool undirected = true;
};

InstanceSet all_instances(const InstanceGraph& graph, NodeTypeId node);
InstanceSet singleton(const InstanceGraph& graph, const NodeInstance* instance);

InstanceSet traverse(const InstanceGraph& graph, const InstanceSet& input,
                     EdgeTypeId edge, Direction direction);

ValueSequence project(const InstanceGraph& graph, const InstanceSet& input,
                      std::string_view property);

InstanceSet filter(const InstanceGraph& graph, const InstanceSet& input,
                   std::string_view property, Cmp cmp, const Value& literal);

InstanceSet join(const InstanceGraph& graph, const InstanceSet& left,
                 const InstanceSet& right,
                 const std::function<bool(const NodeInstance&,
                                          const NodeInstance&)>& predicate,
                 const std::string& name = {});

InstanceSet neighbor_at(const InstanceGraph& graph, const NodeInstance& x,
                        std::int64_t n, const NeighborOptions& options = {});
InstanceSet neighbor_at(const InstanceGraph& graph, const InstanceSet& input,
                        std::int64_t n, const NeighborOptions& options = {});

InstanceSet neighbor_within(const InstanceGraph& graph, const NodeInstance& x,
                            std::int64_t n, const NeighborOptions& options = {});
InstanceSet neighbor_within(const InstanceGraph& graph, const InstanceSet& input,
                            std::int64_t n, const NeighborOptions& options = {});

EdgePath shortest_path(const InstanceGraph& graph, const NodeInstance& x,
                       const NodeInstance& y,
                       std::optional<std::int64_t> max_len = std::nullopt,
                       const NeighborOptions& options = {});

AggregateOutcome aggregate(const ValueSequence& input, AggregateFn fn,
                           const std::string& separator = {});

Grouping group_by(const InstanceGraph& graph, const InstanceSet& input,
                  std::string_view key_property,
                  std::string_view value_property);

// Property metadata resolution that understands composed set types
// ("left.<p>" / "right.<p>").
std::optional<InstanceGraph::PropertyInfo> resolve_property(
    const InstanceGraph& graph, const SetType& type, std::string_view property);

}  // namespace hinet
