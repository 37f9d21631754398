#include "hinet/query_engine.hpp"

#include <algorithm>
#include <queue>
#include <unordered_map>
#include <unordered_set>

namespace hinet {

namespace {

std::uint64_t instance_key(const NodeInstance* p) {
  return (static_cast<std::uint64_t>(p->type.index) << 32) | p->ordinal;
}

void require_uniform(const InstanceSet& input, const char* op) {
  if (input.type.tag == SetType::Tag::Mixed)
    raise(ErrorCode::TypeMismatch,
          std::string(op) + " requires a single-typed instance collection");
}

// Edge types incident to BFS expansion, in schema declaration order.
std::vector<EdgeTypeId> effective_edges(const InstanceGraph& graph,
                                        const NeighborOptions& options) {
  if (!options.edges.empty()) return options.edges;
  std::vector<EdgeTypeId> all;
  all.reserve(graph.schema().edge_count());
  for (std::uint32_t e = 0; e < graph.schema().edge_count(); ++e)
    all.push_back(EdgeTypeId{e});
  return all;
}

struct BfsHop {
  const NodeInstance* to;
  EdgeTypeId edge;
  bool forward;
};

// Neighbors of `x` in deterministic order: edge types in declaration order,
// forward adjacency before reverse, lists in insertion order.
void for_each_hop(const InstanceGraph& graph, const NodeInstance* x,
                  const std::vector<EdgeTypeId>& edges, bool undirected,
                  const std::function<void(const BfsHop&)>& visit) {
  for (EdgeTypeId e : edges) {
    const auto& def = graph.schema().edge(e);
    if (def.source == x->type)
      for (const NodeInstance* n : graph.forward_neighbors(e, *x))
        visit(BfsHop{n, e, true});
    if (undirected && def.destination == x->type)
      for (const NodeInstance* n : graph.reverse_neighbors(e, *x))
        visit(BfsHop{n, e, false});
  }
}

}  // namespace

std::optional<InstanceGraph::PropertyInfo> resolve_property(
    const InstanceGraph& graph, const SetType& type,
    std::string_view property) {
  switch (type.tag) {
    case SetType::Tag::Uniform:
      return graph.property_info(type.type, property);
    case SetType::Tag::Composed:
      if (property.substr(0, 5) == "left.")
        return graph.property_info(type.left, property.substr(5));
      if (property.substr(0, 6) == "right.")
        return graph.property_info(type.right, property.substr(6));
      return std::nullopt;
    case SetType::Tag::Mixed:
      return std::nullopt;
  }
  return std::nullopt;
}

InstanceSet all_instances(const InstanceGraph& graph, NodeTypeId node) {
  InstanceSet out;
  out.type = SetType::uniform(graph.schema(), node);
  for (const NodeInstance& inst : graph.instances_of(node))
    out.members.push_back(&inst);
  return out;
}

InstanceSet singleton(const InstanceGraph& graph,
                      const NodeInstance* instance) {
  if (!instance) raise(ErrorCode::UnknownInstance, "null instance");
  InstanceSet out;
  out.type = SetType::uniform(graph.schema(), instance->type);
  out.members.push_back(instance);
  return out;
}

InstanceSet traverse(const InstanceGraph& graph, const InstanceSet& input,
                     EdgeTypeId edge, Direction direction) {
  const auto& def = graph.schema().edge(edge);
  NodeTypeId expected =
      direction == Direction::Forward ? def.source : def.destination;
  NodeTypeId produced =
      direction == Direction::Forward ? def.destination : def.source;
  if (input.type.tag == SetType::Tag::Mixed && input.members.empty()) {
    InstanceSet out;
    out.type = SetType::uniform(graph.schema(), produced);
    return out;
  }
  require_uniform(input, "traverse");
  if (input.type.tag != SetType::Tag::Uniform || !(input.type.type == expected))
    raise(ErrorCode::TypeMismatch,
          "traverse: collection of '" + input.type.name +
              "' does not match edge '" + def.name + "' endpoint '" +
              graph.schema().node(expected).name + "'");
  InstanceSet out;
  out.type = SetType::uniform(graph.schema(), produced);
  std::unordered_set<std::uint64_t> seen;
  for (const NodeInstance* m : input.members) {
    auto neighbors = direction == Direction::Forward
                         ? graph.forward_neighbors(edge, *m)
                         : graph.reverse_neighbors(edge, *m);
    for (const NodeInstance* n : neighbors)
      if (seen.insert(instance_key(n)).second) out.members.push_back(n);
  }
  return out;
}

ValueSequence project(const InstanceGraph& graph, const InstanceSet& input,
                      std::string_view property) {
  if (input.type.tag != SetType::Tag::Mixed &&
      !resolve_property(graph, input.type, property))
    raise(ErrorCode::OwnerMismatch,
          "collection of '" + input.type.name + "' has no property '" +
              std::string(property) + "'");
  ValueSequence out;
  out.values.reserve(input.members.size());
  for (const NodeInstance* m : input.members)
    out.values.push_back(graph.property_value(*m, property));
  return out;
}

InstanceSet filter(const InstanceGraph& graph, const InstanceSet& input,
                   std::string_view property, Cmp cmp, const Value& literal) {
  if (input.type.tag != SetType::Tag::Mixed &&
      !resolve_property(graph, input.type, property))
    raise(ErrorCode::OwnerMismatch,
          "collection of '" + input.type.name + "' has no property '" +
              std::string(property) + "'");
  InstanceSet out;
  out.type = input.type;
  out.arena = input.arena;
  for (const NodeInstance* m : input.members) {
    Value v = graph.property_value(*m, property);
    if (compare_values(v, cmp, literal)) out.members.push_back(m);
  }
  return out;
}

InstanceSet join(const InstanceGraph& graph, const InstanceSet& left,
                 const InstanceSet& right,
                 const std::function<bool(const NodeInstance&,
                                          const NodeInstance&)>& predicate,
                 const std::string& name) {
  require_uniform(left, "join");
  require_uniform(right, "join");
  if (left.type.tag != SetType::Tag::Uniform ||
      right.type.tag != SetType::Tag::Uniform)
    raise(ErrorCode::TypeMismatch, "join operands must be single node types");
  InstanceSet out;
  out.type =
      SetType::composed(graph.schema(), left.type.type, right.type.type, name);
  out.arena = std::make_shared<std::deque<NodeInstance>>();
  for (const NodeInstance* l : left.members) {
    for (const NodeInstance* r : right.members) {
      if (!predicate(*l, *r)) continue;
      NodeInstance pair;
      pair.id = l->id + "|" + r->id;
      pair.type = NodeTypeId{};  // composed results live outside the schema
      pair.ordinal = static_cast<std::uint32_t>(out.arena->size());
      pair.join_left = l;
      pair.join_right = r;
      out.arena->push_back(std::move(pair));
      out.members.push_back(&out.arena->back());
    }
  }
  return out;
}

namespace {

// BFS distances up to `limit` from x; records visit order.
struct BfsResult {
  std::unordered_map<std::uint64_t, std::int64_t> dist;
  std::vector<std::pair<const NodeInstance*, std::int64_t>> order;
};

BfsResult bfs_from(const InstanceGraph& graph, const NodeInstance& x,
                   std::int64_t limit, const NeighborOptions& options) {
  BfsResult result;
  auto edges = effective_edges(graph, options);
  std::queue<const NodeInstance*> frontier;
  result.dist[instance_key(&x)] = 0;
  result.order.push_back({&x, 0});
  frontier.push(&x);
  while (!frontier.empty()) {
    const NodeInstance* u = frontier.front();
    frontier.pop();
    std::int64_t du = result.dist[instance_key(u)];
    if (du >= limit) continue;
    for_each_hop(graph, u, edges, options.undirected, [&](const BfsHop& hop) {
      auto [it, inserted] = result.dist.emplace(instance_key(hop.to), du + 1);
      if (inserted) {
        result.order.push_back({hop.to, du + 1});
        frontier.push(hop.to);
      }
    });
  }
  return result;
}

InstanceSet collect_distance(const InstanceGraph& graph, const BfsResult& bfs,
                             std::int64_t lo, std::int64_t hi) {
  InstanceSet out;
  out.type = SetType::mixed();
  std::optional<NodeTypeId> only_type;
  bool uniform = true;
  for (const auto& [inst, d] : bfs.order) {
    if (d < lo || d > hi) continue;
    out.members.push_back(inst);
    if (!only_type)
      only_type = inst->type;
    else if (!(*only_type == inst->type))
      uniform = false;
  }
  if (uniform && only_type)
    out.type = SetType::uniform(graph.schema(), *only_type);
  return out;
}

}  // namespace

InstanceSet neighbor_at(const InstanceGraph& graph, const NodeInstance& x,
                        std::int64_t n, const NeighborOptions& options) {
  if (n < 0)
    raise(ErrorCode::PlanError, "neighborAt distance must be non-negative");
  BfsResult bfs = bfs_from(graph, x, n, options);
  return collect_distance(graph, bfs, n, n);
}

InstanceSet neighbor_within(const InstanceGraph& graph, const NodeInstance& x,
                            std::int64_t n, const NeighborOptions& options) {
  if (n < 0)
    raise(ErrorCode::PlanError, "neighborWithin distance must be non-negative");
  BfsResult bfs = bfs_from(graph, x, n, options);
  return collect_distance(graph, bfs, 1, n);  // x itself excluded
}

namespace {

InstanceSet neighbor_union(
    const InstanceGraph& graph, const InstanceSet& input,
    const std::function<InstanceSet(const NodeInstance&)>& per_member) {
  InstanceSet out;
  out.type = SetType::mixed();
  std::unordered_set<std::uint64_t> seen;
  std::optional<NodeTypeId> only_type;
  bool uniform = true;
  for (const NodeInstance* m : input.members) {
    InstanceSet part = per_member(*m);
    for (const NodeInstance* n : part.members) {
      if (!seen.insert(instance_key(n)).second) continue;
      out.members.push_back(n);
      if (!only_type)
        only_type = n->type;
      else if (!(*only_type == n->type))
        uniform = false;
    }
  }
  if (uniform && only_type)
    out.type = SetType::uniform(graph.schema(), *only_type);
  return out;
}

}  // namespace

InstanceSet neighbor_at(const InstanceGraph& graph, const InstanceSet& input,
                        std::int64_t n, const NeighborOptions& options) {
  if (input.type.tag == SetType::Tag::Composed)
    raise(ErrorCode::TypeMismatch, "neighborAt is not defined on join results");
  return neighbor_union(graph, input, [&](const NodeInstance& x) {
    return neighbor_at(graph, x, n, options);
  });
}

InstanceSet neighbor_within(const InstanceGraph& graph,
                            const InstanceSet& input, std::int64_t n,
                            const NeighborOptions& options) {
  if (input.type.tag == SetType::Tag::Composed)
    raise(ErrorCode::TypeMismatch,
          "neighborWithin is not defined on join results");
  return neighbor_union(graph, input, [&](const NodeInstance& x) {
    return neighbor_within(graph, x, n, options);
  });
}

EdgePath shortest_path(const InstanceGraph& graph, const NodeInstance& x,
                       const NodeInstance& y,
                       std::optional<std::int64_t> max_len,
                       const NeighborOptions& options) {
  EdgePath path;
  if (&x == &y || (x.type == y.type && x.ordinal == y.ordinal)) {
    path.found = true;  // distance zero, empty step list
    return path;
  }
  if (max_len && *max_len < 1) return path;
  auto edges = effective_edges(graph, options);
  std::int64_t limit = max_len.value_or(
      static_cast<std::int64_t>(graph.total_instance_count()) + 1);

  struct Parent {
    const NodeInstance* from;
    EdgeTypeId edge;
    bool forward;
  };
  std::unordered_map<std::uint64_t, Parent> parent;
  std::unordered_map<std::uint64_t, std::int64_t> dist;
  std::queue<const NodeInstance*> frontier;
  dist[instance_key(&x)] = 0;
  frontier.push(&x);
  const std::uint64_t target = instance_key(&y);
  bool reached = false;
  while (!frontier.empty() && !reached) {
    const NodeInstance* u = frontier.front();
    frontier.pop();
    std::int64_t du = dist[instance_key(u)];
    if (du >= limit) continue;
    for_each_hop(graph, u, edges, options.undirected, [&](const BfsHop& hop) {
      if (reached) return;
      std::uint64_t key = instance_key(hop.to);
      if (dist.count(key)) return;
      dist[key] = du + 1;
      parent[key] = Parent{u, hop.edge, hop.forward};
      if (key == target) {
        reached = true;
        return;
      }
      frontier.push(hop.to);
    });
  }
  if (!reached) return path;  // found stays false
  std::vector<PathStep> steps;
  const NodeInstance* cur = &y;
  while (instance_key(cur) != instance_key(&x)) {
    const Parent& p = parent.at(instance_key(cur));
    steps.push_back(PathStep{p.edge, p.forward, cur});
    cur = p.from;
  }
  std::reverse(steps.begin(), steps.end());
  path.found = true;
  path.steps = std::move(steps);
  return path;
}

namespace {

// Element-wise aggregations see list elements, not the lists: a sequence of
// list values flattens one level first. Count keeps top-level arity.
std::vector<const Value*> flattened(const ValueSequence& input) {
  std::vector<const Value*> out;
  for (const Value& v : input.values) {
    if (v.kind() == ValueKind::List)
      for (const Value& item : v.items()) out.push_back(&item);
    else
      out.push_back(&v);
  }
  return out;
}

}  // namespace

AggregateOutcome aggregate(const ValueSequence& input, AggregateFn fn,
                           const std::string& separator) {
  AggregateOutcome out;
  if (fn == AggregateFn::Count) {
    out.scalar = Value::integer(static_cast<std::int64_t>(input.size()));
    return out;
  }
  auto elems = flattened(input);
  auto require_numeric = [&](const char* name) {
    for (const Value* v : elems)
      if (!v->is_numeric())
        raise(ErrorCode::KindMismatch,
              std::string(name) + " requires numeric elements, found " +
                  value_kind_name(v->kind()));
  };
  auto all_int = [&] {
    return std::all_of(elems.begin(), elems.end(), [](const Value* v) {
      return v->kind() == ValueKind::Int;
    });
  };
  switch (fn) {
    case AggregateFn::Sum: {
      require_numeric("sum");
      if (all_int()) {
        std::int64_t acc = 0;
        for (const Value* v : elems) acc += v->as_int();
        out.scalar = Value::integer(acc);
      } else {
        double acc = 0;
        for (const Value* v : elems) acc += v->as_real();
        out.scalar = Value::real(acc);
      }
      return out;
    }
    case AggregateFn::Product: {
      require_numeric("product");
      if (all_int()) {
        std::int64_t acc = 1;
        for (const Value* v : elems) acc *= v->as_int();
        out.scalar = Value::integer(acc);
      } else {
        double acc = 1;
        for (const Value* v : elems) acc *= v->as_real();
        out.scalar = Value::real(acc);
      }
      return out;
    }
    case AggregateFn::Max:
    case AggregateFn::Min: {
      if (elems.empty())
        raise(ErrorCode::EmptyAggregate,
              fn == AggregateFn::Max ? "max of empty collection"
                                     : "min of empty collection");
      require_numeric(fn == AggregateFn::Max ? "max" : "min");
      if (all_int()) {
        std::int64_t best = elems[0]->as_int();
        for (const Value* v : elems)
          best = fn == AggregateFn::Max ? std::max(best, v->as_int())
                                        : std::min(best, v->as_int());
        out.scalar = Value::integer(best);
      } else {
        double best = elems[0]->as_real();
        for (const Value* v : elems)
          best = fn == AggregateFn::Max ? std::max(best, v->as_real())
                                        : std::min(best, v->as_real());
        out.scalar = Value::real(best);
      }
      return out;
    }
    case AggregateFn::Distinct: {
      out.is_sequence = true;
      for (const Value* v : elems) {
        bool dup = std::any_of(
            out.sequence.values.begin(), out.sequence.values.end(),
            [&](const Value& u) { return u.equals(*v); });
        if (!dup) out.sequence.values.push_back(*v);
      }
      return out;
    }
    case AggregateFn::MkString: {
      std::string acc;
      for (std::size_t i = 0; i < elems.size(); ++i) {
        if (i) acc += separator;
        acc += elems[i]->to_display();
      }
      out.scalar = Value::text(std::move(acc));
      return out;
    }
    case AggregateFn::Count: break;  // handled above
  }
  raise(ErrorCode::KindMismatch, "unsupported aggregation");
}

Grouping group_by(const InstanceGraph& graph, const InstanceSet& input,
                  std::string_view key_property,
                  std::string_view value_property) {
  if (input.type.tag != SetType::Tag::Mixed) {
    if (!resolve_property(graph, input.type, key_property))
      raise(ErrorCode::OwnerMismatch,
            "groupBy key '" + std::string(key_property) + "' not found on '" +
                input.type.name + "'");
    if (!resolve_property(graph, input.type, value_property))
      raise(ErrorCode::OwnerMismatch,
            "groupBy value '" + std::string(value_property) +
                "' not found on '" + input.type.name + "'");
  }
  Grouping out;
  auto bucket_of = [&](const Value& key) -> std::vector<Value>& {
    for (auto& [k, vs] : out.groups)
      if (k.equals(key)) return vs;
    out.groups.push_back({key, {}});
    return out.groups.back().second;
  };
  for (const NodeInstance* m : input.members) {
    Value key = graph.property_value(*m, key_property);
    Value value = graph.property_value(*m, value_property);
    if (key.kind() == ValueKind::List) {
      // Multi-membership: the instance contributes under every key element.
      for (const Value& k : key.items()) bucket_of(k).push_back(value);
    } else {
      bucket_of(key).push_back(value);
    }
  }
  return out;
}

}  // namespace hinet
