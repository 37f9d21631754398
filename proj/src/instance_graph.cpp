#include "hinet/instance_graph.hpp"

#include <algorithm>

namespace hinet {

namespace {

constexpr std::size_t kMaxGenerationDepth = 8;

// Hash key respecting Value::equals (Int and Real with equal magnitude
// collapse to the same key). Lists are not hashable; callers fall back to
// pairwise evaluation.
std::optional<std::string> scalar_key(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Bool: return std::string(v.as_bool() ? "b1" : "b0");
    case ValueKind::Int:
    case ValueKind::Real: return "n" + format_real(v.as_real());
    case ValueKind::Text: return "t" + v.as_text();
    case ValueKind::List: return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

InstanceGraph::InstanceGraph(const SchemaGraph& schema,
                             const SensorRegistry& registry)
    : schema_(schema), registry_(registry) {
  if (!schema.frozen())
    raise(ErrorCode::SchemaNotFrozen,
          "schema must be frozen before population");
  instances_.resize(schema.node_count());
  id_index_.resize(schema.node_count());
  forward_.resize(schema.edge_count());
  reverse_.resize(schema.edge_count());
  edge_keys_.resize(schema.edge_count());
}

std::uint32_t InstanceGraph::append_instance(NodeTypeId node,
                                             NodeInstance instance) {
  auto& ids = id_index_[node.index];
  if (instance.id.empty())
    raise(ErrorCode::TypeMismatch, "instance id must be non-empty");
  if (ids.count(instance.id))
    raise(ErrorCode::DuplicateInstanceId,
          "instance '" + instance.id + "' already present in node type '" +
              schema_.node(node).name + "'");
  std::uint32_t ordinal = static_cast<std::uint32_t>(instances_[node.index].size());
  instance.type = node;
  instance.ordinal = ordinal;
  // The id is always readable as an attribute, so key sensors can join on it.
  instance.attrs.emplace("id", Value::text(instance.id));
  ids.emplace(instance.id, ordinal);
  instances_[node.index].push_back(std::move(instance));
  return ordinal;
}

bool InstanceGraph::insert_edge_record(EdgeTypeId edge,
                                       std::uint32_t src_ordinal,
                                       std::uint32_t dst_ordinal) {
  std::uint64_t key =
      (static_cast<std::uint64_t>(src_ordinal) << 32) | dst_ordinal;
  if (!edge_keys_[edge.index].insert(key).second) return false;
  auto& fwd = forward_[edge.index];
  auto& rev = reverse_[edge.index];
  if (fwd.size() <= src_ordinal) fwd.resize(src_ordinal + 1);
  if (rev.size() <= dst_ordinal) rev.resize(dst_ordinal + 1);
  fwd[src_ordinal].push_back(dst_ordinal);
  rev[dst_ordinal].push_back(src_ordinal);
  ++edge_records_;
  return true;
}

PopulationReport InstanceGraph::populate(NodeTypeId node,
                                         std::vector<NodeInstance> batch) {
  if (!node.valid() || node.index >= schema_.node_count())
    raise(ErrorCode::UnknownNodeType, "populate: unknown node type");
  PopulationReport report;
  for (NodeInstance& inst : batch) {
    if (inst.type.valid() && !(inst.type == node))
      raise(ErrorCode::TypeMismatch,
            "instance '" + inst.id + "' does not belong to node type '" +
                schema_.node(node).name + "'");
  }
  std::uint32_t first = static_cast<std::uint32_t>(instances_[node.index].size());
  for (NodeInstance& inst : batch) append_instance(node, std::move(inst));
  std::uint32_t last = static_cast<std::uint32_t>(instances_[node.index].size());
  report.added = last - first;

  std::vector<Batch> pending{Batch{node, first, last, 0}};
  while (!pending.empty()) {
    Batch current = pending.front();
    pending.erase(pending.begin());
    if (current.first == current.last) continue;
    run_matching_for_batch(current, report);
    run_generating_for_batch(current, pending, report);
  }
  return report;
}

void InstanceGraph::run_matching_for_batch(const Batch& batch,
                                           PopulationReport& report) {
  const NodeTypeId type = batch.type;
  for (std::uint32_t e = 0; e < schema_.edge_count(); ++e) {
    const auto& edge = schema_.edge(EdgeTypeId{e});
    bool src_side = edge.source == type;
    bool dst_side = edge.destination == type;
    if (!src_side && !dst_side) continue;
    for (const auto& binding : edge.sensors) {
      if (binding.mode != SensorMode::Matching) continue;
      const MatchingSensor& sensor = registry_.matching(binding.sensor);
      auto& sources = instances_[edge.source.index];
      auto& dests = instances_[edge.destination.index];

      // Pairs touching at least one new instance, evaluated once each.
      auto try_pair = [&](const NodeInstance& s, const NodeInstance& d) {
        if (sensor.fn(s, d) &&
            insert_edge_record(EdgeTypeId{e}, s.ordinal, d.ordinal))
          ++report.edges;
      };

      if (src_side && dst_side) {
        // Self-typed edge: new x all, then old x new.
        for (std::uint32_t u = batch.first; u < batch.last; ++u)
          for (const NodeInstance& d : dests) try_pair(sources[u], d);
        for (std::uint32_t u = 0; u < batch.first; ++u)
          for (std::uint32_t v = batch.first; v < batch.last; ++v)
            try_pair(sources[u], dests[v]);
        continue;
      }

      if (src_side) {
        // New sources against every destination.
        if (sensor.key_attrs) {
          std::unordered_map<std::string, std::vector<std::uint32_t>> by_key;
          bool hashable = true;
          for (const NodeInstance& d : dests) {
            const Value* v = d.attr(sensor.key_attrs->second);
            if (!v) continue;
            auto key = scalar_key(*v);
            if (!key) { hashable = false; break; }
            by_key[*key].push_back(d.ordinal);
          }
          if (hashable) {
            for (std::uint32_t u = batch.first; u < batch.last; ++u) {
              const Value* v = sources[u].attr(sensor.key_attrs->first);
              if (!v) continue;
              auto key = scalar_key(*v);
              if (!key) continue;
              auto it = by_key.find(*key);
              if (it == by_key.end()) continue;
              for (std::uint32_t dv : it->second)
                if (insert_edge_record(EdgeTypeId{e}, u, dv)) ++report.edges;
            }
            continue;
          }
        }
        for (std::uint32_t u = batch.first; u < batch.last; ++u)
          for (const NodeInstance& d : dests) try_pair(sources[u], d);
      } else {
        // New destinations against every source.
        if (sensor.key_attrs) {
          std::unordered_map<std::string, std::vector<std::uint32_t>> by_key;
          bool hashable = true;
          for (std::uint32_t v = batch.first; v < batch.last; ++v) {
            const Value* val = dests[v].attr(sensor.key_attrs->second);
            if (!val) continue;
            auto key = scalar_key(*val);
            if (!key) { hashable = false; break; }
            by_key[*key].push_back(v);
          }
          if (hashable) {
            for (const NodeInstance& s : sources) {
              const Value* val = s.attr(sensor.key_attrs->first);
              if (!val) continue;
              auto key = scalar_key(*val);
              if (!key) continue;
              auto it = by_key.find(*key);
              if (it == by_key.end()) continue;
              for (std::uint32_t dv : it->second)
                if (insert_edge_record(EdgeTypeId{e}, s.ordinal, dv))
                  ++report.edges;
            }
            continue;
          }
        }
        for (const NodeInstance& s : sources)
          for (std::uint32_t v = batch.first; v < batch.last; ++v)
            try_pair(s, dests[v]);
      }
    }
  }
}

void InstanceGraph::run_generating_for_batch(const Batch& batch,
                                             std::vector<Batch>& out_batches,
                                             PopulationReport& report) {
  const NodeTypeId type = batch.type;
  for (std::uint32_t e = 0; e < schema_.edge_count(); ++e) {
    const auto& edge = schema_.edge(EdgeTypeId{e});
    if (!(edge.source == type)) continue;
    for (const auto& binding : edge.sensors) {
      if (binding.mode != SensorMode::Generating) continue;
      const GeneratingSensor& sensor = registry_.generating(binding.sensor);
      std::uint32_t child_first =
          static_cast<std::uint32_t>(instances_[edge.destination.index].size());
      for (std::uint32_t u = batch.first; u < batch.last; ++u) {
        // Deque growth keeps references stable while children are appended.
        const NodeInstance& src = instances_[type.index][u];
        std::vector<GeneratedInstance> children = sensor.fn(src);
        if (children.empty()) continue;
        if (batch.depth >= kMaxGenerationDepth)
          raise(ErrorCode::GenerationDepthExceeded,
                "generation cascade exceeded depth " +
                    std::to_string(kMaxGenerationDepth));
        for (GeneratedInstance& child : children) {
          auto& ids = id_index_[edge.destination.index];
          auto it = ids.find(child.id);
          std::uint32_t child_ordinal;
          if (it != ids.end()) {
            child_ordinal = it->second;  // dedupe by id, link only
          } else {
            NodeInstance inst;
            inst.id = std::move(child.id);
            inst.attrs = std::move(child.attrs);
            child_ordinal = append_instance(edge.destination, std::move(inst));
            ++report.generated;
          }
          if (insert_edge_record(EdgeTypeId{e}, u, child_ordinal))
            ++report.edges;
        }
      }
      std::uint32_t child_last =
          static_cast<std::uint32_t>(instances_[edge.destination.index].size());
      if (child_last > child_first)
        out_batches.push_back(
            Batch{edge.destination, child_first, child_last, batch.depth + 1});
    }
  }
}

const std::deque<NodeInstance>& InstanceGraph::instances_of(
    NodeTypeId node) const {
  if (!node.valid() || node.index >= instances_.size())
    raise(ErrorCode::UnknownNodeType, "instances_of: unknown node type");
  return instances_[node.index];
}

std::size_t InstanceGraph::instance_count(NodeTypeId node) const {
  return instances_of(node).size();
}

std::size_t InstanceGraph::total_instance_count() const {
  std::size_t total = 0;
  for (const auto& d : instances_) total += d.size();
  return total;
}

const NodeInstance* InstanceGraph::find_instance(NodeTypeId node,
                                                 std::string_view id) const {
  if (!node.valid() || node.index >= instances_.size())
    raise(ErrorCode::UnknownNodeType, "find_instance: unknown node type");
  const auto& ids = id_index_[node.index];
  auto it = ids.find(std::string(id));
  if (it == ids.end()) return nullptr;
  return &instances_[node.index][it->second];
}

const NodeInstance* InstanceGraph::resolve_instance(
    std::string_view ref) const {
  auto colon = ref.find(':');
  if (colon != std::string_view::npos) {
    NodeTypeId type = schema_.node_id_or_throw(ref.substr(0, colon));
    const NodeInstance* inst = find_instance(type, ref.substr(colon + 1));
    if (!inst)
      raise(ErrorCode::UnknownInstance,
            "no instance '" + std::string(ref) + "'");
    return inst;
  }
  const NodeInstance* found = nullptr;
  for (std::uint32_t t = 0; t < instances_.size(); ++t) {
    const NodeInstance* inst = find_instance(NodeTypeId{t}, ref);
    if (!inst) continue;
    if (found)
      raise(ErrorCode::UnknownInstance,
            "instance id '" + std::string(ref) +
                "' is ambiguous across node types; qualify as type:id");
    found = inst;
  }
  if (!found)
    raise(ErrorCode::UnknownInstance, "no instance '" + std::string(ref) + "'");
  return found;
}

const InstanceGraph::RuntimeProperty* InstanceGraph::find_runtime_property(
    NodeTypeId type, std::string_view name) const {
  for (const RuntimeProperty& rp : runtime_properties_)
    if (rp.owner == type && rp.name == name) return &rp;
  return nullptr;
}

Value InstanceGraph::compute_schema_property(
    const SchemaGraph::PropertyType& prop, const NodeInstance& instance) const {
  const PropertySensor& sensor = registry_.property(prop.sensor);
  Value v = sensor.fn(*this, instance);
  if (prop.kind == ValueKind::List) {
    if (v.kind() != ValueKind::List) {
      if (v.kind() != prop.element_kind)
        raise(ErrorCode::KindMismatch,
              "property '" + prop.name + "' expects List[" +
                  value_kind_name(prop.element_kind) + "], sensor returned " +
                  value_kind_name(v.kind()));
      std::vector<Value> one{std::move(v)};
      return Value::list(prop.element_kind, std::move(one), prop.ordered);
    }
    if (v.element_kind() != prop.element_kind && !v.items().empty())
      raise(ErrorCode::KindMismatch,
            "property '" + prop.name + "' expects List[" +
                value_kind_name(prop.element_kind) + "] elements");
    // Re-tag with the declared element kind and ordered flag.
    return Value::list(prop.element_kind, v.items(), prop.ordered);
  }
  if (v.kind() != prop.kind) {
    if (prop.kind == ValueKind::Real && v.kind() == ValueKind::Int)
      return Value::real(v.as_real());
    raise(ErrorCode::KindMismatch,
          "property '" + prop.name + "' declared " +
              value_kind_name(prop.kind) + ", sensor returned " +
              value_kind_name(v.kind()));
  }
  return v;
}

Value InstanceGraph::property_value(const NodeInstance& instance,
                                    std::string_view property) const {
  if (instance.join_left) {
    if (property.substr(0, 5) == "left.")
      return property_value(*instance.join_left, property.substr(5));
    if (property.substr(0, 6) == "right.")
      return property_value(*instance.join_right, property.substr(6));
    raise(ErrorCode::OwnerMismatch,
          "composed instances expose member properties as left.<name> / "
          "right.<name>");
  }
  if (auto pid = schema_.find_property(instance.type, property)) {
    const auto& prop = schema_.property(*pid);
    std::uint64_t key = (static_cast<std::uint64_t>(pid->index) << 48) |
                        (static_cast<std::uint64_t>(instance.type.index) << 32) |
                        instance.ordinal;
    {
      std::lock_guard<std::mutex> lock(memo_mutex_);
      auto it = memo_.find(key);
      if (it != memo_.end()) return it->second;
    }
    Value v = compute_schema_property(prop, instance);
    std::lock_guard<std::mutex> lock(memo_mutex_);
    return memo_.emplace(key, std::move(v)).first->second;
  }
  if (const RuntimeProperty* rp = find_runtime_property(instance.type, property))
    return rp->fn(*this, instance);
  raise(ErrorCode::OwnerMismatch,
        "node type '" + schema_.node(instance.type).name +
            "' has no property '" + std::string(property) + "'");
}

std::optional<InstanceGraph::PropertyInfo> InstanceGraph::property_info(
    NodeTypeId type, std::string_view property) const {
  if (auto pid = schema_.find_property(type, property)) {
    const auto& p = schema_.property(*pid);
    return PropertyInfo{p.kind, p.element_kind, p.ordered};
  }
  if (const RuntimeProperty* rp = find_runtime_property(type, property))
    return PropertyInfo{rp->kind, rp->element_kind, rp->ordered};
  return std::nullopt;
}

bool InstanceGraph::has_property(NodeTypeId type,
                                 std::string_view property) const {
  return property_info(type, property).has_value();
}

void InstanceGraph::write_prediction(
    NodeTypeId node, const std::string& name,
    const std::vector<std::pair<std::string, Value>>& values) {
  if (!node.valid() || node.index >= schema_.node_count())
    raise(ErrorCode::UnknownNodeType, "write_prediction: unknown node type");
  if (has_property(node, name))
    raise(ErrorCode::DuplicateName,
          "property '" + name + "' already exists on node '" +
              schema_.node(node).name + "'");
  auto stored = std::make_shared<std::unordered_map<std::string, Value>>();
  std::optional<ValueKind> kind;
  for (const auto& [id, value] : values) {
    if (!find_instance(node, id))
      raise(ErrorCode::UnknownInstance,
            "write_prediction: no instance '" + id + "' in node '" +
                schema_.node(node).name + "'");
    if (kind && *kind != value.kind())
      raise(ErrorCode::KindMismatch,
            "write_prediction: mixed value kinds for '" + name + "'");
    kind = value.kind();
    stored->emplace(id, value);
  }
  RuntimeProperty rp;
  rp.name = name;
  rp.owner = node;
  rp.kind = kind.value_or(ValueKind::Real);
  rp.dynamic = false;
  rp.fn = [stored, name](const InstanceGraph&, const NodeInstance& x) -> Value {
    auto it = stored->find(x.id);
    if (it == stored->end())
      raise(ErrorCode::SensorFailure,
            "no prediction '" + name + "' stored for instance '" + x.id + "'");
    return it->second;
  };
  runtime_properties_.push_back(std::move(rp));
}

void InstanceGraph::add_runtime_property(
    NodeTypeId node, const std::string& name, ValueKind kind,
    std::function<Value(const InstanceGraph&, const NodeInstance&)> fn,
    bool dynamic) {
  if (!node.valid() || node.index >= schema_.node_count())
    raise(ErrorCode::UnknownNodeType, "add_runtime_property: unknown node type");
  if (has_property(node, name))
    raise(ErrorCode::DuplicateName,
          "property '" + name + "' already exists on node '" +
              schema_.node(node).name + "'");
  RuntimeProperty rp;
  rp.name = name;
  rp.owner = node;
  rp.kind = kind;
  rp.dynamic = dynamic;
  rp.fn = std::move(fn);
  runtime_properties_.push_back(std::move(rp));
}

bool InstanceGraph::add_edge(EdgeTypeId edge, const NodeInstance* source,
                             const NodeInstance* destination) {
  const auto& def = schema_.edge(edge);
  if (!source || !destination)
    raise(ErrorCode::UnknownInstance, "add_edge: null endpoint");
  if (!(source->type == def.source) || !(destination->type == def.destination))
    raise(ErrorCode::TypeMismatch,
          "add_edge: endpoints do not match edge '" + def.name + "'");
  return insert_edge_record(edge, source->ordinal, destination->ordinal);
}

std::vector<const NodeInstance*> InstanceGraph::forward_neighbors(
    EdgeTypeId edge, const NodeInstance& source) const {
  std::vector<const NodeInstance*> out;
  const auto& fwd = forward_[edge.index];
  if (source.ordinal >= fwd.size()) return out;
  const auto& dests = instances_[schema_.edge(edge).destination.index];
  out.reserve(fwd[source.ordinal].size());
  for (std::uint32_t v : fwd[source.ordinal]) out.push_back(&dests[v]);
  return out;
}

std::vector<const NodeInstance*> InstanceGraph::reverse_neighbors(
    EdgeTypeId edge, const NodeInstance& destination) const {
  std::vector<const NodeInstance*> out;
  const auto& rev = reverse_[edge.index];
  if (destination.ordinal >= rev.size()) return out;
  const auto& sources = instances_[schema_.edge(edge).source.index];
  out.reserve(rev[destination.ordinal].size());
  for (std::uint32_t u : rev[destination.ordinal]) out.push_back(&sources[u]);
  return out;
}

bool InstanceGraph::has_forward_edge(EdgeTypeId edge, const NodeInstance& source,
                                     const NodeInstance& destination) const {
  std::uint64_t key = (static_cast<std::uint64_t>(source.ordinal) << 32) |
                      destination.ordinal;
  return edge_keys_[edge.index].count(key) > 0;
}

std::size_t InstanceGraph::edge_record_count() const { return edge_records_; }

}  // namespace hinet
