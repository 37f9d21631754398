#include "hinet/schema.hpp"

#include <algorithm>
#include <tuple>

namespace hinet {

const char* sensor_mode_name(SensorMode mode) {
  switch (mode) {
    case SensorMode::Property: return "property";
    case SensorMode::Matching: return "matching";
    case SensorMode::Generating: return "generating";
  }
  return "?";
}

void SchemaGraph::require_mutable() const {
  if (frozen_) raise(ErrorCode::SchemaFrozen, "schema is frozen");
}

void SchemaGraph::require_node(NodeTypeId id) const {
  if (!id.valid() || id.index >= nodes_.size())
    raise(ErrorCode::UnknownNodeType, "node type handle is not valid");
}

NodeTypeId SchemaGraph::declare_node(const std::string& name) {
  require_mutable();
  if (node_index_.count(name))
    raise(ErrorCode::DuplicateName, "node type '" + name + "' already declared");
  NodeTypeId id{static_cast<std::uint32_t>(nodes_.size())};
  nodes_.push_back(NodeType{name});
  node_index_.emplace(name, id.index);
  return id;
}

NodeTypeId SchemaGraph::declare_composed_node(const std::string& name,
                                              NodeTypeId left,
                                              NodeTypeId right) {
  require_mutable();
  require_node(left);
  require_node(right);
  if (node_index_.count(name))
    raise(ErrorCode::DuplicateName, "node type '" + name + "' already declared");
  NodeTypeId id{static_cast<std::uint32_t>(nodes_.size())};
  nodes_.push_back(NodeType{name, true, left, right});
  node_index_.emplace(name, id.index);
  return id;
}

PropertyTypeId SchemaGraph::declare_property(NodeTypeId owner,
                                             const std::string& name,
                                             ValueKind kind, bool ordered,
                                             const std::string& sensor,
                                             ValueKind element_kind) {
  require_mutable();
  require_node(owner);
  for (const PropertyType& p : properties_)
    if (p.owner == owner && p.name == name)
      raise(ErrorCode::DuplicateName, "property '" + name +
                                          "' already declared on node '" +
                                          nodes_[owner.index].name + "'");
  if (kind == ValueKind::List && element_kind == ValueKind::List)
    raise(ErrorCode::KindMismatch, "nested list property kinds are rejected");
  if (registry_) {
    if (!registry_->known(sensor))
      raise(ErrorCode::UnknownSensor, "sensor '" + sensor + "' is not registered");
    if (registry_->mode_of(sensor) != SensorMode::Property)
      raise(ErrorCode::ModeMismatch,
            "sensor '" + sensor + "' is not a property sensor");
    const PropertySensor& ps = registry_->property(sensor);
    if (ps.output_kind && *ps.output_kind != kind)
      raise(ErrorCode::KindMismatch,
            "sensor '" + sensor + "' outputs " +
                value_kind_name(*ps.output_kind) + ", property declared " +
                value_kind_name(kind));
  }
  PropertyTypeId id{static_cast<std::uint32_t>(properties_.size())};
  properties_.push_back(
      PropertyType{name, owner, kind, element_kind, ordered, sensor});
  return id;
}

EdgeTypeId SchemaGraph::declare_edge(const std::string& name,
                                     NodeTypeId source,
                                     NodeTypeId destination) {
  require_mutable();
  if (!source.valid() || source.index >= nodes_.size())
    raise(ErrorCode::UnknownNodeType, "edge '" + name + "': unknown source");
  if (!destination.valid() || destination.index >= nodes_.size())
    raise(ErrorCode::UnknownNodeType, "edge '" + name + "': unknown destination");
  if (edge_index_.count(name))
    raise(ErrorCode::DuplicateName, "edge type '" + name + "' already declared");
  EdgeTypeId id{static_cast<std::uint32_t>(edges_.size())};
  edges_.push_back(EdgeType{name, source, destination, {}});
  edge_index_.emplace(name, id.index);
  return id;
}

void SchemaGraph::add_edge_sensor(EdgeTypeId edge, const std::string& sensor) {
  require_mutable();
  if (!edge.valid() || edge.index >= edges_.size())
    raise(ErrorCode::UnknownEdgeType, "edge handle is not valid");
  if (!registry_ || !registry_->known(sensor))
    raise(ErrorCode::UnknownSensor, "sensor '" + sensor + "' is not registered");
  SensorMode mode = registry_->mode_of(sensor);
  if (mode == SensorMode::Property)
    raise(ErrorCode::ModeMismatch,
          "edge sensors must be matching or generating, '" + sensor +
              "' is a property sensor");
  edges_[edge.index].sensors.push_back(SensorBinding{sensor, mode});
}

std::optional<NodeTypeId> SchemaGraph::find_node(std::string_view name) const {
  auto it = node_index_.find(std::string(name));
  if (it == node_index_.end()) return std::nullopt;
  return NodeTypeId{it->second};
}

std::optional<EdgeTypeId> SchemaGraph::find_edge(std::string_view name) const {
  auto it = edge_index_.find(std::string(name));
  if (it == edge_index_.end()) return std::nullopt;
  return EdgeTypeId{it->second};
}

std::optional<PropertyTypeId> SchemaGraph::find_property(
    NodeTypeId owner, std::string_view name) const {
  for (std::uint32_t i = 0; i < properties_.size(); ++i)
    if (properties_[i].owner == owner && properties_[i].name == name)
      return PropertyTypeId{i};
  return std::nullopt;
}

NodeTypeId SchemaGraph::node_id_or_throw(std::string_view name) const {
  auto id = find_node(name);
  if (!id)
    raise(ErrorCode::UnknownNodeType,
          "unknown node type '" + std::string(name) + "'");
  return *id;
}

EdgeTypeId SchemaGraph::edge_id_or_throw(std::string_view name) const {
  auto id = find_edge(name);
  if (!id)
    raise(ErrorCode::UnknownEdgeType,
          "unknown edge type '" + std::string(name) + "'");
  return *id;
}

std::vector<PropertyTypeId> SchemaGraph::properties_of(NodeTypeId owner) const {
  std::vector<PropertyTypeId> out;
  for (std::uint32_t i = 0; i < properties_.size(); ++i)
    if (properties_[i].owner == owner) out.push_back(PropertyTypeId{i});
  return out;
}

bool SchemaGraph::equivalent(const SchemaGraph& other) const {
  auto node_key = [](const SchemaGraph& s, const NodeType& n) {
    std::string key = n.name;
    if (n.composed)
      key += "(" + s.nodes_[n.left.index].name + "," +
             s.nodes_[n.right.index].name + ")";
    return key;
  };
  auto sorted_nodes = [&](const SchemaGraph& s) {
    std::vector<std::string> keys;
    for (const NodeType& n : s.nodes_) keys.push_back(node_key(s, n));
    std::sort(keys.begin(), keys.end());
    return keys;
  };
  auto sorted_props = [&](const SchemaGraph& s) {
    std::vector<std::string> keys;
    for (const PropertyType& p : s.properties_) {
      std::string key = s.nodes_[p.owner.index].name + "." + p.name + ":" +
                        value_kind_name(p.kind);
      if (p.kind == ValueKind::List)
        key += std::string("[") + value_kind_name(p.element_kind) + "]";
      key += p.ordered ? ":ordered" : ":unordered";
      key += ":" + p.sensor;
      keys.push_back(std::move(key));
    }
    std::sort(keys.begin(), keys.end());
    return keys;
  };
  auto sorted_edges = [&](const SchemaGraph& s) {
    std::vector<std::string> keys;
    for (const EdgeType& e : s.edges_) {
      std::string key = e.name + ":" + s.nodes_[e.source.index].name + "->" +
                        s.nodes_[e.destination.index].name;
      for (const SensorBinding& b : e.sensors) key += "|" + b.sensor;
      keys.push_back(std::move(key));
    }
    std::sort(keys.begin(), keys.end());
    return keys;
  };
  return sorted_nodes(*this) == sorted_nodes(other) &&
         sorted_props(*this) == sorted_props(other) &&
         sorted_edges(*this) == sorted_edges(other);
}

}  // namespace hinet
