#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hinet/instance.hpp"
#include "hinet/sensors.hpp"

namespace hinet {

// First-order data model: typed nodes, sensor-computed properties, and typed
// edges with matching or generating sensors. Built single-threaded, then
// frozen; a frozen schema is immutable and safe to share across threads.
class SchemaGraph {
 public:
  struct NodeType {
    std::string name;
    bool composed = false;
    NodeTypeId left;   // composed only
    NodeTypeId right;  // composed only
  };

  struct PropertyType {
    std::string name;
    NodeTypeId owner;
    ValueKind kind;
    ValueKind element_kind = ValueKind::Text;  // for kind == List
    bool ordered = false;
    std::string sensor;
  };

  struct SensorBinding {
    std::string sensor;
    SensorMode mode;
  };

  struct EdgeType {
    std::string name;
    NodeTypeId source;
    NodeTypeId destination;
    std::vector<SensorBinding> sensors;
  };

  explicit SchemaGraph(const SensorRegistry* registry = nullptr)
      : registry_(registry) {}

  NodeTypeId declare_node(const std::string& name);
  NodeTypeId declare_composed_node(const std::string& name, NodeTypeId left,
                                   NodeTypeId right);
  PropertyTypeId declare_property(NodeTypeId owner, const std::string& name,
                                  ValueKind kind, bool ordered,
                                  const std::string& sensor,
                                  ValueKind element_kind = ValueKind::Text);
  EdgeTypeId declare_edge(const std::string& name, NodeTypeId source,
                          NodeTypeId destination);
  // Appends a matching or generating sensor; fires at population time.
  void add_edge_sensor(EdgeTypeId edge, const std::string& sensor);

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  const SensorRegistry* registry() const { return registry_; }

  std::optional<NodeTypeId> find_node(std::string_view name) const;
  std::optional<EdgeTypeId> find_edge(std::string_view name) const;
  std::optional<PropertyTypeId> find_property(NodeTypeId owner,
                                              std::string_view name) const;

  NodeTypeId node_id_or_throw(std::string_view name) const;
  EdgeTypeId edge_id_or_throw(std::string_view name) const;

  const NodeType& node(NodeTypeId id) const { return nodes_.at(id.index); }
  const EdgeType& edge(EdgeTypeId id) const { return edges_.at(id.index); }
  const PropertyType& property(PropertyTypeId id) const {
    return properties_.at(id.index);
  }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  std::size_t property_count() const { return properties_.size(); }

  // Properties owned by `owner`, in declaration order.
  std::vector<PropertyTypeId> properties_of(NodeTypeId owner) const;

  // Declaration-order semantics do not matter: schemas compare as sets of
  // types (keyed by name), with sensor lists ordered within each edge.
  bool equivalent(const SchemaGraph& other) const;

 private:
  void require_mutable() const;
  void require_node(NodeTypeId id) const;

  const SensorRegistry* registry_;
  bool frozen_ = false;
  std::vector<NodeType> nodes_;
  std::vector<EdgeType> edges_;
  std::vector<PropertyType> properties_;
  std::unordered_map<std::string, std::uint32_t> node_index_;
  std::unordered_map<std::string, std::uint32_t> edge_index_;
};

}  // namespace hinet
