#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hinet/schema.hpp"

namespace hinet {

struct PopulationReport {
  std::size_t added = 0;      // instances appended from the caller's batch
  std::size_t generated = 0;  // instances created by generating sensors
  std::size_t edges = 0;      // edge records added (forward count)
};

// The propositionalized data graph: instances of the frozen schema plus the
// edge records its sensors produced. Every edge record is indexed in both
// directions. Mutation (populate, write_prediction, bind) is single-writer;
// after seal() the graph is read-only and safe for concurrent queries.
class InstanceGraph {
 public:
  InstanceGraph(const SchemaGraph& schema, const SensorRegistry& registry);

  const SchemaGraph& schema() const { return schema_; }
  const SensorRegistry& registry() const { return registry_; }

  // Appends the batch, fires matching sensors incrementally against existing
  // instances, and cascades generating sensors (depth-capped).
  PopulationReport populate(NodeTypeId node, std::vector<NodeInstance> batch);

  // All instances in insertion order; generated instances appear in
  // generation order.
  const std::deque<NodeInstance>& instances_of(NodeTypeId node) const;
  std::size_t instance_count(NodeTypeId node) const;
  std::size_t total_instance_count() const;

  const NodeInstance* find_instance(NodeTypeId node,
                                    std::string_view id) const;
  // Resolves a bare id across all node types; throws UnknownInstance when
  // missing or ambiguous. The qualified form "type:id" pins the type.
  const NodeInstance* resolve_instance(std::string_view ref) const;

  // Property read. Schema properties are memoized per instance; runtime
  // properties marked dynamic are recomputed on every read.
  Value property_value(const NodeInstance& instance,
                       std::string_view property) const;
  // Kind of the named property (schema or runtime); for composed instances
  // resolves "left.<p>" / "right.<p>" against the member types.
  struct PropertyInfo {
    ValueKind kind;
    ValueKind element_kind;
    bool ordered;
  };
  std::optional<PropertyInfo> property_info(NodeTypeId type,
                                            std::string_view property) const;
  bool has_property(NodeTypeId type, std::string_view property) const;

  // Registers a queryable property backed by stored per-instance values.
  void write_prediction(NodeTypeId node, const std::string& name,
                        const std::vector<std::pair<std::string, Value>>& values);

  // Registers a computed property; dynamic ones bypass the memo cache so
  // learner-backed values are never stale.
  void add_runtime_property(
      NodeTypeId node, const std::string& name, ValueKind kind,
      std::function<Value(const InstanceGraph&, const NodeInstance&)> fn,
      bool dynamic);

  // Low-level edge insertion used by tests and synthetic graph builders;
  // duplicates are ignored. Maintains the reverse index.
  bool add_edge(EdgeTypeId edge, const NodeInstance* source,
                const NodeInstance* destination);

  // Neighbors over one edge type, in insertion order.
  std::vector<const NodeInstance*> forward_neighbors(
      EdgeTypeId edge, const NodeInstance& source) const;
  std::vector<const NodeInstance*> reverse_neighbors(
      EdgeTypeId edge, const NodeInstance& destination) const;

  bool has_forward_edge(EdgeTypeId edge, const NodeInstance& source,
                        const NodeInstance& destination) const;

  std::size_t edge_record_count() const;

  void seal() { sealed_ = true; }
  bool sealed() const { return sealed_; }

 private:
  struct Batch {
    NodeTypeId type;
    std::uint32_t first;  // ordinal range [first, last)
    std::uint32_t last;
    std::size_t depth;
  };

  struct RuntimeProperty {
    std::string name;
    NodeTypeId owner;
    ValueKind kind;
    ValueKind element_kind = ValueKind::Text;
    bool ordered = false;
    bool dynamic = false;
    std::function<Value(const InstanceGraph&, const NodeInstance&)> fn;
  };

  std::uint32_t append_instance(NodeTypeId node, NodeInstance instance);
  void run_matching_for_batch(const Batch& batch, PopulationReport& report);
  void run_generating_for_batch(const Batch& batch,
                                std::vector<Batch>& out_batches,
                                PopulationReport& report);
  bool insert_edge_record(EdgeTypeId edge, std::uint32_t src_ordinal,
                          std::uint32_t dst_ordinal);
  const RuntimeProperty* find_runtime_property(NodeTypeId type,
                                               std::string_view name) const;
  Value compute_schema_property(const SchemaGraph::PropertyType& prop,
                                const NodeInstance& instance) const;

  const SchemaGraph& schema_;
  const SensorRegistry& registry_;
  bool sealed_ = false;

  // Instances per node type; deque keeps pointers stable across growth.
  std::vector<std::deque<NodeInstance>> instances_;
  std::vector<std::unordered_map<std::string, std::uint32_t>> id_index_;

  // Adjacency per edge type, indexed by instance ordinal.
  std::vector<std::vector<std::vector<std::uint32_t>>> forward_;
  std::vector<std::vector<std::vector<std::uint32_t>>> reverse_;
  std::vector<std::unordered_set<std::uint64_t>> edge_keys_;
  std::size_t edge_records_ = 0;

  std::vector<RuntimeProperty> runtime_properties_;

  mutable std::mutex memo_mutex_;
  mutable std::unordered_map<std::uint64_t, Value> memo_;
};

}  // namespace hinet
