#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "hinet/value.hpp"

namespace hinet {

// Index-based handles into a SchemaGraph. Distinct types keep node, edge and
// property references from mixing up.
struct NodeTypeId {
  std::uint32_t index = UINT32_MAX;
  bool valid() const { return index != UINT32_MAX; }
  friend bool operator==(NodeTypeId a, NodeTypeId b) = default;
};

struct EdgeTypeId {
  std::uint32_t index = UINT32_MAX;
  bool valid() const { return index != UINT32_MAX; }
  friend bool operator==(EdgeTypeId a, EdgeTypeId b) = default;
};

struct PropertyTypeId {
  std::uint32_t index = UINT32_MAX;
  bool valid() const { return index != UINT32_MAX; }
  friend bool operator==(PropertyTypeId a, PropertyTypeId b) = default;
};

using AttrMap = std::map<std::string, Value, std::less<>>;

// One data instance. Attributes hold the raw record the readers produced;
// property sensors derive values from them. Composed instances made by joins
// keep pointers to their two members.
struct NodeInstance {
  NodeTypeId type;
  std::string id;
  AttrMap attrs;
  std::uint32_t ordinal = UINT32_MAX;  // position within its type, set on add
  const NodeInstance* join_left = nullptr;
  const NodeInstance* join_right = nullptr;

  const Value* attr(std::string_view name) const {
    auto it = attrs.find(name);
    return it == attrs.end() ? nullptr : &it->second;
  }
};

}  // namespace hinet
