#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hinet/instance.hpp"

namespace hinet {

class InstanceGraph;

enum class SensorMode { Property, Matching, Generating };

const char* sensor_mode_name(SensorMode mode);

// Computes a property value for one instance. `output_kind` is checked at
// declaration time when present; sensors that adapt to the declared property
// kind (attr) leave it empty and are checked on read.
struct PropertySensor {
  std::optional<ValueKind> output_kind;
  std::function<Value(const InstanceGraph&, const NodeInstance&)> fn;
};

// Decides whether an edge exists between a (source, destination) pair.
// When the decision is equality of two attributes, `key_attrs` names them
// (source side, destination side) so population can hash-join instead of
// scanning the cross product. Semantics are identical either way.
struct MatchingSensor {
  std::function<bool(const NodeInstance&, const NodeInstance&)> fn;
  std::optional<std::pair<std::string, std::string>> key_attrs;
};

struct GeneratedInstance {
  std::string id;
  AttrMap attrs;
};

// Creates destination instances from a source instance.
struct GeneratingSensor {
  std::function<std::vector<GeneratedInstance>(const NodeInstance&)> fn;
};

// Sensors are referenced from schema documents by name, either bare
// ("mySensor") or applied ("attr(response)", "key_eq(id,pid)"). Applied forms
// go through a factory registered under the base name; resolved instances are
// cached under the full reference text.
class SensorRegistry {
 public:
  using PropertyFactory =
      std::function<PropertySensor(const std::vector<std::string>&)>;
  using MatchingFactory =
      std::function<MatchingSensor(const std::vector<std::string>&)>;
  using GeneratingFactory =
      std::function<GeneratingSensor(const std::vector<std::string>&)>;

  void add_property(const std::string& name, PropertySensor sensor);
  void add_matching(const std::string& name, MatchingSensor sensor);
  void add_generating(const std::string& name, GeneratingSensor sensor);

  void add_property_factory(const std::string& base, PropertyFactory factory);
  void add_matching_factory(const std::string& base, MatchingFactory factory);
  void add_generating_factory(const std::string& base,
                              GeneratingFactory factory);

  bool known(const std::string& ref) const;
  SensorMode mode_of(const std::string& ref) const;
  const PropertySensor& property(const std::string& ref) const;
  const MatchingSensor& matching(const std::string& ref) const;
  const GeneratingSensor& generating(const std::string& ref) const;

 private:
  struct Resolved {
    SensorMode mode;
    PropertySensor property;
    MatchingSensor matching;
    GeneratingSensor generating;
  };

  const Resolved* resolve(const std::string& ref) const;

  std::unordered_map<std::string, PropertyFactory> property_factories_;
  std::unordered_map<std::string, MatchingFactory> matching_factories_;
  std::unordered_map<std::string, GeneratingFactory> generating_factories_;
  mutable std::unordered_map<std::string, Resolved> resolved_;
};

// Splits "base(a, b)" into {"base", {"a", "b"}}; a bare name yields no args.
std::pair<std::string, std::vector<std::string>> parse_sensor_ref(
    const std::string& ref);

// Registry with the built-in sensor set:
//   attr(name)          property: reads attribute `name`
//   const_list(a,b,..)  property: the fixed Text list [a, b, ...]
//   key_eq(a,b)         matching: source.a == destination.b
//   tokenize_ws(name)   generating: whitespace tokens of the Text attribute
//                       `name`, with attributes {text, position} and
//                       source-scoped ids "<src>.tok<k>"
SensorRegistry builtin_sensors();

}  // namespace hinet
