#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hinet/constrained.hpp"
#include "hinet/feature_learning.hpp"
#include "hinet/table.hpp"

namespace hinet {

// Schema documents are JSON:
//   {
//     "nodes": ["patients", ...],
//     "properties": [{"node": "...", "name": "...", "kind": "Real",
//                     "sensor": "attr(response)", "ordered": false}, ...],
//     "edges": [{"name": "...", "source": "...", "destination": "...",
//                "sensors": ["key_eq(id,pid)"]}, ...]
//   }
// Kinds: Bool, Int, Real, Text, List[Bool|Int|Real|Text].
SchemaGraph parse_schema_json(const std::string& json_text,
                              const SensorRegistry& registry);
SchemaGraph load_schema(const std::filesystem::path& path,
                        const SensorRegistry& registry);

// Instance subset for training or testing: explicit ids, or a count/offset
// slice of the instance order. Absent -> all instances.
struct InstanceSelection {
  std::optional<std::vector<std::string>> ids;
  std::optional<std::size_t> count;
  std::size_t offset = 0;
};

std::optional<std::vector<std::string>> resolve_selection(
    const InstanceGraph& graph, NodeTypeId root,
    const std::optional<InstanceSelection>& selection);

// One learner declaration with query texts kept verbatim so family members
// can be instantiated by placeholder substitution.
struct FeatureQueryTemplate {
  std::string name;
  std::string query;
  std::optional<bool> ordered;
};

struct FamilyConfig {
  std::string parameter_source;  // query whose distinct values parameterize
  std::string placeholder = "{param}";
};

struct LearnerTemplate {
  std::string name;
  std::string root;
  Task task = Task::Regression;
  std::string label;
  std::vector<FeatureQueryTemplate> features;
  std::optional<std::string> filter;
  SgdConfig sgd;
  std::optional<InstanceSelection> train_selection;
  std::optional<InstanceSelection> test_selection;
  std::optional<FamilyConfig> family;
};

struct ConstraintBind {
  std::string node;
  std::string property;
  std::string classifier;
};

struct ConstrainedTemplate {
  std::string name;
  std::string scope;  // scope node type
  std::string decision;  // pivoted query: scope -> decision instances
  std::optional<std::string> scope_of;  // pivoted query: instance -> scope
  std::vector<std::string> classifiers;
  std::vector<std::string> constraints;
  std::vector<ConstraintBind> binds;
  std::uint64_t seed = 42;
};

// A learner configuration document; may carry the schema/data locations so a
// single file describes a full run.
struct LearnerDocument {
  std::optional<std::string> schema_path;
  std::optional<std::string> data_path;
  std::vector<LearnerTemplate> learners;
  std::vector<ConstrainedTemplate> constrained;
};

LearnerDocument parse_learner_json(const std::string& json_text);
LearnerDocument load_learner_document(const std::filesystem::path& path);

// Parses the template's query texts (after substituting `placeholder` with
// `parameter`, when given) into a LearnableSpec.
LearnableSpec instantiate_learner(
    const LearnerTemplate& tmpl,
    const std::optional<std::string>& parameter = std::nullopt,
    const std::string& placeholder = "{param}");

// Builds the family from the template's parameter-source query.
LearnerFamily build_family(const InstanceGraph& graph,
                           const LearnerTemplate& tmpl);

// Owns registry, schema and instance graph together so references stay valid.
struct LoadedGraph {
  std::unique_ptr<SensorRegistry> registry;
  std::unique_ptr<SchemaGraph> schema;
  std::unique_ptr<InstanceGraph> graph;
  std::vector<std::pair<std::string, PopulationReport>> reports;
};

// Loads "<node>.csv" (or .tsv) per node type from `data_dir`, in schema
// declaration order. Node types that are the destination of a generating
// edge may omit their table.
LoadedGraph load_graph(const std::filesystem::path& schema_path,
                       const std::filesystem::path& data_dir);

std::vector<std::pair<std::string, PopulationReport>> populate_from_directory(
    InstanceGraph& graph, const std::filesystem::path& data_dir);

// Assembles a constrained classifier from its template over trained
// learners (looked up by name).
std::shared_ptr<ConstrainedClassifier> build_constrained(
    const ConstrainedTemplate& tmpl, const SchemaGraph& schema,
    const std::vector<std::shared_ptr<Learner>>& learners);

}  // namespace hinet
