#include "hinet/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace hinet {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

json parse_json(const std::string& text, const char* what) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded())
    raise(ErrorCode::ConfigError, std::string("malformed JSON in ") + what);
  return doc;
}

std::pair<ValueKind, ValueKind> parse_kind(const std::string& text) {
  auto scalar = [](const std::string& s) -> std::optional<ValueKind> {
    if (s == "Bool") return ValueKind::Bool;
    if (s == "Int") return ValueKind::Int;
    if (s == "Real") return ValueKind::Real;
    if (s == "Text") return ValueKind::Text;
    return std::nullopt;
  };
  if (auto k = scalar(text)) return {*k, ValueKind::Text};
  if (text.rfind("List[", 0) == 0 && text.back() == ']') {
    auto inner = scalar(text.substr(5, text.size() - 6));
    if (inner) return {ValueKind::List, *inner};
  }
  raise(ErrorCode::ConfigError, "unknown kind '" + text + "'");
}

}  // namespace

SchemaGraph parse_schema_json(const std::string& json_text,
                              const SensorRegistry& registry) {
  json doc = parse_json(json_text, "schema document");
  SchemaGraph schema(&registry);
  if (!doc.contains("nodes") || !doc["nodes"].is_array())
    raise(ErrorCode::ConfigError, "schema document needs a 'nodes' array");
  for (const auto& n : doc["nodes"]) schema.declare_node(n.get<std::string>());
  for (const auto& p : doc.value("properties", json::array())) {
    NodeTypeId owner = schema.node_id_or_throw(p.at("node").get<std::string>());
    auto [kind, element] = parse_kind(p.at("kind").get<std::string>());
    schema.declare_property(owner, p.at("name").get<std::string>(), kind,
                            p.value("ordered", false),
                            p.at("sensor").get<std::string>(), element);
  }
  for (const auto& e : doc.value("edges", json::array())) {
    EdgeTypeId edge = schema.declare_edge(
        e.at("name").get<std::string>(),
        schema.node_id_or_throw(e.at("source").get<std::string>()),
        schema.node_id_or_throw(e.at("destination").get<std::string>()));
    for (const auto& s : e.value("sensors", json::array()))
      schema.add_edge_sensor(edge, s.get<std::string>());
  }
  schema.freeze();
  return schema;
}

SchemaGraph load_schema(const std::filesystem::path& path,
                        const SensorRegistry& registry) {
  return parse_schema_json(read_file(path), registry);
}

namespace {

InstanceSelection parse_selection(const json& j) {
  InstanceSelection sel;
  if (j.contains("ids")) {
    sel.ids = std::vector<std::string>();
    for (const auto& id : j["ids"]) sel.ids->push_back(id.get<std::string>());
  }
  if (j.contains("count")) sel.count = j["count"].get<std::size_t>();
  sel.offset = j.value("offset", std::size_t{0});
  return sel;
}

LearnerTemplate parse_learner_template(const json& j) {
  LearnerTemplate t;
  t.name = j.at("name").get<std::string>();
  t.root = j.at("root").get<std::string>();
  std::string task = j.value("task", "regression");
  if (task == "regression")
    t.task = Task::Regression;
  else if (task == "classification")
    t.task = Task::Classification;
  else
    raise(ErrorCode::ConfigError, "unknown task '" + task + "'");
  t.label = j.at("label").get<std::string>();
  for (const auto& f : j.value("features", json::array())) {
    FeatureQueryTemplate fq;
    fq.name = f.at("name").get<std::string>();
    fq.query = f.at("query").get<std::string>();
    if (f.contains("ordered")) fq.ordered = f["ordered"].get<bool>();
    t.features.push_back(std::move(fq));
  }
  if (j.contains("filter") && !j["filter"].is_null())
    t.filter = j["filter"].get<std::string>();
  if (j.contains("sgd")) {
    const json& s = j["sgd"];
    t.sgd.learning_rate = s.value("learning_rate", t.sgd.learning_rate);
    t.sgd.epochs = s.value("epochs", t.sgd.epochs);
    t.sgd.l2 = s.value("l2", t.sgd.l2);
    t.sgd.shuffle_seed = s.value("seed", t.sgd.shuffle_seed);
  }
  if (t.sgd.learning_rate <= 0)
    raise(ErrorCode::ConfigError, "learning_rate must be positive");
  if (j.contains("train")) t.train_selection = parse_selection(j["train"]);
  if (j.contains("test")) t.test_selection = parse_selection(j["test"]);
  if (j.contains("family")) {
    FamilyConfig f;
    f.parameter_source = j["family"].at("parameter_source").get<std::string>();
    f.placeholder = j["family"].value("placeholder", f.placeholder);
    t.family = std::move(f);
  }
  return t;
}

ConstrainedTemplate parse_constrained_template(const json& j) {
  ConstrainedTemplate t;
  t.name = j.at("name").get<std::string>();
  t.scope = j.at("scope").get<std::string>();
  t.decision = j.at("decision").get<std::string>();
  if (j.contains("scope_of")) t.scope_of = j["scope_of"].get<std::string>();
  for (const auto& c : j.at("classifiers"))
    t.classifiers.push_back(c.get<std::string>());
  for (const auto& c : j.value("constraints", json::array()))
    t.constraints.push_back(c.get<std::string>());
  for (const auto& b : j.value("bind", json::array())) {
    ConstraintBind bind;
    bind.node = b.at("node").get<std::string>();
    bind.property = b.at("property").get<std::string>();
    bind.classifier = b.at("classifier").get<std::string>();
    t.binds.push_back(std::move(bind));
  }
  t.seed = j.value("seed", t.seed);
  return t;
}

}  // namespace

LearnerDocument parse_learner_json(const std::string& json_text) {
  json doc = parse_json(json_text, "learner document");
  LearnerDocument out;
  if (doc.contains("schema")) out.schema_path = doc["schema"].get<std::string>();
  if (doc.contains("data")) out.data_path = doc["data"].get<std::string>();
  if (doc.contains("learner"))
    out.learners.push_back(parse_learner_template(doc["learner"]));
  for (const auto& l : doc.value("learners", json::array()))
    out.learners.push_back(parse_learner_template(l));
  if (doc.contains("seed")) {
    // Document-level seed applies to learners that do not pin their own.
    std::uint64_t seed = doc["seed"].get<std::uint64_t>();
    json learner_blocks = json::array();
    if (doc.contains("learner")) learner_blocks.push_back(doc["learner"]);
    for (const auto& l : doc.value("learners", json::array()))
      learner_blocks.push_back(l);
    for (std::size_t i = 0; i < out.learners.size(); ++i) {
      const json& block = learner_blocks.at(i);
      if (!block.contains("sgd") || !block["sgd"].contains("seed"))
        out.learners[i].sgd.shuffle_seed = seed;
    }
  }
  for (const auto& c : doc.value("constrained", json::array()))
    out.constrained.push_back(parse_constrained_template(c));
  if (out.learners.empty())
    raise(ErrorCode::ConfigError,
          "learner document declares no learners ('learner' or 'learners')");
  return out;
}

LearnerDocument load_learner_document(const std::filesystem::path& path) {
  return parse_learner_json(read_file(path));
}

std::optional<std::vector<std::string>> resolve_selection(
    const InstanceGraph& graph, NodeTypeId root,
    const std::optional<InstanceSelection>& selection) {
  if (!selection) return std::nullopt;
  if (selection->ids) return selection->ids;
  if (!selection->count) return std::nullopt;
  const auto& instances = graph.instances_of(root);
  std::vector<std::string> ids;
  std::size_t end = std::min(instances.size(),
                             selection->offset + *selection->count);
  for (std::size_t i = selection->offset; i < end; ++i)
    ids.push_back(instances[i].id);
  return ids;
}

namespace {

std::string substitute(const std::string& text, const std::string& placeholder,
                       const std::string& value) {
  std::string out = text;
  std::size_t pos = 0;
  while ((pos = out.find(placeholder, pos)) != std::string::npos) {
    out.replace(pos, placeholder.size(), value);
    pos += value.size();
  }
  return out;
}

}  // namespace

LearnableSpec instantiate_learner(const LearnerTemplate& tmpl,
                                  const std::optional<std::string>& parameter,
                                  const std::string& placeholder) {
  auto apply = [&](const std::string& text) {
    return parameter ? substitute(text, placeholder, *parameter) : text;
  };
  LearnableSpec spec;
  spec.name = parameter ? tmpl.name + "[" + *parameter + "]" : tmpl.name;
  spec.root = tmpl.root;
  spec.task = tmpl.task;
  spec.sgd = tmpl.sgd;
  spec.label_plan = parse_query(apply(tmpl.label));
  for (const FeatureQueryTemplate& f : tmpl.features) {
    FeatureQuerySpec fq;
    fq.name = apply(f.name);
    fq.plan = parse_query(apply(f.query));
    fq.ordered = f.ordered;
    spec.features.push_back(std::move(fq));
  }
  if (tmpl.filter) spec.filter_plan = parse_query(apply(*tmpl.filter));
  return spec;
}

LearnerFamily build_family(const InstanceGraph& graph,
                           const LearnerTemplate& tmpl) {
  if (!tmpl.family)
    raise(ErrorCode::ConfigError,
          "learner '" + tmpl.name + "' declares no family");
  QueryPlan source = parse_query(tmpl.family->parameter_source);
  QueryResult result = evaluate(source, graph);
  const ValueSequence* seq = std::get_if<ValueSequence>(&result);
  if (!seq)
    raise(ErrorCode::ConfigError,
          "family parameter source must produce a value sequence");
  std::vector<std::string> parameters;
  for (const Value& v : seq->values) parameters.push_back(v.to_display());
  const std::string placeholder = tmpl.family->placeholder;
  return LearnerFamily::make(parameters, [&tmpl, placeholder](const std::string& p) {
    return instantiate_learner(tmpl, p, placeholder);
  });
}

std::vector<std::pair<std::string, PopulationReport>> populate_from_directory(
    InstanceGraph& graph, const std::filesystem::path& data_dir) {
  const SchemaGraph& schema = graph.schema();
  std::vector<std::pair<std::string, PopulationReport>> reports;
  for (std::uint32_t n = 0; n < schema.node_count(); ++n) {
    NodeTypeId node{n};
    const std::string& name = schema.node(node).name;
    std::filesystem::path csv = data_dir / (name + ".csv");
    std::filesystem::path tsv = data_dir / (name + ".tsv");
    TableSource source;
    if (std::filesystem::exists(csv)) {
      source.path = csv;
      source.delimiter = ',';
    } else if (std::filesystem::exists(tsv)) {
      source.path = tsv;
      source.delimiter = '\t';
    } else {
      bool generated = false;
      for (std::uint32_t e = 0; e < schema.edge_count(); ++e) {
        for (const auto& binding : schema.edge(EdgeTypeId{e}).sensors)
          if (binding.mode == SensorMode::Generating &&
              schema.edge(EdgeTypeId{e}).destination == node)
            generated = true;
      }
      if (!generated && !schema.node(node).composed)
        raise(ErrorCode::ConfigError,
              "no table for node type '" + name +
                  "' and no generating sensor produces it");
      continue;
    }
    auto instances = read_table(source, columns_for_node(schema, node));
    reports.emplace_back(name, graph.populate(node, std::move(instances)));
  }
  return reports;
}

LoadedGraph load_graph(const std::filesystem::path& schema_path,
                       const std::filesystem::path& data_dir) {
  LoadedGraph out;
  out.registry = std::make_unique<SensorRegistry>(builtin_sensors());
  out.schema = std::make_unique<SchemaGraph>(
      load_schema(schema_path, *out.registry));
  out.graph = std::make_unique<InstanceGraph>(*out.schema, *out.registry);
  out.reports = populate_from_directory(*out.graph, data_dir);
  out.graph->seal();
  return out;
}

std::shared_ptr<ConstrainedClassifier> build_constrained(
    const ConstrainedTemplate& tmpl, const SchemaGraph& schema,
    const std::vector<std::shared_ptr<Learner>>& learners) {
  NodeTypeId scope = schema.node_id_or_throw(tmpl.scope);
  auto cc = std::make_shared<ConstrainedClassifier>(
      tmpl.name, scope, parse_query(tmpl.decision), tmpl.seed);
  if (tmpl.scope_of) cc->set_scope_query(parse_query(*tmpl.scope_of));
  for (const std::string& name : tmpl.classifiers) {
    std::shared_ptr<Learner> found;
    for (const auto& l : learners)
      if (l->spec().name == name) found = l;
    if (!found)
      raise(ErrorCode::ConfigError,
            "constrained classifier '" + tmpl.name +
                "' references unknown learner '" + name + "'");
    cc->add_classifier(found);
  }
  for (const std::string& text : tmpl.constraints)
    cc->add_constraint(constraint::parse(text));
  return cc;
}

}  // namespace hinet
