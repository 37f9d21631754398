#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hinet/config.hpp"
#include "hinet/synthetic.hpp"

namespace py = pybind11;
using namespace hinet;

namespace {

Value value_from_python(const py::handle& obj) {
  if (py::isinstance<py::bool_>(obj)) return Value::boolean(obj.cast<bool>());
  if (py::isinstance<py::int_>(obj))
    return Value::integer(obj.cast<std::int64_t>());
  if (py::isinstance<py::float_>(obj)) return Value::real(obj.cast<double>());
  if (py::isinstance<py::str>(obj)) return Value::text(obj.cast<std::string>());
  if (py::isinstance<py::list>(obj) || py::isinstance<py::tuple>(obj)) {
    std::vector<Value> items;
    for (const py::handle& item : obj) items.push_back(value_from_python(item));
    ValueKind kind = items.empty() ? ValueKind::Text : items[0].kind();
    return Value::list(kind, std::move(items),
                       py::isinstance<py::tuple>(obj));
  }
  throw py::type_error("unsupported attribute value type");
}

py::object value_to_python(const Value& v) {
  switch (v.kind()) {
    case ValueKind::Bool: return py::bool_(v.as_bool());
    case ValueKind::Int: return py::int_(v.as_int());
    case ValueKind::Real: return py::float_(v.as_real());
    case ValueKind::Text: return py::str(v.as_text());
    case ValueKind::List: {
      py::list out;
      for (const Value& item : v.items()) out.append(value_to_python(item));
      return out;
    }
  }
  return py::none();
}

py::object result_to_python(const QueryResult& result,
                            const InstanceGraph& graph) {
  return std::visit(
      [&](const auto& r) -> py::object {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, InstanceSet>) {
          py::list out;
          for (const NodeInstance* m : r.members) out.append(py::str(m->id));
          return out;
        } else if constexpr (std::is_same_v<T, ValueSequence>) {
          py::list out;
          for (const Value& v : r.values) out.append(value_to_python(v));
          return out;
        } else if constexpr (std::is_same_v<T, Value>) {
          return value_to_python(r);
        } else if constexpr (std::is_same_v<T, Grouping>) {
          py::dict out;
          for (const auto& [key, values] : r.groups) {
            py::list vs;
            for (const Value& v : values) vs.append(value_to_python(v));
            out[py::str(key.to_display())] = vs;
          }
          return out;
        } else {
          static_assert(std::is_same_v<T, EdgePath>);
          if (!r.found) return py::none();
          py::list out;
          for (const PathStep& step : r.steps)
            out.append(py::make_tuple(graph.schema().edge(step.edge).name,
                                      step.forward ? "+" : "-"));
          return out;
        }
      },
      result);
}

py::dict report_to_python(const EvalReport& report) {
  py::dict out;
  out["n"] = report.n;
  if (report.task == Task::Regression) {
    out["task"] = "regression";
    out["ssr"] = report.ssr;
    out["mse"] = report.mse;
    out["pearson"] = report.pearson ? py::object(py::float_(*report.pearson))
                                    : py::object(py::none());
  } else {
    out["task"] = "classification";
    out["accuracy"] = report.accuracy;
    py::dict labels;
    for (const auto& [label, prf] : report.per_label) {
      py::dict entry;
      entry["precision"] = prf.precision;
      entry["recall"] = prf.recall;
      entry["f1"] = prf.f1;
      entry["support"] = prf.support;
      labels[py::str(label)] = entry;
    }
    out["labels"] = labels;
  }
  return out;
}

// Owns the registry/schema/graph trio behind the python-facing handle.
class PyGraph {
 public:
  explicit PyGraph(const std::string& schema_json) {
    registry_ = std::make_unique<SensorRegistry>(builtin_sensors());
    schema_ = std::make_unique<SchemaGraph>(
        parse_schema_json(schema_json, *registry_));
    graph_ = std::make_unique<InstanceGraph>(*schema_, *registry_);
  }

  PyGraph(const std::string& schema_path, const std::string& data_dir) {
    LoadedGraph loaded = load_graph(schema_path, data_dir);
    registry_ = std::move(loaded.registry);
    schema_ = std::move(loaded.schema);
    graph_ = std::move(loaded.graph);
    for (auto& [node, report] : loaded.reports) {
      py::dict entry;
      entry["added"] = report.added;
      entry["generated"] = report.generated;
      entry["edges"] = report.edges;
      reports_[py::str(node)] = entry;
    }
  }

  py::dict populate(const std::string& node, const py::list& rows) {
    NodeTypeId type = schema_->node_id_or_throw(node);
    std::vector<NodeInstance> instances;
    for (const py::handle& row : rows) {
      py::dict d = row.cast<py::dict>();
      NodeInstance inst;
      inst.id = d["id"].cast<std::string>();
      for (const auto& item : d) {
        std::string key = item.first.cast<std::string>();
        if (key == "id") {
          inst.attrs.emplace("id", Value::text(inst.id));
          continue;
        }
        inst.attrs.emplace(key, value_from_python(item.second));
      }
      if (!inst.attrs.count("id")) inst.attrs.emplace("id", Value::text(inst.id));
      instances.push_back(std::move(inst));
    }
    PopulationReport report = graph_->populate(type, std::move(instances));
    py::dict out;
    out["added"] = report.added;
    out["generated"] = report.generated;
    out["edges"] = report.edges;
    return out;
  }

  void seal() { graph_->seal(); }

  py::object query(const std::string& text) const {
    QueryResult result = evaluate(parse_query(text), *graph_);
    return result_to_python(result, *graph_);
  }

  py::list instance_ids(const std::string& node) const {
    py::list out;
    for (const NodeInstance& inst :
         graph_->instances_of(schema_->node_id_or_throw(node)))
      out.append(py::str(inst.id));
    return out;
  }

  std::size_t count(const std::string& node) const {
    return graph_->instance_count(schema_->node_id_or_throw(node));
  }

  void write_prediction(const std::string& node, const std::string& name,
                        const py::dict& values) {
    std::vector<std::pair<std::string, Value>> pairs;
    for (const auto& item : values)
      pairs.emplace_back(item.first.cast<std::string>(),
                         value_from_python(item.second));
    graph_->write_prediction(schema_->node_id_or_throw(node), name, pairs);
  }

  py::dict reports() const { return reports_; }

  InstanceGraph& graph() { return *graph_; }
  const SchemaGraph& schema() const { return *schema_; }

 private:
  std::unique_ptr<SensorRegistry> registry_;
  std::unique_ptr<SchemaGraph> schema_;
  std::unique_ptr<InstanceGraph> graph_;
  py::dict reports_;
};

std::optional<std::vector<std::string>> ids_from_python(const py::object& ids) {
  if (ids.is_none()) return std::nullopt;
  return ids.cast<std::vector<std::string>>();
}

class PyLearner {
 public:
  PyLearner(const std::string& document_json,
            const py::object& parameter)
      : document_(parse_learner_json(document_json)) {
    std::optional<std::string> param;
    if (!parameter.is_none()) param = parameter.cast<std::string>();
    const LearnerTemplate& tmpl = document_.learners.at(0);
    learner_ = std::make_shared<Learner>(instantiate_learner(
        tmpl, param,
        tmpl.family ? tmpl.family->placeholder : std::string("{param}")));
  }

  py::dict learn(PyGraph& graph, const py::object& ids) {
    auto id_vec = ids_from_python(ids);
    auto report = learner_->learn(graph.graph(), id_vec ? &*id_vec : nullptr);
    py::dict out;
    out["examples"] = report.examples;
    out["skipped"] = report.skipped;
    return out;
  }

  py::dict test(PyGraph& graph, const py::object& ids) {
    auto id_vec = ids_from_python(ids);
    return report_to_python(
        learner_->test(graph.graph(), id_vec ? &*id_vec : nullptr));
  }

  py::object predict(PyGraph& graph, const std::string& instance_id) {
    NodeTypeId root = graph.schema().node_id_or_throw(learner_->spec().root);
    const NodeInstance* inst = graph.graph().find_instance(root, instance_id);
    if (!inst)
      raise(ErrorCode::UnknownInstance, "no instance '" + instance_id + "'");
    return value_to_python(learner_->predict(graph.graph(), *inst));
  }

 private:
  LearnerDocument document_;
  std::shared_ptr<Learner> learner_;
};

py::list run_family(PyGraph& graph, const std::string& document_json) {
  LearnerDocument doc = parse_learner_json(document_json);
  const LearnerTemplate& tmpl = doc.learners.at(0);
  LearnerFamily family = build_family(graph.graph(), tmpl);
  NodeTypeId root = graph.schema().node_id_or_throw(tmpl.root);
  auto train_ids =
      resolve_selection(graph.graph(), root, tmpl.train_selection);
  auto test_ids = resolve_selection(graph.graph(), root, tmpl.test_selection);
  family.train_all(graph.graph(), train_ids ? &*train_ids : nullptr);
  family.test_all(graph.graph(), test_ids ? &*test_ids : nullptr);
  py::list out;
  for (std::size_t index : family.rank()) {
    const auto& member = family.members()[index];
    py::dict entry;
    entry["parameter"] = member.parameter;
    entry["report"] = report_to_python(member.report);
    out.append(entry);
  }
  return out;
}

void synth(const std::string& out_dir, std::uint64_t seed,
           std::size_t patients, std::size_t genes, std::size_t pathways,
           std::size_t planted, double noise_sd) {
  SyntheticBioParams params;
  params.seed = seed;
  params.n_patients = patients;
  params.n_genes = genes;
  params.n_pathways = pathways;
  params.planted_pathway = planted;
  params.noise_sd = noise_sd;
  generate_synthetic_bio(params, out_dir);
}

}  // namespace

PYBIND11_MODULE(_hinet, m) {
  m.doc() = "Heterogeneous information network engine";

  py::register_exception<Error>(m, "HinetError");

  py::class_<PyGraph>(m, "Graph")
      .def(py::init<const std::string&>(), py::arg("schema_json"))
      .def(py::init<const std::string&, const std::string&>(),
           py::arg("schema_path"), py::arg("data_dir"))
      .def("populate", &PyGraph::populate, py::arg("node"), py::arg("rows"))
      .def("seal", &PyGraph::seal)
      .def("query", &PyGraph::query, py::arg("text"))
      .def("instance_ids", &PyGraph::instance_ids, py::arg("node"))
      .def("count", &PyGraph::count, py::arg("node"))
      .def("write_prediction", &PyGraph::write_prediction, py::arg("node"),
           py::arg("name"), py::arg("values"))
      .def_property_readonly("reports", &PyGraph::reports);

  py::class_<PyLearner>(m, "Learner")
      .def(py::init<const std::string&, const py::object&>(),
           py::arg("document_json"), py::arg("parameter") = py::none())
      .def("learn", &PyLearner::learn, py::arg("graph"),
           py::arg("ids") = py::none())
      .def("test", &PyLearner::test, py::arg("graph"),
           py::arg("ids") = py::none())
      .def("predict", &PyLearner::predict, py::arg("graph"),
           py::arg("instance_id"));

  m.def("load", [](const std::string& schema, const std::string& data) {
    return std::make_unique<PyGraph>(schema, data);
  }, py::arg("schema_path"), py::arg("data_dir"));
  m.def("run_family", &run_family, py::arg("graph"), py::arg("document_json"));
  m.def("generate_synthetic_bio", &synth, py::arg("out_dir"),
        py::arg("seed") = 7, py::arg("patients") = 50, py::arg("genes") = 200,
        py::arg("pathways") = 10, py::arg("planted") = 0,
        py::arg("noise_sd") = 0.1);
  m.attr("__version__") = "0.1.0";
}
