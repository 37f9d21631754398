#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "hinet/config.hpp"
#include "hinet/synthetic.hpp"

namespace {

using namespace hinet;

// Exit codes: 0 success, 1 usage error, 2 data or query error.
constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kDataError = 2;

void print_reports(
    const std::vector<std::pair<std::string, PopulationReport>>& reports) {
  for (const auto& [node, report] : reports) {
    std::cout << node << ": " << report.added << " added";
    if (report.generated) std::cout << ", " << report.generated << " generated";
    std::cout << ", " << report.edges << " edges\n";
  }
}

void print_report(const std::string& name, const EvalReport& report) {
  if (report.task == Task::Regression) {
    std::cout << name << ": n=" << report.n << " ssr=" << format_real(report.ssr)
              << " mse=" << format_real(report.mse) << " pearson=";
    if (report.pearson)
      std::cout << format_real(*report.pearson);
    else
      std::cout << "undefined";
    std::cout << "\n";
    return;
  }
  std::cout << name << ": n=" << report.n
            << " accuracy=" << format_real(report.accuracy) << "\n";
  for (const auto& [label, prf] : report.per_label)
    std::cout << "  " << label << ": precision=" << format_real(prf.precision)
              << " recall=" << format_real(prf.recall)
              << " f1=" << format_real(prf.f1) << " support=" << prf.support
              << "\n";
}

struct RunPaths {
  std::string schema;
  std::string data;
};

// Schema/data come from CLI flags or from the learner document itself,
// resolved relative to the document's directory.
RunPaths resolve_paths(const std::filesystem::path& config_path,
                       const LearnerDocument& doc, const std::string& schema,
                       const std::string& data) {
  RunPaths paths;
  auto base = config_path.parent_path();
  if (!schema.empty())
    paths.schema = schema;
  else if (doc.schema_path)
    paths.schema = (base / *doc.schema_path).string();
  else
    raise(ErrorCode::ConfigError,
          "no schema given (pass --schema or set \"schema\" in the document)");
  if (!data.empty())
    paths.data = data;
  else if (doc.data_path)
    paths.data = (base / *doc.data_path).string();
  else
    raise(ErrorCode::ConfigError,
          "no data directory given (pass --data or set \"data\")");
  return paths;
}

std::optional<std::vector<std::string>> selection_ids(
    const InstanceGraph& graph, const LearnerTemplate& tmpl,
    const std::optional<InstanceSelection>& selection) {
  NodeTypeId root = graph.schema().node_id_or_throw(tmpl.root);
  return resolve_selection(graph, root, selection);
}

int run_train_or_test(const std::string& config, const std::string& schema,
                      const std::string& data, bool test_mode) {
  LearnerDocument doc = load_learner_document(config);
  RunPaths paths = resolve_paths(config, doc, schema, data);
  LoadedGraph loaded = load_graph(paths.schema, paths.data);
  for (const LearnerTemplate& tmpl : doc.learners) {
    Learner learner(instantiate_learner(tmpl));
    auto train_ids = selection_ids(*loaded.graph, tmpl, tmpl.train_selection);
    auto report = learner.learn(*loaded.graph, train_ids ? &*train_ids : nullptr);
    std::cout << tmpl.name << ": trained on " << report.examples
              << " examples";
    if (report.skipped) std::cout << " (" << report.skipped << " skipped)";
    std::cout << ", " << learner.lexicon().size() << " features\n";
    if (test_mode) {
      auto test_ids = selection_ids(*loaded.graph, tmpl, tmpl.test_selection);
      print_report(tmpl.name,
                   learner.test(*loaded.graph, test_ids ? &*test_ids : nullptr));
    }
  }
  return kOk;
}

int run_family(const std::string& config, const std::string& schema,
               const std::string& data) {
  LearnerDocument doc = load_learner_document(config);
  RunPaths paths = resolve_paths(config, doc, schema, data);
  LoadedGraph loaded = load_graph(paths.schema, paths.data);
  bool any = false;
  for (const LearnerTemplate& tmpl : doc.learners) {
    if (!tmpl.family) continue;
    any = true;
    LearnerFamily family = build_family(*loaded.graph, tmpl);
    auto train_ids = selection_ids(*loaded.graph, tmpl, tmpl.train_selection);
    auto test_ids = selection_ids(*loaded.graph, tmpl, tmpl.test_selection);
    family.train_all(*loaded.graph, train_ids ? &*train_ids : nullptr);
    family.test_all(*loaded.graph, test_ids ? &*test_ids : nullptr);
    for (std::size_t index : family.rank()) {
      const auto& member = family.members()[index];
      print_report(member.parameter, member.report);
    }
    std::cout << "best: " << family.best().parameter << "\n";
  }
  if (!any)
    raise(ErrorCode::ConfigError, "no learner in '" + config +
                                      "' declares a family");
  return kOk;
}

int run_query(const std::string& schema, const std::string& data,
              const std::string& text) {
  LoadedGraph loaded = load_graph(schema, data);
  QueryPlan plan = parse_query(text);
  QueryResult result = evaluate(plan, *loaded.graph);
  std::cout << format_result(result, *loaded.graph) << "\n";
  return kOk;
}

int run_repl(const std::string& schema, const std::string& data) {
  LoadedGraph loaded = load_graph(schema, data);
  print_reports(loaded.reports);
  std::string line;
  std::cout << "> " << std::flush;
  while (std::getline(std::cin, line)) {
    if (line == ":quit" || line == ":q") break;
    if (!line.empty()) {
      try {
        QueryResult result = evaluate(parse_query(line), *loaded.graph);
        std::cout << format_result(result, *loaded.graph) << "\n";
      } catch (const Error& e) {
        std::cout << "error: " << e.what() << "\n";
      }
    }
    std::cout << "> " << std::flush;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hinet: heterogeneous information network engine"};
  app.require_subcommand(1);

  std::string schema, data, config, query_text, out_dir;

  auto* load = app.add_subcommand("load", "build a graph and print population counts");
  load->add_option("schema", schema, "schema document")->required();
  load->add_option("datadir", data, "data directory")->required();

  auto* query = app.add_subcommand("query", "evaluate one query");
  query->add_option("--schema,-s", schema, "schema document")->required();
  query->add_option("--data,-d", data, "data directory")->required();
  query->add_option("text", query_text, "query text")->required();

  auto* repl = app.add_subcommand("repl", "interactive query loop (:quit exits)");
  repl->add_option("--schema,-s", schema, "schema document")->required();
  repl->add_option("--data,-d", data, "data directory")->required();

  auto* train = app.add_subcommand("train", "train the configured learners");
  train->add_option("config", config, "learner configuration document")->required();
  train->add_option("--schema,-s", schema, "schema document");
  train->add_option("--data,-d", data, "data directory");

  auto* test = app.add_subcommand("test", "train, then evaluate on the test split");
  test->add_option("config", config, "learner configuration document")->required();
  test->add_option("--schema,-s", schema, "schema document");
  test->add_option("--data,-d", data, "data directory");

  auto* family = app.add_subcommand(
      "family", "train/test one learner per family parameter and rank them");
  family->add_option("config", config, "learner configuration document")->required();
  family->add_option("--schema,-s", schema, "schema document");
  family->add_option("--data,-d", data, "data directory");

  auto* synth = app.add_subcommand("synth", "generate synthetic drug-response data");
  hinet::SyntheticBioParams params;
  synth->add_option("--seed", params.seed, "random seed");
  synth->add_option("--patients", params.n_patients, "patient count");
  synth->add_option("--genes", params.n_genes, "gene count");
  synth->add_option("--pathways", params.n_pathways, "pathway count");
  synth->add_option("--planted", params.planted_pathway, "planted pathway index");
  synth->add_option("--noise-sd", params.noise_sd, "response noise sd");
  synth->add_option("--out,-o", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (load->parsed()) {
      hinet::LoadedGraph loaded = hinet::load_graph(schema, data);
      print_reports(loaded.reports);
      return kOk;
    }
    if (query->parsed()) return run_query(schema, data, query_text);
    if (repl->parsed()) return run_repl(schema, data);
    if (train->parsed()) return run_train_or_test(config, schema, data, false);
    if (test->parsed()) return run_train_or_test(config, schema, data, true);
    if (family->parsed()) return run_family(config, schema, data);
    if (synth->parsed()) {
      hinet::generate_synthetic_bio(params, out_dir);
      std::cout << "wrote " << out_dir << "\n";
      return kOk;
    }
  } catch (const hinet::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsage;
}
