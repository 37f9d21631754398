#include "hinet/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <vector>

#include "json.hpp"

#include "hinet/rng.hpp"
#include "hinet/value.hpp"

namespace hinet {

namespace {

std::string zero_pad(std::size_t v, int width) {
  std::string s = std::to_string(v);
  while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
  return s;
}

std::string gene_id(std::size_t i) { return "g" + zero_pad(i, 4); }
std::string patient_id(std::size_t i) { return "p" + zero_pad(i, 4); }

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    raise(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

std::string synthetic_pathway_name(std::size_t index) {
  return "hsa" + zero_pad(index, 5);
}

std::string synthetic_bio_schema_json() {
  return R"json({
  "nodes": ["patients", "genes", "geneGene", "patientGene", "patientDrug"],
  "properties": [
    {"node": "patients", "name": "age", "kind": "Int", "sensor": "attr(age)"},
    {"node": "patients", "name": "cancerType", "kind": "Text", "sensor": "attr(cancerType)"},
    {"node": "genes", "name": "geneName", "kind": "Text", "sensor": "attr(geneName)"},
    {"node": "genes", "name": "KEGG", "kind": "List[Text]", "sensor": "attr(KEGG)"},
    {"node": "geneGene", "name": "PPIBioGrid", "kind": "Int", "sensor": "attr(PPIBioGrid)"},
    {"node": "patientGene", "name": "pid", "kind": "Text", "sensor": "attr(pid)"},
    {"node": "patientGene", "name": "gid", "kind": "Text", "sensor": "attr(gid)"},
    {"node": "patientGene", "name": "gExpression", "kind": "Real", "sensor": "attr(gExpression)"},
    {"node": "patientGene", "name": "pathways", "kind": "List[Text]", "sensor": "attr(pathways)"},
    {"node": "patientDrug", "name": "pid", "kind": "Text", "sensor": "attr(pid)"},
    {"node": "patientDrug", "name": "did", "kind": "Text", "sensor": "attr(did)"},
    {"node": "patientDrug", "name": "drugResponse", "kind": "Real", "sensor": "attr(response)"}
  ],
  "edges": [
    {"name": "patientToPatientGene", "source": "patients", "destination": "patientGene",
     "sensors": ["key_eq(id,pid)"]},
    {"name": "patientToPatientDrug", "source": "patients", "destination": "patientDrug",
     "sensors": ["key_eq(id,pid)"]},
    {"name": "geneToPatientGene", "source": "genes", "destination": "patientGene",
     "sensors": ["key_eq(id,gid)"]},
    {"name": "geneGenes", "source": "geneGene", "destination": "genes",
     "sensors": ["key_eq(g1,id)", "key_eq(g2,id)"]}
  ]
}
)json";
}

std::string synthetic_bio_learner_json(std::size_t train_count,
                                       std::size_t test_count) {
  nlohmann::json doc;
  doc["schema"] = "schema.json";
  doc["data"] = ".";
  nlohmann::json learner;
  learner["name"] = "drugResponse";
  learner["root"] = "patientDrug";
  learner["task"] = "regression";
  learner["label"] = "patientDrug() prop drugResponse";
  learner["features"] = nlohmann::json::array({nlohmann::json{
      {"name", "pwExpression"},
      {"query",
       "patientDrug() ~> -patientToPatientDrug ~> patientToPatientGene "
       "filter(pathways == \"{param}\") prop gExpression"},
      {"ordered", true}}});
  learner["sgd"] = {{"learning_rate", 0.01}, {"epochs", 100}, {"l2", 0.0},
                    {"seed", 42}};
  learner["train"] = {{"count", train_count}};
  learner["test"] = {{"count", test_count}, {"offset", train_count}};
  learner["family"] = {{"parameter_source", "genes() prop KEGG distinct"},
                       {"placeholder", "{param}"}};
  doc["learner"] = std::move(learner);
  return doc.dump(2) + "\n";
}

void generate_synthetic_bio(const SyntheticBioParams& params,
                            const std::filesystem::path& directory) {
  if (params.n_patients == 0 || params.n_genes == 0 || params.n_pathways == 0)
    raise(ErrorCode::ParameterOutOfRange, "counts must be positive");
  if (params.planted_pathway >= params.n_pathways)
    raise(ErrorCode::ParameterOutOfRange,
          "planted pathway index " + std::to_string(params.planted_pathway) +
              " out of range (n_pathways = " +
              std::to_string(params.n_pathways) + ")");
  if (params.n_genes < params.n_pathways)
    raise(ErrorCode::ParameterOutOfRange,
          "need at least one gene per pathway");
  if (params.noise_sd < 0)
    raise(ErrorCode::ParameterOutOfRange, "noise_sd must be non-negative");

  std::filesystem::create_directories(directory);
  Rng rng(params.seed);

  // Pathway memberships: round-robin base membership keeps every pathway
  // populated; a small fraction of genes joins one or two extra pathways.
  std::vector<std::set<std::size_t>> memberships(params.n_genes);
  for (std::size_t g = 0; g < params.n_genes; ++g) {
    memberships[g].insert(g % params.n_pathways);
    double u = rng.uniform();
    std::size_t extras = u < 0.90 ? 0 : (u < 0.98 ? 1 : 2);
    while (memberships[g].size() < 1 + extras &&
           memberships[g].size() < params.n_pathways)
      memberships[g].insert(rng.below(params.n_pathways));
  }

  std::string genes_csv = "id,geneName,KEGG\n";
  for (std::size_t g = 0; g < params.n_genes; ++g) {
    std::string kegg;
    for (std::size_t p : memberships[g]) {
      if (!kegg.empty()) kegg += ';';
      kegg += synthetic_pathway_name(p);
    }
    genes_csv += gene_id(g) + ",GENE" + zero_pad(g, 4) + "," + kegg + "\n";
  }

  // Random interaction pairs with a binary catalogue flag.
  std::string gene_gene_csv = "id,g1,g2,PPIBioGrid\n";
  std::size_t n_relations = params.n_genes * 2;
  for (std::size_t r = 0; r < n_relations; ++r) {
    std::size_t a = rng.below(params.n_genes);
    std::size_t b = rng.below(params.n_genes);
    while (b == a) b = rng.below(params.n_genes);
    int flag = rng.uniform() < 0.5 ? 1 : 0;
    gene_gene_csv += "gg" + zero_pad(r, 5) + "," + gene_id(a) + "," +
                     gene_id(b) + "," + std::to_string(flag) + "\n";
  }

  static const char* kCancerTypes[] = {"BRCA", "LUAD", "COAD", "PRAD"};
  std::string patients_csv = "id,age,cancerType\n";
  for (std::size_t p = 0; p < params.n_patients; ++p) {
    patients_csv += patient_id(p) + "," +
                    std::to_string(30 + rng.below(50)) + "," +
                    kCancerTypes[rng.below(4)] + "\n";
  }

  // Dense expression matrix, patient-major with genes ascending so each
  // patient's rows arrive in a consistent gene order.
  std::vector<std::vector<double>> expression(
      params.n_patients, std::vector<double>(params.n_genes));
  std::string patient_gene_csv = "id,pid,gid,gExpression,pathways\n";
  for (std::size_t p = 0; p < params.n_patients; ++p) {
    for (std::size_t g = 0; g < params.n_genes; ++g) {
      double x = rng.normal();
      expression[p][g] = x;
      std::string pathways;
      for (std::size_t pw : memberships[g]) {
        if (!pathways.empty()) pathways += ';';
        pathways += synthetic_pathway_name(pw);
      }
      patient_gene_csv += patient_id(p) + "_" + gene_id(g) + "," +
                          patient_id(p) + "," + gene_id(g) + "," +
                          format_real(x) + "," + pathways + "\n";
    }
  }

  std::vector<std::size_t> planted_genes;
  for (std::size_t g = 0; g < params.n_genes; ++g)
    if (memberships[g].count(params.planted_pathway)) planted_genes.push_back(g);
  std::vector<double> weights(planted_genes.size());
  for (double& w : weights) w = rng.normal();

  std::string patient_drug_csv = "id,pid,did,response\n";
  std::vector<double> responses(params.n_patients);
  for (std::size_t p = 0; p < params.n_patients; ++p) {
    double y = 0;
    for (std::size_t i = 0; i < planted_genes.size(); ++i)
      y += weights[i] * expression[p][planted_genes[i]];
    y += params.noise_sd * rng.normal();
    responses[p] = y;
    patient_drug_csv += patient_id(p) + "_d1," + patient_id(p) + ",d1," +
                        format_real(y) + "\n";
  }

  nlohmann::json manifest;
  manifest["seed"] = params.seed;
  manifest["n_patients"] = params.n_patients;
  manifest["n_genes"] = params.n_genes;
  manifest["n_pathways"] = params.n_pathways;
  manifest["planted_pathway_index"] = params.planted_pathway;
  manifest["planted_pathway"] = synthetic_pathway_name(params.planted_pathway);
  manifest["noise_sd"] = params.noise_sd;
  nlohmann::json wobj = nlohmann::json::object();
  for (std::size_t i = 0; i < planted_genes.size(); ++i)
    wobj[gene_id(planted_genes[i])] = weights[i];
  manifest["weights"] = std::move(wobj);
  nlohmann::json pathway_genes = nlohmann::json::object();
  for (std::size_t pw = 0; pw < params.n_pathways; ++pw) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t g = 0; g < params.n_genes; ++g)
      if (memberships[g].count(pw)) arr.push_back(gene_id(g));
    pathway_genes[synthetic_pathway_name(pw)] = std::move(arr);
  }
  manifest["pathway_genes"] = std::move(pathway_genes);

  write_file(directory / "genes.csv", genes_csv);
  write_file(directory / "geneGene.csv", gene_gene_csv);
  write_file(directory / "patients.csv", patients_csv);
  write_file(directory / "patientGene.csv", patient_gene_csv);
  write_file(directory / "patientDrug.csv", patient_drug_csv);
  write_file(directory / "schema.json", synthetic_bio_schema_json());
  write_file(directory / "drug_response.json",
             synthetic_bio_learner_json(params.n_patients * 2 / 3,
                                        params.n_patients -
                                            params.n_patients * 2 / 3));
  write_file(directory / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace hinet
