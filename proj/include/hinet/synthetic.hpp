#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace hinet {

// Desk-scale synthetic drug-response data: patients, genes with pathway
// memberships, dense patient-gene expression, gene-gene interaction flags,
// and per-patient drug responses that are linear in the planted pathway's
// expressions plus Gaussian noise.
struct SyntheticBioParams {
  std::uint64_t seed = 7;
  std::size_t n_patients = 50;
  std::size_t n_genes = 200;
  std::size_t n_pathways = 10;
  std::size_t planted_pathway = 0;
  double noise_sd = 0.1;
};

// Writes genes.csv, geneGene.csv, patients.csv, patientGene.csv,
// patientDrug.csv plus schema.json, a ready drug_response.json learner
// configuration, and manifest.json with the ground truth (planted pathway,
// weights, memberships). Byte-identical output for identical parameters.
void generate_synthetic_bio(const SyntheticBioParams& params,
                            const std::filesystem::path& directory);

std::string synthetic_pathway_name(std::size_t index);

// The schema document the generated tables conform to.
std::string synthetic_bio_schema_json();

// Learner configuration for the per-pathway regressor family; train/test
// split is a leading/trailing slice of the patientDrug instances.
std::string synthetic_bio_learner_json(std::size_t train_count,
                                       std::size_t test_count);

}  // namespace hinet
