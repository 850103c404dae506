#pragma once
// Machine-readable reports: per-focal posterior blocks, ablation stages and
// the focal x source heatmap matrix. Schema "nostra.report/v1".
//
// Probabilities and log-likelihoods are written with round-trip precision;
// a log-likelihood of -inf is JSON null and "-inf" in CSV.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "nostra/inference.hpp"

namespace nostra {

inline constexpr const char* kReportSchema = "nostra.report/v1";

struct InputDigest {
  std::string role;  // cases, locations, weights, fasta, config
  std::string file;  // file name only
  std::string sha256;
};

struct Provenance {
  ConfigMap params;
  std::string prior;
  std::vector<InputDigest> inputs;
  std::vector<std::string> warnings;
};

struct FocalAblation {
  CaseId focal;
  std::vector<AblationStage> stages;
};

std::string sha256_hex(std::string_view bytes);
InputDigest digest_file(const std::string& role, const std::filesystem::path& path);

nlohmann::json toggles_json(const DataToggles& t);
nlohmann::json posterior_json(const SourcePosterior& p);
nlohmann::json provenance_json(const Provenance& p);

nlohmann::json posterior_report(const Provenance& prov, const DataToggles& toggles,
                                const std::vector<SourcePosterior>& results);
/// Each stage carries per-source deltas against the previous stage.
nlohmann::json ablation_report(const Provenance& prov, const std::vector<FocalAblation>& results);

std::string posterior_csv(const std::vector<SourcePosterior>& results);
std::string ablation_csv(const std::vector<FocalAblation>& results);

/// Rows are focal cases; columns are every case id, then Hospital, Community
/// and Nosocomial. A focal's own column is left empty.
std::string heatmap_csv(const std::vector<SourcePosterior>& results, const std::vector<CaseId>& all_cases);

std::string format_number(double v);

}  // namespace nostra
