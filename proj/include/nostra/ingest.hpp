#pragma once
// Ward datasets: parsing, cross-reference validation, and the immutable
// snapshot consumed by inference.
//
// File formats (header row required, columns matched by name):
//   cases.csv      id,onset_date,admission_date,sample_date   (last two optional)
//   locations.csv  id,date,location_code
//   weights.csv    id_a,id_b,date,weight                      (optional file)
//   config         flat "dotted.key = value" lines, '#' starts a comment
// Dates are YYYY-MM-DD.

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nostra/calendar.hpp"
#include "nostra/contact.hpp"
#include "nostra/epidemiology.hpp"
#include "nostra/genomics.hpp"

namespace nostra {

enum class IngestErrorKind {
  Format,
  DateParse,
  DuplicateCase,
  DuplicateRow,
  UnknownReference,
  SequenceLength,
  Config,
  Validation,
};

class IngestError : public std::runtime_error {
 public:
  IngestError(IngestErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  IngestErrorKind kind() const { return kind_; }

 private:
  IngestErrorKind kind_;
};

struct ModelParams {
  PathogenGeneticParams genetic;
  WaitingTimeModel waiting;
  TransmissionProfile profile = default_transmission_profile();
  double default_contact_weight = 0.5;

  bool operator==(const ModelParams& o) const;
};

using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config(std::string_view text);

struct RunConfig {
  ModelParams params;
  Date epidemic_start{};
  std::optional<Date> horizon_end;
};

/// Unknown keys and malformed values raise IngestError(Config).
RunConfig resolve_config(const ConfigMap& config);
/// Complete, explicit key set that resolves back to the same RunConfig.
ConfigMap to_config_map(const RunConfig& config);
std::string render_config(const ConfigMap& config);

struct CaseRow {
  CaseId id;
  Date onset{};
  std::optional<Date> admission;
  std::optional<Date> sample;
};

struct LocationRow {
  CaseId id;
  Date date{};
  std::string location;
};

struct WeightRow {
  CaseId id_a;
  CaseId id_b;
  Date date{};
  double weight = 0.5;
};

// Raw, calendar-dated inputs: the common currency of files and the service.
struct WardData {
  std::vector<CaseRow> cases;
  std::vector<LocationRow> locations;
  std::vector<WeightRow> weights;
  std::vector<FastaRecord> sequences;
  ConfigMap config;
};

std::vector<CaseRow> parse_cases_csv(std::string_view text);
std::vector<LocationRow> parse_locations_csv(std::string_view text);
std::vector<WeightRow> parse_weights_csv(std::string_view text);

using PairKey = std::pair<CaseId, CaseId>;  // ordered, first < second
inline PairKey pair_key(const CaseId& a, const CaseId& b) { return a < b ? PairKey{a, b} : PairKey{b, a}; }

struct WardSnapshot {
  std::map<CaseId, CaseRecord> cases;
  Alignment alignment;
  std::map<CaseId, std::map<Day, std::string>> locations;
  std::map<PairKey, std::map<Day, double>> contact_weights;
  ModelParams params;
  EpidemicFrame frame;
  std::vector<std::string> warnings;

  const CaseRecord& case_record(const CaseId& id) const;
  bool operator==(const WardSnapshot& o) const;
};

WardSnapshot build_snapshot(const WardData& data);

struct WardPaths {
  std::filesystem::path cases;
  std::optional<std::filesystem::path> locations;
  std::optional<std::filesystem::path> weights;
  std::optional<std::filesystem::path> fasta;
  std::optional<std::filesystem::path> config;
};

WardData read_ward_files(const WardPaths& paths);
WardSnapshot load_ward(const WardPaths& paths);

/// Writes cases.csv, locations.csv, weights.csv, sequences.fasta and
/// config.txt into `dir`; returns the paths written.
WardPaths write_ward(const WardSnapshot& snapshot, const std::filesystem::path& dir);

/// Pair coverage: every day on which either case has a location row or the
/// pair has an elicited weight.
ContactHistory build_contact_history(const WardSnapshot& snapshot, const CaseId& az, const CaseId& focal);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace nostra
