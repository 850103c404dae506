#pragma once
// Per-hypothesis likelihood assembly and the categorical posterior over
// infection sources {candidates..., Hospital, Community}.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nostra/contact.hpp"
#include "nostra/distributions.hpp"
#include "nostra/genomics.hpp"
#include "nostra/ingest.hpp"

namespace nostra {

enum class HypothesisKind { Candidate, Hospital, Community };

struct Hypothesis {
  HypothesisKind kind = HypothesisKind::Community;
  CaseId candidate;  // Candidate only

  static Hypothesis from_candidate(CaseId id) { return {HypothesisKind::Candidate, std::move(id)}; }
  static Hypothesis hospital() { return {HypothesisKind::Hospital, {}}; }
  static Hypothesis community() { return {HypothesisKind::Community, {}}; }

  /// Candidate id, or "Hospital" / "Community".
  std::string label() const;
  bool operator==(const Hypothesis&) const = default;
};

struct SourcePrior {
  enum class Mode { Uniform, NosocomialSplit };
  Mode mode = Mode::Uniform;
  double p_nosocomial = 0.5;  // NosocomialSplit only

  static SourcePrior uniform() { return {}; }
  static SourcePrior nosocomial_split(double p);
  /// "uniform" or "noso:<p>".
  static SourcePrior parse(std::string_view text);
  std::string to_string() const;

  /// Masses for n candidates followed by Hospital then Community; sums to 1.
  std::vector<double> masses(std::size_t n_candidates) const;
};

struct DataToggles {
  bool use_onsets = true;
  bool use_genetics = true;
  bool use_locations = true;
  bool use_admissions = true;

  static DataToggles all() { return {}; }
  static DataToggles onsets_only() { return {true, false, false, false}; }
  bool operator==(const DataToggles&) const = default;
};

enum class DataSource { Genetics, Locations, Admissions };

std::string to_string(DataSource s);
/// Comma-separated permutation of genetics,locations,admissions.
std::vector<DataSource> parse_ablation_order(std::string_view text);

struct HypothesisResult {
  Hypothesis hypothesis;
  double prior = 0.0;
  LogProb log_likelihood = kLogZero;
  double probability = 0.0;
};

struct SourcePosterior {
  CaseId focal;
  std::vector<HypothesisResult> entries;  // candidates (lexicographic), Hospital, Community
  double nosocomial = 0.0;
  DataToggles toggles;
  std::vector<std::string> notes;

  const HypothesisResult& at(const Hypothesis& h) const;
  double probability(const Hypothesis& h) const { return at(h).probability; }
  /// Highest-probability entry; ties go to the earlier entry.
  const HypothesisResult& map_estimate() const;
};

struct AblationStage {
  std::string name;  // "onsets", then each added source
  DataToggles toggles;
  SourcePosterior posterior;
};

class DegenerateEvidenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InferenceEngine {
 public:
  /// The snapshot must outlive the engine.
  explicit InferenceEngine(const WardSnapshot& snapshot);

  const WardSnapshot& snapshot() const { return snapshot_; }

  /// Onset + coalescent genetics + co-location under "az did not infect focal".
  LogProb log_lik_null_candidate(const CaseId& az, const CaseId& focal, const DataToggles& toggles) const;

  /// Candidate onset plus the sum over the focal's infection day of profile,
  /// waiting time, direct genetics and direct co-location terms.
  LogProb log_lik_direct_pair(const CaseId& az, const CaseId& focal, const DataToggles& toggles) const;

  LogProb log_lik_focal_onset(const CaseId& focal, HypothesisKind kind, const DataToggles& toggles) const;

  /// Candidates are reordered lexicographically. Throws DegenerateEvidenceError
  /// when every hypothesis has zero posterior weight.
  SourcePosterior posterior(const CaseId& focal, std::vector<CaseId> candidates, const SourcePrior& prior,
                            const DataToggles& toggles) const;

  /// Every other case on the ward is a candidate.
  SourcePosterior posterior(const CaseId& focal, const SourcePrior& prior, const DataToggles& toggles) const;

  std::vector<AblationStage> ablation_sequence(const CaseId& focal, std::vector<CaseId> candidates,
                                               const SourcePrior& prior, const std::vector<DataSource>& order) const;

  std::vector<CaseId> default_candidates(const CaseId& focal) const;

 private:
  struct GeneticPair {
    PairwiseGeneticSummary summary;
    Day sample_focal = 0;
    Day sample_candidate = 0;
  };

  std::optional<GeneticPair> genetic_pair(const CaseId& az, const CaseId& focal) const;
  std::optional<ContactHistory> contact_pair(const CaseId& az, const CaseId& focal) const;
  Day effective_sample_day(const CaseRecord& c) const { return c.sample_time.value_or(c.onset); }

  const WardSnapshot& snapshot_;
  WaitingTimeTable waiting_;
  PairwiseCache pairs_;
  std::map<CaseId, LogProb> candidate_onset_;
};

/// Posterior for each focal against all other cases, computed on up to
/// `threads` workers; output order follows `focals` regardless of schedule.
/// The first exception raised (in `focals` order) is rethrown.
std::vector<SourcePosterior> posterior_matrix(const InferenceEngine& engine, const std::vector<CaseId>& focals,
                                              const SourcePrior& prior, const DataToggles& toggles,
                                              unsigned threads = 1);

}  // namespace nostra
