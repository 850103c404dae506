#pragma once
// Alignment ingestion, pairwise column reduction and the two genetic
// likelihood terms (coalescent background vs direct transmission).

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "nostra/calendar.hpp"
#include "nostra/distributions.hpp"

namespace nostra {

class NotFoundError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

struct FastaRecord {
  std::string id;
  std::string residues;  // upper-cased
};

/// Reads wrapped or single-line FASTA. Residues are upper-cased; the record id
/// is the header text up to the first whitespace.
std::vector<FastaRecord> read_fasta(std::istream& in);

class Alignment {
 public:
  Alignment() = default;
  /// Throws std::invalid_argument on duplicate ids, unequal lengths or
  /// residues outside the nucleotide/IUPAC/gap alphabet.
  explicit Alignment(std::vector<FastaRecord> records);

  bool contains(const CaseId& id) const { return sequences_.contains(id); }
  const std::string& sequence(const CaseId& id) const;
  std::size_t length() const { return length_; }
  std::size_t size() const { return sequences_.size(); }
  bool empty() const { return sequences_.empty(); }
  const std::map<CaseId, std::string>& sequences() const { return sequences_; }

 private:
  std::map<CaseId, std::string> sequences_;
  std::size_t length_ = 0;
};

struct PairwiseGeneticSummary {
  long snps = 0;
  long effective_length = 0;
  long sample_gap_days = 0;

  bool operator==(const PairwiseGeneticSummary&) const = default;
};

enum class ErrorTermMode { FixedConstant, PerBase };

struct PathogenGeneticParams {
  double ne = 51.0;
  double mu = 1.829e-6;  // substitutions per site per day
  double gen_time = 5.5;
  ErrorTermMode error_mode = ErrorTermMode::FixedConstant;
  double error_constant = 0.404;  // stands in for 2 E G^{I,J}
  double error_per_base = 0.0;    // E, used in PerBase mode

  double error_term(long effective_length) const {
    return error_mode == ErrorTermMode::FixedConstant
               ? error_constant
               : 2.0 * error_per_base * static_cast<double>(effective_length);
  }
};

void validate(const PathogenGeneticParams& p);

/// A column survives only when both residues are one of A, C, G, T.
PairwiseGeneticSummary reduce_pair(const Alignment& alignment, const CaseId& i, const CaseId& j,
                                   std::optional<Day> sample_i = std::nullopt,
                                   std::optional<Day> sample_j = std::nullopt);

/// Coalescent background: Delaporte with alpha = 2 M g Ne G', beta = 1 and
/// lambda = error term + t_d M G'. Returns std::nullopt when G' = 0 (no usable
/// genetic data for the pair).
std::optional<LogProb> null_genetic_log_lik(const PairwiseGeneticSummary& s, const PathogenGeneticParams& p);

DelaporteParams null_genetic_delaporte(const PairwiseGeneticSummary& s, const PathogenGeneticParams& p);

/// Direct transmission at infection day t: Poisson with mean
/// (|t_sB - t| + |t_sA - t|) M G' + error term.
std::optional<LogProb> direct_genetic_log_lik(const PairwiseGeneticSummary& s, Day t_infect, Day sample_focal,
                                              Day sample_candidate, const PathogenGeneticParams& p);

// Memo of SNP/length counts keyed by unordered pair. Concurrent readers,
// serialized insertion.
class PairwiseCache {
 public:
  explicit PairwiseCache(const Alignment& alignment) : alignment_(alignment) {}

  /// snps and effective_length for (i, j); sample_gap_days is left at 0.
  PairwiseGeneticSummary get(const CaseId& i, const CaseId& j) const;

 private:
  const Alignment& alignment_;
  mutable std::shared_mutex mutex_;
  mutable std::map<std::pair<CaseId, CaseId>, PairwiseGeneticSummary> memo_;
};

}  // namespace nostra
