#include "nostra/genomics.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <stdexcept>

namespace nostra {

namespace {

constexpr std::string_view kAlphabet = "ACGTURYSWKMBDHVN-.";

constexpr std::array<bool, 256> make_unambiguous() {
  std::array<bool, 256> t{};
  t['A'] = t['C'] = t['G'] = t['T'] = true;
  return t;
}
constexpr auto kUnambiguous = make_unambiguous();

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<FastaRecord> read_fasta(std::istream& in) {
  std::vector<FastaRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '>') {
      std::string_view header = trim(view.substr(1));
      const auto ws = header.find_first_of(" \t");
      if (ws != std::string_view::npos) header = header.substr(0, ws);
      if (header.empty()) throw std::invalid_argument("fasta: empty record id");
      records.push_back({std::string(header), {}});
      continue;
    }
    if (records.empty()) throw std::invalid_argument("fasta: sequence data before the first header");
    for (char c : view) {
      if (std::isspace(static_cast<unsigned char>(c))) continue;
      records.back().residues.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
  }
  return records;
}

Alignment::Alignment(std::vector<FastaRecord> records) {
  for (auto& rec : records) {
    for (char c : rec.residues) {
      if (kAlphabet.find(c) == std::string_view::npos) {
        throw std::invalid_argument("fasta: record '" + rec.id + "' has invalid residue '" + std::string(1, c) + "'");
      }
    }
    if (sequences_.empty()) {
      length_ = rec.residues.size();
    } else if (rec.residues.size() != length_) {
      throw std::invalid_argument("fasta: record '" + rec.id + "' has length " + std::to_string(rec.residues.size()) +
                                  ", expected " + std::to_string(length_));
    }
    const CaseId id = rec.id;
    if (!sequences_.emplace(id, std::move(rec.residues)).second) {
      throw std::invalid_argument("fasta: duplicate record id '" + id + "'");
    }
  }
  if (!sequences_.empty() && length_ == 0) throw std::invalid_argument("fasta: empty sequences");
}

const std::string& Alignment::sequence(const CaseId& id) const {
  const auto it = sequences_.find(id);
  if (it == sequences_.end()) throw NotFoundError("alignment has no sequence for '" + id + "'");
  return it->second;
}

void validate(const PathogenGeneticParams& p) {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(p.ne)) throw DomainError("genetic.ne must be > 0");
  if (!positive(p.mu)) throw DomainError("genetic.mu must be > 0");
  if (!positive(p.gen_time)) throw DomainError("genetic.gen_time must be > 0");
  if (p.error_mode == ErrorTermMode::FixedConstant && !positive(p.error_constant)) {
    throw DomainError("genetic.error_constant must be > 0");
  }
  if (p.error_mode == ErrorTermMode::PerBase && !positive(p.error_per_base)) {
    throw DomainError("genetic.error_per_base must be > 0");
  }
}

PairwiseGeneticSummary reduce_pair(const Alignment& alignment, const CaseId& i, const CaseId& j,
                                   std::optional<Day> sample_i, std::optional<Day> sample_j) {
  const std::string& a = alignment.sequence(i);
  const std::string& b = alignment.sequence(j);
  PairwiseGeneticSummary out;
  for (std::size_t c = 0; c < a.size(); ++c) {
    const auto x = static_cast<unsigned char>(a[c]);
    const auto y = static_cast<unsigned char>(b[c]);
    if (!kUnambiguous[x] || !kUnambiguous[y]) continue;
    ++out.effective_length;
    if (x != y) ++out.snps;
  }
  if (sample_i && sample_j) out.sample_gap_days = std::labs(static_cast<long>(*sample_i) - *sample_j);
  return out;
}

DelaporteParams null_genetic_delaporte(const PairwiseGeneticSummary& s, const PathogenGeneticParams& p) {
  const double len = static_cast<double>(s.effective_length);
  return {
      .alpha = 2.0 * p.mu * p.gen_time * p.ne * len,
      .beta = 1.0,
      .lambda = p.error_term(s.effective_length) + static_cast<double>(s.sample_gap_days) * p.mu * len,
  };
}

std::optional<LogProb> null_genetic_log_lik(const PairwiseGeneticSummary& s, const PathogenGeneticParams& p) {
  if (s.effective_length <= 0) return std::nullopt;
  return delaporte_log_pmf(s.snps, null_genetic_delaporte(s, p));
}

std::optional<LogProb> direct_genetic_log_lik(const PairwiseGeneticSummary& s, Day t_infect, Day sample_focal,
                                              Day sample_candidate, const PathogenGeneticParams& p) {
  if (s.effective_length <= 0) return std::nullopt;
  const double elapsed = std::abs(sample_focal - t_infect) + std::abs(sample_candidate - t_infect);
  const double lambda =
      elapsed * p.mu * static_cast<double>(s.effective_length) + p.error_term(s.effective_length);
  return poisson_log_pmf(s.snps, lambda);
}

PairwiseGeneticSummary PairwiseCache::get(const CaseId& i, const CaseId& j) const {
  auto key = i < j ? std::make_pair(i, j) : std::make_pair(j, i);
  {
    std::shared_lock lock(mutex_);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  }
  const PairwiseGeneticSummary computed = reduce_pair(alignment_, key.first, key.second);
  std::unique_lock lock(mutex_);
  return memo_.emplace(std::move(key), computed).first->second;
}

}  // namespace nostra
