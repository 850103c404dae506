#include "nostra/inference.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <atomic>
#include <exception>
#include <set>
#include <thread>

#include "nostra/epidemiology.hpp"

namespace nostra {

std::string Hypothesis::label() const {
  switch (kind) {
    case HypothesisKind::Candidate: return candidate;
    case HypothesisKind::Hospital: return "Hospital";
    case HypothesisKind::Community: return "Community";
  }
  return {};
}

SourcePrior SourcePrior::nosocomial_split(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("prior: nosocomial probability must lie in [0, 1]");
  return {Mode::NosocomialSplit, p};
}

SourcePrior SourcePrior::parse(std::string_view text) {
  if (text == "uniform") return uniform();
  constexpr std::string_view prefix = "noso:";
  if (text.starts_with(prefix)) {
    const std::string_view num = text.substr(prefix.size());
    double p = 0.0;
    const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), p);
    if (ec == std::errc{} && ptr == num.data() + num.size() && !num.empty()) return nosocomial_split(p);
  }
  throw DomainError("prior: expected 'uniform' or 'noso:<p>', got '" + std::string(text) + "'");
}

std::string SourcePrior::to_string() const {
  if (mode == Mode::Uniform) return "uniform";
  char buf[40];
  std::snprintf(buf, sizeof buf, "noso:%.17g", p_nosocomial);
  return buf;
}

std::vector<double> SourcePrior::masses(std::size_t n_candidates) const {
  const std::size_t total = n_candidates + 2;
  if (mode == Mode::Uniform) return std::vector<double>(total, 1.0 / static_cast<double>(total));
  std::vector<double> out(total, p_nosocomial / static_cast<double>(n_candidates + 1));
  out.back() = 1.0 - p_nosocomial;
  return out;
}

std::string to_string(DataSource s) {
  switch (s) {
    case DataSource::Genetics: return "genetics";
    case DataSource::Locations: return "locations";
    case DataSource::Admissions: return "admissions";
  }
  return {};
}

std::vector<DataSource> parse_ablation_order(std::string_view text) {
  std::vector<DataSource> out;
  std::set<std::string> seen;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const std::string item(text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    pos = comma == std::string_view::npos ? text.size() + 1 : comma + 1;
    if (!seen.insert(item).second) throw DomainError("ablation order repeats '" + item + "'");
    if (item == "genetics") {
      out.push_back(DataSource::Genetics);
    } else if (item == "locations") {
      out.push_back(DataSource::Locations);
    } else if (item == "admissions") {
      out.push_back(DataSource::Admissions);
    } else {
      throw DomainError("ablation order: unknown data source '" + item + "'");
    }
  }
  if (out.size() != 3) throw DomainError("ablation order must be a permutation of genetics,locations,admissions");
  return out;
}

const HypothesisResult& SourcePosterior::at(const Hypothesis& h) const {
  for (const auto& e : entries) {
    if (e.hypothesis == h) return e;
  }
  throw NotFoundError("posterior has no hypothesis '" + h.label() + "'");
}

const HypothesisResult& SourcePosterior::map_estimate() const {
  const HypothesisResult* best = &entries.front();
  for (const auto& e : entries) {
    if (e.probability > best->probability) best = &e;
  }
  return *best;
}

InferenceEngine::InferenceEngine(const WardSnapshot& snapshot)
    : snapshot_(snapshot),
      waiting_(snapshot.params.waiting, snapshot.frame.horizon_end - snapshot.frame.epidemic_start + 1),
      pairs_(snapshot.alignment) {
  for (const auto& [id, rec] : snapshot_.cases) {
    candidate_onset_.emplace(id, candidate_onset_log_lik(rec, snapshot_.params.waiting, snapshot_.frame));
  }
}

std::vector<CaseId> InferenceEngine::default_candidates(const CaseId& focal) const {
  snapshot_.case_record(focal);
  std::vector<CaseId> out;
  for (const auto& [id, _] : snapshot_.cases) {
    if (id != focal) out.push_back(id);
  }
  return out;
}

std::optional<InferenceEngine::GeneticPair> InferenceEngine::genetic_pair(const CaseId& az, const CaseId& focal) const {
  const CaseRecord& a = snapshot_.case_record(az);
  const CaseRecord& b = snapshot_.case_record(focal);
  if (!a.has_sequence || !b.has_sequence) return std::nullopt;
  GeneticPair gp{pairs_.get(az, focal), effective_sample_day(b), effective_sample_day(a)};
  if (gp.summary.effective_length <= 0) return std::nullopt;
  gp.summary.sample_gap_days = std::labs(static_cast<long>(gp.sample_focal) - gp.sample_candidate);
  return gp;
}

std::optional<ContactHistory> InferenceEngine::contact_pair(const CaseId& az, const CaseId& focal) const {
  ContactHistory h = build_contact_history(snapshot_, az, focal);
  if (h.empty()) return std::nullopt;
  return h;
}

LogProb InferenceEngine::log_lik_null_candidate(const CaseId& az, const CaseId& focal,
                                                const DataToggles& toggles) const {
  snapshot_.case_record(focal);
  LogProb total = candidate_onset_.at(snapshot_.case_record(az).id);
  if (toggles.use_genetics) {
    if (auto gp = genetic_pair(az, focal)) total += *null_genetic_log_lik(gp->summary, snapshot_.params.genetic);
  }
  if (toggles.use_locations) {
    if (auto h = contact_pair(az, focal)) total += null_contact_log_lik(*h);
  }
  return total;
}

LogProb InferenceEngine::log_lik_direct_pair(const CaseId& az, const CaseId& focal, const DataToggles& toggles) const {
  const CaseRecord& a = snapshot_.case_record(az);
  const CaseRecord& b = snapshot_.case_record(focal);
  const auto& params = snapshot_.params;
  const auto& frame = snapshot_.frame;

  const std::optional<GeneticPair> gp = toggles.use_genetics ? genetic_pair(az, focal) : std::nullopt;
  const std::optional<ContactHistory> contacts = toggles.use_locations ? contact_pair(az, focal) : std::nullopt;

  // Terms outside the profile support are exactly zero, so only the support
  // intersected with [t0, focal onset] is visited.
  const Day first = std::max(frame.epidemic_start, a.onset + params.profile.min_offset);
  const Day last = std::min(b.onset, a.onset + params.profile.max_offset());
  std::vector<LogProb> terms;
  for (Day t = first; t <= last; ++t) {
    LogProb term = transmission_time_log_mass(t, a.onset, params.profile, frame, b.onset);
    if (term == kLogZero) continue;
    term += waiting_(b.onset - t);
    if (gp) term += *direct_genetic_log_lik(gp->summary, t, gp->sample_focal, gp->sample_candidate, params.genetic);
    if (contacts) term += direct_contact_log_lik(*contacts, t);
    terms.push_back(term);
  }
  if (terms.empty()) return kLogZero;
  const LogProb transmission = log_sum_exp(terms);
  return transmission == kLogZero ? kLogZero : candidate_onset_.at(a.id) + transmission;
}

LogProb InferenceEngine::log_lik_focal_onset(const CaseId& focal, HypothesisKind kind,
                                             const DataToggles& toggles) const {
  const CaseRecord& b = snapshot_.case_record(focal);
  if (!toggles.use_admissions) return 0.0;
  switch (kind) {
    case HypothesisKind::Hospital: return onset_log_lik_hospital(b, snapshot_.params.waiting, snapshot_.frame);
    case HypothesisKind::Community: return onset_log_lik_community(b, snapshot_.params.waiting, snapshot_.frame);
    case HypothesisKind::Candidate: break;
  }
  throw DomainError("focal onset term applies to Hospital and Community only");
}

SourcePosterior InferenceEngine::posterior(const CaseId& focal, std::vector<CaseId> candidates,
                                           const SourcePrior& prior, const DataToggles& toggles) const {
  if (!toggles.use_onsets) throw DomainError("onset data cannot be disabled");
  snapshot_.case_record(focal);
  std::sort(candidates.begin(), candidates.end());
  if (std::adjacent_find(candidates.begin(), candidates.end()) != candidates.end()) {
    throw DomainError("candidate list has duplicates");
  }
  for (const auto& c : candidates) {
    snapshot_.case_record(c);
    if (c == focal) throw DomainError("focal case '" + focal + "' cannot be its own candidate");
  }

  const std::size_t n = candidates.size();
  std::vector<LogProb> null_terms(n);
  std::vector<LogProb> direct_terms(n);
  for (std::size_t z = 0; z < n; ++z) {
    null_terms[z] = log_lik_null_candidate(candidates[z], focal, toggles);
    direct_terms[z] = log_lik_direct_pair(candidates[z], focal, toggles);
  }

  // Shared product of the null terms; each candidate hypothesis swaps one
  // factor. Null terms of -inf are tracked separately so the swap never
  // subtracts infinities.
  LogProb finite_null_sum = 0.0;
  std::size_t zero_nulls = 0;
  for (LogProb v : null_terms) {
    if (v == kLogZero) {
      ++zero_nulls;
    } else {
      finite_null_sum += v;
    }
  }
  const LogProb total_null = zero_nulls > 0 ? kLogZero : finite_null_sum;

  SourcePosterior out;
  out.focal = focal;
  out.toggles = toggles;
  const std::vector<double> prior_masses = prior.masses(n);

  for (std::size_t z = 0; z < n; ++z) {
    LogProb others;
    if (zero_nulls == 0) {
      others = finite_null_sum - null_terms[z];
    } else if (zero_nulls == 1 && null_terms[z] == kLogZero) {
      others = finite_null_sum;
    } else {
      others = kLogZero;
    }
    const LogProb ll = (others == kLogZero || direct_terms[z] == kLogZero) ? kLogZero : others + direct_terms[z];
    out.entries.push_back({Hypothesis::from_candidate(candidates[z]), prior_masses[z], ll, 0.0});
  }
  for (const auto kind : {HypothesisKind::Hospital, HypothesisKind::Community}) {
    const LogProb onset = log_lik_focal_onset(focal, kind, toggles);
    const LogProb ll = (onset == kLogZero || total_null == kLogZero) ? kLogZero : onset + total_null;
    out.entries.push_back({{kind, {}}, prior_masses[out.entries.size()], ll, 0.0});
  }

  std::vector<LogProb> joint;
  joint.reserve(out.entries.size());
  for (const auto& e : out.entries) {
    joint.push_back(e.prior > 0.0 && e.log_likelihood != kLogZero ? e.log_likelihood + std::log(e.prior) : kLogZero);
  }
  const LogProb evidence = log_sum_exp(joint);
  if (evidence == kLogZero || !std::isfinite(evidence)) {
    throw DegenerateEvidenceError("focal case '" + focal + "': every infection source has zero posterior weight");
  }
  for (std::size_t i = 0; i < out.entries.size(); ++i) {
    auto& e = out.entries[i];
    e.probability = joint[i] == kLogZero ? 0.0 : std::exp(joint[i] - evidence);
    if (e.hypothesis.kind != HypothesisKind::Community) out.nosocomial += e.probability;
  }

  if (toggles.use_genetics) {
    const CaseRecord& b = snapshot_.case_record(focal);
    auto note_fallback = [&](const CaseRecord& c) {
      if (c.has_sequence && !c.sample_time) {
        out.notes.push_back("case '" + c.id + "': sample date missing, onset date used");
      }
    };
    note_fallback(b);
    if (b.has_sequence) {
      for (const auto& c : candidates) note_fallback(snapshot_.case_record(c));
    }
  }
  return out;
}

SourcePosterior InferenceEngine::posterior(const CaseId& focal, const SourcePrior& prior,
                                           const DataToggles& toggles) const {
  return posterior(focal, default_candidates(focal), prior, toggles);
}

std::vector<AblationStage> InferenceEngine::ablation_sequence(const CaseId& focal, std::vector<CaseId> candidates,
                                                              const SourcePrior& prior,
                                                              const std::vector<DataSource>& order) const {
  std::set<DataSource> distinct(order.begin(), order.end());
  if (order.size() != 3 || distinct.size() != 3) {
    throw DomainError("ablation order must be a permutation of genetics,locations,admissions");
  }
  std::vector<AblationStage> stages;
  DataToggles toggles = DataToggles::onsets_only();
  stages.push_back({"onsets", toggles, posterior(focal, candidates, prior, toggles)});
  for (DataSource s : order) {
    switch (s) {
      case DataSource::Genetics: toggles.use_genetics = true; break;
      case DataSource::Locations: toggles.use_locations = true; break;
      case DataSource::Admissions: toggles.use_admissions = true; break;
    }
    stages.push_back({to_string(s), toggles, posterior(focal, candidates, prior, toggles)});
  }
  return stages;
}

std::vector<SourcePosterior> posterior_matrix(const InferenceEngine& engine, const std::vector<CaseId>& focals,
                                              const SourcePrior& prior, const DataToggles& toggles, unsigned threads) {
  std::vector<std::optional<SourcePosterior>> results(focals.size());
  std::vector<std::exception_ptr> errors(focals.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < focals.size(); i = next++) {
      try {
        results[i] = engine.posterior(focals[i], prior, toggles);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n_workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(focals.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  std::vector<SourcePosterior> out;
  out.reserve(focals.size());
  for (std::size_t i = 0; i < focals.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*results[i]));
  }
  return out;
}

}  // namespace nostra
