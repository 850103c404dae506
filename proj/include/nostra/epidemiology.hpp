#pragma once
// Onset-time likelihoods. Infection-time integrals are daily sums with a
// uniform infection-time prior over each window.

#include <map>
#include <optional>

#include "nostra/calendar.hpp"
#include "nostra/distributions.hpp"

namespace nostra {

struct CaseRecord {
  CaseId id;
  Day onset = 0;
  std::optional<Day> admission;
  std::optional<Day> sample_time;
  bool has_sequence = false;

  bool operator==(const CaseRecord&) const = default;
};

// Days are counted from the epidemic start, so epidemic_start is always 0 in
// the internal basis; `origin` anchors it to the calendar.
struct EpidemicFrame {
  Date origin{};
  Day epidemic_start = 0;
  Day horizon_end = 0;

  bool operator==(const EpidemicFrame&) const = default;
};

// Probability of the infectee's infection day relative to the infector's
// onset day. masses[i] belongs to offset min_offset + i.
struct TransmissionProfile {
  int min_offset = 0;
  std::vector<double> masses;

  int max_offset() const { return min_offset + static_cast<int>(masses.size()) - 1; }
  double mass(int offset) const {
    if (offset < min_offset || offset > max_offset()) return 0.0;
    return masses[static_cast<std::size_t>(offset - min_offset)];
  }

  bool operator==(const TransmissionProfile&) const = default;
};

/// Shifted lognormal on offsets [min_offset, max_offset]: the mass of offset o
/// is the lognormal probability of [o - min_offset, o - min_offset + 1),
/// renormalized over the window.
TransmissionProfile discretized_profile(int min_offset, int max_offset, double meanlog, double sdlog);

/// Default infectiousness profile: offsets -3..+7 around infector onset,
/// peaking on the onset day.
TransmissionProfile default_transmission_profile();

void validate(const TransmissionProfile& profile);
void validate(const CaseRecord& c, const EpidemicFrame& frame);

/// log sum_{t=first..last} weight * P(T_w = onset - t). Empty windows give -inf.
LogProb window_onset_log_lik(Day onset, Day first, Day last, double weight, const WaitingTimeModel& wt);

LogProb onset_log_lik_community(const CaseRecord& b, const WaitingTimeModel& wt, const EpidemicFrame& frame);
LogProb onset_log_lik_hospital(const CaseRecord& b, const WaitingTimeModel& wt, const EpidemicFrame& frame);
LogProb candidate_onset_log_lik(const CaseRecord& a, const WaitingTimeModel& wt, const EpidemicFrame& frame);

/// log profile[t - a_onset] when t lies in [epidemic_start, b_onset]; -inf
/// otherwise. Clipped mass is not renormalized.
LogProb transmission_time_log_mass(Day t, Day a_onset, const TransmissionProfile& profile,
                                   const EpidemicFrame& frame, Day b_onset);

LogProb onset_given_infection_log_lik(Day b_onset, Day t, const WaitingTimeModel& wt);

}  // namespace nostra
