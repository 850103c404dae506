#include "nostra/epidemiology.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace nostra {

TransmissionProfile discretized_profile(int min_offset, int max_offset, double meanlog, double sdlog) {
  if (max_offset < min_offset) throw DomainError("transmission profile: max_offset < min_offset");
  validate(WaitingTimeModel{meanlog, sdlog, Discretization::DayBin});
  TransmissionProfile p{min_offset, {}};
  for (int o = min_offset; o <= max_offset; ++o) {
    const double lo = o - min_offset;
    p.masses.push_back(lognormal_cdf(lo + 1.0, meanlog, sdlog) - lognormal_cdf(lo, meanlog, sdlog));
  }
  const double total = std::accumulate(p.masses.begin(), p.masses.end(), 0.0);
  if (!(total > 0.0)) throw DomainError("transmission profile: no mass inside the offset window");
  for (double& m : p.masses) m /= total;
  return p;
}

TransmissionProfile default_transmission_profile() { return discretized_profile(-3, 7, 1.3, 0.45); }

void validate(const TransmissionProfile& profile) {
  if (profile.masses.empty()) throw DomainError("transmission profile: empty");
  double total = 0.0;
  for (double m : profile.masses) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw DomainError("transmission profile: masses must be >= 0");
    total += m;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw DomainError("transmission profile: masses sum to " + std::to_string(total) + ", expected 1");
  }
}

void validate(const CaseRecord& c, const EpidemicFrame& frame) {
  auto check = [&](Day d, const char* what) {
    if (d < frame.epidemic_start) {
      throw DomainError("case '" + c.id + "': " + what + " precedes the epidemic start");
    }
  };
  check(c.onset, "onset");
  if (c.admission) {
    check(*c.admission, "admission");
    if (*c.admission > c.onset) throw DomainError("case '" + c.id + "': admission is after onset");
  }
  if (c.sample_time) check(*c.sample_time, "sample date");
}

LogProb window_onset_log_lik(Day onset, Day first, Day last, double weight, const WaitingTimeModel& wt) {
  if (last < first || !(weight > 0.0)) return kLogZero;
  std::vector<LogProb> terms;
  terms.reserve(static_cast<std::size_t>(last - first + 1));
  const double log_w = std::log(weight);
  for (Day t = first; t <= last; ++t) {
    if (onset < t) continue;
    terms.push_back(log_w + waiting_time_log_mass(onset - t, wt));
  }
  return terms.empty() ? kLogZero : log_sum_exp(terms);
}

LogProb onset_log_lik_community(const CaseRecord& b, const WaitingTimeModel& wt, const EpidemicFrame& frame) {
  validate(b, frame);
  if (!b.admission) return 0.0;
  const Day first = frame.epidemic_start;
  const Day last = *b.admission;
  return window_onset_log_lik(b.onset, first, last, 1.0 / (last - first + 1), wt);
}

LogProb onset_log_lik_hospital(const CaseRecord& b, const WaitingTimeModel& wt, const EpidemicFrame& frame) {
  validate(b, frame);
  if (!b.admission) return 0.0;
  const Day first = *b.admission;
  const Day last = b.onset;
  return window_onset_log_lik(b.onset, first, last, 1.0 / (last - first + 1), wt);
}

LogProb candidate_onset_log_lik(const CaseRecord& a, const WaitingTimeModel& wt, const EpidemicFrame& frame) {
  if (a.onset < frame.epidemic_start) throw DomainError("case '" + a.id + "': onset precedes the epidemic start");
  const Day first = frame.epidemic_start;
  return window_onset_log_lik(a.onset, first, a.onset, 1.0 / (a.onset - first + 1), wt);
}

LogProb transmission_time_log_mass(Day t, Day a_onset, const TransmissionProfile& profile,
                                   const EpidemicFrame& frame, Day b_onset) {
  if (t < frame.epidemic_start || t > b_onset) return kLogZero;
  const double m = profile.mass(t - a_onset);
  return m > 0.0 ? std::log(m) : kLogZero;
}

LogProb onset_given_infection_log_lik(Day b_onset, Day t, const WaitingTimeModel& wt) {
  if (b_onset < t) return kLogZero;
  return waiting_time_log_mass(b_onset - t, wt);
}

}  // namespace nostra
