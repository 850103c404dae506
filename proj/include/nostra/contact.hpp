#pragma once
// Co-location likelihoods for one (candidate, focal) pair.

#include <vector>

#include "nostra/calendar.hpp"
#include "nostra/distributions.hpp"

namespace nostra {

enum class ContactStatus { Together, Apart, Unknown };

struct ContactDay {
  Day day = 0;
  ContactStatus status = ContactStatus::Unknown;
  double weight = 0.5;  // elicited co-location probability, Unknown days only

  bool operator==(const ContactDay&) const = default;
};

struct ContactHistory {
  std::vector<ContactDay> days;  // sorted by day, unique
  double default_weight = 0.5;   // infection day with no row at all

  bool empty() const { return days.empty(); }
  bool operator==(const ContactHistory&) const = default;
};

/// Sorts the days and checks uniqueness and weight ranges.
ContactHistory make_contact_history(std::vector<ContactDay> days, double default_weight = 0.5);

/// Every listed day contributes 0.5, observed or not.
LogProb null_contact_log_lik(const ContactHistory& h);

/// As the null, except the infection day itself: together 1, apart 0,
/// unknown w. An unlisted infection day contributes the default weight.
LogProb direct_contact_log_lik(const ContactHistory& h, Day t_infect);

}  // namespace nostra
