#include "nostra/contact.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace nostra {

namespace {

const double kLogHalf = -std::numbers::ln2;

void check_weight(double w) {
  if (!(w >= 0.0 && w <= 1.0)) throw DomainError("contact weight " + std::to_string(w) + " outside [0, 1]");
}

}  // namespace

ContactHistory make_contact_history(std::vector<ContactDay> days, double default_weight) {
  check_weight(default_weight);
  std::sort(days.begin(), days.end(), [](const ContactDay& a, const ContactDay& b) { return a.day < b.day; });
  for (std::size_t i = 0; i < days.size(); ++i) {
    if (i > 0 && days[i].day == days[i - 1].day) {
      throw DomainError("contact history lists day " + std::to_string(days[i].day) + " twice");
    }
    if (days[i].status == ContactStatus::Unknown) check_weight(days[i].weight);
  }
  return {std::move(days), default_weight};
}

LogProb null_contact_log_lik(const ContactHistory& h) { return static_cast<double>(h.days.size()) * kLogHalf; }

LogProb direct_contact_log_lik(const ContactHistory& h, Day t_infect) {
  const auto it = std::lower_bound(h.days.begin(), h.days.end(), t_infect,
                                   [](const ContactDay& c, Day d) { return c.day < d; });
  const bool listed = it != h.days.end() && it->day == t_infect;
  double infection_day_factor = h.default_weight;
  if (listed) {
    switch (it->status) {
      case ContactStatus::Together: infection_day_factor = 1.0; break;
      case ContactStatus::Apart: infection_day_factor = 0.0; break;
      case ContactStatus::Unknown: infection_day_factor = it->weight; break;
    }
  }
  if (infection_day_factor <= 0.0) return kLogZero;
  const auto others = static_cast<double>(h.days.size() - (listed ? 1 : 0));
  return others * kLogHalf + std::log(infection_day_factor);
}

}  // namespace nostra
