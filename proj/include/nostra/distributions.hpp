#pragma once
// Probability kernels shared by every likelihood term. Everything is in
// natural-log space; -infinity encodes an exact zero.

#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace nostra {

using LogProb = double;

inline constexpr LogProb kLogZero = -std::numeric_limits<double>::infinity();

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Poisson(lambda) convolved with NegBinomial(r = beta, p = 1 / (1 + alpha)).
struct DelaporteParams {
  double alpha = 0.0;
  double beta = 1.0;
  double lambda = 0.0;
};

enum class Discretization { DayBin, Density };

// Lognormal incubation period, parameters on the log scale.
struct WaitingTimeModel {
  double meanlog = 1.434;
  double sdlog = 0.6612;
  Discretization discretization = Discretization::DayBin;
};

LogProb poisson_log_pmf(long k, double lambda);

/// Negative binomial with r = beta successes and success probability
/// 1 / (1 + alpha); beta = 1 is the geometric distribution on {0, 1, ...}.
LogProb negbin_log_pmf(long k, double alpha, double beta);

/// Exact finite convolution: log sum_{j=0..k} Poisson(j | lambda) NB(k - j | beta, alpha).
LogProb delaporte_log_pmf(long k, const DelaporteParams& p);

double lognormal_cdf(double x, double meanlog, double sdlog);

/// log P(T_w in [days, days + 1)) for the day-bin discretization, or the log
/// density at `days` when the model is switched to Density.
LogProb waiting_time_log_mass(long days, const WaitingTimeModel& wt);

/// Stable log(sum(exp(terms))). All -inf input gives -inf.
LogProb log_sum_exp(std::span<const LogProb> terms);

// Precomputed waiting_time_log_mass for 0..max_days; falls back to direct
// evaluation past the end.
class WaitingTimeTable {
 public:
  WaitingTimeTable(const WaitingTimeModel& wt, long max_days);

  LogProb operator()(long days) const {
    if (days < 0) return kLogZero;
    if (days < static_cast<long>(masses_.size())) return masses_[static_cast<std::size_t>(days)];
    return waiting_time_log_mass(days, model_);
  }

  const WaitingTimeModel& model() const { return model_; }

 private:
  WaitingTimeModel model_;
  std::vector<LogProb> masses_;
};

void validate(const DelaporteParams& p);
void validate(const WaitingTimeModel& wt);

}  // namespace nostra
