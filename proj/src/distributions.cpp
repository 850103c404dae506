#include "nostra/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace nostra {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

// Standardized log-scale deviate, or +-inf at the support edges.
double lognormal_z(double x, double meanlog, double sdlog) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  return (std::log(x) - meanlog) / sdlog;
}

double lognormal_sf(double x, double meanlog, double sdlog) {
  return 0.5 * std::erfc(lognormal_z(x, meanlog, sdlog) / kSqrt2);
}

}  // namespace

void validate(const DelaporteParams& p) {
  if (!(p.alpha >= 0.0) || !std::isfinite(p.alpha)) throw DomainError("delaporte: alpha must be finite and >= 0");
  if (!(p.beta > 0.0) || !std::isfinite(p.beta)) throw DomainError("delaporte: beta must be finite and > 0");
  if (!(p.lambda >= 0.0) || !std::isfinite(p.lambda)) throw DomainError("delaporte: lambda must be finite and >= 0");
}

void validate(const WaitingTimeModel& wt) {
  if (!(wt.sdlog > 0.0) || !std::isfinite(wt.sdlog)) throw DomainError("waiting time: sdlog must be > 0");
  if (!std::isfinite(wt.meanlog)) throw DomainError("waiting time: meanlog must be finite");
}

LogProb poisson_log_pmf(long k, double lambda) {
  if (k < 0) throw DomainError("poisson: negative count");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("poisson: rate must be finite and >= 0");
  if (lambda == 0.0) return k == 0 ? 0.0 : kLogZero;
  if (k == 0) return -lambda;
  const double kd = static_cast<double>(k);
  return -lambda + kd * std::log(lambda) - std::lgamma(kd + 1.0);
}

LogProb negbin_log_pmf(long k, double alpha, double beta) {
  if (k < 0) throw DomainError("negative binomial: negative count");
  validate(DelaporteParams{alpha, beta, 0.0});
  // alpha = 0 collapses to a point mass at zero.
  if (alpha == 0.0) return k == 0 ? 0.0 : kLogZero;
  const double log_p = -std::log1p(alpha);
  const double log_q = std::log(alpha) - std::log1p(alpha);
  const double kd = static_cast<double>(k);
  if (beta == 1.0) return log_p + (k == 0 ? 0.0 : kd * log_q);
  return std::lgamma(kd + beta) - std::lgamma(beta) - std::lgamma(kd + 1.0) + beta * log_p + kd * log_q;
}

LogProb delaporte_log_pmf(long k, const DelaporteParams& p) {
  if (k < 0) throw DomainError("delaporte: negative count");
  validate(p);
  std::vector<LogProb> terms;
  terms.reserve(static_cast<std::size_t>(k) + 1);
  for (long j = 0; j <= k; ++j) {
    const LogProb pois = poisson_log_pmf(j, p.lambda);
    if (pois == kLogZero) continue;
    const LogProb nb = negbin_log_pmf(k - j, p.alpha, p.beta);
    if (nb == kLogZero) continue;
    terms.push_back(pois + nb);
  }
  if (terms.empty()) return kLogZero;
  return log_sum_exp(terms);
}

double lognormal_cdf(double x, double meanlog, double sdlog) {
  if (x <= 0.0) return 0.0;
  return 0.5 * std::erfc(-lognormal_z(x, meanlog, sdlog) / kSqrt2);
}

LogProb waiting_time_log_mass(long days, const WaitingTimeModel& wt) {
  if (days < 0) throw DomainError("waiting time: negative day offset");
  validate(wt);
  const double lo = static_cast<double>(days);
  if (wt.discretization == Discretization::Density) {
    if (days == 0) return kLogZero;
    const double z = lognormal_z(lo, wt.meanlog, wt.sdlog);
    return -0.5 * z * z - std::log(lo * wt.sdlog) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  const double hi = lo + 1.0;
  // Difference of survival functions keeps precision in the upper tail.
  double mass;
  if (lognormal_z(lo, wt.meanlog, wt.sdlog) > 0.0) {
    mass = lognormal_sf(lo, wt.meanlog, wt.sdlog) - lognormal_sf(hi, wt.meanlog, wt.sdlog);
  } else {
    mass = lognormal_cdf(hi, wt.meanlog, wt.sdlog) - lognormal_cdf(lo, wt.meanlog, wt.sdlog);
  }
  return mass > 0.0 ? std::log(mass) : kLogZero;
}

LogProb log_sum_exp(std::span<const LogProb> terms) {
  if (terms.empty()) throw DomainError("log_sum_exp: empty input");
  const LogProb top = *std::max_element(terms.begin(), terms.end());
  if (top == kLogZero) return kLogZero;
  if (top == std::numeric_limits<double>::infinity()) return top;
  double acc = 0.0;
  for (LogProb t : terms) acc += std::exp(t - top);
  return top + std::log(acc);
}

WaitingTimeTable::WaitingTimeTable(const WaitingTimeModel& wt, long max_days) : model_(wt) {
  validate(wt);
  masses_.reserve(static_cast<std::size_t>(std::max(0L, max_days + 1)));
  for (long d = 0; d <= max_days; ++d) masses_.push_back(waiting_time_log_mass(d, wt));
}

}  // namespace nostra
