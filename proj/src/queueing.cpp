#include "urllc/queueing.hpp"

#include <cmath>
#include <string>

namespace urllc {

double effective_bandwidth(double lambda, double theta) {
  if (!(theta > 0.0)) throw std::domain_error("effective_bandwidth: theta must be positive");
  return lambda * std::expm1(theta) / theta;
}

double solve_qos_exponent(double lambda, int n_slots) {
  if (!(lambda > 0.0) || n_slots < 1)
    throw std::domain_error("solve_qos_exponent: need lambda > 0 and n_slots >= 1");
  if (lambda * n_slots >= 1.0)
    throw InfeasibleError("queue unstable: lambda*N = " + std::to_string(lambda * n_slots) +
                          " >= 1");
  const double target = 1.0 / n_slots;
  double lo = 0.0;
  double hi = 1.0;
  while (effective_bandwidth(lambda, hi) < target) hi *= 2.0;
  while (hi - lo > 1e-12 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= 0.0 || effective_bandwidth(lambda, mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

QueueProfile queue_profile(double lambda, int n_slots, const QosSpec& spec) {
  QueueProfile p;
  p.arrival_rate = lambda;
  p.n_slots = n_slots;
  p.d_q_max = spec.d_max_slots - n_slots;
  if (p.d_q_max < 1)
    throw InfeasibleError("no queuing headroom: N = " + std::to_string(n_slots) +
                          " leaves D_q = " + std::to_string(p.d_q_max));
  p.theta = solve_qos_exponent(lambda, n_slots);
  double exponent = lambda * p.d_q_max * std::expm1(p.theta);
  if (spec.queue_convention == QueueConvention::scaled_by_slot_ms) exponent /= spec.slot_ms;
  p.eps_q = std::exp(-exponent);
  return p;
}

double queue_violation_prob(double lambda, int n_slots, const QosSpec& spec) {
  return queue_profile(lambda, n_slots, spec).eps_q;
}

int max_slots(double lambda, const QosSpec& spec) {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw std::domain_error("max_slots: lambda must lie in (0,1)");
  // Stability bound: largest N with lambda*N < 1.
  int upper = spec.d_max_slots - 1;
  const int stable = static_cast<int>(std::ceil(1.0 / lambda)) - 1;
  upper = std::min(upper, std::max(stable, 0));
  while (upper >= 1 && lambda * upper >= 1.0) --upper;
  if (upper < 1 || queue_violation_prob(lambda, 1, spec) > spec.eps_max)
    throw InfeasibleError("max_slots: even N = 1 violates the queuing target at lambda = " +
                          std::to_string(lambda));
  int lo = 1;  // feasible
  int hi = upper;
  if (queue_violation_prob(lambda, hi, spec) <= spec.eps_max) return hi;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    if (queue_violation_prob(lambda, mid, spec) <= spec.eps_max)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

}  // namespace urllc
