#include "urllc/baselines.hpp"

#include "urllc/queueing.hpp"

namespace urllc {

RepetitionPolicy no_repetition(const NetworkInstance& instance) {
  for (int k = 0; k < instance.k_links(); ++k)
    if (!(instance.arrival(k) < 1.0))
      throw InfeasibleError("no_repetition: link " + std::to_string(k) + " has lambda >= 1");
  return RepetitionPolicy::uniform(instance.k_links(), 1, 1);
}

RepetitionPolicy k_repetition(const NetworkInstance& instance, const QosSpec& spec) {
  RepetitionPolicy p = RepetitionPolicy::uniform(instance.k_links(), 1, 1);
  for (int k = 0; k < instance.k_links(); ++k) {
    const int c = max_slots(instance.arrival(k), spec);
    p.n_slots(k) = c;
    p.m_reps(k) = c;
  }
  return p;
}

}  // namespace urllc
