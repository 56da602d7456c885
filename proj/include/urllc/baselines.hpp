#pragma once

#include "urllc/mcsim.hpp"

namespace urllc {

// N = M = 1 on every link.
RepetitionPolicy no_repetition(const NetworkInstance& instance);

// N = M = max_slots(lambda_k) on every link.
RepetitionPolicy k_repetition(const NetworkInstance& instance, const QosSpec& spec);

}  // namespace urllc
