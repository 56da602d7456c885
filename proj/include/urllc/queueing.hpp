#pragma once

#include "urllc/linkphy.hpp"

namespace urllc {

struct QueueProfile {
  double arrival_rate = 0.0;
  int n_slots = 1;
  double theta = 0.0;
  double eps_q = 0.0;
  int d_q_max = 0;
};

double effective_bandwidth(double lambda, double theta);

// Unique theta > 0 with effective_bandwidth(lambda, theta) = 1/n_slots.
double solve_qos_exponent(double lambda, int n_slots);

double queue_violation_prob(double lambda, int n_slots, const QosSpec& spec);

QueueProfile queue_profile(double lambda, int n_slots, const QosSpec& spec);

// Largest N with eps_q(N) <= eps_max, lambda*N < 1 and N <= D_max - 1.
int max_slots(double lambda, const QosSpec& spec);

}  // namespace urllc
